/**
 * Pure review-session logic: verdict tracking, inventory closure,
 * stratum-round-robin ordering, progress, and the offline submission queue.
 * No DOM access here, so every behavior is unit-testable.
 */
import type {
  SampleItem,
  SentencePayload,
  SessionStatus,
  Submission,
  VerdictPayload,
} from "./types";

export type VerdictState =
  | { kind: "unset" }
  | { kind: "correct" }
  | { kind: "error"; correction: string | null };

const TAG_FIELDS = new Set(["upos", "ner"]);

/** Entity display label for one token ("O", "B", "B-GPE", ...). */
export function entityLabel(tok: { ent_iob: string; ent_type: string }): string {
  if (tok.ent_iob === "O") return "O";
  return tok.ent_type ? `${tok.ent_iob}-${tok.ent_type}` : tok.ent_iob;
}

/**
 * The closed list of correction values for a field. Tags come only from the
 * served inventory; lemma is the one open-class field (a typed string).
 */
export function correctionOptions(field: string, payload: SentencePayload): string[] {
  if (field === "upos") return [...payload.inventories.upos];
  if (field === "ner") {
    const options = ["O"];
    for (const t of payload.inventories.ner) {
      options.push(`B-${t}`, `I-${t}`);
    }
    return options;
  }
  return [];
}

/**
 * Blocking conditions: a payload whose annotations fall outside the served
 * inventories cannot be reviewed with constrained controls.
 */
export function payloadProblems(payload: SentencePayload): string[] {
  const problems: string[] = [];
  const upos = new Set(payload.inventories.upos);
  const xpos = new Set(payload.inventories.xpos);
  const ner = new Set(payload.inventories.ner);
  payload.sentence.tokens.forEach((tok, i) => {
    if (!upos.has(tok.upos)) problems.push(`token ${i}: upos ${tok.upos} not in inventory`);
    if (!xpos.has(tok.xpos)) problems.push(`token ${i}: xpos ${tok.xpos} not in inventory`);
    if (tok.ent_type && !ner.has(tok.ent_type))
      problems.push(`token ${i}: entity type ${tok.ent_type} not in inventory`);
  });
  for (const field of payload.fields) {
    if (!["upos", "lemma", "ner"].includes(field)) {
      problems.push(`unknown adjudication field ${field}`);
    }
  }
  return problems;
}

/** Verdict state for one sentence; submittable only when fully covered. */
export class SentenceReview {
  readonly payload: SentencePayload;
  private verdicts = new Map<string, VerdictState>();

  constructor(payload: SentencePayload) {
    this.payload = payload;
    for (let i = 0; i < payload.sentence.tokens.length; i++) {
      for (const field of payload.fields) {
        this.verdicts.set(this.key(i, field), { kind: "unset" });
      }
    }
  }

  private key(i: number, field: string): string {
    return `${i}:${field}`;
  }

  get fields(): string[] {
    return this.payload.fields;
  }

  get tokenCount(): number {
    return this.payload.sentence.tokens.length;
  }

  state(i: number, field: string): VerdictState {
    return this.verdicts.get(this.key(i, field)) ?? { kind: "unset" };
  }

  setCorrect(i: number, field: string): void {
    this.verdicts.set(this.key(i, field), { kind: "correct" });
  }

  /**
   * Record an error verdict. Tag corrections must come from the inventory;
   * anything else is rejected so free-text tags can never reach the wire.
   */
  setError(i: number, field: string, correction: string | null): void {
    if (correction !== null) {
      if (TAG_FIELDS.has(field)) {
        const allowed = correctionOptions(field, this.payload);
        if (!allowed.includes(correction)) {
          throw new Error(`correction ${correction} not in the ${field} inventory`);
        }
      } else if (correction === "") {
        throw new Error("empty lemma correction");
      }
    }
    this.verdicts.set(this.key(i, field), { kind: "error", correction });
  }

  markAllCorrect(): void {
    for (const key of this.verdicts.keys()) {
      this.verdicts.set(key, { kind: "correct" });
    }
  }

  missing(): Array<[number, string]> {
    const out: Array<[number, string]> = [];
    for (let i = 0; i < this.tokenCount; i++) {
      for (const field of this.fields) {
        if (this.state(i, field).kind === "unset") out.push([i, field]);
      }
    }
    return out;
  }

  isComplete(): boolean {
    return this.missing().length === 0;
  }

  errorCount(field: string): number {
    let n = 0;
    for (let i = 0; i < this.tokenCount; i++) {
      if (this.state(i, field).kind === "error") n++;
    }
    return n;
  }

  submission(reviewer: string): Submission {
    if (!this.isComplete()) {
      throw new Error(`cannot submit: ${this.missing().length} verdict(s) missing`);
    }
    const verdicts: VerdictPayload[] = [];
    for (let i = 0; i < this.tokenCount; i++) {
      for (const field of this.fields) {
        const state = this.state(i, field);
        if (state.kind === "correct") {
          verdicts.push({ token_index: i, field, verdict: "correct" });
        } else if (state.kind === "error") {
          const v: VerdictPayload = { token_index: i, field, verdict: "error" };
          if (state.correction !== null) v.correction = state.correction;
          verdicts.push(v);
        }
      }
    }
    return { sentence_id: this.payload.sentence.id, reviewer, verdicts };
  }
}

/**
 * Stable stratum-round-robin order over the whole sample: one sentence from
 * each stratum in turn, strata in first-appearance order.
 */
export function roundRobinOrder(sample: SampleItem[]): string[] {
  const byStratum = new Map<string, SampleItem[]>();
  for (const item of sample) {
    const bucket = byStratum.get(item.stratum);
    if (bucket) bucket.push(item);
    else byStratum.set(item.stratum, [item]);
  }
  const buckets = [...byStratum.values()];
  const out: string[] = [];
  for (let round = 0; ; round++) {
    let emitted = false;
    for (const bucket of buckets) {
      if (round < bucket.length) {
        out.push(bucket[round].sentence_id);
        emitted = true;
      }
    }
    if (!emitted) return out;
  }
}

/** Session-level navigation and progress, synced from server status. */
export class SessionFlow {
  private status: SessionStatus;

  constructor(status: SessionStatus) {
    this.status = status;
  }

  applyStatus(status: SessionStatus): void {
    this.status = status;
  }

  get sessionId(): string {
    return this.status.id;
  }

  get language(): string {
    return this.status.language;
  }

  progress(): Record<string, { total: number; adjudicated: number }> {
    return this.status.progress;
  }

  adjudicatedCount(): number {
    return this.status.adjudicated;
  }

  totalCount(): number {
    return this.status.total;
  }

  isDone(): boolean {
    return this.status.adjudicated === this.status.total;
  }

  private pendingSet(): Set<string> {
    return new Set(
      this.status.sample.filter((s) => s.status === "pending").map((s) => s.sentence_id)
    );
  }

  /**
   * Next pending sentence in round-robin order, continuing the rotation
   * after `afterId` when given.
   */
  nextPending(afterId?: string): string | null {
    const order = roundRobinOrder(this.status.sample);
    const pending = this.pendingSet();
    if (pending.size === 0) return null;
    let startIndex = 0;
    if (afterId) {
      const at = order.indexOf(afterId);
      if (at >= 0) startIndex = at + 1;
    }
    for (let k = 0; k < order.length; k++) {
      const id = order[(startIndex + k) % order.length];
      if (pending.has(id)) return id;
    }
    return null;
  }
}

/** Buffer for submissions that failed to reach the server; nothing is lost. */
export class OfflineQueue {
  private items: Submission[] = [];

  get size(): number {
    return this.items.length;
  }

  push(submission: Submission): void {
    this.items.push(submission);
  }

  peekAll(): Submission[] {
    return [...this.items];
  }

  /** Retry everything in order; stops at the first failure, keeping the rest. */
  async flush(post: (s: Submission) => Promise<boolean>): Promise<{ sent: number; remaining: number }> {
    let sent = 0;
    while (this.items.length > 0) {
      const ok = await post(this.items[0]);
      if (!ok) break;
      this.items.shift();
      sent++;
    }
    return { sent, remaining: this.items.length };
  }
}
