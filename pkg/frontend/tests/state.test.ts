import { describe, expect, it } from "vitest";

import {
  OfflineQueue,
  payloadProblems,
  SentenceReview,
  SessionFlow,
  correctionOptions,
  entityLabel,
  roundRobinOrder,
} from "../src/state";
import type { SampleItem, SentencePayload, SessionStatus, Submission } from "../src/types";

import fixtureJson from "./fixtures/planted.json";

interface Fixture {
  session: SessionStatus;
  payloads: Record<string, SentencePayload>;
  plants: Record<string, { token_index: number; field: string; correction: string }>;
}

const fixture = fixtureJson as unknown as Fixture;

function firstPayload(): SentencePayload {
  return fixture.payloads[fixture.session.sample[0].sentence_id];
}

function chinesePayload(): SentencePayload {
  return {
    sentence: {
      id: "z1",
      text: "他去上海",
      language: "chinese",
      period: "1920-1929",
      tokens: [
        {
          token: { text: "他", char_start: 0, char_end: 1, trailing_space: false },
          upos: "PRON",
          xpos: "PN",
          lemma: null,
          dep: null,
          ent_iob: "O",
          ent_type: "",
        },
        {
          token: { text: "去", char_start: 1, char_end: 2, trailing_space: false },
          upos: "VERB",
          xpos: "VV",
          lemma: null,
          dep: null,
          ent_iob: "O",
          ent_type: "",
        },
        {
          token: { text: "上海", char_start: 2, char_end: 4, trailing_space: false },
          upos: "PROPN",
          xpos: "NR",
          lemma: null,
          dep: null,
          ent_iob: "B",
          ent_type: "GPE",
        },
      ],
    },
    language: "chinese",
    fields: ["upos", "ner"],
    inventories: {
      upos: firstPayload().inventories.upos,
      xpos: ["PN", "VV", "NR"],
      ner: ["GPE", "PERSON", "ORG"],
    },
    status: "pending",
    adjudication: null,
  };
}

describe("inventories and view model", () => {
  it("upos correction selector lists exactly 17 options", () => {
    expect(correctionOptions("upos", firstPayload())).toHaveLength(17);
  });

  it("ner corrections are O plus B-/I- of every served type", () => {
    const options = correctionOptions("ner", chinesePayload());
    expect(options).toContain("O");
    expect(options).toContain("B-GPE");
    expect(options).toContain("I-PERSON");
    expect(options).toHaveLength(1 + 2 * 3);
  });

  it("lemma column is absent for the chinese profile", () => {
    expect(chinesePayload().fields).not.toContain("lemma");
    expect(firstPayload().fields).toContain("lemma");
  });

  it("entity labels render typed and untyped IOB", () => {
    expect(entityLabel({ ent_iob: "O", ent_type: "" })).toBe("O");
    expect(entityLabel({ ent_iob: "B", ent_type: "GPE" })).toBe("B-GPE");
    expect(entityLabel({ ent_iob: "B", ent_type: "" })).toBe("B");
  });

  it("well-formed payloads have no blocking problems", () => {
    for (const payload of Object.values(fixture.payloads)) {
      expect(payloadProblems(payload)).toEqual([]);
    }
  });

  it("payload outside the served inventory raises a blocking banner", () => {
    const payload = structuredClone(firstPayload());
    payload.sentence.tokens[0].upos = "NOUNN";
    expect(payloadProblems(payload).length).toBeGreaterThan(0);
  });
});

describe("verdict tracking", () => {
  it("submission requires one verdict per token per field", () => {
    const payload = firstPayload();
    const review = new SentenceReview(payload);
    const expected = payload.sentence.tokens.length * payload.fields.length;
    expect(review.missing()).toHaveLength(expected);
    expect(review.isComplete()).toBe(false);
    expect(() => review.submission("r")).toThrow();
    review.markAllCorrect();
    expect(review.isComplete()).toBe(true);
    expect(review.submission("r").verdicts).toHaveLength(expected);
  });

  it("free-text tags can never be submitted", () => {
    const review = new SentenceReview(firstPayload());
    expect(() => review.setError(0, "upos", "MADE_UP_TAG")).toThrow();
    expect(() => review.setError(0, "lemma", "")).toThrow();
    review.setError(0, "upos", "X"); // inventory value is accepted
  });

  it("error verdicts carry their corrections", () => {
    const review = new SentenceReview(firstPayload());
    review.markAllCorrect();
    review.setError(1, "lemma", "corrigé");
    const submission = review.submission("r");
    const errors = submission.verdicts.filter((v) => v.verdict === "error");
    expect(errors).toEqual([
      { token_index: 1, field: "lemma", verdict: "error", correction: "corrigé" },
    ]);
  });
});

describe("round-robin ordering and progress", () => {
  const sample: SampleItem[] = [
    { sentence_id: "a1", stratum: "A", status: "pending" },
    { sentence_id: "a2", stratum: "A", status: "pending" },
    { sentence_id: "b1", stratum: "B", status: "pending" },
    { sentence_id: "b2", stratum: "B", status: "pending" },
  ];

  it("alternates strata", () => {
    expect(roundRobinOrder(sample)).toEqual(["a1", "b1", "a2", "b2"]);
  });

  it("nextPending continues the rotation and skips adjudicated", () => {
    const status: SessionStatus = {
      id: "s",
      language: "french",
      per_stratum: 2,
      sample: structuredClone(sample),
      progress: { A: { total: 2, adjudicated: 0 }, B: { total: 2, adjudicated: 0 } },
      adjudicated: 0,
      total: 4,
    };
    const flow = new SessionFlow(status);
    expect(flow.nextPending()).toBe("a1");
    expect(flow.nextPending("a1")).toBe("b1");
    status.sample[2].status = "adjudicated"; // b1 done elsewhere
    flow.applyStatus(status);
    expect(flow.nextPending("a1")).toBe("a2");
  });

  it("progress counters equal server-side counts after sync", () => {
    const flow = new SessionFlow(fixture.session);
    expect(flow.adjudicatedCount()).toBe(fixture.session.adjudicated);
    const updated = structuredClone(fixture.session);
    updated.sample[0].status = "adjudicated";
    updated.adjudicated = 1;
    updated.progress[updated.sample[0].stratum].adjudicated = 1;
    flow.applyStatus(updated);
    expect(flow.adjudicatedCount()).toBe(1);
    expect(flow.progress()[updated.sample[0].stratum].adjudicated).toBe(1);
    expect(flow.isDone()).toBe(false);
  });
});

describe("offline queue", () => {
  it("buffers failures and flushes in order without loss", async () => {
    const queue = new OfflineQueue();
    const submissions = [1, 2, 3].map(
      (n): Submission => ({ sentence_id: `s${n}`, reviewer: "r", verdicts: [] })
    );
    for (const s of submissions) queue.push(s);
    expect(queue.size).toBe(3);
    let failures = 1;
    const delivered: string[] = [];
    const post = async (s: Submission) => {
      if (failures > 0 && s.sentence_id === "s2") {
        failures--;
        return false;
      }
      delivered.push(s.sentence_id);
      return true;
    };
    let result = await queue.flush(post);
    expect(result).toEqual({ sent: 1, remaining: 2 });
    expect(queue.size).toBe(2); // nothing lost
    result = await queue.flush(post);
    expect(result).toEqual({ sent: 2, remaining: 0 });
    expect(delivered).toEqual(["s1", "s2", "s3"]);
  });
});

describe("planted-error fixture adjudicated through the UI flow", () => {
  it("produces exactly 7 POS and 3 lemma error verdicts", () => {
    const session = structuredClone(fixture.session);
    const flow = new SessionFlow(session);
    const submissions: Submission[] = [];
    let current: string | null = null;
    for (let step = 0; step < session.total; step++) {
      const next = flow.nextPending(current ?? undefined);
      expect(next).not.toBeNull();
      const payload = fixture.payloads[next!];
      expect(payloadProblems(payload)).toEqual([]);
      const review = new SentenceReview(payload);
      review.markAllCorrect();
      const plant = fixture.plants[next!];
      review.setError(plant.token_index, plant.field, plant.correction);
      submissions.push(review.submission("ui-reviewer"));
      // simulate the server ack flipping the sentence to adjudicated
      const item = session.sample.find((s) => s.sentence_id === next)!;
      item.status = "adjudicated";
      session.adjudicated += 1;
      session.progress[item.stratum].adjudicated += 1;
      flow.applyStatus(session);
      current = next;
    }
    expect(flow.isDone()).toBe(true);
    expect(flow.nextPending(current ?? undefined)).toBeNull();
    const errors = submissions.flatMap((s) =>
      s.verdicts.filter((v) => v.verdict === "error")
    );
    const byField = { upos: 0, lemma: 0 } as Record<string, number>;
    for (const e of errors) byField[e.field] += 1;
    expect(byField).toEqual({ upos: 7, lemma: 3 });
    const uposInventory = new Set(firstPayload().inventories.upos);
    for (const e of errors) {
      if (e.field === "upos") expect(uposInventory.has(e.correction!)).toBe(true);
      else expect(e.correction!.length).toBeGreaterThan(0);
    }
    // reviewer exposure stayed stratum-balanced: strata alternate
    const strataOrder = submissions.map(
      (s) => fixture.session.sample.find((i) => i.sentence_id === s.sentence_id)!.stratum
    );
    for (let i = 1; i < strataOrder.length - 1; i++) {
      expect(strataOrder[i]).not.toBe(strataOrder[i - 1]);
    }
  });
});
