/** DOM layer: token table, verdict controls, progress header, summary view. */
import {
  SentenceReview,
  correctionOptions,
  entityLabel,
  payloadProblems,
} from "./state";
import type { ExportSummary, SessionStatus } from "./types";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

const FIELD_LABELS: Record<string, string> = {
  upos: "POS",
  lemma: "Lemma",
  ner: "Entity",
};

export interface RenderHandlers {
  onChange: () => void;
  onSubmit: () => void;
  onMarkAll: () => void;
}

export function renderProgress(root: HTMLElement, status: SessionStatus): void {
  root.textContent = "";
  const line = el("div", "progress-line");
  line.append(
    el("span", "progress-total", `${status.adjudicated} / ${status.total} adjudicated`)
  );
  for (const [stratum, p] of Object.entries(status.progress)) {
    line.append(el("span", "progress-stratum", `${stratum}: ${p.adjudicated}/${p.total}`));
  }
  root.append(line);
}

export function renderBanner(root: HTMLElement, problems: string[]): void {
  root.textContent = "";
  if (problems.length === 0) return;
  const banner = el("div", "banner banner-blocking");
  banner.append(el("strong", undefined, "Payload/inventory mismatch — review blocked"));
  const list = el("ul");
  for (const p of problems) list.append(el("li", undefined, p));
  banner.append(list);
  root.append(banner);
}

export function renderNotice(root: HTMLElement, text: string, kind = "info"): void {
  root.textContent = "";
  if (text) root.append(el("div", `banner banner-${kind}`, text));
}

function verdictCell(
  review: SentenceReview,
  i: number,
  field: string,
  handlers: RenderHandlers
): HTMLElement {
  const cell = el("td", `verdict verdict-${field}`);
  const state = review.state(i, field);
  const okBtn = el("button", "btn-ok", "✓");
  okBtn.title = `${FIELD_LABELS[field] ?? field} correct (key: c)`;
  okBtn.dataset.active = state.kind === "correct" ? "1" : "0";
  okBtn.addEventListener("click", () => {
    review.setCorrect(i, field);
    handlers.onChange();
  });
  cell.append(okBtn);

  const errBtn = el("button", "btn-err", "✗");
  errBtn.title = `${FIELD_LABELS[field] ?? field} wrong`;
  errBtn.dataset.active = state.kind === "error" ? "1" : "0";
  cell.append(errBtn);

  if (field === "lemma") {
    const input = el("input", "correction-input");
    input.type = "text";
    input.placeholder = "corrected lemma";
    if (state.kind === "error" && state.correction) input.value = state.correction;
    input.style.display = state.kind === "error" ? "" : "none";
    input.addEventListener("change", () => {
      if (input.value) review.setError(i, field, input.value);
      handlers.onChange();
    });
    errBtn.addEventListener("click", () => {
      review.setError(i, field, input.value || null);
      handlers.onChange();
    });
    cell.append(input);
  } else {
    const select = el("select", "correction-select");
    select.append(el("option", undefined, "— pick correction —"));
    for (const option of correctionOptions(field, review.payload)) {
      select.append(el("option", undefined, option));
    }
    select.selectedIndex =
      state.kind === "error" && state.correction
        ? correctionOptions(field, review.payload).indexOf(state.correction) + 1
        : 0;
    select.style.display = state.kind === "error" ? "" : "none";
    select.addEventListener("change", () => {
      if (select.selectedIndex > 0) {
        review.setError(i, field, select.options[select.selectedIndex].text);
      }
      handlers.onChange();
    });
    errBtn.addEventListener("click", () => {
      review.setError(i, field, null);
      handlers.onChange();
    });
    cell.append(select);
  }
  return cell;
}

export function renderSentence(
  root: HTMLElement,
  review: SentenceReview,
  handlers: RenderHandlers
): void {
  root.textContent = "";
  const payload = review.payload;
  const problems = payloadProblems(payload);
  const bannerHost = el("div");
  renderBanner(bannerHost, problems);
  root.append(bannerHost);

  const head = el("div", "sentence-head");
  head.append(el("span", "sentence-id", payload.sentence.id));
  head.append(el("span", "sentence-period", payload.sentence.period));
  root.append(head);
  root.append(el("p", "sentence-text", payload.sentence.text));

  const table = el("table", "token-table");
  const thead = el("thead");
  const headRow = el("tr");
  const columns = ["#", "Token", "POS", "Tag"];
  if (payload.fields.includes("lemma")) columns.push("Lemma");
  columns.push("Entity");
  for (const field of payload.fields) columns.push(`${FIELD_LABELS[field]} verdict`);
  for (const c of columns) headRow.append(el("th", undefined, c));
  thead.append(headRow);
  table.append(thead);

  const tbody = el("tbody");
  payload.sentence.tokens.forEach((tok, i) => {
    const row = el("tr");
    row.append(el("td", "idx", String(i + 1)));
    row.append(el("td", "surface", tok.token.text));
    row.append(el("td", undefined, tok.upos));
    row.append(el("td", undefined, tok.xpos));
    if (payload.fields.includes("lemma")) row.append(el("td", undefined, tok.lemma ?? ""));
    row.append(el("td", undefined, entityLabel(tok)));
    for (const field of payload.fields) {
      row.append(verdictCell(review, i, field, handlers));
    }
    tbody.append(row);
  });
  table.append(tbody);
  root.append(table);

  const controls = el("div", "controls");
  const markAll = el("button", "btn-mark-all", "Mark all correct (a)");
  markAll.addEventListener("click", handlers.onMarkAll);
  const submit = el("button", "btn-submit", "Submit & next (Enter)");
  submit.disabled = problems.length > 0 || !review.isComplete();
  submit.id = "submit-btn";
  submit.addEventListener("click", handlers.onSubmit);
  const remaining = el(
    "span",
    "remaining",
    review.isComplete() ? "ready" : `${review.missing().length} verdict(s) missing`
  );
  controls.append(markAll, submit, remaining);
  root.append(controls);
}

export function renderSummary(root: HTMLElement, summary: ExportSummary): void {
  root.textContent = "";
  root.append(el("h2", undefined, "Session summary"));
  const table = el("table", "summary-table");
  const head = el("tr");
  const fields = summary.fields;
  for (const c of ["Stratum", "Tokens", "Errors", ...fields.map((f) => `${FIELD_LABELS[f] ?? f} acc.`)]) {
    head.append(el("th", undefined, c));
  }
  table.append(head);
  const rows: Array<[string, ExportSummary["overall"]]> = [
    ...Object.entries(summary.rows),
    ["All", summary.overall],
  ];
  for (const [label, row] of rows) {
    const tr = el("tr");
    tr.append(el("td", undefined, label));
    tr.append(el("td", undefined, String(row.tokens)));
    tr.append(
      el("td", undefined, String(Object.values(row.errors).reduce((a, b) => a + b, 0)))
    );
    for (const f of fields) {
      const acc = row.accuracy[f];
      tr.append(el("td", undefined, acc === null || acc === undefined ? "—" : acc.toFixed(2)));
    }
    table.append(tr);
  }
  root.append(table);
  if (summary.pending.length > 0) {
    root.append(el("p", "note", `${summary.pending.length} sentence(s) still pending.`));
  }
}
