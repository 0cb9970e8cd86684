/** Wiring: session loading, keyboard-first review loop, offline buffering. */
import { ApiError, getExport, getSentence, getSession, postAdjudication } from "./api";
import { OfflineQueue, SentenceReview, SessionFlow } from "./state";
import { renderNotice, renderProgress, renderSentence, renderSummary } from "./render";

const app = document.getElementById("app")!;
const progressHost = document.getElementById("progress")!;
const noticeHost = document.getElementById("notice")!;

let flow: SessionFlow | null = null;
let review: SentenceReview | null = null;
let currentId: string | null = null;
const queue = new OfflineQueue();

function reviewerName(): string {
  const input = document.getElementById("reviewer") as HTMLInputElement;
  return input.value.trim() || "reviewer";
}

function rerender(): void {
  if (!review) return;
  renderSentence(app, review, handlers);
}

async function showSummary(): Promise<void> {
  if (!flow) return;
  const { summary } = await getExport(flow.sessionId, !flow.isDone());
  renderSummary(app, summary);
}

async function loadSentence(sentenceId: string): Promise<void> {
  if (!flow) return;
  const payload = await getSentence(flow.sessionId, sentenceId);
  review = new SentenceReview(payload);
  currentId = sentenceId;
  rerender();
}

async function advance(): Promise<void> {
  if (!flow) return;
  const next = flow.nextPending(currentId ?? undefined);
  if (next === null) {
    await showSummary();
    return;
  }
  await loadSentence(next);
}

async function trySubmit(): Promise<void> {
  if (!flow || !review || !review.isComplete()) return;
  const submission = review.submission(reviewerName());
  try {
    const ack = await postAdjudication(flow.sessionId, submission);
    flow.applyStatus(ack.status);
    renderProgress(progressHost, ack.status);
    renderNotice(noticeHost, "");
    await advance();
  } catch (error) {
    if (error instanceof ApiError) {
      // server rejected a verdict: surface messages, keep everything else
      renderNotice(noticeHost, `rejected: ${error.details.join("; ")}`, "error");
    } else {
      // offline: buffer the submission, offer retry, lose nothing
      queue.push(submission);
      renderNotice(
        noticeHost,
        `offline — ${queue.size} submission(s) buffered; press r to retry`,
        "warn"
      );
    }
  }
}

async function retryQueue(): Promise<void> {
  if (!flow) return;
  const result = await queue.flush(async (s) => {
    try {
      const ack = await postAdjudication(flow!.sessionId, s);
      flow!.applyStatus(ack.status);
      return true;
    } catch (error) {
      return error instanceof ApiError; // validation rejects are dropped from the queue
    }
  });
  renderNotice(
    noticeHost,
    result.remaining === 0
      ? `retry: ${result.sent} submission(s) delivered`
      : `retry: ${result.sent} delivered, ${result.remaining} still buffered`,
    result.remaining === 0 ? "info" : "warn"
  );
  if (flow) renderProgress(progressHost, await getSession(flow.sessionId));
  await advance();
}

const handlers = {
  onChange: rerender,
  onMarkAll: () => {
    review?.markAllCorrect();
    rerender();
  },
  onSubmit: () => {
    void trySubmit();
  },
};

document.addEventListener("keydown", (event) => {
  if (event.target instanceof HTMLInputElement || event.target instanceof HTMLSelectElement) {
    return;
  }
  if (event.key === "a") handlers.onMarkAll();
  if (event.key === "Enter") void trySubmit();
  if (event.key === "r") void retryQueue();
});

document.getElementById("load-btn")!.addEventListener("click", async () => {
  const input = document.getElementById("session-id") as HTMLInputElement;
  const sessionId = input.value.trim();
  if (!sessionId) return;
  try {
    const status = await getSession(sessionId);
    flow = new SessionFlow(status);
    renderProgress(progressHost, status);
    renderNotice(noticeHost, "");
    currentId = null;
    await advance();
  } catch (error) {
    renderNotice(noticeHost, `cannot load session: ${String(error)}`, "error");
  }
});
