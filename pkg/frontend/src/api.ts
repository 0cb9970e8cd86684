/** Thin fetch client for the review service; same origin in production. */
import type { ExportSummary, SentencePayload, SessionStatus, Submission } from "./types";

export class ApiError extends Error {
  status: number;
  details: string[];

  constructor(status: number, details: string[]) {
    super(details.join("; ") || `HTTP ${status}`);
    this.status = status;
    this.details = details;
  }
}

async function parseError(response: Response): Promise<ApiError> {
  let details: string[] = [];
  try {
    const body = await response.json();
    details = Array.isArray(body.detail) ? body.detail : [String(body.detail)];
  } catch {
    details = [response.statusText];
  }
  return new ApiError(response.status, details);
}

export async function getSession(sessionId: string): Promise<SessionStatus> {
  const response = await fetch(`/sessions/${encodeURIComponent(sessionId)}`);
  if (!response.ok) throw await parseError(response);
  return response.json();
}

export async function getSentence(
  sessionId: string,
  sentenceId: string
): Promise<SentencePayload> {
  const response = await fetch(
    `/sessions/${encodeURIComponent(sessionId)}/sentences/${encodeURIComponent(sentenceId)}`
  );
  if (!response.ok) throw await parseError(response);
  return response.json();
}

export async function postAdjudication(
  sessionId: string,
  submission: Submission
): Promise<{ ok: boolean; status: SessionStatus }> {
  const response = await fetch(
    `/sessions/${encodeURIComponent(sessionId)}/adjudications`,
    {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(submission),
    }
  );
  if (!response.ok) throw await parseError(response);
  return response.json();
}

export async function getExport(
  sessionId: string,
  partial: boolean
): Promise<{ gold: unknown[]; summary: ExportSummary }> {
  const response = await fetch(
    `/sessions/${encodeURIComponent(sessionId)}/export?partial=${partial}`
  );
  if (!response.ok) throw await parseError(response);
  return response.json();
}
