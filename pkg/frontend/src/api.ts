import { ScoreResponse, isScoreResponse } from "./types";

export interface ScoreOptions {
  k?: number; // substitutes per character
  seed?: number; // fix suggestion sampling for reproducible responses
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export async function scorePassword(
  baseUrl: string,
  password: string,
  opts: ScoreOptions = {},
  fetchImpl: FetchLike = fetch,
): Promise<ScoreResponse> {
  const body: Record<string, unknown> = { password };
  if (opts.k !== undefined) body.k = opts.k;
  if (opts.seed !== undefined) body.seed = opts.seed;

  const resp = await fetchImpl(`${baseUrl}/score`, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify(body),
  });
  if (!resp.ok) {
    let message = `scoring failed (${resp.status})`;
    try {
      const doc = (await resp.json()) as { error?: string };
      if (doc.error) message = doc.error;
    } catch {
      // non-JSON error body, keep the status message
    }
    throw new ApiError(resp.status, message);
  }
  const doc: unknown = await resp.json();
  if (!isScoreResponse(doc)) {
    throw new ApiError(502, "malformed score response");
  }
  return doc;
}
