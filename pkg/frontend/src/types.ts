// Wire types for the /score endpoint (schema version 1).

export interface CharScore {
  character: string;
  q: number; // conditional probability of this character given the rest
  bucket: number; // 0 (predictable) .. 4 (surprising)
  substitutes: string[]; // pool symbols strictly less predictable here
}

export interface ScoreResponse {
  schema_version: number;
  password: string;
  model_id: string;
  score: number; // sum of ln q over positions, always <= 0
  log10_guess_number: number | null;
  chars: CharScore[];
}

export function isScoreResponse(v: unknown): v is ScoreResponse {
  if (typeof v !== "object" || v === null) return false;
  const r = v as Record<string, unknown>;
  if (r.schema_version !== 1) return false;
  if (typeof r.password !== "string" || typeof r.model_id !== "string") return false;
  if (typeof r.score !== "number") return false;
  if (r.log10_guess_number !== null && typeof r.log10_guess_number !== "number") return false;
  if (!Array.isArray(r.chars) || r.chars.length !== r.password.length) return false;
  return r.chars.every((c) => {
    if (typeof c !== "object" || c === null) return false;
    const cc = c as Record<string, unknown>;
    return (
      typeof cc.character === "string" &&
      typeof cc.q === "number" &&
      typeof cc.bucket === "number" &&
      Array.isArray(cc.substitutes) &&
      cc.substitutes.every((s) => typeof s === "string")
    );
  });
}
