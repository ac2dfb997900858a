export { scorePassword, ApiError } from "./api";
export type { ScoreOptions, FetchLike } from "./api";
export type { CharScore, ScoreResponse } from "./types";
export { isScoreResponse } from "./types";
export {
  createState,
  setText,
  beginRequest,
  acceptResponse,
  failRequest,
  selectPosition,
  applySuggestion,
  undo,
} from "./state";
export type { ComposerState } from "./state";
export { renderFeedback, BUCKET_CLASSES, S_MAX } from "./render";
export type { CellView, FeedbackView } from "./render";
export { Composer } from "./composer";
export type { ComposerConfig } from "./composer";
export { mount } from "./dom";
