import { ComposerState } from "./state";

/**
 * Bar saturation point: -S equal to S_MAX nats fills the bar completely.
 * A UI constant, not a model quantity; 40 nats sits past every password
 * the bundled desk corpora consider strong, so the bar still moves on
 * long passphrases.
 */
export const S_MAX = 40;

/** Five-step red -> green palette, indexed by feedback bucket. */
export const BUCKET_CLASSES = [
  "bucket-0",
  "bucket-1",
  "bucket-2",
  "bucket-3",
  "bucket-4",
] as const;

export interface CellView {
  character: string;
  cssClass: string;
  q: number;
  substitutes: string[];
  selected: boolean;
}

export interface FeedbackView {
  cells: CellView[];
  barFill: number; // 0..1
  pending: boolean;
  stale: boolean; // response describes older text than what is typed
  notice: string | null;
}

function clamp01(x: number): number {
  return Math.min(1, Math.max(0, x));
}

/** Pure view of the state: every number and color comes from the last
 * accepted response, never from local guessing. */
export function renderFeedback(state: ComposerState): FeedbackView {
  const r = state.response;
  if (r === null) {
    return { cells: [], barFill: 0, pending: state.pending, stale: false, notice: state.notice };
  }
  const cells = r.chars.map((c, i) => {
    const bucket = Math.min(BUCKET_CLASSES.length - 1, Math.max(0, Math.floor(c.bucket)));
    return {
      character: c.character,
      cssClass: BUCKET_CLASSES[bucket] as string,
      q: c.q,
      substitutes: c.substitutes,
      selected: state.selected === i,
    };
  });
  return {
    cells,
    barFill: clamp01(-r.score / S_MAX),
    pending: state.pending,
    stale: r.password !== state.text,
    notice: state.notice,
  };
}
