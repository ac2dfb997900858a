import { ScoreResponse } from "./types";

/**
 * All composer data lives here; rendering is a pure function of this
 * record (see render.ts) and every mutation goes through the functions
 * below, so the invariants have one place to hold:
 *
 *  - `response` always describes `response.password`, never a guess about
 *    the current text; staleness is visible by comparing the two.
 *  - responses are accepted only in sequence order, so a slow early reply
 *    can never overwrite a later one.
 *  - on failure the last good response stays; only `notice` changes.
 */
export interface ComposerState {
  baseUrl: string;
  text: string;
  response: ScoreResponse | null;
  pending: boolean;
  selected: number | null; // 0-based cell index with open suggestions
  notice: string | null;
  seq: number; // last issued request sequence
  acceptedSeq: number; // highest sequence accepted so far
  undoStack: string[];
}

export function createState(baseUrl: string): ComposerState {
  return {
    baseUrl,
    text: "",
    response: null,
    pending: false,
    selected: null,
    notice: null,
    seq: 0,
    acceptedSeq: 0,
    undoStack: [],
  };
}

export function setText(state: ComposerState, text: string): void {
  state.text = text;
  if (state.selected !== null && state.selected >= text.length) {
    state.selected = null;
  }
}

export function beginRequest(state: ComposerState): number {
  state.seq += 1;
  state.pending = true;
  return state.seq;
}

/** Returns true when the response was taken; stale ones are dropped. */
export function acceptResponse(
  state: ComposerState,
  seq: number,
  response: ScoreResponse,
): boolean {
  if (seq <= state.acceptedSeq) return false; // out-of-order reply
  if (seq === state.seq) state.pending = false;
  state.acceptedSeq = seq;
  if (response.password !== state.text) return false; // typed past it
  state.response = response;
  state.notice = null;
  return true;
}

export function failRequest(state: ComposerState, seq: number, message: string): void {
  if (seq === state.seq) state.pending = false;
  if (seq > state.acceptedSeq) state.acceptedSeq = seq;
  state.notice = message; // last good response stays rendered
}

export function selectPosition(state: ComposerState, position: number | null): void {
  if (position !== null && (position < 0 || position >= state.text.length)) {
    state.selected = null;
    return;
  }
  state.selected = position;
}

/**
 * Substitute one character from the current response's suggestion list.
 * Returns the new text, or null (with a notice) when the suggestion no
 * longer matches what is typed.
 */
export function applySuggestion(
  state: ComposerState,
  position: number,
  symbol: string,
): string | null {
  const r = state.response;
  if (r === null || r.password !== state.text) {
    state.notice = "suggestion is stale, still rescoring";
    return null;
  }
  const cell = r.chars[position];
  if (cell === undefined || !cell.substitutes.includes(symbol)) {
    state.notice = "suggestion is stale, still rescoring";
    return null;
  }
  state.undoStack.push(state.text);
  state.text = state.text.slice(0, position) + symbol + state.text.slice(position + 1);
  state.notice = null;
  return state.text;
}

export function undo(state: ComposerState): string | null {
  const prior = state.undoStack.pop();
  if (prior === undefined) return null;
  state.text = prior;
  state.selected = null;
  return prior;
}
