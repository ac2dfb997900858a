import { describe, expect, it } from "vitest";

import { createState, setText } from "../src/state";
import { S_MAX, renderFeedback } from "../src/render";
import { ScoreResponse } from "../src/types";

function response(password: string, buckets: number[], score: number): ScoreResponse {
  return {
    schema_version: 1,
    password,
    model_id: "test",
    score,
    log10_guess_number: null,
    chars: buckets.map((b, i) => ({
      character: password[i] as string,
      q: Math.pow(10, -b),
      bucket: b,
      substitutes: [],
    })),
  };
}

describe("renderFeedback", () => {
  it("renders no cells and an empty bar for an empty composer", () => {
    const view = renderFeedback(createState("http://x"));
    expect(view.cells).toEqual([]);
    expect(view.barFill).toBe(0);
    expect(view.stale).toBe(false);
  });

  it("maps buckets to the five palette classes", () => {
    const state = createState("http://x");
    setText(state, "ab");
    state.response = response("ab", [0, 4], -3);
    const view = renderFeedback(state);
    expect(view.cells.map((c) => c.cssClass)).toEqual(["bucket-0", "bucket-4"]);
  });

  it("keeps one cell per scored character, even when the text moved on", () => {
    const state = createState("http://x");
    setText(state, "abcd");
    state.response = response("ab", [1, 2], -2);
    const view = renderFeedback(state);
    expect(view.cells).toHaveLength(2); // cell count == scored length
    expect(view.stale).toBe(true);
  });

  it("fills the bar proportionally to -score and clamps at both ends", () => {
    const state = createState("http://x");
    setText(state, "ab");
    state.response = response("ab", [0, 0], -S_MAX / 2);
    expect(renderFeedback(state).barFill).toBeCloseTo(0.5, 12);
    state.response = response("ab", [0, 0], -10 * S_MAX);
    expect(renderFeedback(state).barFill).toBe(1);
    state.response = response("ab", [0, 0], 0);
    expect(renderFeedback(state).barFill).toBe(0);
  });

  it("marks the selected cell", () => {
    const state = createState("http://x");
    setText(state, "ab");
    state.response = response("ab", [2, 2], -4);
    state.selected = 1;
    const view = renderFeedback(state);
    expect(view.cells.map((c) => c.selected)).toEqual([false, true]);
  });
});
