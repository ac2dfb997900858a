import { FetchLike, scorePassword } from "./api";
import {
  ComposerState,
  acceptResponse,
  applySuggestion,
  beginRequest,
  createState,
  failRequest,
  selectPosition,
  setText,
  undo,
} from "./state";
import { FeedbackView, renderFeedback } from "./render";

export interface ComposerConfig {
  baseUrl: string;
  debounceMs?: number; // default 150
  k?: number;
  seed?: number;
  fetchImpl?: FetchLike;
  onRender?: (view: FeedbackView, state: ComposerState) => void;
}

const DEFAULT_DEBOUNCE_MS = 150;

/**
 * Controller for the composition loop: debounced scoring on input,
 * immediate rescoring after an applied suggestion or undo. DOM-free so
 * the whole interaction sequence is testable with fake timers and a
 * mocked fetch; dom.ts adds the actual elements.
 *
 * At most one timer is armed per debounce window. Replies are matched by
 * sequence number, so whatever races the network invents, the rendered
 * response is never older than the last accepted one.
 */
export class Composer {
  readonly state: ComposerState;
  private readonly debounceMs: number;
  private readonly fetchImpl: FetchLike | undefined;
  private readonly k: number | undefined;
  private readonly seed: number | undefined;
  private readonly onRender: ComposerConfig["onRender"];
  private timer: ReturnType<typeof setTimeout> | null = null;

  constructor(cfg: ComposerConfig) {
    this.state = createState(cfg.baseUrl);
    this.debounceMs = cfg.debounceMs ?? DEFAULT_DEBOUNCE_MS;
    this.fetchImpl = cfg.fetchImpl;
    this.k = cfg.k;
    this.seed = cfg.seed;
    this.onRender = cfg.onRender;
  }

  /** Keystroke entry point: update text now, score after the debounce. */
  input(text: string): void {
    setText(this.state, text);
    this.schedule();
    this.emit();
  }

  select(position: number | null): void {
    selectPosition(this.state, position);
    this.emit();
  }

  /** Replace one character from the current suggestion list and rescore
   * immediately (no debounce: the edit is deliberate, not typing). */
  applySuggestion(position: number, symbol: string): Promise<void> {
    const next = applySuggestion(this.state, position, symbol);
    this.emit();
    if (next === null) return Promise.resolve();
    return this.requestNow();
  }

  undo(): Promise<void> {
    const prior = undo(this.state);
    this.emit();
    if (prior === null) return Promise.resolve();
    return this.requestNow();
  }

  /** Fire any armed debounce timer immediately (used by tests and blur). */
  flush(): Promise<void> {
    if (this.timer === null) return Promise.resolve();
    return this.requestNow();
  }

  private schedule(): void {
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = setTimeout(() => {
      this.timer = null;
      void this.request();
    }, this.debounceMs);
  }

  private requestNow(): Promise<void> {
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    return this.request();
  }

  private async request(): Promise<void> {
    const text = this.state.text;
    if (text.length === 0) {
      // nothing to score; drop any stale feedback
      this.state.response = null;
      this.state.pending = false;
      this.state.notice = null;
      this.emit();
      return;
    }
    const seq = beginRequest(this.state);
    this.emit();
    try {
      const resp = await scorePassword(
        this.state.baseUrl,
        text,
        { k: this.k, seed: this.seed },
        this.fetchImpl ?? fetch,
      );
      acceptResponse(this.state, seq, resp);
    } catch (err) {
      failRequest(this.state, seq, err instanceof Error ? err.message : String(err));
    }
    this.emit();
  }

  private emit(): void {
    if (this.onRender) this.onRender(renderFeedback(this.state), this.state);
  }
}
