import { Composer, ComposerConfig } from "./composer";
import { FeedbackView } from "./render";

/**
 * Minimal DOM wiring: an input, a row of colored cells, a strength bar
 * and a notice line. Clicking a cell opens its suggestion chips; clicking
 * a chip applies the substitution. No framework, no virtual DOM; the row
 * is rebuilt on every render, which at password length is nothing.
 */
export function mount(container: HTMLElement, cfg: ComposerConfig): Composer {
  container.classList.add("composer");
  const input = document.createElement("input");
  input.type = "text";
  input.autocomplete = "off";
  input.spellcheck = false;
  input.className = "composer-input";
  const cellRow = document.createElement("div");
  cellRow.className = "composer-cells";
  const bar = document.createElement("div");
  bar.className = "composer-bar";
  const barFill = document.createElement("div");
  barFill.className = "composer-bar-fill";
  bar.appendChild(barFill);
  const suggestRow = document.createElement("div");
  suggestRow.className = "composer-suggestions";
  const notice = document.createElement("div");
  notice.className = "composer-notice";
  container.append(input, cellRow, bar, suggestRow, notice);

  const composer = new Composer({
    ...cfg,
    onRender: (view, state) => {
      draw(view);
      cfg.onRender?.(view, state);
    },
  });

  input.addEventListener("input", () => composer.input(input.value));
  input.addEventListener("blur", () => void composer.flush());

  function draw(view: FeedbackView): void {
    cellRow.replaceChildren();
    view.cells.forEach((cell, i) => {
      const el = document.createElement("span");
      el.textContent = cell.character;
      el.className = `cell ${cell.cssClass}${cell.selected ? " selected" : ""}`;
      el.title = `q = ${cell.q.toPrecision(3)}`;
      el.addEventListener("click", () => composer.select(cell.selected ? null : i));
      cellRow.appendChild(el);
    });

    barFill.style.width = `${(view.barFill * 100).toFixed(1)}%`;
    bar.classList.toggle("pending", view.pending);
    cellRow.classList.toggle("stale", view.stale);

    suggestRow.replaceChildren();
    const selected = view.cells.find((c) => c.selected);
    if (selected) {
      const pos = view.cells.indexOf(selected);
      for (const symbol of selected.substitutes) {
        const chip = document.createElement("button");
        chip.type = "button";
        chip.className = "chip";
        chip.textContent = symbol;
        chip.addEventListener("click", () => {
          void composer.applySuggestion(pos, symbol).then(() => {
            input.value = composer.state.text;
          });
        });
        suggestRow.appendChild(chip);
      }
      if (selected.substitutes.length === 0) {
        const note = document.createElement("span");
        note.textContent = "already the least predictable choice here";
        suggestRow.appendChild(note);
      }
    }

    notice.textContent = view.notice ?? "";
  }

  return composer;
}
