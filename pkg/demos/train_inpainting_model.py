"""Train a small masked-inpainting estimator and sanity-check it.

The training corpus is sampled from a first-order chain whose conditionals
are known exactly, so the learned per-position distributions have a ground
truth to be compared against. Five epochs of the desk preset are enough to
see the error drop well below chance; the full schedule used by the
acceptance suite runs 50 epochs in three learning-rate stages.

Run: python3 demos/train_inpainting_model.py   (about a minute)
"""

import tempfile
import time
from pathlib import Path

import numpy as np

from ippsm import meter, neural
from ippsm.corpus import Alphabet
from ippsm.datasets import random_markov_tables, synthetic_markov_leak
from ippsm.ngram import NgramModel

SYMS = "abcdefgh"


def main():
    start, trans = random_markov_tables(SYMS, seed=7)
    leak = synthetic_markov_leak(trans, start, length=6, n_samples=5000, seed=7)
    oracle = NgramModel.from_tables(start, trans, length=6)
    alphabet = Alphabet.from_symbols(SYMS)

    cfg = neural.preset_config("desk", alphabet_size=alphabet.n_total)
    print("architecture:")
    for line in cfg.layer_summary():
        print(f"  {line}")

    t0 = time.time()
    result = neural.train(
        leak, alphabet, cfg,
        neural.TrainConfig(learning_rate=1e-3, epochs=5, seed=3),
    )
    print(f"\ntrained 5 epochs in {time.time() - t0:.0f}s, "
          f"loss {result.epoch_losses[0]:.3f} -> {result.epoch_losses[-1]:.3f}")

    held = oracle.sample(50, seed=99)
    err = np.mean([
        np.abs(result.model.local_conditionals(pw) - oracle.local_conditionals(pw)).mean()
        for pw in held
    ])
    print(f"mean |Q_model - Q_chain| on 50 held-out strings: {err:.4f} "
          f"(chance would be ~{2 * (1 - 1 / len(SYMS)) / len(SYMS):.3f})")

    pw = held[0]
    rep = meter.score(result.model, pw)
    print(f"\nscore({pw!r}) = {rep.score:.3f}, per-char Q {np.round(rep.q, 3)}")

    with tempfile.TemporaryDirectory() as d:
        path = Path(d) / "desk.model"
        neural.save_model(result.model, path)
        loaded = neural.load_model(path)
        same = loaded.param_blob() == result.model.param_blob()
        print(f"saved {path.stat().st_size / 1e6:.2f} MB, reload bit-identical: {same}")


if __name__ == "__main__":
    main()
