"""Per-character feedback on a handful of passwords.

Fits a trigram estimator on the bundled synthetic leak, then walks through
some typical choices: each character is colored by its predictability
bucket (red = guessable from context, green = surprising) and the weakest
position gets replacement suggestions.

Run: python3 demos/feedback_walkthrough.py
"""

import numpy as np

from ippsm import meter
from ippsm.cli import ANSI_BY_BUCKET
from ippsm.datasets import synthetic_leak
from ippsm.ngram import fit_ngram

PASSWORDS = ["password", "passw0rd", "pa5sword", "qwerty123", "xkiqvnmz"]


def colored(password, buckets):
    cells = [f"\x1b[{ANSI_BY_BUCKET[b]}m{ch}\x1b[0m" for ch, b in zip(password, buckets)]
    return "".join(cells)


def main():
    leak = synthetic_leak(n_unique=4000, seed=3)
    est = fit_ngram(leak, order=3)
    pool = list(est.alphabet.symbols)

    print(f"estimator: trigram over {est.alphabet.n_content} symbols, "
          f"{sum(leak.counts.values())} leaked passwords\n")

    for pw in PASSWORDS:
        rep = meter.score(est, pw)
        print(f"  {colored(pw, rep.buckets)}   S = {rep.score:7.2f}")
        print(f"  {''.join(str(b) for b in rep.buckets)}   buckets\n")

        # suggestions for the most predictable character
        weakest = int(np.argmax(rep.q)) + 1
        subs, already_minimal = meter.suggest(
            est, pw, weakest, pool, k=3, seed=11, conditionals=rep.distributions
        )
        if already_minimal:
            print(f"  position {weakest} is already the least predictable choice\n")
        else:
            print(f"  position {weakest} ({pw[weakest - 1]!r}, "
                  f"Q={rep.q[weakest - 1]:.3f}) could become: {', '.join(subs)}\n")


if __name__ == "__main__":
    main()
