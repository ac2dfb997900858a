"""Character-level strength metering on top of any conditional estimator.

An estimator exposes an `alphabet` and `local_conditionals(password)`
returning an array of shape [len, n_content] whose row i is the model's
P(x_i = s | x_{-i}). Everything here, scores, feedback buckets, substitution
suggestions and adversarial perturbations, is derived from those rows, so the
n-gram and neural backends are interchangeable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .corpus import Alphabet, EncodingError

N_BUCKETS = 5  # 0 = most predictable (red) .. 4 = least predictable (green)


class MeterError(ValueError):
    pass


class UniformEstimator:
    """Every symbol equally likely at every position; a null meter."""

    def __init__(self, alphabet: Alphabet):
        self.alphabet = alphabet

    def local_conditionals(self, password: str) -> np.ndarray:
        a = self.alphabet.n_content
        return np.full((len(password), a), 1.0 / a, dtype=np.float64)


@dataclass
class StrengthReport:
    password: str
    q: np.ndarray  # per-character conditional probability, shape [len]
    distributions: np.ndarray  # full conditional rows, shape [len, n_content]
    score: float  # sum of ln q, the log pseudo-probability
    buckets: list
    log10_guess_number: float | None = None


def _check_password(estimator, password: str) -> None:
    if len(password) == 0:
        raise MeterError("empty password")
    for i, ch in enumerate(password):
        if ch not in estimator.alphabet:
            raise MeterError(f"character {ch!r} at position {i + 1} not in alphabet")


def char_q(estimator, password: str) -> np.ndarray:
    """Q(x_i) = P(x_i | rest) for each character of the password."""
    _check_password(estimator, password)
    cond = estimator.local_conditionals(password)
    idx = [estimator.alphabet.index[ch] for ch in password]
    return cond[np.arange(len(password)), idx]


def feedback_buckets(q) -> list:
    """Map each probability to a discrete meter cell: floor(-log10 q) in 0..4."""
    if isinstance(q, StrengthReport):
        q = q.q
    out = []
    for v in np.asarray(q, dtype=np.float64):
        if v <= 0.0:
            out.append(N_BUCKETS - 1)
        else:
            out.append(int(min(N_BUCKETS - 1, max(0, math.floor(-math.log10(v))))))
    return out


def score(estimator, password: str) -> StrengthReport:
    _check_password(estimator, password)
    cond = estimator.local_conditionals(password)
    idx = [estimator.alphabet.index[ch] for ch in password]
    q = cond[np.arange(len(password)), idx]
    with np.errstate(divide="ignore"):
        s = float(np.sum(np.log(q)))
    return StrengthReport(
        password=password,
        q=q,
        distributions=cond,
        score=s,
        buckets=feedback_buckets(q),
    )


def rank_alphabet(estimator, password: str, position: int):
    """All content symbols for one position, most probable first.

    Returns (ranked symbols, rank of the current character). Equal
    probabilities order by code point, so ranking is deterministic.
    """
    _check_password(estimator, password)
    if not 1 <= position <= len(password):
        raise MeterError(f"position {position} outside 1..{len(password)}")
    row = estimator.local_conditionals(password)[position - 1]
    syms = estimator.alphabet.symbols
    ranked = sorted(syms, key=lambda ch: (-row[estimator.alphabet.index[ch]], ch))
    return ranked, ranked.index(password[position - 1])


def secure_substitutes(estimator, password: str, position: int, pool, conditionals=None) -> list:
    """Pool symbols strictly less predictable than the current character.

    Sorted ascending by Q, then code point, so the head of the list is the
    strongest replacement. Empty means the character is already at the
    minimum within the pool. Pass precomputed conditional rows to avoid a
    second model evaluation.
    """
    _check_password(estimator, password)
    if not 1 <= position <= len(password):
        raise MeterError(f"position {position} outside 1..{len(password)}")
    if not pool:
        raise MeterError("empty substitution pool")
    index = estimator.alphabet.index
    for ch in pool:
        if ch not in index:
            raise MeterError(f"pool symbol {ch!r} not in alphabet")
    if conditionals is None:
        conditionals = estimator.local_conditionals(password)
    row = conditionals[position - 1]
    here = row[index[password[position - 1]]]
    cands = [ch for ch in pool if ch != password[position - 1] and row[index[ch]] < here]
    return sorted(cands, key=lambda ch: (row[index[ch]], ch))


def suggest(estimator, password: str, position: int, pool, k: int = 3, seed: int = 0, conditionals=None):
    """k secure substitutes sampled uniformly without replacement.

    Returns (symbols, already_minimal). already_minimal is True when no pool
    symbol beats the current character, in which case symbols is empty.
    """
    if k < 1:
        raise MeterError(f"suggestion count must be >= 1, got {k}")
    cands = secure_substitutes(estimator, password, position, pool, conditionals=conditionals)
    if not cands:
        return [], True
    rng = np.random.default_rng(seed)
    take = min(k, len(cands))
    picks = rng.choice(len(cands), size=take, replace=False)
    return [cands[int(i)] for i in picks], False


@dataclass
class Perturbation:
    password: str
    changes: list  # (position 1-based, old char, new char) per round


def perturb(
    estimator,
    password: str,
    n: int,
    mode: str,
    pool,
    seed: int = 0,
) -> Perturbation:
    """Substitute n characters, one per round, strengthening or not by mode.

    baseline: random untouched position, random pool symbol.
    semi:     most predictable untouched position, random pool symbol.
    fully:    most predictable untouched position, least predictable pool symbol.

    Conditionals are recomputed after every substitution, positions are never
    touched twice, and the replacement always differs from the character it
    replaces. Position ties take the lowest index, symbol ties the lowest
    code point.
    """
    if mode not in ("baseline", "semi", "fully"):
        raise MeterError(f"unknown perturbation mode {mode!r}")
    _check_password(estimator, password)
    if not 1 <= n <= len(password):
        raise MeterError(f"cannot change {n} characters of a length-{len(password)} password")
    if not pool:
        raise MeterError("empty substitution pool")
    index = estimator.alphabet.index
    for ch in pool:
        if ch not in index:
            raise MeterError(f"pool symbol {ch!r} not in alphabet")
    rng = np.random.default_rng(seed)
    current = list(password)
    used: set = set()
    changes = []
    for _ in range(n):
        cond = estimator.local_conditionals("".join(current))
        free = [i for i in range(len(current)) if i not in used]
        if mode == "baseline":
            pos = int(free[rng.integers(len(free))])
        else:
            qs = [cond[i, index[current[i]]] for i in free]
            pos = free[int(np.argmax(qs))]  # argmax keeps the lowest index on ties
        old = current[pos]
        cands = [ch for ch in pool if ch != old]
        if not cands:
            raise MeterError("substitution pool collapsed to the original character")
        if mode == "fully":
            new = min(cands, key=lambda ch: (cond[pos, index[ch]], ch))
        else:
            new = cands[int(rng.integers(len(cands)))]
        current[pos] = new
        used.add(pos)
        changes.append((pos + 1, old, new))
    return Perturbation(password="".join(current), changes=changes)
