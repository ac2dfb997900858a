"""Seeded synthetic leak generators for tests and demos.

No real leak data ships with the package. These generators produce corpora
with the qualitative shape of human-chosen passwords: a heavy-tailed
frequency law over patterns built from common words, digit suffixes,
keyboard walks and leet substitutions.
"""

from __future__ import annotations

import numpy as np

from .corpus import LeakCorpus

_WORDS = [
    "password", "iloveyou", "princess", "sunshine", "monkey", "dragon",
    "shadow", "master", "soccer", "charlie", "jordan", "hunter", "summer",
    "ashley", "daniel", "angel", "flower", "ginger", "hannah", "harley",
    "cookie", "pepper", "banana", "august", "silver", "purple", "orange",
    "winter", "tigger", "buster", "batman", "thomas", "robert", "taylor",
]

_WALKS = ["qwerty", "asdfgh", "zxcvbn", "qazwsx", "123qwe", "1q2w3e4r"]

_SUFFIXES = [
    "", "1", "123", "12", "2", "1234", "7", "11", "2000", "01",
    "69", "21", "13", "3", "777", "22", "007", "99", "88", "123456",
]

_LEET = {"a": "4", "e": "3", "i": "1", "o": "0", "s": "5"}


def _leet(word: str, rng: np.random.Generator) -> str:
    out = []
    for ch in word:
        if ch in _LEET and rng.random() < 0.5:
            out.append(_LEET[ch])
        else:
            out.append(ch)
    return "".join(out)


def _ranked_choice(rng: np.random.Generator, items: list) -> str:
    """Zipf-weighted pick: earlier list entries are proportionally likelier."""
    w = 1.0 / np.arange(1, len(items) + 1) ** 0.9
    return items[rng.choice(len(items), p=w / w.sum())]


def _suffix(rng: np.random.Generator) -> str:
    if rng.random() < 0.25:
        return str(rng.integers(0, 10000))
    return _ranked_choice(rng, _SUFFIXES)


def synthetic_leak(
    n_unique: int = 2000,
    seed: int = 0,
    min_len: int = 5,
    max_len: int = 16,
) -> LeakCorpus:
    """Corpus of n_unique passwords whose counts come from repeated draws.

    Passwords are sampled i.i.d. from a mix of common-word, leet,
    keyboard-walk, digit-run and random-string patterns until n_unique
    distinct strings have appeared; a password's count is how often it was
    drawn. Frequency therefore tracks structural probability, the coupling
    meters rely on: the head is popular words with popular suffixes, the
    tail mostly singletons.
    """
    rng = np.random.default_rng(seed)
    counts: dict = {}
    while len(counts) < n_unique:
        kind = rng.random()
        if kind < 0.32:
            pw = _ranked_choice(rng, _WORDS) + _suffix(rng)
        elif kind < 0.47:
            pw = _leet(_ranked_choice(rng, _WORDS), rng) + _suffix(rng)
        elif kind < 0.62:
            pw = _ranked_choice(rng, _WALKS) + _suffix(rng)
        elif kind < 0.77:
            pw = "".join(str(rng.integers(0, 10)) for _ in range(rng.integers(min_len, 9)))
        else:
            length = int(rng.integers(min_len, max_len + 1))
            pw = "".join(chr(rng.integers(97, 123)) for _ in range(length))
        if min_len <= len(pw) <= max_len:
            counts[pw] = counts.get(pw, 0) + 1
    return LeakCorpus(counts)


def random_markov_tables(symbols: str, seed: int = 0):
    """Random first-order chain over the given symbols (Dirichlet rows).

    Returns (start, transition) dicts suitable for synthetic_markov_leak and
    for building an exact reference model from the same tables.
    """
    rng = np.random.default_rng(seed)
    syms = list(symbols)
    start_p = rng.dirichlet(np.ones(len(syms)))
    start = {s: float(p) for s, p in zip(syms, start_p)}
    transition = {}
    for s in syms:
        row = rng.dirichlet(np.ones(len(syms)))
        transition[s] = {t: float(p) for t, p in zip(syms, row)}
    return start, transition


def synthetic_markov_leak(
    transition: dict,
    start: dict,
    length: int,
    n_samples: int,
    seed: int = 0,
) -> LeakCorpus:
    """Sample fixed-length strings from an explicit first-order chain.

    transition maps symbol -> {symbol: prob}; start maps symbol -> prob.
    Used to manufacture corpora whose true conditionals are known exactly.
    """
    rng = np.random.default_rng(seed)
    start_syms = list(start)
    start_p = np.array([start[s] for s in start_syms], dtype=np.float64)
    start_p = start_p / start_p.sum()
    trans_syms = {s: list(d) for s, d in transition.items()}
    trans_p = {}
    for s, d in transition.items():
        p = np.array([d[t] for t in trans_syms[s]], dtype=np.float64)
        trans_p[s] = p / p.sum()
    counts: dict = {}
    for _ in range(n_samples):
        chars = [start_syms[rng.choice(len(start_syms), p=start_p)]]
        for _ in range(length - 1):
            prev = chars[-1]
            chars.append(trans_syms[prev][rng.choice(len(trans_syms[prev]), p=trans_p[prev])])
        pw = "".join(chars)
        counts[pw] = counts.get(pw, 0) + 1
    return LeakCorpus(counts)
