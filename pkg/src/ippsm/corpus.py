"""Password leak ingestion, cleaning, alphabet construction and encoding."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)

MASK_CHAR = "∘"  # ring operator, rendered as the empty-character placeholder
PAD_CHAR = "·"

PRINTABLE_ASCII = "".join(chr(c) for c in range(0x20, 0x7F))


class CorpusError(ValueError):
    """Unusable corpus input (empty file, filters removed everything, ...)."""


class EncodingError(ValueError):
    """Password cannot be encoded against the alphabet."""


@dataclass(frozen=True)
class Alphabet:
    """Content symbols with dense indices, plus reserved MASK and PAD.

    Content symbols occupy indices 0..n_content-1; MASK and PAD come last,
    so one-hot width is n_total = n_content + 2.
    """

    symbols: tuple
    index: dict = field(repr=False)
    mask_index: int
    pad_index: int

    @classmethod
    def from_symbols(cls, symbols) -> "Alphabet":
        syms = tuple(dict.fromkeys(symbols))
        if MASK_CHAR in syms or PAD_CHAR in syms:
            raise ValueError("MASK/PAD placeholder characters cannot be content symbols")
        index = {s: i for i, s in enumerate(syms)}
        return cls(symbols=syms, index=index, mask_index=len(syms), pad_index=len(syms) + 1)

    @classmethod
    def printable_ascii(cls) -> "Alphabet":
        return cls.from_symbols(PRINTABLE_ASCII)

    @property
    def n_content(self) -> int:
        return len(self.symbols)

    @property
    def n_total(self) -> int:
        return len(self.symbols) + 2

    def __contains__(self, ch: str) -> bool:
        return ch in self.index

    def to_json(self) -> dict:
        return {"symbols": "".join(self.symbols)}

    @classmethod
    def from_json(cls, obj: dict) -> "Alphabet":
        return cls.from_symbols(obj["symbols"])


@dataclass
class LeakCorpus:
    """Unique passwords with positive observation counts."""

    counts: dict

    def __post_init__(self):
        for pw, c in self.counts.items():
            if c < 1:
                raise CorpusError(f"non-positive frequency {c} for {pw!r}")

    @property
    def n_unique(self) -> int:
        return len(self.counts)

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def passwords(self):
        return list(self.counts)

    def frequencies(self) -> np.ndarray:
        return np.array(list(self.counts.values()), dtype=np.int64)


@dataclass
class EncodedPassword:
    """Fixed-length index sequence; positions >= length hold PAD."""

    indices: np.ndarray
    length: int


def load_corpus(path, fmt: str = "plain-lines") -> LeakCorpus:
    """Read a newline-delimited leak file.

    fmt "plain-lines": one password per line, duplicates aggregated.
    fmt "count-prefixed": ASCII decimal count, one space, then the password
    verbatim to end of line. Invalid UTF-8 lines are skipped and counted.
    """
    if fmt not in ("plain-lines", "count-prefixed"):
        raise ValueError(f"unknown corpus format {fmt!r}")
    counts: dict = {}
    skipped = 0
    with open(path, "rb") as fh:
        for raw in fh:
            raw = raw.rstrip(b"\r\n")
            try:
                line = raw.decode("utf-8")
            except UnicodeDecodeError:
                skipped += 1
                continue
            if not line:
                continue
            if fmt == "count-prefixed":
                head, _, pw = line.partition(" ")
                try:
                    c = int(head)
                except ValueError:
                    skipped += 1
                    continue
                if c < 1 or not pw:
                    skipped += 1
                    continue
                counts[pw] = counts.get(pw, 0) + c
            else:
                counts[line] = counts.get(line, 0) + 1
    if skipped:
        log.warning("load_corpus: skipped %d unusable lines in %s", skipped, path)
    if not counts:
        raise CorpusError(f"no usable lines in {path}")
    return LeakCorpus(counts)


def save_corpus(corpus: LeakCorpus, path, fmt: str = "count-prefixed") -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for pw, c in corpus.counts.items():
            if fmt == "count-prefixed":
                fh.write(f"{c} {pw}\n")
            else:
                for _ in range(c):
                    fh.write(pw + "\n")


def clean_and_split(
    corpus: LeakCorpus,
    min_len: int = 5,
    max_len: int = 16,
    min_freq: int = 1,
    split: float = 0.8,
    seed: int = 0,
    alphabet: Alphabet | None = None,
):
    """Filter by length/frequency (and optionally alphabet), then split.

    The split is over unique passwords with a seeded shuffle, so the train
    and test sets are disjoint and reproducible. Passwords containing
    out-of-alphabet symbols are dropped (count reported via logging).
    """
    if not 0.0 < split < 1.0:
        raise ValueError(f"split fraction must be in (0, 1), got {split}")
    kept = {}
    dropped_oov = 0
    for pw, c in corpus.counts.items():
        if not (min_len <= len(pw) <= max_len) or c < min_freq:
            continue
        if alphabet is not None and any(ch not in alphabet for ch in pw):
            dropped_oov += 1
            continue
        kept[pw] = c
    if dropped_oov:
        log.warning("clean_and_split: dropped %d out-of-alphabet passwords", dropped_oov)
    if not kept:
        raise CorpusError("filters removed every password")
    order = sorted(kept)
    rng = np.random.default_rng(seed)
    rng.shuffle(order)
    n_train = int(len(order) * split)
    train = LeakCorpus({pw: kept[pw] for pw in order[:n_train]})
    test = LeakCorpus({pw: kept[pw] for pw in order[n_train:]})
    return train, test


def symbol_counts(corpus: LeakCorpus) -> dict:
    """Character occurrence counts weighted by password frequency."""
    counts: dict = {}
    for pw, c in corpus.counts.items():
        for ch in pw:
            counts[ch] = counts.get(ch, 0) + c
    return counts


def build_alphabet(corpus: LeakCorpus) -> Alphabet:
    """Alphabet of every observed content symbol (code-point order) + MASK/PAD."""
    counts = symbol_counts(corpus)
    if not counts:
        raise CorpusError("empty corpus")
    return Alphabet.from_symbols(sorted(counts))


def top_symbols(corpus: LeakCorpus, k: int) -> list:
    """The k most frequent symbols: frequency desc, ties by code point asc."""
    counts = symbol_counts(corpus)
    ranked = sorted(counts, key=lambda ch: (-counts[ch], ch))
    if k > len(ranked):
        log.warning("top_symbols: k=%d exceeds %d distinct symbols, returning all", k, len(ranked))
        return ranked
    return ranked[:k]


def encode(password: str, alphabet: Alphabet, max_len: int) -> EncodedPassword:
    if len(password) > max_len:
        raise EncodingError(f"password length {len(password)} exceeds max_len {max_len}")
    if len(password) == 0:
        raise EncodingError("empty password")
    idx = np.full(max_len, alphabet.pad_index, dtype=np.int64)
    for i, ch in enumerate(password):
        j = alphabet.index.get(ch)
        if j is None:
            raise EncodingError(f"character {ch!r} at position {i + 1} not in alphabet")
        idx[i] = j
    return EncodedPassword(indices=idx, length=len(password))


def decode(encoded: EncodedPassword, alphabet: Alphabet) -> str:
    chars = []
    for i in range(encoded.length):
        j = int(encoded.indices[i])
        if j == alphabet.mask_index:
            chars.append(MASK_CHAR)
        elif j == alphabet.pad_index:
            raise EncodingError(f"PAD index inside content region at position {i + 1}")
        else:
            chars.append(alphabet.symbols[j])
    return "".join(chars)
