"""Directed n-gram password models with exact masked conditionals.

A fitted model keeps add-k smoothed transition counts over contexts of the
previous order-1 symbols (PAD-padded at the string start). Two scoring modes
share the same counts:

* "length": P(x) = P(len) * prod_i P(x_i | ctx_i), conditionals renormalised
  over content symbols only. Fixed-length keyspaces sum to P(len).
* "end": an end-of-string column participates in every conditional and
  terminates the product, as in classic Markov password models.

Because the model is directed and exact, the local conditionals
P(x_i | x_{-i}) can be computed by enumerating the symbol at one position
and renormalising the joint. That makes it the reference backend for the
masked-inpainting meter.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .corpus import Alphabet, EncodingError, LeakCorpus, build_alphabet
from .numerics import PROB_FLOOR

log = logging.getLogger(__name__)

END_COL = -1  # last column of every count row


class NgramError(ValueError):
    pass


def _softmax_logs(logp: np.ndarray) -> np.ndarray:
    m = logp.max()
    if not np.isfinite(m):
        raise NgramError("all candidate symbols have zero probability")
    p = np.exp(logp - m)
    return p / p.sum()


@dataclass
class NgramModel:
    alphabet: Alphabet
    order: int
    k: float
    counts: dict = field(repr=False)  # ctx id -> float64[n_content + 1]
    length_counts: dict = field(repr=False)
    mode: str = "length"

    def __post_init__(self):
        if self.order < 2:
            raise NgramError(f"order must be >= 2, got {self.order}")
        if self.k < 0:
            raise NgramError(f"smoothing k must be >= 0, got {self.k}")
        if self.mode not in ("length", "end"):
            raise NgramError(f"unknown mode {self.mode!r}")
        a = self.alphabet.n_content
        self._ctx_base = a + 1  # content symbols + the start padding symbol
        self._pad_sym = a
        self._total_len = float(sum(self.length_counts.values())) or 1.0

    # -- context handling ---------------------------------------------------

    def _ctx_id(self, history) -> int:
        """history: the order-1 symbol ids preceding a position (PAD-padded)."""
        cid = 0
        for s in history:
            cid = cid * self._ctx_base + int(s)
        return cid

    def _history(self, idx, j) -> list:
        h = []
        for t in range(j - self.order + 1, j):
            h.append(self._pad_sym if t < 0 else int(idx[t]))
        return h

    def _row(self, cid: int) -> np.ndarray:
        row = self.counts.get(cid)
        if row is None:
            row = np.zeros(self.alphabet.n_content + 1, dtype=np.float64)
        return row

    def _cond_logprob(self, cid: int, col: int, mode: str) -> float:
        row = self._row(cid)
        a = self.alphabet.n_content
        if mode == "length":
            if col >= a:
                raise NgramError("end symbol is not scorable in length mode")
            total = row[:a].sum() + self.k * a
            num = row[col] + self.k
        else:
            total = row.sum() + self.k * (a + 1)
            num = row[col] + self.k
        if total <= 0.0 or num <= 0.0:
            # impossible transition under k=0: clamp instead of erroring so
            # scoring stays total; the floor keeps the oracle within 1e-12
            log.debug("clamped zero-probability transition (context %d, col %d)", cid, col)
            return math.log(PROB_FLOOR)
        return math.log(num) - math.log(total)

    def _encode(self, password: str) -> np.ndarray:
        idx = np.empty(len(password), dtype=np.int64)
        for i, ch in enumerate(password):
            j = self.alphabet.index.get(ch)
            if j is None:
                raise EncodingError(f"character {ch!r} at position {i + 1} not in alphabet")
            idx[i] = j
        return idx

    # -- scoring ------------------------------------------------------------

    def length_logprob(self, length: int) -> float:
        c = self.length_counts.get(length, 0)
        if c <= 0:
            log.debug("clamped zero-probability length %d", length)
            return math.log(PROB_FLOOR)
        return math.log(c) - math.log(self._total_len)

    def joint_logprob(self, password: str, mode: str | None = None) -> float:
        """Natural-log model probability of the whole string."""
        mode = mode or self.mode
        if len(password) == 0:
            raise NgramError("empty password")
        idx = self._encode(password)
        lp = self._content_logprob(idx, mode)
        if mode == "length":
            lp += self.length_logprob(len(password))
        return lp

    def _content_logprob(self, idx: np.ndarray, mode: str) -> float:
        lp = 0.0
        for j in range(len(idx)):
            cid = self._ctx_id(self._history(idx, j))
            lp += self._cond_logprob(cid, int(idx[j]), mode)
        if mode == "end":
            cid = self._ctx_id(self._history(idx, len(idx)))
            lp += self._cond_logprob(cid, self.alphabet.n_content, mode)
        return lp

    def local_conditionals(self, password: str) -> np.ndarray:
        """Exact P(x_i = s | x_{-i}) for every position, shape [len, n_content].

        Each row enumerates the symbol at one position with the rest of the
        string fixed and renormalises the joint; any length prior cancels.
        """
        idx = self._encode(password)
        ell = len(idx)
        a = self.alphabet.n_content
        out = np.empty((ell, a), dtype=np.float64)
        for i in range(ell):
            logs = np.empty(a, dtype=np.float64)
            variant = idx.copy()
            for s in range(a):
                variant[i] = s
                logs[s] = self._content_logprob(variant, self.mode)
            out[i] = _softmax_logs(logs)
        return out

    # -- generation ---------------------------------------------------------

    def sample(self, n: int, seed: int = 0, max_len: int = 64) -> list:
        """Ancestral sampling of n passwords (mode decides termination)."""
        if n < 1:
            raise NgramError(f"sample count must be >= 1, got {n}")
        rng = np.random.default_rng(seed)
        a = self.alphabet.n_content
        lengths = sorted(self.length_counts)
        if self.mode == "length":
            if not lengths:
                raise NgramError("model has no length distribution")
            lp = np.array([self.length_counts[l] for l in lengths], dtype=np.float64)
            lp = lp / lp.sum()
        out = []
        for _ in range(n):
            idx: list = []
            target = lengths[rng.choice(len(lengths), p=lp)] if self.mode == "length" else max_len
            while len(idx) < target:
                cid = self._ctx_id(self._history(idx, len(idx)))
                row = self._row(cid)
                if self.mode == "length":
                    w = row[:a] + self.k
                else:
                    w = row + self.k
                total = w.sum()
                if total <= 0.0:
                    raise NgramError(f"context {cid} has zero probability mass and k=0")
                pick = int(rng.choice(len(w), p=w / total))
                if pick == a:  # end symbol drawn
                    break
                idx.append(pick)
            if self.mode == "end" and len(idx) == 0:
                out.append("")
                continue
            out.append("".join(self.alphabet.symbols[s] for s in idx))
        return out

    # -- persistence --------------------------------------------------------

    def _serialized(self):
        cids = sorted(self.counts)
        header = {
            "format": "ippsm-ngram",
            "version": 1,
            "alphabet": self.alphabet.to_json(),
            "order": self.order,
            "k": self.k,
            "mode": self.mode,
            "contexts": cids,
            "lengths": {str(l): c for l, c in self.length_counts.items()},
        }
        blob = json.dumps(header).encode("utf-8")
        table = np.stack([self.counts[c] for c in cids]).astype("<f4").tobytes() if cids else b""
        return blob, table

    def save(self, path) -> None:
        blob, table = self._serialized()
        with open(path, "wb") as fh:
            fh.write(len(blob).to_bytes(8, "little"))
            fh.write(blob)
            fh.write(table)

    def model_id(self) -> str:
        blob, table = self._serialized()
        return hashlib.sha256(blob + table).hexdigest()[:16]

    @classmethod
    def load(cls, path) -> "NgramModel":
        with open(path, "rb") as fh:
            raw = fh.read()
        if len(raw) < 8:
            raise NgramError(f"{path}: truncated model file")
        hlen = int.from_bytes(raw[:8], "little")
        try:
            header = json.loads(raw[8 : 8 + hlen])
        except (ValueError, UnicodeDecodeError) as e:
            raise NgramError(f"{path}: unreadable header: {e}") from None
        if header.get("format") != "ippsm-ngram":
            raise NgramError(f"{path}: not an n-gram model file")
        alphabet = Alphabet.from_json(header["alphabet"])
        cids = header["contexts"]
        width = alphabet.n_content + 1
        body = raw[8 + hlen :]
        expect = len(cids) * width * 4
        if len(body) != expect:
            raise NgramError(f"{path}: table has {len(body)} bytes, expected {expect}")
        table = np.frombuffer(body, dtype="<f4").reshape(len(cids), width).astype(np.float64)
        counts = {int(c): table[i].copy() for i, c in enumerate(cids)}
        lengths = {int(l): c for l, c in header["lengths"].items()}
        return cls(
            alphabet=alphabet,
            order=int(header["order"]),
            k=float(header["k"]),
            counts=counts,
            length_counts=lengths,
            mode=header["mode"],
        )

    # -- construction -------------------------------------------------------

    @classmethod
    def from_tables(cls, start: dict, transition: dict, length: int, mode: str = "length") -> "NgramModel":
        """First-order chain from explicit start/transition probabilities.

        Probabilities are stored directly as (already normalised) counts with
        k=0, so conditionals reproduce the tables exactly. Intended for small
        ground-truth models in tests and experiments.
        """
        symbols = set(start)
        for s, d in transition.items():
            symbols.add(s)
            symbols.update(d)
        alphabet = Alphabet.from_symbols(sorted(symbols))
        a = alphabet.n_content
        counts: dict = {}
        pad_row = np.zeros(a + 1, dtype=np.float64)
        for s, p in start.items():
            pad_row[alphabet.index[s]] = p
        counts[a] = pad_row  # ctx id of the single PAD history symbol
        for s, d in transition.items():
            row = np.zeros(a + 1, dtype=np.float64)
            for t, p in d.items():
                row[alphabet.index[t]] = p
            counts[alphabet.index[s]] = row
        return cls(
            alphabet=alphabet,
            order=2,
            k=0.0,
            counts=counts,
            length_counts={length: 1},
            mode=mode,
        )


def fit_ngram(
    corpus: LeakCorpus,
    order: int = 3,
    k: float = 0.01,
    alphabet: Alphabet | None = None,
    mode: str = "length",
) -> NgramModel:
    """Count transitions weighted by leak frequency and wrap them in a model."""
    if alphabet is None:
        alphabet = build_alphabet(corpus)
    model = NgramModel(
        alphabet=alphabet,
        order=order,
        k=k,
        counts={},
        length_counts={},
        mode=mode,
    )
    a = alphabet.n_content
    counts = model.counts
    for pw, c in corpus.counts.items():
        idx = model._encode(pw)
        for j in range(len(idx) + 1):
            cid = model._ctx_id(model._history(idx, j))
            row = counts.get(cid)
            if row is None:
                row = np.zeros(a + 1, dtype=np.float64)
                counts[cid] = row
            row[int(idx[j]) if j < len(idx) else a] += c
        model.length_counts[len(pw)] = model.length_counts.get(len(pw), 0) + c
    model._total_len = float(sum(model.length_counts.values()))
    return model


def enumerate_keyspace(alphabet: Alphabet, length: int, cap: int = 10**6) -> list:
    """Every string of the given length over the content symbols."""
    n = alphabet.n_content**length
    if n > cap:
        raise NgramError(f"keyspace size {n} exceeds cap {cap}")
    syms = alphabet.symbols
    out = [""]
    for _ in range(length):
        out = [p + s for p in out for s in syms]
    return out
