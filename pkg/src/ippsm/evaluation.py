"""Meter evaluation: rank agreement, partition estimates, guess numbers.

Guess numbers follow the Monte Carlo rank estimator: with samples s_j drawn
from a proposal with known density q, the number of strings the model ranks
above x is approximated by mean([score(s_j) > score(x)] / q(s_j)). Only
score comparisons enter, so unnormalised pseudo-probabilities work as-is.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import meter
from .corpus import LeakCorpus
from .ngram import NgramModel, enumerate_keyspace

DEFAULT_GUESS_CAP = 10**12  # reporting ceiling for estimated guess numbers


class EvaluationError(ValueError):
    pass


# -- rank agreement ---------------------------------------------------------


def competition_ranks(values: np.ndarray) -> np.ndarray:
    """0-based descending competition ranks: rank = #(strictly greater)."""
    values = np.asarray(values, dtype=np.float64)
    order = np.argsort(-values, kind="stable")
    ranks = np.empty(len(values), dtype=np.int64)
    for pos, i in enumerate(order):
        if pos > 0 and values[i] == values[order[pos - 1]]:
            ranks[i] = ranks[order[pos - 1]]
        else:
            ranks[i] = pos
    return ranks


@dataclass
class RankedTestSet:
    passwords: list
    frequencies: np.ndarray
    ranks: np.ndarray  # ground-truth competition ranks from leak frequency
    weights: np.ndarray  # head-weighted: proportional to 1 / (rank + 1)


def ground_truth_ranks(corpus: LeakCorpus) -> RankedTestSet:
    passwords = sorted(corpus.counts)
    freqs = np.array([corpus.counts[p] for p in passwords], dtype=np.float64)
    ranks = competition_ranks(freqs)
    q = 1.0 / (ranks + 1.0)
    return RankedTestSet(passwords=passwords, frequencies=freqs, ranks=ranks, weights=q / q.sum())


def meter_ranks(estimator, passwords) -> np.ndarray:
    scores = np.array([meter.score(estimator, p).score for p in passwords])
    return competition_ranks(scores)


def weighted_spearman(truth: np.ndarray, measured: np.ndarray, weights: np.ndarray) -> float:
    """Weighted Pearson correlation of two rank sequences."""
    t = np.asarray(truth, dtype=np.float64)
    m = np.asarray(measured, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    if not (len(t) == len(m) == len(w)):
        raise EvaluationError("rank/weight length mismatch")
    if len(t) < 2:
        raise EvaluationError("need at least two ranked items")
    if np.any(w < 0) or w.sum() <= 0:
        raise EvaluationError("weights must be non-negative with positive sum")
    w = w / w.sum()
    dt = t - np.dot(w, t)
    dm = m - np.dot(w, m)
    vt = np.dot(w, dt * dt)
    vm = np.dot(w, dm * dm)
    if vt == 0.0 or vm == 0.0:
        raise EvaluationError("rank sequence has zero variance, correlation undefined")
    return float(np.dot(w, dt * dm) / math.sqrt(vt * vm))


# -- partition function -----------------------------------------------------


@dataclass
class MCSample:
    """Passwords with the meter's log score and the proposal's log density."""

    passwords: list
    log_ptilde: np.ndarray
    log_density: np.ndarray

    def __post_init__(self):
        if len(self.passwords) == 0:
            raise EvaluationError("empty sample")
        if not (len(self.passwords) == len(self.log_ptilde) == len(self.log_density)):
            raise EvaluationError("sample arrays disagree in length")
        if not np.all(np.isfinite(self.log_density)):
            raise EvaluationError("sample contains zero proposal density")


def uniform_sample(estimator, length: int, n: int, seed: int = 0) -> MCSample:
    """n uniform strings of the given length over the content alphabet."""
    if n < 1:
        raise EvaluationError(f"sample size must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    syms = estimator.alphabet.symbols
    pws = ["".join(syms[i] for i in rng.integers(len(syms), size=length)) for _ in range(n)]
    lp = np.array([meter.score(estimator, p).score for p in pws])
    ld = np.full(n, -length * math.log(len(syms)))
    return MCSample(passwords=pws, log_ptilde=lp, log_density=ld)


def model_sample(proposal: NgramModel, estimator, n: int, seed: int = 0) -> MCSample:
    """n ancestral draws from an n-gram proposal, scored by the estimator."""
    pws = proposal.sample(n, seed=seed)
    lp = np.array([meter.score(estimator, p).score for p in pws])
    ld = np.array([proposal.joint_logprob(p) for p in pws])
    return MCSample(passwords=pws, log_ptilde=lp, log_density=ld)


def self_density_sample(estimator, passwords, z: float) -> MCSample:
    """Wrap passwords drawn from the meter's own induced distribution.

    The density of such a draw is ptilde / Z, so an estimated normaliser
    stands in for an explicit proposal. Accuracy inherits Z's error.
    """
    if z <= 0 or not math.isfinite(z):
        raise EvaluationError(f"normaliser must be positive and finite, got {z}")
    pws = list(passwords)
    lp = np.array([meter.score(estimator, p).score for p in pws])
    return MCSample(passwords=pws, log_ptilde=lp, log_density=lp - math.log(z))


@dataclass
class PartitionEstimate:
    z: float
    standard_error: float
    n_samples: int


def estimate_partition(sample: MCSample) -> PartitionEstimate:
    """Importance estimate Z ~= mean(ptilde / density) with its standard error.

    With a uniform proposal this reduces to keyspace_size * mean(ptilde),
    which is unbiased for the true normaliser of the pseudo-probability.
    """
    ratios = np.exp(sample.log_ptilde - sample.log_density)
    n = len(ratios)
    z = float(ratios.mean())
    se = float(ratios.std(ddof=1) / math.sqrt(n)) if n > 1 else math.inf
    return PartitionEstimate(z=z, standard_error=se, n_samples=n)


def exact_partition(estimator, length: int, cap: int = 10**6) -> float:
    """Sum of pseudo-probabilities over the whole fixed-length keyspace."""
    total = 0.0
    for pw in enumerate_keyspace(estimator.alphabet, length, cap=cap):
        total += math.exp(meter.score(estimator, pw).score)
    return total


# -- guess numbers ----------------------------------------------------------


@dataclass
class GuessNumberResult:
    password: str
    g: float
    method: str  # "exact-enumeration" | "monte-carlo"
    unguessed: bool = False  # estimate reached the attacker-budget cap


def guess_number(
    estimator, password: str, sample: MCSample, cap: float = DEFAULT_GUESS_CAP
) -> GuessNumberResult:
    """Estimated number of strings the meter scores above the password.

    An empty strictly-greater set gives 0: the password sits at the top of
    the observed ordering. Estimates at or beyond cap clip to cap and are
    flagged unguessed (outside the attacker budget).
    """
    target = meter.score(estimator, password).score
    mask = sample.log_ptilde > target
    if not mask.any():
        est = 0.0
    else:
        est = float(np.exp(-sample.log_density[mask]).sum() / len(sample.passwords))
    return GuessNumberResult(
        password=password,
        g=min(est, float(cap)),
        method="monte-carlo",
        unguessed=est >= cap,
    )


def exact_guess_number(estimator, password: str, cap: int = 10**6) -> GuessNumberResult:
    """Position of the password in the meter's descending score order.

    Ties resolve lexicographically, so equal-scored strings that sort before
    the password still count as guesses. Enumeration only, small keyspaces.
    """
    target = meter.score(estimator, password).score
    g = 0
    for pw in enumerate_keyspace(estimator.alphabet, len(password), cap=cap):
        s = meter.score(estimator, pw).score
        if s > target or (s == target and pw < password):
            g += 1
    return GuessNumberResult(password=password, g=float(g), method="exact-enumeration")


# -- perturbation experiments -----------------------------------------------


@dataclass
class PerturbationOutcome:
    mode: str
    n: int
    agi: float  # average guess-number increment over the password set
    pnp: float  # fraction guessed before the cap but not after
    ratio: float  # agi relative to the baseline mode at the same n


@dataclass
class ExperimentReport:
    outcomes: list
    seed: int
    cap: float
    n_passwords: int
    n_samples: int


def run_perturbation_experiment(
    estimator,
    passwords,
    n_values,
    pool,
    sample: MCSample,
    cap: float = DEFAULT_GUESS_CAP,
    seed: int = 0,
    modes=("baseline", "semi", "fully"),
) -> ExperimentReport:
    """AGI/PNP for every perturbation mode and substitution count.

    Each password's guess number is estimated before and after perturbation
    from the same Monte Carlo sample; the increment is averaged over the set.
    Per-password RNG streams derive from (seed, mode, n, index) so any cell
    reproduces independently of evaluation order. n=0 rows are identity
    controls (AGI 0, PNP 0, ratio undefined).
    """
    passwords = list(passwords)
    if not passwords:
        raise EvaluationError("empty password set")
    mode_ids = {m: i for i, m in enumerate(("baseline", "semi", "fully"))}
    for m in modes:
        if m not in mode_ids:
            raise EvaluationError(f"unknown perturbation mode {m!r}")
    g_orig = np.array([guess_number(estimator, p, sample, cap).g for p in passwords])
    outcomes = []
    baseline_agi: dict = {}
    ordered = sorted(modes, key=lambda m: m != "baseline")  # ratios need baseline first
    for mode in ordered:
        for n in n_values:
            if n == 0:
                outcomes.append(
                    PerturbationOutcome(mode=mode, n=0, agi=0.0, pnp=0.0, ratio=math.nan)
                )
                continue
            increments = np.empty(len(passwords))
            hits = 0
            for i, pw in enumerate(passwords):
                child = np.random.SeedSequence([seed, mode_ids[mode], n, i])
                pseed = int(child.generate_state(1)[0])
                pert = meter.perturb(estimator, pw, n, mode, pool, seed=pseed)
                g_new = guess_number(estimator, pert.password, sample, cap).g
                increments[i] = g_new - g_orig[i]
                if g_orig[i] < cap <= g_new:  # guessed before, not after
                    hits += 1
            agi = float(increments.mean())
            pnp = hits / len(passwords)
            if mode == "baseline":
                baseline_agi[n] = agi
                ratio = 1.0
            else:
                base = baseline_agi.get(n)
                if base is None or base == 0.0:
                    raise EvaluationError(f"baseline AGI at n={n} is missing or zero")
                ratio = agi / base
            outcomes.append(PerturbationOutcome(mode=mode, n=n, agi=agi, pnp=pnp, ratio=ratio))
    outcomes.sort(key=lambda o: (o.n, mode_ids[o.mode]))
    return ExperimentReport(
        outcomes=outcomes,
        seed=seed,
        cap=cap,
        n_passwords=len(passwords),
        n_samples=len(sample.passwords),
    )


def write_report_csv(report: ExperimentReport, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["mode", "n", "AGI", "PNP", "ratio", "seed"])
        for o in report.outcomes:
            w.writerow([o.mode, o.n, f"{o.agi:.6g}", f"{o.pnp:.6g}", f"{o.ratio:.6g}", report.seed])


def format_report(report: ExperimentReport) -> str:
    rows = [["mode", "n", "AGI", "PNP", "ratio"]]
    for o in report.outcomes:
        rows.append([o.mode, str(o.n), f"{o.agi:.4g}", f"{o.pnp:.4f}", f"{o.ratio:.3f}"])
    widths = [max(len(r[i]) for r in rows) for i in range(5)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)
