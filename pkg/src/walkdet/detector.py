"""Observation model, likelihood ratio and Neyman-Pearson decisions.

Under H0 the ``M x N`` data matrix is i.i.d. standard normal.  Under H1 a
hidden walk ``s_1..s_N`` drawn from the chain adds ``beta`` at
``(s_n, n)``.  The likelihood ratio is the matrix product

    L = pi' D_1 P D_2 P ... P D_N 1,
    D_n = exp(-beta**2 / 2) * diag(exp(beta * y[:, n])),

evaluated with a forward recursion whose row vector is rescaled to unit
sup-norm after every step.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import logsumexp

from .errors import DimensionMismatch, TooManyPaths
from .rng import NOISE, PATH, make_rng, trial_seed
from .spectral import MarkovChain

MAX_PATHS = 10**7
ROC_LEVELS = 99
ROC_CHUNK = 16
H1_SALT = 1 << 63  # separates H1 trial seeds from H0 trial seeds
_SPARSE_FILL = 0.1
_BRUTE_CHUNK = 1 << 16


class Decision(str, Enum):
    H0 = "H0"
    H1 = "H1"


@dataclass(frozen=True, eq=False)
class Observations:
    """``y`` is ``M x N``; ``truth`` holds 0-based states for H1 draws."""

    y: np.ndarray
    truth: np.ndarray | None = None

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        if y.ndim != 2:
            raise DimensionMismatch(f"observations must be a matrix, got shape {y.shape}")
        object.__setattr__(self, "y", y)
        if self.truth is not None:
            tr = np.asarray(self.truth, dtype=np.int64)
            if tr.shape != (y.shape[1],):
                raise DimensionMismatch(f"truth has length {tr.size}, expected {y.shape[1]}")
            if tr.size and (tr.min() < 0 or tr.max() >= y.shape[0]):
                raise DimensionMismatch("truth state outside 0..M-1")
            object.__setattr__(self, "truth", tr)

    @property
    def m(self) -> int:
        return self.y.shape[0]

    @property
    def n(self) -> int:
        return self.y.shape[1]


@dataclass(frozen=True)
class LlrResult:
    ell: float
    log_l: float
    n: int


# ----------------------------------------------------------------------
# simulation


def _noise(m: int, n: int, seed: int) -> np.ndarray:
    # time-major draws: the first k columns do not depend on n
    return make_rng(seed, NOISE).standard_normal((n, m)).T


def simulate_h0(m: int, n: int, seed: int = 0) -> Observations:
    if m < 1 or n < 1:
        raise ValueError("m and n must be positive")
    return Observations(_noise(m, n, seed))


def sample_path(chain: MarkovChain, n: int, seed: int = 0) -> np.ndarray:
    """State sequence of length ``n`` started from ``pi``, 0-based."""
    u = make_rng(seed, PATH).random(n)
    cdf_pi = np.cumsum(chain.pi)
    cdf = np.cumsum(chain.p, axis=1)
    s = np.empty(n, dtype=np.int64)
    last = chain.m - 1
    s[0] = min(int(np.searchsorted(cdf_pi, u[0], side="right")), last)
    for k in range(1, n):
        row = cdf[s[k - 1]]
        j = min(int(np.searchsorted(row, u[k], side="right")), last)
        # rounding in the cumulative sum must never select a zero entry
        while chain.p[s[k - 1], j] == 0.0:
            j -= 1
        s[k] = j
    return s


def simulate_h1(chain: MarkovChain, beta: float, n: int, seed: int = 0) -> Observations:
    """H1 draw.  The noise equals :func:`simulate_h0` for the same seed."""
    if n < 1:
        raise ValueError("n must be positive")
    s = sample_path(chain, n, seed)
    y = _noise(chain.m, n, seed).copy()
    y[s, np.arange(n)] += beta
    return Observations(y, truth=s)


# ----------------------------------------------------------------------
# likelihood


_LOG_RANGE = 700.0


def _transition_operator(chain: MarkovChain):
    if chain.csr.nnz <= _SPARSE_FILL * chain.m * chain.m and chain.m > 64:
        return chain.csr
    return chain.p


def _forward(chain: MarkovChain, beta: float, ys: np.ndarray, start=None, marks=()) -> np.ndarray:
    """``log L`` for a batch ``ys`` of shape ``(B, M, N)``.

    With ``marks`` (ascending horizons) the result has shape
    ``(B, len(marks))`` and holds ``log L`` of each prefix.
    """
    b, m, n = ys.shape
    op = _transition_operator(chain)
    init = chain.pi if start is None else np.asarray(start, dtype=float)
    acc = np.zeros(b)
    v = np.broadcast_to(init, (b, m)).copy()
    half = 0.5 * beta * beta
    marks = list(marks)
    rec = np.empty((b, len(marks)))
    lossy = np.zeros(b, dtype=bool)
    j = 0
    for k in range(n):
        if k:
            v = np.asarray(v @ op)
        # scale by the largest reachable weight so no live entry underflows
        # just because an unreachable state saw a large observation
        with np.errstate(divide="ignore"):
            w = np.log(v) + beta * ys[:, :, k]
        top = w.max(axis=1)
        gap = w - top[:, None]
        lossy |= np.any(np.isfinite(gap) & (gap < -_LOG_RANGE), axis=1)
        v = np.exp(gap)
        acc += top - half
        while j < len(marks) and marks[j] == k + 1:
            rec[:, j] = acc + np.log(v.sum(axis=1))
            j += 1
    out = rec if marks else acc + np.log(v.sum(axis=1))
    if lossy.any():
        # a live weight fell outside the double range and may matter later
        out[lossy] = _forward_log(chain, beta, ys[lossy], init, marks)
    return out


def _forward_log(chain: MarkovChain, beta: float, ys: np.ndarray, init: np.ndarray, marks) -> np.ndarray:
    """Same recursion with the state vector kept in logs, over the edge list."""
    b, m, n = ys.shape
    coo = chain.csr.tocoo()
    order = np.argsort(coo.col, kind="stable")
    src, dst = coo.row[order], coo.col[order]
    log_p = np.log(coo.data[order])
    starts = np.flatnonzero(np.r_[True, dst[1:] != dst[:-1]])
    targets = dst[starts]
    widths = np.diff(np.r_[starts, len(dst)])
    half = 0.5 * beta * beta
    rec = np.empty((b, len(marks)))
    j = 0
    with np.errstate(divide="ignore", invalid="ignore"):
        lv = np.broadcast_to(np.log(init), (b, m)).copy()
        for k in range(n):
            if k:
                terms = lv[:, src] + log_p
                hi = np.maximum.reduceat(terms, starts, axis=1)
                safe = np.where(np.isfinite(hi), hi, 0.0)
                spread = np.exp(terms - np.repeat(safe, widths, axis=1))
                sums = np.add.reduceat(spread, starts, axis=1)
                lv = np.full((b, m), -np.inf)
                lv[:, targets] = safe + np.log(sums)
            lv += beta * ys[:, :, k] - half
            while j < len(marks) and marks[j] == k + 1:
                rec[:, j] = logsumexp(lv, axis=1)
                j += 1
    return rec if marks else logsumexp(lv, axis=1)


def _check(chain: MarkovChain, obs: Observations) -> None:
    if obs.m != chain.m:
        raise DimensionMismatch(f"observations have {obs.m} rows, chain has {chain.m} states")


def log_likelihood_ratio(chain: MarkovChain, beta: float, obs: Observations) -> LlrResult:
    """Normalized log-likelihood ratio in ``O(M^2 N)`` time.

    Raises
    ------
    DimensionMismatch
        If the row count differs from the number of states.
    """
    _check(chain, obs)
    if beta == 0.0:
        return LlrResult(0.0, 0.0, obs.n)
    log_l = float(_forward(chain, beta, obs.y[None])[0])
    return LlrResult(log_l / obs.n, log_l, obs.n)


def batch_log_likelihood(chain: MarkovChain, beta: float, ys: np.ndarray) -> np.ndarray:
    """``log L`` for each matrix in a ``(B, M, N)`` stack."""
    ys = np.asarray(ys, dtype=float)
    if ys.ndim != 3 or ys.shape[1] != chain.m:
        raise DimensionMismatch(f"expected a (B, {chain.m}, N) stack, got {ys.shape}")
    if beta == 0.0:
        return np.zeros(ys.shape[0])
    return _forward(chain, beta, ys)


def prefix_log_likelihoods(chain: MarkovChain, beta: float, obs: Observations, horizons) -> np.ndarray:
    """``log L`` of the first ``n`` columns for every ``n`` in ``horizons``."""
    _check(chain, obs)
    horizons = [int(h) for h in horizons]
    if any(b <= a for a, b in zip(horizons, horizons[1:])) or not horizons or horizons[0] < 1:
        raise ValueError("horizons must be nonempty, positive and strictly ascending")
    if horizons[-1] > obs.n:
        raise DimensionMismatch(f"horizon {horizons[-1]} exceeds {obs.n} columns")
    if beta == 0.0:
        return np.zeros(len(horizons))
    return _forward(chain, beta, obs.y[None, :, : horizons[-1]], marks=horizons)[0]


def brute_force_llr(chain: MarkovChain, beta: float, obs: Observations) -> LlrResult:
    """Exhaustive sum over all ``M**N`` state sequences.

    Raises
    ------
    TooManyPaths
        If ``M**N`` exceeds ``10**7``.
    """
    _check(chain, obs)
    m, n = obs.m, obs.n
    total = m**n
    if total > MAX_PATHS:
        raise TooManyPaths(f"{total} sequences exceed the limit {MAX_PATHS}")
    with np.errstate(divide="ignore"):
        log_pi = np.log(chain.pi)
        log_p = np.log(chain.p)
    y = obs.y
    powers = m ** np.arange(n - 1, -1, -1, dtype=np.int64)
    run_max, run_sum = -math.inf, 0.0
    for lo in range(0, total, _BRUTE_CHUNK):
        codes = np.arange(lo, min(total, lo + _BRUTE_CHUNK), dtype=np.int64)
        s = (codes[:, None] // powers[None, :]) % m
        terms = log_pi[s[:, 0]] + beta * y[s, np.arange(n)].sum(axis=1) - n * 0.5 * beta * beta
        if n > 1:
            terms = terms + log_p[s[:, :-1], s[:, 1:]].sum(axis=1)
        top = terms.max()
        if top == -math.inf:
            continue
        if top > run_max:
            run_sum = run_sum * math.exp(run_max - top) if run_max > -math.inf else 0.0
            run_max = top
        run_sum += float(np.exp(terms - run_max).sum())
    log_l = run_max + math.log(run_sum)
    return LlrResult(log_l / n, log_l, n)


def neyman_pearson(llr: LlrResult, tau: float) -> Decision:
    """H1 when ``ell > tau``; a tie goes to H0."""
    return Decision.H1 if llr.ell > tau else Decision.H0


def _trial_ells(chain: MarkovChain, beta: float, n: int, seeds, h1: bool) -> np.ndarray:
    out = np.empty(len(seeds))
    for lo in range(0, len(seeds), ROC_CHUNK):
        chunk = seeds[lo : lo + ROC_CHUNK]
        if h1:
            ys = np.stack([simulate_h1(chain, beta, n, s).y for s in chunk])
        else:
            ys = np.stack([_noise(chain.m, n, s) for s in chunk])
        out[lo : lo + len(chunk)] = batch_log_likelihood(chain, beta, ys) / n
    return out


def estimate_roc(chain: MarkovChain, beta: float, n: int, trials: int, seed: int = 0):
    """Empirical ``(tau, pf, pm)`` at 99 quantiles of the H0 statistic.

    Trial ``i`` under H0 uses seed ``seed ^ i``; under H1 it uses
    ``seed ^ i ^ 2**63`` so the two samples are independent.
    """
    if trials < 10:
        raise ValueError("estimate_roc needs at least 10 trials")
    seeds0 = [trial_seed(seed, i) for i in range(trials)]
    seeds1 = [s ^ H1_SALT for s in seeds0]
    ell0 = _trial_ells(chain, beta, n, seeds0, h1=False)
    ell1 = _trial_ells(chain, beta, n, seeds1, h1=True)
    levels = np.arange(1, ROC_LEVELS + 1) / (ROC_LEVELS + 1)
    taus = np.quantile(ell0, levels)
    return [(float(t), float(np.mean(ell0 > t)), float(np.mean(ell1 <= t))) for t in taus]


# ----------------------------------------------------------------------
# files


def write_observations(path, obs: Observations, truth_path=None) -> None:
    """``M`` CSV rows of ``N`` values; optional 1-based truth sidecar."""
    with open(path, "w", newline="", encoding="ascii") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in obs.y:
            w.writerow([f"{v:.17g}" for v in row])
    if truth_path is not None and obs.truth is not None:
        with open(truth_path, "w", encoding="ascii", newline="\n") as fh:
            fh.write("".join(f"{s + 1}\n" for s in obs.truth))


def read_observations(path, truth_path=None) -> Observations:
    with open(path, newline="", encoding="ascii") as fh:
        rows = [r for r in csv.reader(fh) if r]
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise DimensionMismatch(f"{path}: rows have differing lengths {sorted(widths)}")
    y = np.array(rows, dtype=float)
    truth = None
    if truth_path is not None:
        with open(truth_path, encoding="ascii") as fh:
            truth = np.array([int(x) - 1 for x in fh.read().split()], dtype=np.int64)
    return Observations(y, truth)

