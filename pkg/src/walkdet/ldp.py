"""Large-deviations layer.

The path log-probabilities ``log P(s)/N`` of a uniformly chosen allowed
path obey a large deviation principle whose entropy density is the
Legendre transform

    s(rho) = inf_t { log lambda_t - t * rho },

finite exactly on ``[rho_min, rho_max]``.  Pairing each path with an
independent ``N(0, N)`` field value ``x_s`` adds a Gaussian coordinate:

    s(rho, xi) = s(rho) - xi**2 / 2   where  |xi| <= sqrt(2 s(rho)),

and ``-inf`` elsewhere.  Rate functions are ``log lambda_0`` minus the
entropy densities.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .errors import ConvergenceError, TooManyPaths
from .rng import make_rng
from .spectral import (
    T_CLAMP,
    MarkovChain,
    _max_plus_potential,
    log_lambda,
    log_lambda_deriv,
    path_count_rate,
    perron,
    rho_extremes,
)

RHO_TOL = 1e-10
T_LIMIT = 2.0**20
TIGHT_TOL = 1e-9
MAX_PATHS = 10**7
BOUNDARY_TOL = 1e-12


@dataclass(frozen=True)
class EntropyCurve:
    rho_grid: np.ndarray
    s_values: np.ndarray
    t_values: np.ndarray

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="ascii") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["rho", "s", "t_star"])
            for r, s, t in zip(self.rho_grid, self.s_values, self.t_values):
                w.writerow([f"{r:.17g}", f"{s:.17g}", f"{t:.17g}"])


@dataclass(frozen=True)
class RatePoint:
    rho: float
    xi: float
    i_value: float
    s2_value: float


@dataclass(frozen=True)
class EmpiricalMeasure:
    """Pairs ``(log P(s)/n, x_s/n)`` over every allowed path of length ``n``."""

    rho: np.ndarray
    xi: np.ndarray
    n: int
    bin_width: float = 0.1

    def __len__(self) -> int:
        return len(self.rho)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="ascii") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["rho", "xi"])
            for r, x in zip(self.rho, self.xi):
                w.writerow([f"{r:.17g}", f"{x:.17g}"])


def _solve_slope(chain: MarkovChain, rho: float) -> float:
    """Bisection for the ``t`` with ``d/dt log lambda_t = rho``.

    The bracket starts at ``[-64, 64]`` and doubles outward while ``rho``
    lies beyond it, since closely spaced cycle means need large ``|t|``.
    """
    lo, hi = -T_CLAMP, T_CLAMP
    d_lo = log_lambda_deriv(chain, lo)
    while rho < d_lo and lo > -T_LIMIT:
        hi, lo = lo, 2.0 * lo
        d_lo = log_lambda_deriv(chain, lo)
    d_hi = log_lambda_deriv(chain, hi)
    while rho > d_hi and hi < T_LIMIT:
        lo, hi = hi, 2.0 * hi
        d_hi = log_lambda_deriv(chain, hi)
    if rho <= d_lo:
        if d_lo - rho > 1e-9:
            raise ConvergenceError(f"slope {rho} lies below the reachable range at t={lo}")
        return lo
    if rho >= d_hi:
        if rho - d_hi > 1e-9:
            raise ConvergenceError(f"slope {rho} lies above the reachable range at t={hi}")
        return hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        d = log_lambda_deriv(chain, mid)
        if abs(d - rho) <= RHO_TOL:
            return mid
        if d < rho:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * max(1.0, abs(mid)):
            return mid
    raise ConvergenceError(f"bisection for slope {rho} did not converge")


def endpoint_entropy(chain: MarkovChain, upper: bool) -> float:
    """``s`` at ``rho_max`` (``upper``) or ``rho_min``.

    Only paths that stay on extremal-mean cycles survive at an endpoint, so
    the value is the log spectral radius of the 0-1 matrix of tight edges.
    """
    xi, mu = _max_plus_potential(chain, 1.0 if upper else -1.0)
    csr = chain.csr
    sign = 1.0 if upper else -1.0
    reduced = sign * chain.log_data - mu + xi[csr.indices] - xi[chain._rows]
    tight = reduced >= -TIGHT_TOL * max(1.0, abs(mu))
    adj = sp.csr_matrix((np.ones(int(tight.sum())), (chain._rows[tight], csr.indices[tight])), shape=csr.shape)
    _, labels = connected_components(adj, directed=True, connection="strong")
    best = 0.0
    for comp in np.unique(labels):
        idx = np.flatnonzero(labels == comp)
        block = adj[idx][:, idx]
        if block.nnz == 0:
            continue
        # the unit shift makes a periodic block primitive without moving its eigenvector
        lam = perron(block + sp.identity(len(idx), format="csr")).lam - 1.0
        best = max(best, math.log(max(lam, 1.0)))
    return best


def entropy_density(chain: MarkovChain, rho: float) -> tuple[float, float | None]:
    """``s(rho)`` and the minimizing ``t``.

    Returns ``(-inf, None)`` off the effective domain.  At the endpoints the
    value is the limit from inside and ``t`` is ``-+inf``.
    """
    k = chain.uniform_degree
    if k is not None:
        # log lambda_t is linear, so the infimum is finite at a single slope
        if abs(rho + math.log(k)) <= BOUNDARY_TOL:
            return math.log(k), None
        return -math.inf, None
    rr = rho_extremes(chain)
    if rho < rr.rho_min or rho > rr.rho_max:
        return -math.inf, None
    if rho == rr.rho_min:
        return endpoint_entropy(chain, upper=False), -math.inf
    if rho == rr.rho_max:
        return endpoint_entropy(chain, upper=True), math.inf
    t = _solve_slope(chain, rho)
    return log_lambda(chain, t) - t * rho, t


def rate1(chain: MarkovChain, rho: float) -> float:
    """Rate function of ``log P(s)/N``: ``log lambda_0 - s(rho)``."""
    s, _ = entropy_density(chain, rho)
    if s == -math.inf:
        return math.inf
    return max(0.0, path_count_rate(chain) - s)


def rate2(chain: MarkovChain, rho: float, xi: float) -> RatePoint:
    """Joint rate function ``I(rho, xi)`` and entropy density ``s(rho, xi)``."""
    log_l0 = path_count_rate(chain)
    i1 = rate1(chain, rho)
    if math.isinf(i1):
        return RatePoint(rho, xi, math.inf, -math.inf)
    i = i1 + 0.5 * xi * xi
    if i > log_l0 + BOUNDARY_TOL * max(1.0, log_l0):
        return RatePoint(rho, xi, math.inf, -math.inf)
    i = min(i, log_l0)
    return RatePoint(rho, xi, i, log_l0 - i)


def entropy_curve(chain: MarkovChain, points: int = 201) -> EntropyCurve:
    """``s(rho)`` on ``points`` interior grid values plus both endpoints.

    Endpoint values are the limits from inside the domain, with ``t`` set
    to ``-+inf``.
    """
    k = chain.uniform_degree
    if k is not None:
        r = -math.log(k)
        return EntropyCurve(np.array([r]), np.array([math.log(k)]), np.array([math.nan]))
    rr = rho_extremes(chain)
    inner = np.linspace(rr.rho_min, rr.rho_max, points + 2)[1:-1]
    rho = [rr.rho_min]
    s = [endpoint_entropy(chain, upper=False)]
    ts = [-math.inf]
    for r in inner:
        v, t = entropy_density(chain, float(r))
        rho.append(float(r))
        s.append(v)
        ts.append(t)
    rho.append(rr.rho_max)
    s.append(endpoint_entropy(chain, upper=True))
    ts.append(math.inf)
    return EntropyCurve(np.array(rho), np.array(s), np.array(ts, dtype=float))


# ----------------------------------------------------------------------
# exhaustive small-N enumeration


def path_count(chain: MarkovChain, n: int) -> int:
    """``1' A^(n-1) 1`` for the 0-1 support matrix ``A``, in exact integers."""
    adj = chain.support.astype(object)
    v = np.ones(chain.m, dtype=object)
    for _ in range(n - 1):
        v = adj @ v
    return int(sum(v))


def enumerate_path_measure(chain: MarkovChain, n: int, seed: int = 0, bin_width: float = 0.1) -> EmpiricalMeasure:
    """Enumerate every allowed path of length ``n`` and attach a field value.

    Paths are generated in lexicographic order.  Paths starting in state
    ``i`` take their ``N(0, n)`` values, in that order, from the random
    stream ``(seed, i)``, so each first-state subtree can be produced
    independently.

    Raises
    ------
    TooManyPaths
        If more than ``10**7`` paths exist.
    """
    if n < 1:
        raise ValueError("horizon must be at least 1")
    total = path_count(chain, n)
    if total > MAX_PATHS:
        raise TooManyPaths(f"{total} paths of length {n} exceed the limit {MAX_PATHS}")
    csr = chain.csr
    indptr, indices = csr.indptr, csr.indices
    logd = chain.log_data
    counts = np.diff(indptr)
    log_pi = np.log(chain.pi)
    rhos, xis = [], []
    for first in range(chain.m):
        last = np.array([first], dtype=np.int64)
        logp = np.array([log_pi[first]])
        for _ in range(n - 1):
            reps = counts[last]
            # successors in ascending order keep the lexicographic ordering
            starts = np.repeat(indptr[last], reps)
            offs = np.arange(reps.sum()) - np.repeat(np.cumsum(reps) - reps, reps)
            pos = starts + offs
            logp = np.repeat(logp, reps) + logd[pos]
            last = indices[pos].astype(np.int64)
        x = make_rng(seed, first).standard_normal(len(last)) * math.sqrt(n)
        rhos.append(logp / n)
        xis.append(x / n)
    return EmpiricalMeasure(np.concatenate(rhos), np.concatenate(xis), n, bin_width)


def bin_sup_entropy(chain: MarkovChain, rho_lo: float, rho_hi: float, xi_lo: float, xi_hi: float) -> float:
    """Supremum of ``s(rho, xi)`` over a closed rectangle."""
    if xi_lo <= 0.0 <= xi_hi:
        xi_min = 0.0
    else:
        xi_min = min(abs(xi_lo), abs(xi_hi))
    k = chain.uniform_degree
    if k is not None:
        r = -math.log(k)
        if not rho_lo <= r <= rho_hi:
            return -math.inf
        s_best = math.log(k)
    else:
        rr = rho_extremes(chain)
        lo, hi = max(rho_lo, rr.rho_min), min(rho_hi, rr.rho_max)
        if lo > hi:
            return -math.inf
        # s is concave with its peak at rho_0 = slope at t = 0
        r0 = log_lambda_deriv(chain, 0.0)
        r_best = min(max(r0, lo), hi)
        s_best = entropy_density(chain, r_best)[0]
    val = s_best - 0.5 * xi_min * xi_min
    return val if val >= 0.0 else -math.inf


def empirical_ldp_table(chain: MarkovChain, measure: EmpiricalMeasure, min_count: int = 100):
    """Compare binned empirical log-frequencies with the rate function.

    For every ``bin_width`` square holding at least ``min_count`` paths,
    returns ``(rho_lo, xi_lo, count, empirical, predicted)``.

    ``empirical`` is ``log(count / (#paths * g)) / n`` where
    ``g = bin_width * sqrt(n / 2pi)`` is the sub-exponential prefactor of a
    Gaussian bin of that width, so only the exponential part is compared.
    ``predicted`` is the supremum of ``s(rho, xi) - log lambda_0`` over the
    square after mapping its rho side to transition averages: a path with
    ``log P(s)/n`` in ``[a, b]`` has ``(log P(s) - log pi_{s_1})/(n-1)``
    in ``[a - hi, b - lo]``, where ``[lo, hi]`` bounds
    ``(log pi_i - rho')/n`` over states ``i`` and ``rho'`` in the domain.
    """
    d = measure.bin_width
    n = measure.n
    ri = np.floor(measure.rho / d).astype(np.int64)
    xi = np.floor(measure.xi / d).astype(np.int64)
    keys, counts = np.unique(np.column_stack([ri, xi]), axis=0, return_counts=True)
    total = len(measure)
    log_l0 = path_count_rate(chain)
    gauss = d * math.sqrt(n / (2.0 * math.pi))
    log_pi = np.log(chain.pi)
    if chain.uniform_degree is not None:
        r_lo = r_hi = -math.log(chain.uniform_degree)
    else:
        rr = rho_extremes(chain)
        r_lo, r_hi = rr.rho_min, rr.rho_max
    off_lo = (float(log_pi.min()) - r_hi) / n
    off_hi = (float(log_pi.max()) - r_lo) / n
    rows = []
    for (a, b), c in zip(keys, counts):
        if c < min_count:
            continue
        emp = math.log(c / (total * gauss)) / n
        pred = bin_sup_entropy(chain, a * d - off_hi, (a + 1) * d - off_lo, b * d, (b + 1) * d) - log_l0
        rows.append((a * d, b * d, int(c), emp, pred))
    return rows
