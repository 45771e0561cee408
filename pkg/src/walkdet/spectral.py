"""Markov-chain spectral core.

Validation of transition matrices, sparsity-preserving Hadamard powers
``P^(t)``, Perron eigentriples, ``log lambda_t`` and its derivative, the
entropy rate, and the extreme mean-cycle weights ``rho_min``/``rho_max``.

States are 0-indexed throughout the Python API.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.csgraph import breadth_first_order, connected_components
from scipy.sparse.linalg import splu

from .errors import (
    ConvergenceError,
    NegativeEntry,
    NotAperiodic,
    NotIrreducible,
    RowSumError,
    StateOutOfRange,
)

ROW_SUM_TOL = 1e-9
T_CLAMP = 64.0

# Collatz-Wielandt bracket targets, relative to the eigenvalue
_EIG_RTOL = 1e-13
_EIG_ACCEPT = 1e-10
_POWER_BUDGET = 300
_NODA_MAXITER = 60
_DENSE_FILL = 0.1
_MEMO_LIMIT = 8192
_DENSE_EIG_MAX = 160
# exponents beyond this range are rescaled before exponentiation
_EXP_SAFE = 600.0
_EPS = float(np.finfo(float).eps)
_SEEDED_BUDGET = _POWER_BUDGET
_SEED_REACH = 0.5
_LAST = "last"
_RHO = "rho"


@dataclass(frozen=True, eq=False)
class MarkovChain:
    """Validated irreducible, aperiodic transition matrix.

    Build instances with :func:`validate_chain`; the constructor itself
    performs no checks.

    Attributes
    ----------
    p : ndarray, shape (M, M)
        Row-stochastic transition matrix.
    pi : ndarray, shape (M,)
        Stationary distribution.
    support : ndarray of bool, shape (M, M)
        ``p > 0``.
    """

    p: np.ndarray
    pi: np.ndarray
    support: np.ndarray

    @property
    def m(self) -> int:
        return self.p.shape[0]

    @cached_property
    def csr(self) -> sp.csr_matrix:
        return sp.csr_matrix(self.p)

    @cached_property
    def _rows(self) -> np.ndarray:
        csr = self.csr
        return np.repeat(np.arange(self.m), np.diff(csr.indptr))

    @cached_property
    def log_data(self) -> np.ndarray:
        """``log p_ij`` for the nonzero entries, in CSR order."""
        return np.log(self.csr.data)

    @cached_property
    def log_weights(self) -> np.ndarray:
        """Dense ``log p`` with ``-inf`` off the support."""
        with np.errstate(divide="ignore"):
            return np.log(self.p)

    @cached_property
    def uniform_degree(self) -> int | None:
        """``K`` if this is a uniform walk on a K-regular graph, else None.

        The check is exact: every row has the same number ``K`` of nonzero
        entries and each of them equals ``1/K`` as a double.
        """
        counts = np.diff(self.csr.indptr)
        k = int(counts[0])
        if not np.all(counts == k):
            return None
        if np.all(self.csr.data == 1.0 / k):
            return k
        return None

    @cached_property
    def _memo(self) -> dict:
        return {}


@dataclass(frozen=True)
class SpectralTriple:
    """Perron eigenvalue and positive eigenvectors of a nonnegative matrix.

    ``left`` sums to one and ``left @ right == 1``.  ``log_lam`` carries the
    eigenvalue in log form, which stays finite when ``lam`` would overflow.
    """

    lam: float
    left: np.ndarray
    right: np.ndarray
    t: float
    log_lam: float


# ----------------------------------------------------------------------
# validation


def _period(adj: sp.csr_matrix) -> int:
    order, _ = breadth_first_order(adj, 0, directed=True, return_predecessors=True)
    level = np.full(adj.shape[0], -1, dtype=np.int64)
    level[0] = 0
    # breadth_first_order gives nodes in visit order; recompute levels
    indptr, indices = adj.indptr, adj.indices
    for u in order:
        for v in indices[indptr[u] : indptr[u + 1]]:
            if level[v] < 0:
                level[v] = level[u] + 1
    coo = adj.tocoo()
    diffs = level[coo.row] + 1 - level[coo.col]
    return int(np.gcd.reduce(np.abs(diffs)))


def validate_chain(p) -> MarkovChain:
    """Check a transition matrix and build a :class:`MarkovChain`.

    Rows within ``1e-9`` of summing to one are renormalized, unless the
    deviation is within the rounding of the sum itself, so that entries
    such as ``1/K`` stay exact.

    Raises
    ------
    NegativeEntry, RowSumError, NotIrreducible, NotAperiodic
    """
    p = np.array(p, dtype=float)
    if p.ndim != 2 or p.shape[0] != p.shape[1] or p.shape[0] < 1:
        raise ValueError(f"transition matrix must be square and nonempty, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise ValueError("transition matrix has non-finite entries")
    if np.any(p < 0):
        i, j = np.argwhere(p < 0)[0]
        raise NegativeEntry(f"p[{i},{j}] = {p[i, j]} is negative")
    sums = p.sum(axis=1)
    bad = np.flatnonzero(np.abs(sums - 1.0) > ROW_SUM_TOL)
    if bad.size:
        raise RowSumError(f"row {bad[0]} sums to {sums[bad[0]]!r}")
    rounding = np.finfo(float).eps * np.count_nonzero(p, axis=1)
    scale = np.where(np.abs(sums - 1.0) > rounding, sums, 1.0)
    p = p / scale[:, None]
    support = p > 0
    adj = sp.csr_matrix(support.astype(np.int8))
    ncomp, _ = connected_components(adj, directed=True, connection="strong")
    if ncomp != 1:
        raise NotIrreducible(f"support graph has {ncomp} strongly connected components")
    period = _period(adj)
    if period != 1:
        raise NotAperiodic(f"chain has period {period}")
    p.setflags(write=False)
    support.setflags(write=False)
    # stationary distribution is the left Perron vector at t = 1
    pi = _perron_pair(sp.csr_matrix(p.T), want_left=False)[1]
    pi = pi / pi.sum()
    pi.setflags(write=False)
    return MarkovChain(p=p, pi=pi, support=support)


# ----------------------------------------------------------------------
# Perron-Frobenius machinery


def hadamard_power(chain: MarkovChain, t: float) -> np.ndarray:
    """Entrywise ``p_ij ** t`` on the support, zero elsewhere."""
    out = np.zeros_like(chain.p)
    s = chain.support
    out[s] = chain.p[s] ** t
    return out


def _as_operator(a):
    if sp.issparse(a):
        a = sp.csr_matrix(a)
        if a.nnz > _DENSE_FILL * a.shape[0] ** 2 or a.shape[0] <= 64:
            return a.toarray()
        return a
    return np.asarray(a, dtype=float)


def _transpose(a):
    return a.T.copy() if isinstance(a, np.ndarray) else sp.csr_matrix(a.T)


def _dense_seed(a, x: np.ndarray, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Start vectors for inverse iteration from a full eigensolve."""
    dense = a if isinstance(a, np.ndarray) else a.toarray()
    b = dense * x[None, :] / x[:, None]
    try:
        vals, vl, vr = scipy.linalg.eig(b, left=True, right=True)
    except (np.linalg.LinAlgError, ValueError):
        return x, u
    k = int(np.argmax(vals.real))
    w, v = np.abs(vr[:, k]), np.abs(vl[:, k])
    if not (np.all(np.isfinite(w)) and np.all(np.isfinite(v)) and w.min() > 0 and v.min() > 0):
        return x, u
    x2, u2 = x * w, v / x
    return x2 / x2.max(), u2 / u2.max()


class _Track:
    """Best Collatz-Wielandt bracket seen for one eigenvector iterate."""

    def __init__(self, op, x):
        self.op = op
        self.x = x / x.max()
        self.best = (math.inf, math.nan, self.x)
        self.widths: list[float] = []

    def measure(self) -> tuple[np.ndarray, float, float] | None:
        y = self.op @ self.x
        with np.errstate(divide="ignore", invalid="ignore"):
            r = y / self.x
        lo, hi = float(r.min()), float(r.max())
        if not (lo > 0 and math.isfinite(hi)):
            return None
        width = (hi - lo) / hi
        self.widths.append(width)
        if width < self.best[0]:
            self.best = (width, 0.5 * (lo + hi), self.x)
        return y, hi, width

    @property
    def done(self) -> bool:
        return self.best[0] <= _EIG_RTOL


def _gth_solve(off: np.ndarray, sums: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve ``M y = rhs`` for the M-matrix with off-diagonal ``-off`` and row sums ``sums``.

    Elimination in the style of Grassmann, Taksar and Heyman: pivots are
    rebuilt from row sums and off-diagonal magnitudes, so nothing is
    subtracted and every entry of the solution keeps its relative accuracy.
    """
    n = len(sums)
    off = off.copy()
    np.fill_diagonal(off, 0.0)
    s = sums.astype(float).copy()
    b = rhs.astype(float).copy()
    piv = np.empty(n)
    for k in range(n - 1):
        piv[k] = s[k] + off[k, k + 1 :].sum()
        col = off[k + 1 :, k] / piv[k]
        off[k + 1 :, k + 1 :] += np.outer(col, off[k, k + 1 :])
        s[k + 1 :] += col * s[k]
        b[k + 1 :] += col * b[k]
    piv[n - 1] = s[n - 1]
    y = np.empty(n)
    for k in range(n - 1, -1, -1):
        y[k] = (b[k] + off[k, k + 1 :] @ y[k + 1 :]) / piv[k]
    return y


def _accurate_noda(dense: np.ndarray, tr: _Track) -> None:
    """Noda iteration with subtraction-free solves, for one track.

    In the frame ``D^-1 A D`` with ``D = diag(x)`` the current iterate is
    the ones vector, the Collatz-Wielandt ratios are the row sums and the
    shifted matrix ``hi*I - D^-1 A D`` is an M-matrix whose row sums
    ``hi - ratio_i`` are nonnegative.
    """
    x = tr.best[2] if math.isfinite(tr.best[0]) else tr.x
    stalls = 0
    moved = True
    for _ in range(_NODA_MAXITER):
        tr.x = x
        before = tr.best[0]
        got = tr.measure()
        if got is None or tr.done:
            return
        y, hi, _ = got
        if tr.best[0] < before or moved:
            stalls = 0
        else:
            stalls += 1
        if stalls >= 3:
            return
        ratio = y / x
        sums = hi - ratio
        if not sums.any():
            return
        b = dense * x[None, :] / x[:, None]
        with np.errstate(all="ignore"):
            z = _gth_solve(b, sums, np.ones(len(x)))
        x_new = x * z
        if not (np.all(np.isfinite(x_new)) and x_new.min() > 0):
            return
        x_new = x_new / x_new.max()
        # tiny components can still be converging while the bracket is flat
        with np.errstate(divide="ignore", invalid="ignore"):
            moved = not bool(np.max(np.abs(np.log(x_new / x))) <= 1e-3)
        x = x_new


def _perron_pair(a, cap: int | None = None, want_left: bool = True, seed=None):
    """Perron root with sup-normalized right and left eigenvectors.

    Power iteration with sup-norm renormalization runs first.  If the
    Collatz-Wielandt bracket ``[min (Ax)_i/x_i, max (Ax)_i/x_i]`` is not
    tight yet, or its contraction rate shows it will not be within the
    budget, Noda's shifted inverse iteration finishes.  The bracket always
    contains the eigenvalue, so its width is a certified residual bound.

    ``seed`` is an optional ``(right, left)`` guess, typically the vectors
    of a nearby Hadamard exponent; with it the power phase is kept short.

    Returns ``(lam, right, left)``; ``left`` is None unless requested.
    """
    a = _as_operator(a)
    n = a.shape[0]
    x0, u0 = (np.ones(n), np.ones(n)) if seed is None else seed
    tracks = [_Track(a, x0)]
    if want_left:
        tracks.append(_Track(_transpose(a), u0))
    budget = _POWER_BUDGET if cap is None else min(cap, _POWER_BUDGET)
    if seed is not None:
        budget = min(budget, _SEEDED_BUDGET)

    for k in range(budget):
        stalled = False
        for tr in tracks:
            if tr.best[0] <= _EIG_RTOL:
                continue
            got = tr.measure()
            if got is None:
                stalled = True
                continue
            y, _, width = got
            if width <= _EIG_RTOL:
                continue
            if k >= 20 and k % 10 == 0:
                # hand over to inverse iteration when the observed
                # contraction cannot reach the target within the budget
                rate = (width / tr.widths[-11]) ** 0.1
                if rate >= 1.0 or k + math.log(width / _EIG_RTOL) / -math.log(rate) > budget:
                    stalled = True
            tr.x = y / y.max()
        if stalled or all(tr.done for tr in tracks):
            break

    if not all(tr.done for tr in tracks):
        for tr in tracks:
            tr.x = tr.best[2] if math.isfinite(tr.best[0]) else np.ones(n)
        if n <= _DENSE_EIG_MAX and seed is None:
            u0 = tracks[1].x if want_left else np.ones(n)
            x0, u0 = _dense_seed(a, tracks[0].x, u0)
            tracks[0].x = x0
            if want_left:
                tracks[1].x = u0
        _noda(a, tracks)

    if n <= _DENSE_EIG_MAX and not all(tr.done for tr in tracks):
        dense = a if isinstance(a, np.ndarray) else a.toarray()
        for tr, op in zip(tracks, (dense, dense.T)):
            if not tr.done:
                _accurate_noda(op, tr)

    out = []
    for tr in tracks:
        width, lam, x = tr.best
        if not width <= _EIG_ACCEPT:
            raise ConvergenceError(f"Perron bracket stalled at relative width {width:.3e}")
        out.append((lam, x))
    lam = out[0][0]
    return lam, out[0][1], (out[1][1] if want_left else None)


def _noda(a, tracks: list[_Track]) -> None:
    """Noda iteration sharing one factorization between right and left.

    With ``D = diag(sqrt(x/u))`` for the current right and left iterates,
    the balanced matrix ``B = D^-1 A D`` has both Perron vectors near
    ``sqrt(x*u)``, which keeps the solves well scaled when entries span
    many orders of magnitude.  The shift sits a few ulps above
    the smallest Collatz-Wielandt upper bound, so ``shift*I - A`` stays a
    nonsingular M-matrix with a positive inverse.
    """
    n = a.shape[0]
    dense = isinstance(a, np.ndarray)
    stalls = 0
    sparse_parts = None if dense else _shifted_pattern(a)
    for _ in range(_NODA_MAXITER):
        before = [tr.best[0] for tr in tracks]
        his = []
        for tr in tracks:
            got = tr.measure()
            if got is None:
                return
            his.append(got[1])
        if all(tr.done for tr in tracks):
            return
        improved = any(tr.best[0] < b for tr, b in zip(tracks, before))
        stalls = 0 if improved else stalls + 1
        if stalls >= 3 or (stalls and all(tr.best[0] <= _EIG_ACCEPT for tr in tracks)):
            return
        x = tracks[0].x
        u = tracks[1].x if len(tracks) > 1 else None
        if stalls == 0:
            # symmetric balancing gives both sides the Perron density sqrt(x*u)
            plans = [(np.sqrt(x / u) if u is not None else x, x, u)]
        else:
            # one-sided balancing makes each Perron vector nearly constant,
            # so components far below the largest keep their relative accuracy
            plans = [(x, x, None)] + ([(1.0 / u, None, u)] if u is not None else [])
        x_new = u_new = None
        for d, xr, ul in plans:
            solved = _nudged_solve(a, d, min(his), xr, ul, dense, sparse_parts)
            if solved is None:
                return
            x_new = solved[0] if xr is not None else x_new
            u_new = solved[1] if ul is not None else u_new
        tracks[0].x = x_new / x_new.max()
        if u_new is not None:
            tracks[1].x = u_new / u_new.max()


def _nudged_solve(a, d, upper, x, u, dense, sparse_parts):
    # shift just above the smallest upper bound keeps shift*I - A nonsingular
    for nudge in (4 * _EPS, 1e-12, 1e-9):
        try:
            solved = _noda_solve(a, d, upper * (1.0 + nudge), x, u, dense, sparse_parts)
        except (np.linalg.LinAlgError, RuntimeError, ValueError):
            solved = None
        if solved is not None:
            return solved
    return None


def _noda_solve(a, d, shift, x, u, dense, sparse_parts):
    """One Noda step on the balanced ``B = D^-1 A D``; None if not finite.

    Returns the new right and left iterates of ``A`` for whichever of
    ``x`` and ``u`` is given.
    """
    n = a.shape[0]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        if dense:
            shifted = -(a * d[None, :] / d[:, None])
            shifted[np.diag_indices(n)] += shift
            lu = scipy.linalg.lu_factor(shifted, check_finite=False)
            solve = lambda rhs, trans=0: scipy.linalg.lu_solve(lu, rhs, trans=trans, check_finite=False)  # noqa: E731
        else:
            pattern, perm, rows, cols, vals, diag = sparse_parts
            entries = -vals * d[cols] / d[rows]
            entries[diag] += shift
            pattern.data = entries[perm]
            lu = splu(pattern)
            solve = lambda rhs, trans=0: lu.solve(rhs, trans="T" if trans else "N")  # noqa: E731
        with np.errstate(all="ignore"):
            x_new = d * np.abs(solve(x / d)) if x is not None else None
            u_new = np.abs(solve(u * d, 1)) / d if u is not None else None
    for z in (x_new, u_new):
        if z is not None and (not np.all(np.isfinite(z)) or z.max() == 0):
            return None
    return x_new, u_new


def _shifted_pattern(a):
    """CSC skeleton of ``a`` plus a full diagonal, with the map from COO order."""
    coo = a.tocoo()
    n = a.shape[0]
    has_diag = np.zeros(n, dtype=bool)
    has_diag[coo.row[coo.row == coo.col]] = True
    missing = np.flatnonzero(~has_diag)
    rows = np.concatenate([coo.row, missing]).astype(np.int64)
    cols = np.concatenate([coo.col, missing]).astype(np.int64)
    vals = np.concatenate([coo.data, np.zeros(len(missing))])
    diag = np.flatnonzero(rows == cols)
    tag = sp.csc_matrix((np.arange(1, len(rows) + 1, dtype=float), (rows, cols)), shape=(n, n))
    tag.sort_indices()
    perm = tag.data.astype(np.int64) - 1
    return tag, perm, rows, cols, vals, diag


def _normalized_triple(a, t: float, log_scale: float = 0.0, cap: int | None = None, seed=None) -> SpectralTriple:
    lam, right, left = _perron_pair(a, cap, seed=seed)
    left = left / left.sum()
    right = right / (left @ right)
    return SpectralTriple(
        lam=lam * math.exp(log_scale) if abs(log_scale) < 700 else math.inf,
        left=left,
        right=right,
        t=float(t),
        log_lam=math.log(lam) + log_scale,
    )


def perron(matrix, t: float = 1.0) -> SpectralTriple:
    """Perron eigentriple of a nonnegative irreducible matrix.

    Parameters
    ----------
    matrix : array_like or sparse matrix, shape (M, M)
    t : float
        Hadamard exponent the matrix came from; only recorded.

    Raises
    ------
    ConvergenceError
        If the eigenvalue cannot be bracketed to relative width ``1e-10``
        within ``100*M*(1+|t|)`` power steps plus the inverse-iteration
        phase.
    """
    n = matrix.shape[0]
    cap = int(100 * n * (1 + abs(t)))
    return _normalized_triple(matrix, t, cap=cap)


def _scaled_hadamard(chain: MarkovChain, t: float):
    """``P^(t) / exp(shift)`` in operator form plus ``shift``."""
    csr = chain.csr
    if t == 1.0:
        data, shift = csr.data.copy(), 0.0
    elif t == 0.0:
        data, shift = np.ones_like(csr.data), 0.0
    else:
        logs = t * chain.log_data
        hi, lo = float(logs.max()), float(logs.min())
        if hi > _EXP_SAFE or lo < -_EXP_SAFE:
            shift = hi
            data = np.exp(logs - shift)
            # keep the zero pattern even where entries underflow
            np.maximum(data, np.finfo(float).tiny, out=data)
        else:
            shift = 0.0
            data = csr.data**t
    a = sp.csr_matrix((data, csr.indices.copy(), csr.indptr.copy()), shape=csr.shape)
    return _as_operator(a), shift


def _max_plus_potential(chain: MarkovChain, t: float) -> tuple[np.ndarray, float]:
    """Log-domain scaling that tames ``P^(t)``.

    ``mu`` bounds the largest cycle mean of ``W = t log p`` from above and
    ``xi_i`` is the heaviest ``W - mu`` path weight from ``i`` to state 0
    (Bellman-Ford).  Every entry of ``exp(W_ij - mu + xi_j - xi_i)`` is
    then at most 1, with a 1 in every row but one.
    """
    rr = rho_extremes(chain)
    mu = t * (rr.rho_max if t >= 0 else rr.rho_min)
    mu += 1e-12 * max(1.0, abs(mu))
    w = t * chain.log_data - mu
    src, dst = chain._rows, chain.csr.indices
    starts = chain.csr.indptr[:-1]
    xi = np.full(chain.m, -np.inf)
    xi[0] = 0.0
    for _ in range(chain.m):
        cand = np.maximum.reduceat(w + xi[dst], starts)
        new = np.maximum(xi, cand)
        if np.array_equal(new, xi):
            break
        xi = new
    return xi, mu


def _balanced_point(chain: MarkovChain, t: float, cap: int):
    """Spectral point computed in the frame scaled by :func:`_max_plus_potential`."""
    xi, mu = _max_plus_potential(chain, t)
    csr = chain.csr
    src, dst = chain._rows, csr.indices
    data = np.exp(t * chain.log_data - mu + xi[dst] - xi[src])
    np.maximum(data, np.finfo(float).tiny, out=data)
    b = _as_operator(sp.csr_matrix((data, dst.copy(), csr.indptr.copy()), shape=csr.shape))
    tb = _normalized_triple(b, t, log_scale=mu, cap=cap)
    weighted = tb.left[src] * data * tb.right[dst]
    deriv = float(np.sum(weighted * chain.log_data)) / float(np.sum(weighted))
    # back to the original frame, flooring components that underflow
    with np.errstate(under="ignore"):
        lr = np.log(tb.right) + xi
        ll = np.log(tb.left) - xi
        right = np.maximum(np.exp(lr - lr.max()), np.finfo(float).tiny)
        left = np.maximum(np.exp(ll - ll.max()), np.finfo(float).tiny)
    left = left / left.sum()
    right = right / (left @ right)
    return tb.log_lam, deriv, SpectralTriple(tb.lam, left, right, tb.t, tb.log_lam)


def _spectral_point(chain: MarkovChain, t: float) -> tuple[float, float, SpectralTriple]:
    """``(log lambda_t, d/dt log lambda_t, triple)`` with memoization."""
    t = float(t)
    memo = chain._memo
    hit = memo.get(t)
    if hit is not None:
        return hit
    cap = int(100 * chain.m * (1 + abs(t)))
    spread = abs(t) * float(chain.log_data.max() - chain.log_data.min())
    out = None
    if spread <= 2 * _EXP_SAFE:
        try:
            out = _direct_point(chain, t, cap, memo.get(_LAST))
        except ConvergenceError:
            out = None
    if out is None:
        # entries too far apart for a plain solve
        out = _balanced_point(chain, t, cap)
    if len(memo) >= _MEMO_LIMIT:
        memo.clear()
    memo[t] = out
    memo[_LAST] = out[2]
    return out


def _direct_point(chain: MarkovChain, t: float, cap: int, near: SpectralTriple | None):
    a, shift = _scaled_hadamard(chain, t)
    seed = None
    if near is not None and abs(near.t - t) <= _SEED_REACH:
        seed = (near.right, near.left)
    try:
        triple = _normalized_triple(a, t, log_scale=shift, cap=cap, seed=seed)
    except ConvergenceError:
        if seed is None:
            raise
        triple = _normalized_triple(a, t, log_scale=shift, cap=cap)
    csr = chain.csr
    adata = a[chain._rows, csr.indices] if isinstance(a, np.ndarray) else a.data
    weighted = triple.left[chain._rows] * adata * triple.right[csr.indices]
    num = float(np.sum(weighted * chain.log_data))
    den = float(np.sum(weighted))
    return triple.log_lam, num / den, triple


def spectral_triple(chain: MarkovChain, t: float) -> SpectralTriple:
    """Perron eigentriple of ``P^(t)``."""
    return _spectral_point(chain, t)[2]


def log_lambda(chain: MarkovChain, t: float) -> float:
    """``log lambda_t``, the log Perron root of ``P^(t)``."""
    return _spectral_point(chain, t)[0]


def log_lambda_deriv(chain: MarkovChain, t: float) -> float:
    """Derivative of ``log lambda_t`` from the Perron eigenvectors.

    ``a' [(log P) o P^(t)] b / a' P^(t) b``, with the log taken on the
    support only.
    """
    return _spectral_point(chain, t)[1]


def entropy_rate(chain: MarkovChain) -> float:
    """Entropy rate in nats, ``-sum_i pi_i sum_j p_ij log p_ij``."""
    csr = chain.csr
    terms = chain.pi[chain._rows] * csr.data * chain.log_data
    return max(0.0, -float(np.sum(terms)))


def path_count_rate(chain: MarkovChain) -> float:
    """Exponential growth rate of the number of allowed paths, ``log lambda_0``."""
    return log_lambda(chain, 0.0)


def path_log_prob(chain: MarkovChain, states: Sequence[int]) -> float:
    """``log pi_{s_0} + sum log p_{s_n, s_{n+1}}``; ``-inf`` for forbidden paths."""
    s = np.asarray(states, dtype=np.int64)
    if s.ndim != 1 or s.size == 0:
        raise ValueError("state sequence must be a nonempty 1-D sequence")
    if s.min() < 0 or s.max() >= chain.m:
        raise StateOutOfRange(f"states must lie in [0, {chain.m - 1}]")
    lw = chain.log_weights[s[:-1], s[1:]]
    return float(math.log(chain.pi[s[0]]) + np.sum(lw))


# ----------------------------------------------------------------------
# extreme mean cycles


@dataclass(frozen=True)
class RhoRange:
    rho_min: float
    rho_max: float


def cycle_mean(chain: MarkovChain, cycle: Sequence[int]) -> float:
    """Mean ``log p`` weight around a closed cycle ``c0 -> c1 -> ... -> c0``.

    Evaluated in exact rational arithmetic on the double-precision edge
    weights and rounded once, so equal cycles always compare equal.
    """
    return float(_exact_cycle_mean(chain.log_weights, cycle))


def _exact_cycle_mean(logw: np.ndarray, cycle: Sequence[int]) -> Fraction:
    nodes = list(cycle)
    total = Fraction(0)
    for u, v in zip(nodes, nodes[1:] + nodes[:1]):
        w = float(logw[u, v])
        if not math.isfinite(w):
            raise ValueError(f"({u}, {v}) is not an edge")
        total += Fraction(w)
    return total / len(nodes)


def _walk_cycles(walk: Iterable[int]) -> list[list[int]]:
    """Split a walk into the simple cycles removed by loop erasure."""
    pos: dict[int, int] = {}
    stack: list[int] = []
    cycles = []
    for v in walk:
        if v in pos:
            i = pos[v]
            cycles.append(stack[i:])
            for u in stack[i + 1 :]:
                del pos[u]
            del stack[i + 1 :]
        else:
            pos[v] = len(stack)
            stack.append(v)
    return cycles


def _karp_min_mean(m: int, src: np.ndarray, dst: np.ndarray, w: np.ndarray) -> list[list[int]]:
    """Candidate minimum-mean cycles from Karp's recurrence.

    ``D[k, v]`` is the least weight of a k-edge walk ending at ``v`` (from
    any start).  Returns the simple cycles lying on the critical walks of
    every vertex whose Karp value is within rounding of the optimum.
    """
    order = np.argsort(dst, kind="stable")
    src, dst, w = src[order], dst[order], w[order]
    starts = np.searchsorted(dst, np.arange(m))
    dmat = np.zeros((m + 1, m))
    parent = np.zeros((m + 1, m), dtype=np.int64)
    for k in range(1, m + 1):
        cand = dmat[k - 1][src] + w
        mins = np.minimum.reduceat(cand, starts)
        dmat[k] = mins
        hit = np.flatnonzero(cand == mins[dst])
        first = np.concatenate(([True], dst[hit][1:] != dst[hit][:-1]))
        parent[k] = hit[first]
    with np.errstate(invalid="ignore"):
        ks = np.arange(m)
        vals = np.max((dmat[m][None, :] - dmat[:m]) / (m - ks)[:, None], axis=0)
    best = float(vals.min())
    slack = 1e-9 * max(1.0, abs(best))
    cands = np.flatnonzero(vals <= best + slack)
    cands = cands[np.argsort(vals[cands], kind="stable")][:64]
    cycles = []
    for v in cands:
        walk = [int(v)]
        node = int(v)
        for k in range(m, 0, -1):
            e = parent[k, node]
            node = int(src[e])
            walk.append(node)
        walk.reverse()
        cycles.extend(_walk_cycles(walk))
    return cycles


def rho_extremes(chain: MarkovChain) -> RhoRange:
    """Minimum and maximum mean ``log p`` weight over simple cycles.

    These are the limiting slopes of ``log lambda_t`` as ``t -> -inf`` and
    ``t -> +inf``.
    """
    hit = chain._memo.get(_RHO)
    if hit is not None:
        return hit
    csr = chain.csr
    m = chain.m
    src = chain._rows.astype(np.int64)
    dst = csr.indices.astype(np.int64)
    w = chain.log_data
    logw = chain.log_weights
    lo_cycles = _karp_min_mean(m, src, dst, w)
    hi_cycles = _karp_min_mean(m, src, dst, -w)
    rho_min = min(_exact_cycle_mean(logw, c) for c in lo_cycles)
    rho_max = max(_exact_cycle_mean(logw, c) for c in hi_cycles)
    out = RhoRange(rho_min=float(rho_min), rho_max=float(rho_max))
    chain._memo[_RHO] = out
    return out


# ----------------------------------------------------------------------
# plain-text transition matrix format


def write_chain(path, chain_or_p) -> None:
    """Write ``M`` then ``M`` rows of 17-significant-digit decimals."""
    p = chain_or_p.p if isinstance(chain_or_p, MarkovChain) else np.asarray(chain_or_p, float)
    lines = [str(p.shape[0])]
    lines += [" ".join(f"{x:.17g}" for x in row) for row in p]
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_chain(path) -> MarkovChain:
    with open(path, encoding="ascii") as fh:
        tokens = fh.read().split()
    if not tokens:
        raise ValueError(f"{path}: empty chain file")
    m = int(tokens[0])
    vals = tokens[1:]
    if m < 1 or len(vals) != m * m:
        raise ValueError(f"{path}: expected {m * m} entries after header, got {len(vals)}")
    return validate_chain(np.array([float(v) for v in vals]).reshape(m, m))
