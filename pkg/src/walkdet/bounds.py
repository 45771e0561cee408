"""Error-exponent bounds.

Upper bound: the genie value ``beta**2 / 2`` (true path revealed).
Lower bounds: the sum detector ``beta**2 / (2M)`` and the free-energy bound
``chi(beta)``, which is zero up to ``beta = sqrt(2H)`` and positive beyond.
``chi`` is available in parametric form for ``t`` in ``(0, 1]``:

    beta_t = (sqrt(2) / t) * sqrt(log lambda_t - t * rho_t)
    chi_t  = ((1 - 2t) / t**2) * log lambda_t - ((1 - t) / t) * rho_t

with ``rho_t`` the slope of ``log lambda_t``.
"""

from __future__ import annotations

import csv
import math
import weakref
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import InversionError
from .spectral import (
    MarkovChain,
    entropy_rate,
    log_lambda,
    log_lambda_deriv,
    path_count_rate,
)

T_FLOOR = 1e-6
SCAN_POINTS = 512
T_XTOL = 1e-15

CSV_HEADER = ("beta", "genie_ub", "sum_lb", "physics_lb", "threshold_beta")


@dataclass(frozen=True)
class ExponentBounds:
    beta: float
    genie_ub: float
    sum_lb: float
    physics_lb: float
    threshold_beta: float
    phi_tilde: float
    asymptotic: bool = False  # physics_lb came from the large-beta asymptote

    def row(self) -> tuple[float, ...]:
        return (self.beta, self.genie_ub, self.sum_lb, self.physics_lb, self.threshold_beta)


@dataclass(frozen=True)
class ParametricPoint:
    t: float
    beta_t: float
    chi: float
    rho_t: float


def genie_upper(beta: float) -> float:
    return 0.5 * beta * beta


def sum_detector_lower(beta: float, m: int) -> float:
    if m < 1:
        raise ValueError("m must be a positive integer")
    return beta * beta / (2.0 * m)


def threshold_beta(chain: MarkovChain) -> float:
    return math.sqrt(2.0 * entropy_rate(chain))


def physics_lower_regular(k: int, beta: float) -> float:
    """Closed form for the uniform walk on a ``k``-regular graph."""
    log_k = math.log(k)
    b0 = math.sqrt(2.0 * log_k)
    if beta <= b0:
        return 0.0
    return max(0.0, 0.5 * beta * beta - beta * b0 + log_k)


def _point(log_lam: float, rho: float, t: float) -> ParametricPoint:
    gap = max(0.0, log_lam - t * rho)
    beta_t = math.sqrt(2.0) / t * math.sqrt(gap)
    chi = (1.0 - 2.0 * t) / (t * t) * log_lam - (1.0 - t) / t * rho
    return ParametricPoint(t, beta_t, chi, rho)


def parametric_curve(chain: MarkovChain, t: float) -> ParametricPoint:
    if not T_FLOOR <= t <= 1.0:
        raise ValueError(f"t must lie in [{T_FLOOR}, 1], got {t}")
    if t == 1.0:
        # log lambda_1 = 0 exactly for a stochastic matrix
        return _point(0.0, -entropy_rate(chain), 1.0)
    return _point(log_lambda(chain, t), log_lambda_deriv(chain, t), t)


_tables: "weakref.WeakKeyDictionary[MarkovChain, tuple[np.ndarray, np.ndarray, np.ndarray]]" = (
    weakref.WeakKeyDictionary()
)


def _scan_table(chain: MarkovChain):
    tab = _tables.get(chain)
    if tab is None:
        ts = np.geomspace(T_FLOOR, 1.0, SCAN_POINTS)
        ts[-1] = 1.0
        pts = [parametric_curve(chain, float(t)) for t in ts]
        tab = (ts, np.array([p.beta_t for p in pts]), np.array([p.chi for p in pts]))
        _tables[chain] = tab
    return tab


def _asymptote(chain: MarkovChain, beta: float) -> float:
    # leading behaviour as t -> 0: the K-regular form with K = lambda_0
    log_l0 = path_count_rate(chain)
    return max(0.0, 0.5 * beta * beta - beta * math.sqrt(2.0 * log_l0) + log_l0)


def _physics(chain: MarkovChain, beta: float, closed_form: bool = True) -> tuple[float, bool]:
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    k = chain.uniform_degree
    if k is not None and closed_form:
        return physics_lower_regular(k, beta), False
    if beta <= threshold_beta(chain):
        return 0.0, False
    ts, betas, chis = _scan_table(chain)
    if beta > betas[0]:
        return _asymptote(chain, beta), True
    diff = betas - beta
    exact = np.flatnonzero(diff == 0.0)
    flips = np.flatnonzero(np.sign(diff[:-1]) * np.sign(diff[1:]) < 0)
    cands = [float(chis[i]) for i in exact]

    def f(t):
        return parametric_curve(chain, t).beta_t - beta

    for i in flips:
        t = brentq(f, ts[i], ts[i + 1], xtol=T_XTOL, rtol=4 * np.finfo(float).eps)
        # with beta_t = beta, chi reduces to (1 - 2t) beta^2/2 - rho_t,
        # which is far less sensitive to the residual error in t
        cands.append((1.0 - 2.0 * t) * 0.5 * beta * beta - parametric_curve(chain, t).rho_t)
    if not cands:
        raise InversionError(f"no t in [{T_FLOOR}, 1] gives beta_t = {beta}")
    # the smallest chi keeps the bound valid if beta_t is not injective
    return max(0.0, min(cands)), False


def physics_lower(chain: MarkovChain, beta: float, closed_form: bool = True) -> float:
    """Free-energy lower bound on the error exponent.

    Zero up to ``sqrt(2H)``.  Above it the parametric curve is inverted
    numerically: a 512-point geometric grid in ``t`` brackets every root of
    ``beta_t = beta``, each root is refined with Brent's method, and the
    smallest resulting ``chi`` is returned.  Uniform regular walks use the
    closed form directly unless ``closed_form`` is False.

    Raises
    ------
    InversionError
        If no bracket is found.
    """
    return _physics(chain, beta, closed_form)[0]


def all_bounds(chain: MarkovChain, beta: float) -> ExponentBounds:
    lb, asym = _physics(chain, beta)
    ub = genie_upper(beta)
    return ExponentBounds(
        beta=beta,
        genie_ub=ub,
        sum_lb=sum_detector_lower(beta, chain.m),
        physics_lb=lb,
        threshold_beta=threshold_beta(chain),
        phi_tilde=ub - lb,
        asymptotic=asym,
    )


def bounds_csv(path_or_file, rows) -> None:
    """Write ``ExponentBounds`` rows with ``%.17g`` numbers."""
    own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
    fh = open(path_or_file, "w", newline="", encoding="ascii") if own else path_or_file
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for b in rows:
            w.writerow([f"{v:.17g}" for v in b.row()])
    finally:
        if own:
            fh.close()
