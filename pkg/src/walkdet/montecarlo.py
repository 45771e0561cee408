"""Monte Carlo estimates of the error exponent.

Under H0 the normalized log-likelihood ratio converges almost surely to
``-eta``, so the mean of ``-ell_N`` over independent H0 draws estimates
``eta``.  Trials are cut into fixed chunks that are independent of the
worker count, which makes every estimate bit-identical however many
threads run it.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .detector import _noise, batch_log_likelihood, prefix_log_likelihoods, simulate_h0
from .rng import trial_seed
from .spectral import MarkovChain

DEFAULT_N = 2000
DEFAULT_TRIALS = 200
CHUNK = 8
THREADS_ENV = "WALKDET_THREADS"

CSV_HEADER = ("beta", "eta_hat", "stderr", "n", "trials")


@dataclass(frozen=True)
class ExponentEstimate:
    beta: float
    eta_hat: float
    stderr: float
    trials: int
    n: int
    trace: tuple[float, ...] | None = None

    def row(self) -> tuple:
        return (self.beta, self.eta_hat, self.stderr, self.n, self.trials)


def resolve_threads(threads: int | None = None) -> int:
    """Explicit value, else ``WALKDET_THREADS``, else 1."""
    if threads is None:
        env = os.environ.get(THREADS_ENV, "").strip()
        threads = int(env) if env else 1
    if threads < 1:
        raise ValueError("thread count must be at least 1")
    return threads


def _chunk_values(chain: MarkovChain, beta: float, n: int, seeds: list[int]) -> np.ndarray:
    ys = np.stack([_noise(chain.m, n, s) for s in seeds])
    return -batch_log_likelihood(chain, beta, ys) / n


def sample_exponents(chain: MarkovChain, beta: float, n: int, trials: int, seed: int = 0, threads: int | None = None) -> np.ndarray:
    """``-ell_N`` for H0 trials ``0..trials-1`` (trial ``i`` seeded ``seed ^ i``)."""
    if n < 1 or trials < 1:
        raise ValueError("n and trials must be positive")
    if beta == 0.0:
        return np.zeros(trials)
    seeds = [trial_seed(seed, i) for i in range(trials)]
    chunks = [seeds[i : i + CHUNK] for i in range(0, trials, CHUNK)]
    workers = min(resolve_threads(threads), len(chunks))
    if workers == 1:
        parts = [_chunk_values(chain, beta, n, c) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda c: _chunk_values(chain, beta, n, c), chunks))
    return np.concatenate(parts)


def estimate_exponent(
    chain: MarkovChain,
    beta: float,
    n: int = DEFAULT_N,
    trials: int = DEFAULT_TRIALS,
    seed: int = 0,
    threads: int | None = None,
    keep_trace: bool = False,
) -> ExponentEstimate:
    """Sample mean of ``-ell_N`` over H0 trials with its standard error.

    ``stderr`` is the sample standard deviation over ``sqrt(trials)``.
    """
    if trials < 2:
        raise ValueError("estimate_exponent needs at least 2 trials")
    vals = sample_exponents(chain, beta, n, trials, seed, threads)
    # numpy reduces contiguous arrays pairwise, in a fixed order
    mean = float(np.mean(vals))
    sd = float(np.std(vals, ddof=1))
    trace = tuple(float(v) for v in vals) if keep_trace else None
    return ExponentEstimate(beta, mean, sd / math.sqrt(trials), trials, n, trace)


def convergence_trace(chain: MarkovChain, beta: float, n_max: int, checkpoints, seed: int = 0) -> list[tuple[int, float]]:
    """``(n, -ell_n)`` at each checkpoint along one growing H0 stream."""
    cps = [int(c) for c in checkpoints]
    if not cps or cps[-1] > n_max:
        raise ValueError("checkpoints must be nonempty and at most n_max")
    obs = simulate_h0(chain.m, n_max, seed)
    logs = prefix_log_likelihoods(chain, beta, obs, cps)
    return [(c, float(-v / c) if beta else 0.0) for c, v in zip(cps, logs)]


def sweep_csv(path_or_file, estimates) -> None:
    own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
    fh = open(path_or_file, "w", newline="", encoding="ascii") if own else path_or_file
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for e in estimates:
            w.writerow([f"{e.beta:.17g}", f"{e.eta_hat:.17g}", f"{e.stderr:.17g}", e.n, e.trials])
    finally:
        if own:
            fh.close()
