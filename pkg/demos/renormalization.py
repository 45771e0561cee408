"""Why the likelihood needs rescaling, and what rescaling cannot fix.

The raw product of diagonal and transition matrices overflows after a few
hundred steps at moderate SNR.  Per-step sup-norm scaling keeps it finite.
When observations are so large that a live path weight drops below the
double range, the detector switches to an exact log-domain recursion.
"""

import numpy as np

from walkdet import Observations, brute_force_llr, gen_cycle, log_likelihood_ratio, simulate_h1, uniform_walk_chain, validate_chain


def naive_log_l(chain, beta, y):
    v = chain.pi.copy()
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(y.shape[1]):
            if k:
                v = v @ chain.p
            v = v * np.exp(beta * y[:, k] - beta * beta / 2)
        return float(np.log(v.sum()))


def main() -> None:
    c = uniform_walk_chain(gen_cycle(21))
    for n in (100, 400, 1600):
        obs = simulate_h1(c, 3.0, n, seed=2)
        print(f"n={n:5d}  naive {naive_log_l(c, 3.0, obs.y):>12.4f}  rescaled {log_likelihood_ratio(c, 3.0, obs).log_l:>12.4f}")

    print("\nextreme observations on a chain with forbidden moves")
    rng = np.random.default_rng(6)
    p = np.array([[0.4, 0.2, 0.3, 0.1], [0, 0, 0, 1], [0, 0.8, 0.2, 0], [1, 0, 0, 0]])
    chain = validate_chain(p)
    y = rng.standard_normal((4, 6)) * 40.0
    obs = Observations(y)
    print(f"forward recursion {log_likelihood_ratio(chain, 25.0, obs).log_l:.6f}")
    print(f"sum over all paths {brute_force_llr(chain, 25.0, obs).log_l:.6f}")


if __name__ == "__main__":
    main()
