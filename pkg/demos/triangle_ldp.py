"""Path statistics on the triangle walk versus the large-deviation prediction.

All 3 * 2^11 walks of length 12 are enumerated with one Gaussian field
draw.  Each square bin holding at least 100 walks is compared with the
predicted log fraction s(rho, xi) - log(lambda_0).
"""

from walkdet import enumerate_path_measure, gen_cycle, uniform_walk_chain
from walkdet.ldp import empirical_ldp_table


def main() -> None:
    c = uniform_walk_chain(gen_cycle(3))
    em = enumerate_path_measure(c, 12, seed=0)
    rows = empirical_ldp_table(c, em)
    print(f"{len(em)} walks, {len(rows)} bins with >= 100 walks")
    print(f"{'rho':>8}{'xi':>8}{'count':>7}{'empirical':>11}{'predicted':>11}")
    for row in rows:
        rho, xi, count, emp, pred = row
        print(f"{rho:>8.3f}{xi:>8.3f}{count:>7d}{emp:>11.4f}{pred:>11.4f}")
    print(f"largest gap {max(abs(r[-2] - r[-1]) for r in rows):.4f} nats")


if __name__ == "__main__":
    main()
