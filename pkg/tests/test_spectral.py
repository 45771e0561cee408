import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import TWO_STATE, brute_force_extremes, chains, random_chain_matrix
from walkdet import (
    NegativeEntry,
    NotAperiodic,
    NotIrreducible,
    RowSumError,
    StateOutOfRange,
    entropy_rate,
    gen_cycle,
    gen_grid,
    hadamard_power,
    log_lambda,
    log_lambda_deriv,
    path_count_rate,
    path_log_prob,
    perron,
    rho_extremes,
    uniform_walk_chain,
    validate_chain,
)
from walkdet.spectral import ROW_SUM_TOL, cycle_mean, read_chain, spectral_triple, write_chain

# closed-form oracles for P = [[0.9, 0.1], [0.5, 0.5]]
H_TWO = 0.38642700791953105  # (5/6) h(0.9) + (1/6) ln 2
LOG_LAMBDA2_TWO = -0.205267714053771  # ln((1.06 + sqrt(0.3236)) / 2)
RHO_MAX_TWO = -0.10536051565782628  # ln 0.9
RHO_MIN_TWO = -1.4978661367769954  # (ln 0.1 + ln 0.5) / 2


class TestValidateChain:
    def test_single_state(self):
        c = validate_chain([[1.0]])
        assert c.m == 1
        assert c.pi.tolist() == [1.0]

    def test_two_state_stationary(self, two_state):
        np.testing.assert_allclose(two_state.pi, [5 / 6, 1 / 6], rtol=0, atol=1e-14)

    def test_period_two_rejected(self):
        with pytest.raises(NotAperiodic):
            validate_chain([[0.0, 1.0], [1.0, 0.0]])

    def test_reducible_rejected(self):
        with pytest.raises(NotIrreducible):
            validate_chain([[1.0, 0.0], [0.5, 0.5]])

    def test_negative_rejected(self):
        with pytest.raises(NegativeEntry):
            validate_chain([[1.1, -0.1], [0.5, 0.5]])

    def test_row_sum_rejected(self):
        with pytest.raises(RowSumError):
            validate_chain([[0.9, 0.2], [0.5, 0.5]])

    def test_row_sum_within_tolerance_renormalized(self):
        c = validate_chain([[0.9 + ROW_SUM_TOL / 2, 0.1], [0.5, 0.5]])
        assert abs(c.p.sum(axis=1) - 1).max() <= 1e-12

    def test_non_square_rejected(self):
        with pytest.raises(ValueError):
            validate_chain(np.ones((2, 3)) / 3)

    def test_bipartite_cycle_periodic(self):
        with pytest.raises(NotAperiodic):
            uniform_walk_chain(gen_cycle(10))

    def test_read_only(self, two_state):
        with pytest.raises(ValueError):
            two_state.p[0, 0] = 0.3

    @given(chains())
    @settings(max_examples=40, deadline=None)
    def test_invariants(self, c):
        assert abs(c.p.sum(axis=1) - 1).max() <= 1e-12
        assert np.array_equal(c.support, c.p > 0)
        assert np.all(c.pi > 0)
        assert abs(c.pi.sum() - 1) <= 1e-12
        assert np.abs(c.pi @ c.p - c.pi).max() <= 1e-10


class TestHadamardAndPerron:
    def test_identity_exponent(self, two_state):
        np.testing.assert_array_equal(hadamard_power(two_state, 1.0), TWO_STATE)

    def test_zero_exponent_is_adjacency(self):
        c = uniform_walk_chain(gen_cycle(5))
        np.testing.assert_array_equal(hadamard_power(c, 0.0), (c.p > 0).astype(float))

    def test_square(self, two_state):
        np.testing.assert_allclose(hadamard_power(two_state, 2.0), [[0.81, 0.01], [0.25, 0.25]], rtol=1e-15)

    def test_stochastic_matrix(self, two_state):
        tr = perron(TWO_STATE)
        assert abs(tr.lam - 1) <= 1e-12
        np.testing.assert_allclose(tr.right, 1.0, rtol=1e-10)
        np.testing.assert_allclose(tr.left, two_state.pi, rtol=1e-10)

    def test_all_ones(self):
        assert abs(perron(np.ones((2, 2)), t=0.0).lam - 2.0) <= 1e-12

    @pytest.mark.parametrize("t", [-3.0, 0.0, 0.5, 2.0])
    def test_regular_walk(self, t):
        c = uniform_walk_chain(gen_cycle(7))
        assert abs(log_lambda(c, t) - (1 - t) * math.log(2)) <= 1e-12

    @given(chains(), st.floats(-8, 8))
    @settings(max_examples=40, deadline=None)
    def test_triple_invariants(self, c, t):
        tr = spectral_triple(c, t)
        a = hadamard_power(c, t) / math.exp(tr.log_lam) if abs(tr.log_lam) < 700 else None
        assert abs(tr.left.sum() - 1) <= 1e-10
        assert abs(tr.left @ tr.right - 1) <= 1e-10
        assert np.all(tr.left > 0) and np.all(tr.right > 0)
        if a is not None and np.all(np.isfinite(a)):
            assert np.abs(tr.left @ a - tr.left).max() <= 1e-10 * max(1.0, tr.left.max())
            assert np.abs(a @ tr.right - tr.right).max() <= 1e-10 * max(1.0, tr.right.max())


class TestLogLambda:
    def test_t1_zero(self, two_state):
        assert abs(log_lambda(two_state, 1.0)) <= 1e-12

    def test_cycle_t0(self):
        assert abs(log_lambda(uniform_walk_chain(gen_cycle(101)), 0.0) - 0.693147) <= 1e-6

    def test_two_state_t2_quadratic_oracle(self, two_state):
        assert log_lambda(two_state, 2.0) == pytest.approx(LOG_LAMBDA2_TWO, abs=1e-12)

    def test_slope_at_one_is_minus_entropy(self, two_state):
        assert log_lambda_deriv(two_state, 1.0) == pytest.approx(-H_TWO, abs=1e-10)

    def test_regular_slope(self):
        c = uniform_walk_chain(gen_cycle(9))
        for t in (-2.0, 0.0, 1.5):
            assert log_lambda_deriv(c, t) == pytest.approx(-math.log(2), abs=1e-10)

    @pytest.mark.parametrize("t", [-2.0, -1.0, 0.0, 0.5, 1.0, 2.0])
    def test_derivative_vs_central_difference(self, two_state, t):
        h = 1e-5
        fd = (log_lambda(two_state, t + h) - log_lambda(two_state, t - h)) / (2 * h)
        d = log_lambda_deriv(two_state, t)
        assert abs(d - fd) <= 1e-6 * max(1.0, abs(d))

    @given(chains())
    @settings(max_examples=25, deadline=None)
    def test_convexity(self, c):
        ts = np.linspace(-4, 4, 9)
        vals = [log_lambda(c, t) for t in ts]
        for a, b, mid in zip(vals, vals[2:], vals[1:]):
            assert mid <= 0.5 * (a + b) + 1e-9

    @given(chains())
    @settings(max_examples=15, deadline=None)
    def test_monotone_derivative(self, c):
        d = [log_lambda_deriv(c, t) for t in np.linspace(-8, 8, 100)]
        assert all(y >= x - 1e-9 for x, y in zip(d, d[1:]))

    @given(chains())
    @settings(max_examples=40, deadline=None)
    def test_entropy_is_minus_slope(self, c):
        assert abs(entropy_rate(c) + log_lambda_deriv(c, 1.0)) <= 1e-9

    @given(chains())
    @settings(max_examples=40, deadline=None)
    def test_lambda_one(self, c):
        assert abs(spectral_triple(c, 1.0).lam - 1) <= 1e-12

    def test_large_t_slopes_approach_mean_cycle_range(self, two_state):
        assert log_lambda_deriv(two_state, -64.0) == pytest.approx(RHO_MIN_TWO, abs=1e-9)
        assert log_lambda_deriv(two_state, 64.0) == pytest.approx(RHO_MAX_TWO, abs=1e-9)

    def test_strict_convexity_off_regular(self, two_state):
        # only regular uniform walks have linear log lambda_t
        mid = log_lambda(two_state, 0.5)
        assert mid < 0.5 * (log_lambda(two_state, 0.0) + log_lambda(two_state, 1.0)) - 1e-6


class TestEntropyAndCounts:
    def test_two_state_entropy(self, two_state):
        assert entropy_rate(two_state) == pytest.approx(H_TWO, abs=1e-12)

    def test_regular(self):
        assert entropy_rate(uniform_walk_chain(gen_cycle(101))) == pytest.approx(math.log(2), abs=1e-12)

    def test_single_state_zero(self):
        c = validate_chain([[1.0]])
        assert entropy_rate(c) == 0.0
        assert path_count_rate(c) == 0.0

    def test_complete_support(self, two_state):
        assert path_count_rate(two_state) == pytest.approx(math.log(2), abs=1e-12)

    def test_cycle_path_count_growth(self):
        c = uniform_walk_chain(gen_cycle(101))
        a = c.support.astype(object)
        v = np.ones(101, dtype=object)
        for n in range(1, 11):
            assert sum(v) == 101 * 2 ** (n - 1)
            v = a @ v
        assert path_count_rate(c) == pytest.approx(math.log(2), abs=1e-12)


class TestPathLogProb:
    def test_single_step(self, two_state):
        assert path_log_prob(two_state, [1]) == pytest.approx(math.log(1 / 6), abs=1e-12)

    def test_hand_product(self, two_state):
        expect = math.log(5 / 6) + math.log(0.1) + math.log(0.5)
        assert path_log_prob(two_state, [0, 1, 0]) == pytest.approx(expect, abs=1e-12)

    def test_regular_uniform(self):
        c = uniform_walk_chain(gen_cycle(11))
        expect = math.log(1 / 11) + 4 * math.log(0.5)
        assert path_log_prob(c, [0, 1, 2, 1, 0]) == pytest.approx(expect, abs=1e-13)

    def test_forbidden(self):
        c = uniform_walk_chain(gen_cycle(11))
        assert path_log_prob(c, [0, 5]) == -math.inf

    def test_out_of_range(self, two_state):
        with pytest.raises(StateOutOfRange):
            path_log_prob(two_state, [0, 2])


class TestRhoExtremes:
    def test_two_state(self, two_state):
        rr = rho_extremes(two_state)
        assert rr.rho_max == pytest.approx(RHO_MAX_TWO, abs=1e-15)
        assert rr.rho_min == pytest.approx(RHO_MIN_TWO, abs=1e-15)

    def test_regular(self):
        rr = rho_extremes(uniform_walk_chain(gen_grid(5, 5, self_loops=True)))
        # closed neighbourhoods of sizes 3..5
        assert rr.rho_min == pytest.approx(-math.log(5), abs=1e-14)
        assert rr.rho_max == pytest.approx(-math.log(3), abs=1e-14)

    def test_cycle_regular(self):
        rr = rho_extremes(uniform_walk_chain(gen_cycle(101)))
        assert rr.rho_min == rr.rho_max == pytest.approx(-math.log(2), abs=1e-15)

    def test_cycle_mean_helper(self, two_state):
        assert cycle_mean(two_state, [0, 1]) == pytest.approx(RHO_MIN_TWO, abs=1e-15)

    def test_matches_brute_force_seeded(self):
        rng = np.random.default_rng(20261016)
        for _ in range(30):
            m = int(rng.integers(1, 9))
            c = validate_chain(random_chain_matrix(rng, m, float(rng.uniform(0.1, 0.9))))
            rr = rho_extremes(c)
            assert (rr.rho_min, rr.rho_max) == brute_force_extremes(c)

    @given(chains(max_m=8))
    @settings(max_examples=40, deadline=None)
    def test_matches_brute_force(self, c):
        rr = rho_extremes(c)
        assert (rr.rho_min, rr.rho_max) == brute_force_extremes(c)

    @given(chains())
    @settings(max_examples=20, deadline=None)
    def test_brackets_clamped_slopes(self, c):
        rr = rho_extremes(c)
        assert rr.rho_min - 1e-9 <= log_lambda_deriv(c, -64.0) <= rr.rho_max + 1e-9
        assert rr.rho_min - 1e-9 <= log_lambda_deriv(c, 64.0) <= rr.rho_max + 1e-9


# nearly reducible once raised to large exponents: Perron vectors span
# more than 100 orders of magnitude
STIFF_CHAINS = [
    [[0.47357509, 0.03019268, 0.49623223], [1, 0, 0], [0, 1, 0]],
    [[0.071, 0.0, 0.929], [0.233, 0.075, 0.692], [0.0, 0.578, 0.422]],
    [[0.375, 0.625, 0.0], [0.0, 0.55, 0.45], [0.881, 0.0, 0.119]],
    [
        [0.3500887, 0.0, 0.35146632, 0.20941243, 0.08903256],
        [0.0, 0.0, 1.0, 0.0, 0.0],
        [0.0, 0.52288479, 0.0, 0.47711521, 0.0],
        [1.0, 0.0, 0.0, 0.0, 0.0],
        [0.13371552, 0.86628448, 0.0, 0.0, 0.0],
    ],
]


class TestExtremeExponents:
    @pytest.mark.parametrize("rows", STIFF_CHAINS)
    @pytest.mark.parametrize("t", [-64.0, -20.0, 20.0, 64.0])
    def test_stiff_chains(self, rows, t):
        p = np.array(rows, dtype=float)
        c = validate_chain(p / p.sum(axis=1, keepdims=True))
        rr = rho_extremes(c)
        ext = rr.rho_max if t > 0 else rr.rho_min
        # s(rho) lies in [0, log m] at the extreme slope
        gap = log_lambda(c, t) - t * ext
        assert -1e-9 <= gap <= math.log(c.m) + 1e-9
        assert rr.rho_min - 1e-9 <= log_lambda_deriv(c, t) <= rr.rho_max + 1e-9

    def test_tiny_left_components(self):
        b = np.array([[1.0, 0.0, 7.576e-164], [1.0, 2.347e-02, 1.523e-122], [0.0, 1.0, 2.220e-50]])
        tr = perron(b)
        assert tr.lam == pytest.approx(1.0, rel=1e-12)
        # u1 = u2 / (lambda - b11) and u2 = b02 u0 / lambda to leading order
        u = tr.left
        assert u[2] / u[0] == pytest.approx(7.576e-164, rel=1e-10)
        assert u[1] / u[2] == pytest.approx(1.0 / (1.0 - 2.347e-02), rel=1e-10)

    def test_gth_solve_relative_accuracy(self):
        from walkdet.spectral import _gth_solve

        off = np.array([[0.0, 1e-150, 0.0], [1.0, 0.0, 1e-40], [0.0, 1.0, 0.0]])
        sums = np.array([1.0, 0.5, 1e-80])
        rhs = np.ones(3)
        y = _gth_solve(off, sums, rhs)
        fo = [[Fraction(float(v)) for v in row] for row in off]
        fs = [Fraction(float(v)) for v in sums]
        m = [[(fs[i] + sum(fo[i])) if i == j else -fo[i][j] for j in range(3)] for i in range(3)]
        exact = _fraction_solve(m, [Fraction(1)] * 3)
        for got, want in zip(y, exact):
            assert got == pytest.approx(float(want), rel=1e-13)

    def test_gth_solve_random(self):
        from walkdet.spectral import _gth_solve

        rng = np.random.default_rng(5)
        for _ in range(20):
            n = int(rng.integers(1, 8))
            off = rng.random((n, n))
            np.fill_diagonal(off, 0.0)
            sums = rng.random(n) + 0.01
            rhs = rng.random(n)
            m = -off + np.diag(sums + off.sum(axis=1))
            np.testing.assert_allclose(_gth_solve(off, sums, rhs), np.linalg.solve(m, rhs), rtol=1e-10)


def _fraction_solve(m, b):
    n = len(b)
    a = [row[:] + [b[i]] for i, row in enumerate(m)]
    for k in range(n):
        piv = next(i for i in range(k, n) if a[i][k] != 0)
        a[k], a[piv] = a[piv], a[k]
        for i in range(n):
            if i != k and a[i][k] != 0:
                f = a[i][k] / a[k][k]
                a[i] = [x - f * y for x, y in zip(a[i], a[k])]
    return [a[i][n] / a[i][i] for i in range(n)]


def test_chain_file_round_trip(tmp_path, two_state):
    f = tmp_path / "p.txt"
    write_chain(f, two_state)
    back = read_chain(f)
    np.testing.assert_array_equal(back.p, two_state.p)


def test_chain_file_bad_count(tmp_path):
    f = tmp_path / "p.txt"
    f.write_text("2\n0.5 0.5\n1\n")
    with pytest.raises(ValueError):
        read_chain(f)


def test_cycle_oracle_on_hand_example():
    p = np.array([[0.2, 0.8, 0.0], [0.0, 0.3, 0.7], [1.0, 0.0, 0.0]])
    c = validate_chain(p)
    lo, hi = brute_force_extremes(c)
    cand = [math.log(0.2), math.log(0.3), (math.log(0.8) + math.log(0.7)) / 3]
    assert hi == pytest.approx(max(cand), abs=1e-15)
    assert lo == pytest.approx(min(cand), abs=1e-15)
