import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from superrec import diophantine as dio
from superrec.exceptions import RejectedInputError

GOLDEN = (np.sqrt(5) - 1) / 2
FIB = [1, 2, 3, 5, 8, 13, 21, 34, 55, 89, 144, 233, 377, 610, 987, 1597, 2584, 4181, 6765, 10946, 17711]


def brute(thetas, delta, n_max):
    for n in range(1, n_max + 1):
        if max(dio.torus_distance(t, n) for t in thetas) < delta:
            return n
    return None


class TestTorusDistance:
    def test_third(self):
        assert dio.torus_distance(1 / 3, 3) == pytest.approx(0, abs=1e-15)

    def test_half(self):
        assert dio.torus_distance(0.5, 3) == 0.5

    def test_golden(self):
        assert dio.torus_distance(0.618034, 13) == pytest.approx(0.0344, abs=1e-4)

    @given(st.floats(0, 1, exclude_max=True), st.integers(1, 10 ** 9))
    def test_matches_exact_rational(self, theta, n):
        f = Fraction(theta) * n % 1
        want = float(min(f, 1 - f))
        assert abs(dio.torus_distance(theta, n) - want) <= 1e-15


class TestScan:
    def test_third(self):
        assert dio.scan_return(dio.AngleSystem((1 / 3,), 0.01), 100).n == 3

    def test_golden(self):
        assert dio.scan_return(dio.AngleSystem((0.618034,), 0.05), 100).n == 13

    def test_lcm(self):
        assert dio.scan_return(dio.AngleSystem((1 / 4, 1 / 6), 0.01), 100).n == 12

    def test_budget(self):
        with pytest.raises(dio.BudgetExhausted):
            dio.scan_return(dio.AngleSystem((GOLDEN,), 1e-6), 1000)

    def test_pigeonhole_guarantee(self, rng):
        for _ in range(20):
            th = tuple(rng.uniform(0, 1, 2))
            s = dio.AngleSystem(th, 0.05)
            assert dio.scan_return(s, dio.dirichlet_bound(0.05, 2)).n <= 400

    def test_n_min(self):
        assert dio.scan_return(dio.AngleSystem((1 / 3,), 0.01), 100, n_min=4).n == 6

    @given(st.lists(st.floats(0, 1, exclude_max=True), min_size=1, max_size=2), st.floats(0.02, 0.3))
    def test_minimal_against_brute_force(self, thetas, delta):
        s = dio.AngleSystem(tuple(thetas), delta)
        want = brute(s.thetas, delta, 10 ** 4)
        try:
            got = dio.scan_return(s, 10 ** 4).n
        except dio.BudgetExhausted:
            got = None
        assert got == want

    def test_validation_rejects_bad_input(self):
        with pytest.raises(RejectedInputError):
            dio.AngleSystem((1.5,), 0.1)
        with pytest.raises(RejectedInputError):
            dio.AngleSystem((0.1,), 0.7)


class TestContinuedFractions:
    def test_golden(self):
        qs = [q for _, q in dio.continued_fraction_convergents(0.6180339887, 8)]
        assert qs[:7] == [1, 1, 2, 3, 5, 8, 13]

    def test_third(self):
        assert dio.continued_fraction_convergents(1 / 3)[-1] == (1, 3)

    def test_half(self):
        assert dio.continued_fraction_convergents(0.5)[-1] == (1, 2)


class TestLLL:
    def test_identity(self):
        assert dio.lll_reduce([[1, 0, 0], [0, 1, 0], [0, 0, 1]]) == [[1, 0, 0], [0, 1, 0], [0, 0, 1]]

    def test_skewed(self):
        red = dio.lll_reduce([[1, 10 ** 6], [0, 1]])
        assert dio.is_lll_reduced(red)
        # ||b1|| <= 2^{(n-1)/4} det^{1/n} with det = 1, n = 2
        assert sum(t * t for t in red[0]) <= np.sqrt(2)

    @given(st.integers(0, 2 ** 16), st.integers(2, 5))
    def test_transform_unimodular(self, seed, n):
        r = np.random.default_rng(seed)
        while True:
            b = r.integers(-50, 50, (n, n))
            if round(np.linalg.det(b)) != 0:
                break
        red, u = dio.lll_reduce(b.tolist(), return_transform=True)
        assert dio.is_lll_reduced(red)
        assert (np.array(u, dtype=object).dot(np.array(b.tolist(), dtype=object)) == np.array(red, dtype=object)).all()
        assert abs(round(np.linalg.det(np.array(u, dtype=float)))) == 1

    def test_dependent_rows(self):
        with pytest.raises(RejectedInputError):
            dio.lll_reduce([[1, 2], [2, 4]])

    def test_big_integers_do_not_overflow(self):
        red = dio.lll_reduce([[1, 2 ** 200], [0, 2 ** 100]])
        assert dio.is_lll_reduced(red)


class TestSimultaneousLLL:
    def test_rational(self):
        sol = dio.simultaneous_return_lll(dio.AngleSystem((1 / 3, 1 / 4), 0.01))
        assert sol.n == 12 and sol.method == "lll" and not sol.fallback

    def test_golden_is_cf_denominator(self):
        sol = dio.simultaneous_return_lll(dio.AngleSystem((GOLDEN,), 1e-4))
        assert dio.validate(dio.AngleSystem((GOLDEN,), 1e-4), sol)
        assert sol.n in FIB

    def test_too_many_angles(self):
        with pytest.raises(RejectedInputError):
            dio.simultaneous_return_lll(dio.AngleSystem(tuple([0.1] * 9), 0.1))

    def test_no_fallback_raises(self):
        # irrational-looking angles at a resolution LLL cannot reach with tiny M
        s = dio.AngleSystem((GOLDEN, np.sqrt(2) % 1, np.pi % 1), 0.01)
        with pytest.raises(dio.BudgetExhausted):
            dio.simultaneous_return_lll(s, scale_m=2, retries=0, fallback=False)

    def test_fallback_recorded(self):
        s = dio.AngleSystem((GOLDEN, np.sqrt(2) % 1, np.pi % 1), 0.01)
        sol = dio.simultaneous_return_lll(s, scale_m=2, retries=0)
        assert dio.validate(s, sol) and sol.fallback

    @pytest.mark.parametrize("thetas", [c for k in (1, 2, 3) for c in itertools.combinations([1 / 3, 0.25, GOLDEN, 0.1234], k)])
    def test_validates(self, thetas):
        s = dio.AngleSystem(thetas, 0.01)
        assert dio.validate(s, dio.simultaneous_return_lll(s))
