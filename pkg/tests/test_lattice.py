import itertools
import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from snflat.errors import BudgetError, RankDeficientError
from snflat.lattice import (
    CubeLattice,
    check_full_rank,
    cvp_bruteforce,
    dual_basis,
    enumerate_ball,
    in_parallelotope,
    membership,
    mod_centered,
    mod_cube,
    mod_parallelotope,
    parallelotope_points,
    successive_minima_bruteforce,
    svp_bruteforce,
)
from snflat.linalg import Matrix, det_exact, norm_sq

from conftest import random_full_rank

B73 = Matrix.from_columns([(7, 0), (3, 1)])


def points_in_box(B: Matrix, radius: int):
    n = B.rows
    for z in itertools.product(range(-radius, radius + 1), repeat=n):
        yield B @ list(z)


class TestMembership:
    def test_examples(self):
        assert membership(B73, [7, 7]) == (True, [-2, 7])
        assert membership(B73, [0, 0]) == (True, [0, 0])
        assert membership(B73, [1, 0])[0] is False

    def test_round_trip(self):
        rng = random.Random(1)
        for _ in range(50):
            B = random_full_rank(rng, 3)
            z = [rng.randint(-50, 50) for _ in range(3)]
            ok, coeffs = membership(B, B @ z)
            assert ok and coeffs == z

    def test_rational_vector(self):
        assert membership(Matrix.identity(2), [Fraction(1, 2), 0])[0] is False


class TestDual:
    def test_identity(self):
        assert dual_basis(Matrix.identity(3)) == Matrix.identity(3)

    def test_snf_example(self):
        S = Matrix([[7, 3], [0, 1]])
        assert dual_basis(S) == Matrix([[Fraction(1, 7), 0], [Fraction(-3, 7), 1]])

    def test_det_and_involution(self):
        rng = random.Random(2)
        for _ in range(20):
            B = random_full_rank(rng, 3)
            D = dual_basis(B)
            assert det_exact(B) * det_exact(D) == 1
            assert dual_basis(D) == B

    def test_singular(self):
        with pytest.raises(RankDeficientError):
            check_full_rank(Matrix([[1, 2], [2, 4]]))


class TestMinima:
    def test_z2(self):
        assert successive_minima_bruteforce(Matrix.identity(2)).squared == [1, 1]

    def test_orthogonal(self):
        assert successive_minima_bruteforce(Matrix([[2, 0], [0, 3]])).squared == [4, 9]

    def test_example_73(self):
        sm = successive_minima_bruteforce(B73, radius=8)
        # (7,0) - 2 (3,1) = (1,-2) is shorter than (3,1).
        assert sm.squared[0] == 5
        # Oracle: scan a coefficient box wide enough to contain the ball of radius 8.
        pts = [p for p in points_in_box(B73, 12) if 0 < norm_sq(p) <= 64]
        pts.sort(key=norm_sq)
        first = pts[0]
        second = next(p for p in pts if p[0] * first[1] - p[1] * first[0] != 0)
        assert sm.squared == [norm_sq(first), norm_sq(second)]

    def test_cap(self):
        with pytest.raises(BudgetError):
            svp_bruteforce(Matrix.identity(6))

    def test_svp_against_box(self):
        rng = random.Random(3)
        for _ in range(20):
            B = random_full_rank(rng, 2, 10)
            _, d2 = svp_bruteforce(B)
            box = min(norm_sq(p) for p in points_in_box(B, 25) if any(p))
            assert d2 == box


class TestCvp:
    def test_z2(self):
        point, d2 = cvp_bruteforce(Matrix.identity(2), [Fraction(2, 5), Fraction(3, 5)])
        assert point == [0, 1] and d2 == Fraction(8, 25)

    def test_member(self):
        _, d2 = cvp_bruteforce(B73, [10, 1])
        assert d2 == 0

    def test_example_73(self):
        point, d2 = cvp_bruteforce(B73, [1, 0])
        assert point == [0, 0] and d2 == 1

    def test_optimality_certificate(self):
        rng = random.Random(4)
        for _ in range(20):
            B = random_full_rank(rng, 2, 8)
            v = [Fraction(rng.randint(-100, 100), 7) for _ in range(2)]
            _, d2 = cvp_bruteforce(B, v)
            for p in points_in_box(B, 30):
                assert d2 <= norm_sq([a - b for a, b in zip(p, v)])


class TestParallelotope:
    def test_z2(self):
        assert parallelotope_points(Matrix.identity(2)) == [[0, 0]]

    def test_snf_count(self):
        pts = parallelotope_points(Matrix([[7, 3], [0, 1]]))
        assert len(pts) == 7
        assert all(in_parallelotope(Matrix([[7, 3], [0, 1]]), p) for p in pts)

    def test_scaled_dual_count(self):
        # N L* for the SNF matrix with N = 7, b = 3.
        ND = dual_basis(Matrix([[7, 3], [0, 1]])).scale(7)
        assert len(parallelotope_points(ND)) == 7

    def test_count_equals_det(self):
        rng = random.Random(5)
        for _ in range(20):
            B = random_full_rank(rng, 3, 5)
            if abs(det_exact(B)) > 500:
                continue
            pts = parallelotope_points(B)
            assert len(pts) == abs(det_exact(B))
            assert len({tuple(p) for p in pts}) == len(pts)

    def test_cap(self):
        with pytest.raises(BudgetError):
            parallelotope_points(Matrix.diagonal([200, 200]))


class TestReductions:
    def test_mod_cube(self):
        assert mod_cube([-1, 8], 7) == [6, 1]

    def test_mod_centered(self):
        assert mod_centered([0, 3, 4, 6, -4], 7) == [0, 3, -3, -1, 3]
        assert mod_centered([5], 10) == [-5]

    def test_mod_parallelotope_examples(self):
        assert mod_parallelotope(Matrix.identity(2), [Fraction(5, 2), Fraction(1, 2)]) == [Fraction(1, 2)] * 2
        assert mod_parallelotope(B73, [10, 1]) == [0, 0]

    @given(st.lists(st.fractions(-50, 50, max_denominator=9), min_size=2, max_size=2))
    @settings(max_examples=100)
    def test_mod_parallelotope_contract(self, x):
        r = mod_parallelotope(B73, x)
        assert in_parallelotope(B73, r)
        assert membership(B73, [a - b for a, b in zip(x, r)])[0]


class TestCubeLattice:
    def test_closed_and_sized(self):
        L = CubeLattice(Matrix([[7, 3], [0, 1]]), 7)
        elems = L.elements()
        assert len(elems) == 7
        assert (0, 0) in elems
        s = set(elems)
        assert all(tuple((a + b) % 7 for a, b in zip(p, q)) in s for p in elems for q in elems)
        assert all(L.contains(p) for p in elems)

    def test_needs_det_dividing_n(self):
        with pytest.raises(ValueError):
            CubeLattice(Matrix([[7, 3], [0, 1]]), 5)


def test_enumerate_ball_matches_box():
    rng = random.Random(6)
    for _ in range(10):
        B = random_full_rank(rng, 3, 6)
        center = [Fraction(rng.randint(-20, 20), 3) for _ in range(3)]
        r2 = 60
        got = sorted(tuple(p) for _, p, _ in enumerate_ball(B, center, r2))
        # Coefficients of points in the ball are bounded row-wise by |B^-1| (|c| + r).
        inv = B.inverse()
        reach = math.sqrt(float(norm_sq(center))) + math.sqrt(r2)
        bounds = [math.ceil(math.sqrt(float(norm_sq(inv.row(i)))) * reach) for i in range(3)]
        cols = B.columns()
        want = []
        for z in itertools.product(*(range(-b, b + 1) for b in bounds)):
            p = tuple(sum(z[j] * cols[j][i] for j in range(3)) for i in range(3))
            if norm_sq([a - b for a, b in zip(p, center)]) <= r2:
                want.append(p)
        assert got == sorted(want)
