import itertools
import random
from collections import Counter
from fractions import Fraction

import pytest
from scipy.stats import chisquare

from snflat.errors import (
    CompositeModulusError,
    ContractViolationError,
    DualGuardError,
    NotInLatticeError,
    SnfShapeError,
)
from snflat.lattice import CubeLattice, dual_basis, membership, parallelotope_points
from snflat.linalg import Matrix, det_exact, is_unimodular, lll, qr
from snflat.snf import (
    SnfBasis,
    backmap,
    backmap_coefficients,
    dual_point,
    dual_points,
    exact_upper_triangular,
    phi3,
    reduce_to_snf,
    sample_dual_uniform,
    sample_ln_uniform,
    scaled_dual_matrix,
    validate_snf,
)

from conftest import random_full_rank

S7 = SnfBasis(7, (3,))


class TestValidate:
    def test_accepts(self):
        assert validate_snf(Matrix([[7, 3], [0, 1]])) == S7

    def test_composite(self):
        with pytest.raises(CompositeModulusError):
            validate_snf(Matrix([[6, 3], [0, 1]]))

    def test_shape(self):
        with pytest.raises(SnfShapeError):
            validate_snf(Matrix([[7, 3], [1, 1]]))
        with pytest.raises(SnfShapeError):
            validate_snf(Matrix([[7, 9], [0, 1]]))

    def test_errors_are_distinct(self):
        assert not issubclass(CompositeModulusError, SnfShapeError)

    def test_matrix_round_trip(self):
        S = SnfBasis(31, (4, 0, 30))
        assert validate_snf(S.matrix()) == S


class TestScaledDual:
    def test_example(self):
        assert scaled_dual_matrix(S7) == Matrix([[1, 0], [-3, 7]])

    def test_equals_exact_inverse_transpose(self):
        rng = random.Random(1)
        for _ in range(10):
            S = SnfBasis(31, tuple(rng.randrange(31) for _ in range(3)))
            assert scaled_dual_matrix(S) == dual_basis(S.matrix()).scale(31)
            assert det_exact(scaled_dual_matrix(S)) == 31 ** 3

    def test_orthogonal_mod_n(self):
        S = SnfBasis(31, (5, 17))
        D = scaled_dual_matrix(S)
        for y in D.columns():
            for v in S.matrix().columns():
                assert sum(a * b for a, b in zip(y, v)) % 31 == 0


class TestPhi3:
    def test_example(self):
        d = phi3(S7, [2, 1])
        assert d.a == 5 and d.y == (5, 6)
        assert S7.contains([2 + 5, 1 + 6])

    def test_zero(self):
        assert phi3(S7, [0, 0]) == dual_point(S7, 0)

    def test_uniqueness_full_enumeration(self):
        L = CubeLattice(S7.matrix(), 7)
        for x in itertools.product(range(7), repeat=2):
            hits = [a for a in range(7)
                    if L.contains([xi + yi for xi, yi in zip(x, dual_point(S7, a).y)])]
            assert hits == [phi3(S7, x).a]

    def test_guard(self):
        S = SnfBasis(101, (10,))
        assert S.guard_residue() == 0
        with pytest.raises(DualGuardError):
            phi3(S, [1, 1])


class TestSamplers:
    def test_ln_example(self):
        class Fixed(random.Random):
            def randrange(self, *args):
                return 2

        x = sample_ln_uniform(S7, Fixed())
        assert x == [6, 2]
        assert membership(S7.matrix(), x)[0]

    def test_dual_example(self):
        y = dual_point(S7, 1).y
        assert y == (1, 4)
        assert (y[0] * 3 + y[1] * 1) % 7 == 0

    def test_ln_congruence(self):
        rng = random.Random(2)
        S = SnfBasis(31, (4, 9, 30))
        for _ in range(500):
            assert S.contains(sample_ln_uniform(S, rng))

    def test_ln_chi_square(self):
        rng = random.Random(3)
        counts = Counter(tuple(sample_ln_uniform(S7, rng)) for _ in range(49 * 200))
        assert len(counts) == 7
        assert chisquare(list(counts.values())).pvalue > 0.01

    def test_dual_chi_square(self):
        rng = random.Random(4)
        counts = Counter(sample_dual_uniform(S7, rng).a for _ in range(7 * 300))
        assert len(counts) == 7
        assert chisquare(list(counts.values())).pvalue > 0.01


def test_ln_equals_parity_set():
    S = SnfBasis(7, (3,))
    L = set(CubeLattice(S.matrix(), 7).elements())
    parity = {x for x in itertools.product(range(7), repeat=2) if S.contains(x)}
    assert L == parity


def test_parallelotope_bijection():
    for N, b in ((7, (3,)), (31, (4,)), (31, (2, 5))):
        S = SnfBasis(N, b)
        pts = parallelotope_points(S.matrix())
        assert len(pts) == N
        images = {phi3(S, [x % N for x in p]).y for p in pts}
        assert images == {d.y for d in dual_points(S)}


def reduced_r(B):
    B_lll, _ = lll(B)
    return qr(B_lll).R


class TestReduceToSnf:
    def test_example(self):
        R = Matrix([[2, 1], [0, 3]])
        red = reduce_to_snf(R, 1, 2)
        assert validate_snf(red.B_snf) == red.snf
        assert red.basis @ red.transform == red.B_snf
        assert is_unimodular(red.transform)
        assert red.N == abs(det_exact(red.basis))

    def test_truncation_and_elimination(self):
        rng = random.Random(5)
        for n in (2, 3, 4):
            R = exact_upper_triangular(reduced_r(random_full_rank(rng, n)))
            red = reduce_to_snf(R)
            T = red.T
            for i in range(n):
                for j in range(n):
                    assert abs(Fraction(red.truncated[i, j], T) - R[i, j]) <= Fraction(1, T)
            assert red.eliminated == red.truncated @ red.M
            M = red.M
            assert M.is_upper_triangular() and all(M[i, i] == 1 for i in range(n))
            assert det_exact(M) == 1

    def test_rejects_bad_input(self):
        with pytest.raises(SnfShapeError):
            reduce_to_snf(Matrix([[1, 0], [1, 1]]))
        with pytest.raises(SnfShapeError):
            reduce_to_snf(Matrix([[0, 1], [0, 1]]))

    def test_guard_holds(self):
        rng = random.Random(6)
        for _ in range(20):
            red = reduce_to_snf(reduced_r(random_full_rank(rng, 3)))
            assert red.snf.guard_residue() != 0

    def test_one_dimensional(self):
        red = reduce_to_snf(Matrix([[5]]))
        assert red.n == 1 and validate_snf(red.B_snf) == red.snf
        assert backmap(red, [red.N], check_norm=False) == [5]


class TestBackmap:
    def test_zero(self):
        red = reduce_to_snf(Matrix([[2, 1], [0, 3]]))
        assert backmap(red, [0, 0]) == [0, 0]

    def test_columns(self):
        rng = random.Random(7)
        for n in (2, 3):
            R = exact_upper_triangular(reduced_r(random_full_rank(rng, n)))
            red = reduce_to_snf(R)
            for j in range(n):
                v = backmap(red, red.basis.col(j), check_norm=False)
                assert v == R.col(j)
                err = max(abs(a - Fraction(b, red.T)) for a, b in zip(v, red.basis.col(j)))
                # The last column also carries the prime-rounding offset.
                slack = red.prime_offset if j == n - 1 else 0
                assert err <= Fraction(n + slack, red.T)

    def test_random_points(self):
        rng = random.Random(8)
        for n in (2, 3, 4):
            R = exact_upper_triangular(reduced_r(random_full_rank(rng, n)))
            red = reduce_to_snf(R)
            S = red.snf
            for _ in range(30):
                x0 = [rng.randint(-3 * S.N, 3 * S.N) for _ in range(n)]
                x0[0] = sum(b * x for b, x in zip(S.b, x0[1:])) + S.N * rng.randint(-3, 3)
                v = backmap(red, x0, check_norm=False)
                assert membership(R, v)[0]
                coeffs = backmap_coefficients(red, x0)
                assert red.basis @ coeffs == x0

    def test_not_in_lattice(self):
        red = reduce_to_snf(Matrix([[2, 1], [0, 3]]))
        with pytest.raises(NotInLatticeError):
            backmap(red, [1, 0])

    def test_norm_precondition(self):
        red = reduce_to_snf(Matrix([[2, 1], [0, 3]]))
        far = red.N * 10 ** 6
        with pytest.raises(ContractViolationError):
            backmap(red, [far, 0])
