"""Systematic normal form: the basis type, its dual-point map and the reduction.

An SNF basis has a prime ``N`` in the top-left corner, free entries
``b_2..b_n`` in the rest of the first row, ones on the remaining diagonal and
zeros elsewhere. Its lattice is

    L = {h in Z^n : h_1 = sum_{j>=2} b_j h_j  (mod N)},

so membership, sampling and duality all reduce to arithmetic modulo ``N``.

:func:`reduce_to_snf` turns an upper-triangular basis ``R`` into an SNF basis
of a lattice close to ``T * L(R)``. Everything after the initial rounding
to multiples of ``1/T`` is integral, and the composed transform is kept so
that :func:`backmap` is exact.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import mpmath

from .errors import (
    CompositeModulusError,
    ContractViolationError,
    DualGuardError,
    NotInLatticeError,
    SnfShapeError,
)
from .linalg import Matrix, Number, as_matrix, inverse_exact, mod_inverse, norm_sq
from .primes import is_prime, next_prime_from

DEFAULT_ACCURACY = (1, 2)
MAX_T_DOUBLINGS = 200


@dataclass(frozen=True)
class SnfBasis:
    """Compact SNF: the prime modulus and the first-row entries ``b_2..b_n``."""

    N: int
    b: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "b", tuple(int(x) for x in self.b))

    @property
    def n(self) -> int:
        return len(self.b) + 1

    def matrix(self) -> Matrix:
        n = self.n
        rows = [[0] * n for _ in range(n)]
        rows[0][0] = self.N
        for j, bj in enumerate(self.b, start=1):
            rows[0][j] = bj
            rows[j][j] = 1
        return Matrix(rows)

    def parity_vector(self) -> tuple[int, ...]:
        """``g`` with ``L = {h : <g, h> = 0 mod N}``."""
        return (1,) + tuple(-x for x in self.b)

    def contains(self, v: Sequence[int]) -> bool:
        if len(v) != self.n:
            raise ValueError(f"vector of length {len(v)} for dimension {self.n}")
        return sum(g * x for g, x in zip(self.parity_vector(), v)) % self.N == 0

    def guard_residue(self) -> int:
        """``1 + sum(b_j^2) mod N``; the dual map needs it nonzero."""
        return (1 + sum(x * x for x in self.b)) % self.N


@dataclass(frozen=True)
class DualPoint:
    a: int
    y: tuple[int, ...]


def validate_snf(B) -> SnfBasis:
    """Check SNF shape and primality of the corner entry; return the compact form."""
    B = as_matrix(B)
    if not B.is_square:
        raise SnfShapeError("SNF basis must be square")
    if not B.is_integral():
        raise SnfShapeError("SNF basis must be integral")
    n = B.rows
    N = B[0, 0]
    for i in range(1, n):
        for j in range(n):
            want = 1 if i == j else 0
            if B[i, j] != want:
                raise SnfShapeError(f"entry ({i},{j}) is {B[i, j]}, expected {want}")
    if N < 2:
        raise SnfShapeError(f"corner entry {N} must be at least 2")
    b = B.row(0)[1:]
    for j, x in enumerate(b, start=1):
        if not 0 <= x < N:
            raise SnfShapeError(f"first-row entry ({0},{j}) = {x} not in [0, {N})")
    if not is_prime(N):
        raise CompositeModulusError(f"corner entry {N} is not prime")
    return SnfBasis(N, tuple(b))


def scaled_dual_matrix(S: SnfBasis) -> Matrix:
    """Exact ``N * B^{-T}``; its columns generate ``N L*``."""
    n = S.n
    rows = [[0] * n for _ in range(n)]
    rows[0][0] = 1
    for j, bj in enumerate(S.b, start=1):
        rows[j][0] = -bj
        rows[j][j] = S.N
    return Matrix(rows)


def dual_point(S: SnfBasis, a: int) -> DualPoint:
    a %= S.N
    return DualPoint(a, (a,) + tuple((-bj * a) % S.N for bj in S.b))


def dual_points(S: SnfBasis) -> list[DualPoint]:
    """All ``N`` elements of ``(N L*)_N``."""
    return [dual_point(S, a) for a in range(S.N)]


def phi3(S: SnfBasis, x: Sequence[int]) -> DualPoint:
    """The unique dual point ``y`` with ``x + y`` in ``L_N``."""
    if len(x) != S.n:
        raise ValueError(f"vector of length {len(x)} for dimension {S.n}")
    guard = S.guard_residue()
    if guard == 0:
        raise DualGuardError(f"1 + sum(b^2) vanishes modulo {S.N}")
    syndrome = x[0] - sum(xj * bj for xj, bj in zip(x[1:], S.b))
    return dual_point(S, -syndrome * mod_inverse(guard, S.N))


def sample_ln_uniform(S: SnfBasis, rng: random.Random) -> list[int]:
    """Uniform element of ``L_N``: free tail, first coordinate forced."""
    tail = [rng.randrange(S.N) for _ in S.b]
    return [sum(bj * xj for bj, xj in zip(S.b, tail)) % S.N] + tail


def sample_dual_uniform(S: SnfBasis, rng: random.Random) -> DualPoint:
    return dual_point(S, rng.randrange(S.N))


# ---------------------------------------------------------------------------
# reduction of an upper-triangular basis to SNF
# ---------------------------------------------------------------------------

def _mpf_to_fraction(x) -> Fraction:
    man, exp = mpmath.mpf(x).man_exp
    return Fraction(int(man)) * Fraction(2) ** int(exp)


def exact_upper_triangular(R) -> Matrix:
    """Exact rational copy of ``R`` (a :class:`Matrix`, nested lists or an mpmath matrix)."""
    if not isinstance(R, (Matrix, list, tuple)) and hasattr(R, "cols"):
        R = Matrix([[_mpf_to_fraction(R[i, j]) for j in range(R.cols)] for i in range(R.rows)])
    R = as_matrix(R)
    if not R.is_square:
        raise SnfShapeError("R must be square")
    if not R.is_upper_triangular():
        raise SnfShapeError("R must be upper triangular")
    if any(R[i, i] == 0 for i in range(R.rows)):
        raise SnfShapeError("R has a zero diagonal entry")
    return R


def _round_half_up(x: Fraction) -> int:
    return math.floor(x + Fraction(1, 2))


def _frob_sq(A: Matrix) -> Number:
    return sum(x * x for x in A.entries())


def initial_scale(R: Matrix) -> int:
    """Starting ``T``: ``2^n n^2 max(ceil(det / l), 1)``.

    ``l = |r_1| / 2^((n-1)/2)`` lower-bounds the first minimum when the
    first column comes from an LLL-reduced basis.
    """
    n = R.rows
    det = abs(math.prod(R[i, i] for i in range(n)))
    first = math.sqrt(norm_sq(R.col(0)))
    ell = first / 2 ** ((n - 1) / 2)
    return 2 ** n * n * n * max(math.ceil(float(det) / ell), 1)


@dataclass(frozen=True)
class _Construction:
    T: int
    truncated: Matrix      # T * B_2, before prime rounding
    basis: Matrix          # T * B_2 after adding the prime offset
    eliminated: Matrix     # T * B_3 = truncated @ M
    M: Matrix
    perm: tuple[int, ...]
    sign: int
    raw_modulus: int
    prime_offset: int
    transform: Matrix      # W with basis @ W = SNF matrix
    snf: SnfBasis


def _construct(R: Matrix, T: int, max_gap: int | None) -> _Construction:
    n = R.rows
    # T * B_2: round to multiples of 1/T and put 1/T on the subdiagonal.
    A2 = [[0] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            A2[i][j] = _round_half_up(T * R[i, j])
        if i + 1 < n:
            A2[i + 1][i] = 1
    truncated = Matrix(A2)

    # Column elimination: clear rows 1..n-1 above the subdiagonal.
    A3 = [row[:] for row in A2]
    M = [[int(i == j) for j in range(n)] for i in range(n)]
    for i in range(1, n):
        for j in range(i, n):
            k = A3[i][j]
            if k:
                for r in range(n):
                    A3[r][j] -= k * A3[r][i - 1]
                    M[r][j] -= k * M[r][i - 1]
    eliminated = Matrix(A3)
    M = Matrix(M)

    w = A3[0][n - 1]
    sign = 1 if w > 0 else -1
    raw = abs(w)
    start = max(raw, 2)
    N, offset = next_prime_from(start, max_gap)
    offset += start - raw
    perm = (n - 1,) + tuple(range(n - 1))

    while True:
        b = tuple(A3[0][j] % N for j in range(n - 1))
        if (1 + sum(x * x for x in b)) % N:
            break
        N, _ = next_prime_from(N + 1, max_gap)
        offset = N - raw

    basis_rows = [row[:] for row in A2]
    basis_rows[0][n - 1] += sign * offset
    basis = Matrix(basis_rows)

    P = Matrix([[int(perm[j] == i) for j in range(n)] for i in range(n)])
    D = Matrix.diagonal([sign] + [1] * (n - 1))
    # After P and D the first row reads (N, A3[0][0], ..., A3[0][n-2]).
    K = [[int(i == j) for j in range(n)] for i in range(n)]
    for j in range(1, n):
        K[0][j] = -(A3[0][j - 1] // N)
    W = M @ P @ D @ Matrix(K)
    snf = SnfBasis(N, b)
    if basis @ W != snf.matrix():
        raise AssertionError("SNF construction lost exactness")
    return _Construction(T, truncated, basis, eliminated, M, perm, sign, raw, offset, W, snf)


def _certified(R: Matrix, c: _Construction, a: int, b: int) -> bool:
    """``|R - B_2'|_F |B_2'^{-1}|_F det(R) n^a <= n^-b``, decided exactly."""
    n = R.rows
    T = c.T
    diff = R - c.basis.scale(Fraction(1, T))
    inv = inverse_exact(c.basis).scale(T)
    det = math.prod(R[i, i] for i in range(n))
    lhs = _frob_sq(diff) * _frob_sq(inv) * det * det * Fraction(n) ** (2 * a)
    return lhs <= Fraction(1, n ** (2 * b))


@dataclass(frozen=True)
class SnfReduction:
    """An SNF basis of ``L(basis)``, with ``basis / T`` close to ``R``.

    ``transform`` is the unimodular ``W = M P D K`` with
    ``basis @ W == snf.matrix()``: ``M`` is the column elimination, ``P``
    the cyclic column move recorded in ``perm``, ``D`` the sign fix and
    ``K`` the reduction of the first row modulo ``N``.
    """

    snf: SnfBasis
    M: Matrix
    T: int
    perm: tuple[int, ...]
    R: Matrix
    params: tuple[int, int]
    basis: Matrix
    transform: Matrix
    sign: int = 1
    raw_modulus: int = 0
    prime_offset: int = 0
    truncated: Matrix | None = field(default=None, compare=False)
    eliminated: Matrix | None = field(default=None, compare=False)

    @property
    def N(self) -> int:
        return self.snf.N

    @property
    def n(self) -> int:
        return self.snf.n

    @property
    def B_snf(self) -> Matrix:
        return self.snf.matrix()

    def det_R(self) -> Number:
        return abs(math.prod(self.R[i, i] for i in range(self.n)))


def reduce_to_snf(
    R,
    a: int = DEFAULT_ACCURACY[0],
    b: int = DEFAULT_ACCURACY[1],
    T: int | None = None,
    max_gap: int | None = None,
) -> SnfReduction:
    """Reduce an upper-triangular basis to SNF.

    Args:
        R: upper-triangular basis with nonzero diagonal, exact or mpmath.
        a, b: accuracy exponents for the back-map guarantee
            ``|v_hat - x0/T| <= n^-b`` whenever ``|x0/T| <= det(R) n^a``.
        T: fixed scale. By default it starts at :func:`initial_scale` and
            doubles until the guarantee is certified exactly.
        max_gap: cap on the prime search offset (default ``64 * bitlength``).

    Returns:
        SnfReduction whose ``basis @ transform`` equals the SNF matrix.
    """
    R = exact_upper_triangular(R)
    if T is not None:
        if T < 1:
            raise ValueError("T must be positive")
        c = _construct(R, T, max_gap)
    else:
        scale = initial_scale(R)
        for _ in range(MAX_T_DOUBLINGS):
            c = _construct(R, scale, max_gap)
            if _certified(R, c, a, b):
                break
            scale *= 2
        else:
            raise ContractViolationError("could not certify the back-map bound")
    red = SnfReduction(
        snf=c.snf, M=c.M, T=c.T, perm=c.perm, R=R, params=(a, b), basis=c.basis,
        transform=c.transform, sign=c.sign, raw_modulus=c.raw_modulus,
        prime_offset=c.prime_offset, truncated=c.truncated, eliminated=c.eliminated,
    )
    for j in range(red.n):
        probe = red.basis.col(j)
        if backmap(red, probe, check_norm=False) != R.col(j):
            raise AssertionError("back-map probe failed")
    return red


def backmap_coefficients(red: SnfReduction, x0: Sequence[int]) -> list[int]:
    """Integer ``c`` with ``basis @ c == x0``; the same ``c`` indexes ``L(R)``."""
    S = red.snf
    if len(x0) != S.n:
        raise ValueError(f"vector of length {len(x0)} for dimension {S.n}")
    x0 = [int(x) for x in x0]
    top = x0[0] - sum(bj * xj for bj, xj in zip(S.b, x0[1:]))
    if top % S.N:
        raise NotInLatticeError("x0 is not in the SNF lattice")
    z = [top // S.N] + x0[1:]
    return red.transform @ z


def backmap(red: SnfReduction, x0: Sequence[int], check_norm: bool = True) -> list[Number]:
    """Map ``x0`` in ``L(B_snf)`` to the matching point of ``L(R)``.

    With ``check_norm`` the precondition ``|x0 / T| <= det(R) n^a`` is
    enforced; outside it the distance guarantee does not apply.
    """
    n = red.n
    if check_norm:
        lhs = Fraction(norm_sq(x0), red.T ** 2)
        rhs = red.det_R() ** 2 * Fraction(n) ** (2 * red.params[0])
        if lhs > rhs:
            raise ContractViolationError("|x0/T| exceeds det(R) * n^a")
    coeffs = backmap_coefficients(red, x0)
    return red.R @ coeffs

