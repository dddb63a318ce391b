"""Exact integer/rational matrices and the classical subroutines built on them.

Lattice vectors are integer combinations of the *columns* of a basis matrix.
Entries are Python ``int`` or :class:`fractions.Fraction`; nothing here rounds,
except :func:`qr`, which works in software floating point at a caller-chosen
precision.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import gcd
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Sequence

import mpmath

from .errors import NoInverseError, PrecisionError, RankDeficientError

Number = int | Fraction


def _normalize(x) -> Number:
    if isinstance(x, bool):
        raise TypeError("booleans are not matrix entries")
    if isinstance(x, int):
        return x
    if isinstance(x, Fraction):
        return x.numerator if x.denominator == 1 else x
    if isinstance(x, Rational):
        return _normalize(Fraction(x.numerator, x.denominator))
    if isinstance(x, float):
        return _normalize(Fraction(x))
    if isinstance(x, str):
        return _normalize(Fraction(x))
    raise TypeError(f"unsupported matrix entry {x!r}")


class Matrix:
    """Immutable dense matrix of exact rationals (ints where integral)."""

    __slots__ = ("rows", "cols", "_data")

    def __init__(self, rows: Iterable[Iterable]):
        data = tuple(tuple(_normalize(x) for x in row) for row in rows)
        if not data:
            raise ValueError("matrix needs at least one row")
        width = len(data[0])
        if width == 0 or any(len(r) != width for r in data):
            raise ValueError("ragged or empty matrix rows")
        self.rows = len(data)
        self.cols = width
        self._data = data

    @classmethod
    def from_columns(cls, columns: Iterable[Sequence]) -> "Matrix":
        columns = [list(c) for c in columns]
        return cls(zip(*columns))

    @classmethod
    def identity(cls, n: int) -> "Matrix":
        return cls([[int(i == j) for j in range(n)] for i in range(n)])

    @classmethod
    def diagonal(cls, entries: Sequence) -> "Matrix":
        n = len(entries)
        return cls([[entries[i] if i == j else 0 for j in range(n)] for i in range(n)])

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows, self.cols

    @property
    def is_square(self) -> bool:
        return self.rows == self.cols

    def __getitem__(self, ij):
        i, j = ij
        return self._data[i][j]

    def row(self, i: int) -> list:
        return list(self._data[i])

    def col(self, j: int) -> list:
        return [r[j] for r in self._data]

    def columns(self) -> list[list]:
        return [self.col(j) for j in range(self.cols)]

    def tolist(self) -> list[list]:
        return [list(r) for r in self._data]

    def entries(self) -> Iterable[Number]:
        for r in self._data:
            yield from r

    @property
    def T(self) -> "Matrix":
        return Matrix(zip(*self._data))

    def is_integral(self) -> bool:
        return all(isinstance(x, int) for x in self.entries())

    def is_upper_triangular(self) -> bool:
        return all(self._data[i][j] == 0 for i in range(self.rows) for j in range(min(i, self.cols)))

    def max_abs(self) -> Number:
        return max(abs(x) for x in self.entries())

    def __eq__(self, other) -> bool:
        return isinstance(other, Matrix) and self._data == other._data

    def __hash__(self) -> int:
        return hash(self._data)

    def __repr__(self) -> str:
        return f"Matrix({self.tolist()!r})"

    def __add__(self, other: "Matrix") -> "Matrix":
        _same_shape(self, other)
        return Matrix([[a + b for a, b in zip(r, s)] for r, s in zip(self._data, other._data)])

    def __sub__(self, other: "Matrix") -> "Matrix":
        _same_shape(self, other)
        return Matrix([[a - b for a, b in zip(r, s)] for r, s in zip(self._data, other._data)])

    def __neg__(self) -> "Matrix":
        return Matrix([[-a for a in r] for r in self._data])

    def scale(self, k) -> "Matrix":
        k = _normalize(k)
        return Matrix([[k * a for a in r] for r in self._data])

    def __matmul__(self, other):
        if isinstance(other, Matrix):
            if self.cols != other.rows:
                raise ValueError(f"shape mismatch {self.shape} @ {other.shape}")
            ocols = list(zip(*other._data))
            return Matrix([[sum(a * b for a, b in zip(r, c)) for c in ocols] for r in self._data])
        vec = list(other)
        if len(vec) != self.cols:
            raise ValueError(f"vector of length {len(vec)} for {self.shape} matrix")
        return [_normalize(sum(a * b for a, b in zip(r, vec))) for r in self._data]

    def det(self) -> Number:
        return det_exact(self)

    def inverse(self) -> "Matrix":
        return inverse_exact(self)


def _same_shape(a: Matrix, b: Matrix) -> None:
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")


def as_matrix(m) -> Matrix:
    return m if isinstance(m, Matrix) else Matrix(m)


def dot(u: Sequence, v: Sequence):
    return sum(a * b for a, b in zip(u, v))


def norm_sq(v: Sequence):
    return sum(a * a for a in v)


# ---------------------------------------------------------------------------
# determinants, solves, inverses
# ---------------------------------------------------------------------------

def det_exact(A) -> Number:
    """Determinant by fraction-free Bareiss elimination."""
    A = as_matrix(A)
    if not A.is_square:
        raise ValueError("determinant of a non-square matrix")
    n = A.rows
    if not A.is_integral():
        # clear denominators, then rescale
        den = 1
        for x in A.entries():
            if isinstance(x, Fraction):
                den = den * x.denominator // gcd(den, x.denominator)
        return Fraction(det_exact(A.scale(den)), den ** n)
    M = A.tolist()
    sign = 1
    prev = 1
    for k in range(n - 1):
        if M[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if M[i][k] != 0), None)
            if swap is None:
                return 0
            M[k], M[swap] = M[swap], M[k]
            sign = -sign
        pivot = M[k][k]
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                M[i][j] = (M[i][j] * pivot - M[i][k] * M[k][j]) // prev
        prev = pivot
    return sign * M[n - 1][n - 1]


def _eliminate(A: Matrix, rhs: list[list]) -> list[list]:
    """Gauss-Jordan over Fractions; returns the solved right-hand sides."""
    n = A.rows
    M = [[Fraction(x) for x in A.row(i)] + [Fraction(r[i]) for r in rhs] for i in range(n)]
    k = len(rhs)
    for c in range(n):
        p = next((i for i in range(c, n) if M[i][c] != 0), None)
        if p is None:
            raise RankDeficientError("matrix is singular")
        M[c], M[p] = M[p], M[c]
        inv = 1 / M[c][c]
        M[c] = [x * inv for x in M[c]]
        for i in range(n):
            if i != c and M[i][c] != 0:
                f = M[i][c]
                M[i] = [x - f * y for x, y in zip(M[i], M[c])]
    return [[_normalize(M[i][n + t]) for i in range(n)] for t in range(k)]


def solve_exact(A, b: Sequence) -> list[Number]:
    """Exact ``x`` with ``A x = b`` for nonsingular square ``A``."""
    A = as_matrix(A)
    if not A.is_square:
        raise ValueError("solve needs a square matrix")
    if len(b) != A.rows:
        raise ValueError("right-hand side length mismatch")
    return _eliminate(A, [list(b)])[0]


def inverse_exact(A) -> Matrix:
    A = as_matrix(A)
    if not A.is_square:
        raise ValueError("inverse of a non-square matrix")
    n = A.rows
    cols = _eliminate(A, [[int(i == j) for i in range(n)] for j in range(n)])
    return Matrix.from_columns(cols)


def rank_exact(vectors: Sequence[Sequence]) -> int:
    """Rank of a list of vectors (rows), by exact elimination."""
    M = [[Fraction(x) for x in v] for v in vectors]
    if not M:
        return 0
    rank = 0
    width = len(M[0])
    for c in range(width):
        p = next((i for i in range(rank, len(M)) if M[i][c] != 0), None)
        if p is None:
            continue
        M[rank], M[p] = M[p], M[rank]
        for i in range(rank + 1, len(M)):
            if M[i][c] != 0:
                f = M[i][c] / M[rank][c]
                M[i] = [x - f * y for x, y in zip(M[i], M[rank])]
        rank += 1
        if rank == len(M):
            break
    return rank


def is_unimodular(U) -> bool:
    U = as_matrix(U)
    return U.is_square and U.is_integral() and abs(det_exact(U)) == 1


# ---------------------------------------------------------------------------
# modular arithmetic and integer roots
# ---------------------------------------------------------------------------

def mod_inverse(a: int, N: int) -> int:
    """Inverse of ``a`` modulo prime ``N``, in ``[1, N-1]``."""
    if a % N == 0:
        raise NoInverseError(f"{a} has no inverse modulo {N}")
    return pow(a, -1, N)


def iroot(x: int, k: int) -> int:
    """Largest integer ``r`` with ``r**k <= x`` (``x >= 0``)."""
    if x < 0 or k < 1:
        raise ValueError("iroot needs x >= 0 and k >= 1")
    if x < 2 or k == 1:
        return x
    r = 1 << ((x.bit_length() + k - 1) // k)
    while True:
        s = ((k - 1) * r + x // r ** (k - 1)) // k
        if s >= r:
            break
        r = s
    while r ** k > x:
        r -= 1
    while (r + 1) ** k <= x:
        r += 1
    return r


def floor_rational_power(base: int, exponent: Fraction, scale: int = 1) -> int:
    """Exact ``floor(scale * base**exponent)`` for rational ``exponent >= 0``."""
    exponent = Fraction(exponent)
    if exponent < 0 or base < 0 or scale < 0:
        raise ValueError("non-negative arguments only")
    p, q = exponent.numerator, exponent.denominator
    return iroot(scale ** q * base ** p, q)


# ---------------------------------------------------------------------------
# Hermite normal form
# ---------------------------------------------------------------------------

def _xgcd(a: int, b: int) -> tuple[int, int, int]:
    x0, y0, x1, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    return a, x0, y0


def hnf(A) -> tuple[Matrix, Matrix]:
    """Column-style Hermite normal form.

    Returns ``(H, U)`` with ``H = A @ U``, ``U`` unimodular, ``H`` upper
    triangular and ``H[i,i] > H[i,j] >= 0`` for ``j > i``. Column operations
    keep the lattice spanned by the columns unchanged.
    """
    A = as_matrix(A)
    if not A.is_square or not A.is_integral():
        raise ValueError("hnf needs a square integer matrix")
    n = A.rows
    H = A.columns()
    U = Matrix.identity(n).columns()

    def combine(i, j, a, b, c, d):
        # (col_i, col_j) <- (a col_i + b col_j, c col_i + d col_j)
        for M in (H, U):
            ci, cj = M[i], M[j]
            M[i] = [a * x + b * y for x, y in zip(ci, cj)]
            M[j] = [c * x + d * y for x, y in zip(ci, cj)]

    for i in range(n - 1, -1, -1):
        for j in range(i - 1, -1, -1):
            x, y = H[i][i], H[j][i]
            if y == 0:
                continue
            g, s, t = _xgcd(x, y)
            # [s  -y/g; t  x/g] has determinant 1
            combine(i, j, s, t, -y // g, x // g)
        if H[i][i] == 0:
            raise RankDeficientError("hnf input is singular")
        if H[i][i] < 0:
            H[i] = [-x for x in H[i]]
            U[i] = [-x for x in U[i]]
        for j in range(i + 1, n):
            q = H[j][i] // H[i][i]
            if q:
                H[j] = [a - q * b for a, b in zip(H[j], H[i])]
                U[j] = [a - q * b for a, b in zip(U[j], U[i])]
    return Matrix.from_columns(H), Matrix.from_columns(U)


def is_hnf(H) -> bool:
    H = as_matrix(H)
    n = H.rows
    if not H.is_square or not H.is_upper_triangular():
        return False
    return all(H[i, i] > H[i, j] >= 0 for i in range(n) for j in range(i + 1, n)) and all(
        H[i, i] > 0 for i in range(n)
    )


# ---------------------------------------------------------------------------
# LLL
# ---------------------------------------------------------------------------

def lll(B, delta=Fraction(3, 4)) -> tuple[Matrix, Matrix]:
    """LLL-reduce the columns of ``B`` in exact integer arithmetic.

    Integral variant (Cohen, Alg. 2.6.7): Gram-Schmidt data is kept as the
    integers ``d_i`` and ``lambda_{ij} = d_{j+1} mu_{ij}``, so no fractions
    appear. Returns ``(B_red, U)`` with ``B_red = B @ U``.
    """
    B = as_matrix(B)
    if not B.is_integral():
        raise ValueError("lll needs an integer matrix")
    delta = Fraction(delta)
    if not Fraction(1, 4) < delta <= 1:
        raise ValueError("delta must lie in (1/4, 1]")
    dp, dq = delta.numerator, delta.denominator
    b = B.columns()
    n = len(b)
    H = Matrix.identity(n).columns()
    if n == 1:
        if norm_sq(b[0]) == 0:
            raise RankDeficientError("zero basis vector")
        return B, Matrix.identity(1)

    # d[0] = 1, d[i+1] = Gram determinant of the first i+1 vectors
    d = [1] + [0] * n
    lam = [[0] * n for _ in range(n)]

    def incremental_gs(k):
        for j in range(k + 1):
            u = dot(b[k], b[j])
            for i in range(j):
                u = (d[i + 1] * u - lam[k][i] * lam[j][i]) // d[i]
            if j < k:
                lam[k][j] = u
            else:
                if u == 0:
                    raise RankDeficientError("lll input columns are dependent")
                d[k + 1] = u

    def redi(k, l):
        if 2 * abs(lam[k][l]) > d[l + 1]:
            q = (2 * lam[k][l] + d[l + 1]) // (2 * d[l + 1])
            b[k] = [x - q * y for x, y in zip(b[k], b[l])]
            H[k] = [x - q * y for x, y in zip(H[k], H[l])]
            lam[k][l] -= q * d[l + 1]
            for i in range(l):
                lam[k][i] -= q * lam[l][i]

    def swapi(k, kmax):
        b[k], b[k - 1] = b[k - 1], b[k]
        H[k], H[k - 1] = H[k - 1], H[k]
        for j in range(k - 1):
            lam[k][j], lam[k - 1][j] = lam[k - 1][j], lam[k][j]
        lm = lam[k][k - 1]
        nb = (d[k - 1] * d[k + 1] + lm * lm) // d[k]
        for i in range(k + 1, kmax + 1):
            t = lam[i][k]
            lam[i][k] = (d[k + 1] * lam[i][k - 1] - lm * t) // d[k]
            lam[i][k - 1] = (nb * t + lm * lam[i][k]) // d[k + 1]
        d[k] = nb

    incremental_gs(0)
    k, kmax = 1, 0
    while k < n:
        if k > kmax:
            kmax = k
            incremental_gs(k)
        while True:
            redi(k, k - 1)
            # Lovasz: d_k d_{k-2} >= delta d_{k-1}^2 - lambda^2, shifted indices
            if dq * d[k + 1] * d[k - 1] < dp * d[k] * d[k] - dq * lam[k][k - 1] ** 2:
                swapi(k, kmax)
                k = max(1, k - 1)
            else:
                break
        for l in range(k - 2, -1, -1):
            redi(k, l)
        k += 1
    return Matrix.from_columns(b), Matrix.from_columns(H)


def gram_schmidt_exact(B) -> tuple[list[list[Fraction]], list[list[Fraction]]]:
    """Exact Gram-Schmidt of the columns: ``(b_star, mu)``."""
    cols = [[Fraction(x) for x in c] for c in as_matrix(B).columns()]
    star: list[list[Fraction]] = []
    mu = [[Fraction(0)] * len(cols) for _ in cols]
    for i, c in enumerate(cols):
        v = list(c)
        for j in range(i):
            mu[i][j] = dot(c, star[j]) / norm_sq(star[j])
            v = [x - mu[i][j] * y for x, y in zip(v, star[j])]
        mu[i][i] = Fraction(1)
        star.append(v)
    return star, mu


def is_lll_reduced(B, delta=Fraction(3, 4)) -> bool:
    star, mu = gram_schmidt_exact(B)
    n = len(star)
    delta = Fraction(delta)
    size = all(abs(mu[i][j]) <= Fraction(1, 2) for i in range(n) for j in range(i))
    lovasz = all(
        norm_sq(star[k]) >= (delta - mu[k][k - 1] ** 2) * norm_sq(star[k - 1]) for k in range(1, n)
    )
    return size and lovasz


# ---------------------------------------------------------------------------
# high-precision QR
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QrFactor:
    """``B = Q R`` in software floating point; ``R`` has a positive diagonal."""

    Q: "mpmath.matrix"
    R: "mpmath.matrix"
    precision_bits: int

    @property
    def n(self) -> int:
        return self.R.rows

    def context(self) -> mpmath.ctx_mp.MPContext:
        ctx = mpmath.MPContext()
        ctx.prec = self.precision_bits
        return ctx


def qr(B, precision_bits: int = 256) -> QrFactor:
    """Householder QR at ``precision_bits`` with residual certification.

    Raises :class:`PrecisionError` when a diagonal entry of ``R`` cannot be
    told apart from zero, or a residual exceeds ``2**(-precision_bits/2)``
    (relative to ``max|B|`` for the reconstruction).
    """
    B = as_matrix(B)
    if not B.is_square:
        raise ValueError("qr needs a square matrix")
    if precision_bits < 128:
        raise ValueError("precision_bits must be at least 128")
    if det_exact(B) == 0:
        raise RankDeficientError("qr input is singular")
    n = B.rows
    ctx = mpmath.MPContext()
    ctx.prec = precision_bits
    A = ctx.matrix([[ctx.mpf(x.numerator) / x.denominator if isinstance(x, Fraction) else ctx.mpf(x)
                     for x in B.row(i)] for i in range(n)])
    Q, R = ctx.qr(A)
    for i in range(n):
        if R[i, i] < 0:
            for k in range(n):
                R[i, k] = -R[i, k]
                Q[k, i] = -Q[k, i]
    bmax = ctx.mpf(abs(B.max_abs()))
    tol = ctx.ldexp(1, -(precision_bits // 2))
    for i in range(n):
        for k in range(i):
            R[i, k] = ctx.zero
        if R[i, i] <= tol * bmax * n:
            raise PrecisionError(f"cannot certify R[{i},{i}] > 0 at {precision_bits} bits")
    orth = Q.T * Q - ctx.eye(n)
    recon = Q * R - A
    if max(abs(x) for x in orth) > tol or max(abs(x) for x in recon) > tol * bmax:
        raise PrecisionError(f"QR residuals exceed tolerance at {precision_bits} bits")
    return QrFactor(Q, R, precision_bits)
