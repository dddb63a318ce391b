"""Lattice-level semantics and brute-force ground-truth oracles.

Anything named ``*_bruteforce`` enumerates lattice points and is capped in
dimension; these are test oracles, not production paths. Distances are
compared as exact squared rationals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

from .errors import BudgetError, RankDeficientError
from .linalg import (
    Matrix,
    Number,
    as_matrix,
    det_exact,
    hnf,
    inverse_exact,
    lll,
    norm_sq,
    rank_exact,
    solve_exact,
)

BRUTEFORCE_MAX_DIM = 5
DEFAULT_BUDGET = 2_000_000


def _exact(x) -> Number:
    if isinstance(x, (int, Fraction)):
        return x
    return Fraction(x)


def check_full_rank(B) -> Matrix:
    B = as_matrix(B)
    if not B.is_square:
        raise RankDeficientError("basis must be square (full-dimensional)")
    if det_exact(B) == 0:
        raise RankDeficientError("basis is singular")
    return B


def membership(B, v: Sequence) -> tuple[bool, list[int] | None]:
    """Is ``v`` in L(B)? Returns the integer coefficients when it is."""
    B = as_matrix(B)
    coeffs = solve_exact(B, [_exact(x) for x in v])
    if all(isinstance(c, int) for c in coeffs):
        return True, coeffs
    return False, None


def dual_basis(B) -> Matrix:
    """Exact ``B^{-T}``; its columns generate the dual lattice."""
    return inverse_exact(check_full_rank(B)).T


def mod_cube(v: Sequence[int], N: int) -> list[int]:
    return [x % N for x in v]


def mod_centered(v: Sequence[int], N: int) -> list[int]:
    """Coordinate-wise representative in ``[-N/2, N/2)``."""
    h = N // 2
    return [(x + h) % N - h for x in v]


def mod_parallelotope(B, x: Sequence) -> list[Number]:
    """The representative of ``x + L(B)`` inside the half-open P(B)."""
    B = as_matrix(B)
    x = [_exact(t) for t in x]
    coeffs = solve_exact(B, x)
    shift = B @ [math.floor(c) for c in coeffs]
    return [a - b for a, b in zip(x, shift)]


def in_parallelotope(B, x: Sequence) -> bool:
    return all(0 <= c < 1 for c in solve_exact(as_matrix(B), [_exact(t) for t in x]))


def parallelotope_points(B, max_dim: int = 4, max_det: int = 10_000) -> list[list[Number]]:
    """All integer points of P(B), one per coset of Z^n / L(B)."""
    B = check_full_rank(B)
    if not B.is_integral():
        raise ValueError("parallelotope_points needs an integer basis")
    n = B.rows
    d = abs(det_exact(B))
    if n > max_dim or d > max_det:
        raise BudgetError(f"parallelotope enumeration capped at n<={max_dim}, |det|<={max_det}")
    H, _ = hnf(B)
    # For upper-triangular H the box prod [0, H_ii) is a full set of coset reps.
    reps = [[]]
    for i in range(n):
        reps = [r + [k] for r in reps for k in range(H[i, i])]
    points = [mod_parallelotope(B, r) for r in reps]
    return sorted(points)


class CubeLattice:
    """``L_N``: the image of an integer lattice in ``F_N^n``.

    Requires ``det(B) | N`` so that ``N Z^n`` is a sublattice of ``L(B)``.
    """

    def __init__(self, B, N: int):
        B = check_full_rank(B)
        if not B.is_integral() or N % det_exact(B) != 0:
            raise ValueError("CubeLattice needs an integer basis with det(B) | N")
        self.B = B
        self.N = N
        self.n = B.rows
        self.generators = [mod_cube(c, N) for c in B.columns()]

    def contains(self, v: Sequence[int]) -> bool:
        return membership(self.B, mod_cube(v, self.N))[0]

    def elements(self, max_size: int = 10**6) -> list[tuple[int, ...]]:
        size = self.N ** self.n // abs(det_exact(self.B))
        if size > max_size:
            raise BudgetError(f"|L_N| = {size} exceeds {max_size}")
        seen = {tuple([0] * self.n)}
        frontier = list(seen)
        while frontier:
            nxt = []
            for p in frontier:
                for g in self.generators:
                    q = tuple((a + b) % self.N for a, b in zip(p, g))
                    if q not in seen:
                        seen.add(q)
                        nxt.append(q)
            frontier = nxt
        return sorted(seen)


# ---------------------------------------------------------------------------
# enumeration
# ---------------------------------------------------------------------------

def _integral_scale(B: Matrix) -> int:
    den = 1
    for x in B.entries():
        if isinstance(x, Fraction):
            den = den * x.denominator // math.gcd(den, x.denominator)
    return den


def reduced_basis(B) -> Matrix:
    """LLL-reduced basis of L(B), for rational B as well."""
    B = check_full_rank(B)
    den = _integral_scale(B)
    red, _ = lll(B.scale(den))
    return red.scale(Fraction(1, den)) if den != 1 else red


def enumerate_ball(
    B, center: Sequence, radius_sq, budget: int = DEFAULT_BUDGET
) -> Iterator[tuple[list[int], list[Number], Number]]:
    """Yield ``(coeffs, point, dist_sq)`` for every lattice point within the ball.

    Float Gram-Schmidt drives the pruning with a small slack; membership in
    the ball is then decided exactly.
    """
    B = check_full_rank(B)
    n = B.rows
    center = [_exact(c) for c in center]
    radius_sq = _exact(radius_sq)
    if radius_sq < 0:
        return
    cols = [[float(x) for x in c] for c in B.columns()]
    star: list[list[float]] = []
    mu = [[0.0] * n for _ in range(n)]
    bnorm = [0.0] * n
    for i in range(n):
        v = list(cols[i])
        for j in range(i):
            mu[i][j] = sum(a * b for a, b in zip(cols[i], star[j])) / bnorm[j]
            v = [a - mu[i][j] * b for a, b in zip(v, star[j])]
        star.append(v)
        bnorm[i] = sum(a * a for a in v)
    tau = [float(t) for t in solve_exact(B, center)]
    limit = float(radius_sq) * (1 + 1e-9) + 1e-9
    z = [0] * n
    visited = 0

    def recurse(i: int, partial: float):
        nonlocal visited
        c = tau[i] - sum(mu[j][i] * (z[j] - tau[j]) for j in range(i + 1, n))
        room = limit - partial
        if room < 0:
            return
        half = math.sqrt(room / bnorm[i])
        for zi in range(math.ceil(c - half), math.floor(c + half) + 1):
            visited += 1
            if visited > budget:
                raise BudgetError(f"enumeration exceeded {budget} nodes")
            z[i] = zi
            p = partial + (zi - c) ** 2 * bnorm[i]
            if i == 0:
                yield list(z)
            else:
                yield from recurse(i - 1, p)
        z[i] = 0

    for coeffs in recurse(n - 1, 0.0):
        point = B @ coeffs
        d2 = norm_sq([a - b for a, b in zip(point, center)])
        if d2 <= radius_sq:
            yield coeffs, point, d2


def _check_dim(B: Matrix) -> None:
    if B.rows > BRUTEFORCE_MAX_DIM:
        raise BudgetError(f"brute-force oracles are capped at n <= {BRUTEFORCE_MAX_DIM}")


@dataclass(frozen=True)
class SuccessiveMinima:
    squared: list[Number]
    witnesses: list[list[Number]]

    @property
    def values(self) -> list[float]:
        return [math.sqrt(x) for x in self.squared]


def successive_minima_bruteforce(B, radius=None, budget: int = DEFAULT_BUDGET) -> SuccessiveMinima:
    """lambda_1..lambda_n by enumerating every point within ``radius``."""
    B = check_full_rank(B)
    _check_dim(B)
    n = B.rows
    red = reduced_basis(B)
    if radius is None:
        radius_sq = n * n * max(norm_sq(c) for c in red.columns())
    else:
        radius_sq = _exact(radius) ** 2
    pts = [(d2, p) for _, p, d2 in enumerate_ball(red, [0] * n, radius_sq, budget) if d2 > 0]
    pts.sort(key=lambda t: t[0])
    squared, witnesses = [], []
    for d2, p in pts:
        if rank_exact(witnesses + [p]) > len(witnesses):
            squared.append(d2)
            witnesses.append(p)
            if len(witnesses) == n:
                break
    if len(witnesses) < n:
        raise BudgetError("radius too small to reach lambda_n")
    return SuccessiveMinima(squared, witnesses)


def svp_bruteforce(B, budget: int = DEFAULT_BUDGET) -> tuple[list[Number], Number]:
    """A shortest nonzero vector and its squared length."""
    B = check_full_rank(B)
    _check_dim(B)
    red = reduced_basis(B)
    n = B.rows
    best = min(red.columns(), key=norm_sq)
    best_d2 = norm_sq(best)
    for _, p, d2 in enumerate_ball(red, [0] * n, best_d2, budget):
        if 0 < d2 < best_d2:
            best, best_d2 = p, d2
    return best, best_d2


def cvp_bruteforce(B, v: Sequence, budget: int = DEFAULT_BUDGET) -> tuple[list[Number], Number]:
    """A closest lattice point to ``v`` and the exact squared distance."""
    B = check_full_rank(B)
    _check_dim(B)
    red = reduced_basis(B)
    v = [_exact(x) for x in v]
    guess = red @ [round(c) for c in solve_exact(red, v)]
    best, best_d2 = guess, norm_sq([a - b for a, b in zip(guess, v)])
    for _, p, d2 in enumerate_ball(red, v, best_d2, budget):
        if d2 < best_d2:
            best, best_d2 = p, d2
    return best, best_d2
