"""Discrete Gaussians: evaluation, samplers, lattice sums and smoothing.

``rho_{s,c}(x) = exp(-pi |x - c|^2 / s^2)``. Lattice sums are truncated at
a radius chosen with Banaszczyk's tail inequality

    rho_s((L - c) minus a ball of radius alpha s sqrt(n / 2 pi)) <= 2 C^n rho_s(L),
    C = alpha sqrt(e) exp(-alpha^2 / 2),

which also yields the reported truncation error.
"""

from __future__ import annotations

import math
import random
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import BudgetError, WrapPrecisionError
from .lattice import check_full_rank, dual_basis, enumerate_ball, reduced_basis, svp_bruteforce
from .linalg import Matrix, hnf, norm_sq
from .snf import SnfBasis, phi3

SUM_MAX_DIM = 5
TAIL_CUT = 12


@dataclass(frozen=True)
class GaussianParams:
    s: float
    c: tuple = ()

    def __post_init__(self):
        if not self.s > 0:
            raise ValueError("Gaussian width must be positive")


@dataclass(frozen=True)
class SmoothingResult:
    epsilon: float
    s_star: float
    dual_sum: float
    truncation_error_bound: float


@dataclass(frozen=True)
class TvEstimate:
    """Empirical total variation against uniform with a 3-sigma style radius."""

    tv: float
    radius: float
    classes: int
    trials: int


def rho(params: GaussianParams, x: Sequence) -> float:
    c = params.c or (0,) * len(x)
    d2 = sum((float(a) - float(b)) ** 2 for a, b in zip(x, c))
    return math.exp(-math.pi * d2 / params.s ** 2)


def banaszczyk_constant(alpha: float) -> float:
    return alpha * math.sqrt(math.e) * math.exp(-alpha * alpha / 2)


def tail_alpha(n: int, target: float = 1e-15) -> float:
    """Smallest ``alpha`` (on a 1/64 grid, ``alpha >= 1``) with ``2 C^n <= target``."""
    alpha = 1.0
    while 2 * banaszczyk_constant(alpha) ** n > target:
        alpha += 1 / 64
    return alpha


def tail_radius(s: float, n: int, target: float = 1e-15) -> float:
    return tail_alpha(n, target) * s * math.sqrt(n / (2 * math.pi))


def _tail_bound(radius: float, s: float, n: int, rho_lattice_upper: float) -> float:
    alpha = radius / (s * math.sqrt(n / (2 * math.pi)))
    if alpha < 1:
        return math.inf
    return 2 * banaszczyk_constant(alpha) ** n * rho_lattice_upper


def _check_sum_dim(B: Matrix) -> None:
    if B.rows > SUM_MAX_DIM:
        raise BudgetError(f"exact lattice sums are capped at n <= {SUM_MAX_DIM}")


def rho_lattice_sum(B, params: GaussianParams, radius: float | None = None,
                    budget: int = 2_000_000) -> tuple[float, float]:
    """Truncated ``rho_{s,c}(L)`` and a rigorous bound on the omitted tail."""
    B = check_full_rank(B)
    _check_sum_dim(B)
    n = B.rows
    s = params.s
    c = params.c or (0,) * n
    if radius is None:
        radius = tail_radius(s, n)
    red = reduced_basis(B)
    r2 = Fraction(radius) ** 2
    total = math.fsum(math.exp(-math.pi * float(d2) / s ** 2)
                      for _, _, d2 in enumerate_ball(red, c, r2, budget))
    if any(x != 0 for x in c):
        centred = math.fsum(math.exp(-math.pi * float(d2) / s ** 2)
                            for _, _, d2 in enumerate_ball(red, [0] * n, r2, budget))
    else:
        centred = total
    # rho(L) <= centred + 2 C^n rho(L) gives an upper bound on rho(L).
    two_cn = _tail_bound(radius, s, n, 1.0)
    if two_cn >= 1:
        return total, math.inf
    return total, two_cn * centred / (1 - two_cn)


def smoothing_upper_estimate(B_lll, epsilon: float) -> float:
    """``sqrt(ln(2n(1 + 1/eps)) / pi) * max |b_i|``, an upper bound on ``eta_eps``."""
    B = check_full_rank(B_lll)
    n = B.rows
    longest = max(math.sqrt(norm_sq(col)) for col in B.columns())
    return math.sqrt(math.log(2 * n * (1 + 1 / epsilon)) / math.pi) * longest


def smoothing_parameter(B, epsilon: float, rel_tol: float = 1e-6,
                        budget: int = 2_000_000) -> SmoothingResult:
    """Smallest ``s`` with ``rho_{1/s}(L* \\ {0}) <= epsilon``, by bisection.

    Dual points are enumerated once, at the radius needed for the smallest
    width in the bracket; the truncation error is folded into the test so
    the returned ``s_star`` satisfies the inequality rigorously.
    """
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    B = check_full_rank(B)
    _check_sum_dim(B)
    n = B.rows
    dual = dual_basis(B)
    _, shortest_sq = svp_bruteforce(dual, budget)
    # Two shortest dual vectors alone already contribute 2 exp(-pi s^2 l^2).
    s_lo = 0.999 * math.sqrt(math.log(2 / epsilon) / math.pi / float(shortest_sq))
    s_hi = max(smoothing_upper_estimate(reduced_basis(B), epsilon), s_lo)
    radius = tail_radius(1 / s_lo, n)
    red_dual = reduced_basis(dual)
    norms = [float(d2) for _, _, d2 in
             enumerate_ball(red_dual, [0] * n, Fraction(radius) ** 2, budget) if d2 != 0]
    two_cn = _tail_bound(radius, 1 / s_lo, n, 1.0)

    def dual_sum(s: float) -> tuple[float, float]:
        head = math.fsum(math.exp(-math.pi * s * s * d) for d in norms)
        # The tail is relative to rho(L*), which is 1 + head + tail.
        tail = two_cn * (1 + head) / (1 - two_cn)
        return head, tail

    while sum(dual_sum(s_hi)) > epsilon:
        s_hi *= 2
    while (s_hi - s_lo) > rel_tol * s_hi:
        mid = (s_lo + s_hi) / 2
        head, tail = dual_sum(mid)
        if head + tail <= epsilon:
            s_hi = mid
        else:
            s_lo = mid
    head, tail = dual_sum(s_hi)
    return SmoothingResult(epsilon, s_hi, head, tail)


# ---------------------------------------------------------------------------
# samplers
# ---------------------------------------------------------------------------

def _split_center(c) -> tuple[int, float]:
    if isinstance(c, int):
        return c, 0.0
    c = Fraction(c)
    base = math.floor(c)
    return base, float(c - base)


def sample_dgauss_int(s: float, c, rng: random.Random) -> int:
    """Rejection sampler for ``D_{Z,s,c}``, cut at ``|x - c| <= 12 s``.

    The center is split into an exact integer part and a float fraction so
    large centers (far beyond 2^53) lose no precision.
    """
    if not s > 0:
        raise ValueError("Gaussian width must be positive")
    base, frac = _split_center(c)
    lo = min(math.floor(frac - TAIL_CUT * s), 0)
    hi = max(math.ceil(frac + TAIL_CUT * s), 1)
    peak = min((frac - k) ** 2 for k in (0, 1))
    scale = math.pi / (s * s)
    while True:
        x = rng.randint(lo, hi)
        if rng.random() < math.exp(-scale * ((x - frac) ** 2 - peak)):
            return base + x


def sample_dgauss_fn(N: int, n: int, s: float, c: Sequence, rng: random.Random,
                     allow_wrap: bool = False) -> list[int]:
    """``D_{Z^n,s,c}`` reduced modulo ``N``, one coordinate at a time.

    Raises:
        WrapPrecisionError: ``s > N/8`` so the wrap-around is not negligible,
            unless ``allow_wrap``.
    """
    if len(c) != n:
        raise ValueError(f"center of length {len(c)} for dimension {n}")
    if s > N / 8 and not allow_wrap:
        raise WrapPrecisionError(f"width {s:.4g} exceeds N/8 = {N / 8:.4g}")
    return [sample_dgauss_int(s, ci, rng) % N for ci in c]


# ---------------------------------------------------------------------------
# statistical distance estimates
# ---------------------------------------------------------------------------

def tv_from_counts(counts: Counter, classes: int, trials: int) -> TvEstimate:
    """``1/2 sum |p_hat - 1/k|`` over all ``k`` classes, unseen ones included."""
    seen = sum(abs(v / trials - 1 / classes) for v in counts.values())
    unseen = (classes - len(counts)) / classes
    tv = (seen + unseen) / 2
    return TvEstimate(tv, 3 * math.sqrt(classes / (2 * trials)), classes, trials)


def coset_key(H: Matrix, x: Sequence[int]) -> tuple[int, ...]:
    """Representative of ``x + L(H)`` in the box ``prod [0, H_ii)`` (``H`` in HNF)."""
    x = list(x)
    for i in range(H.rows - 1, -1, -1):
        q = x[i] // H[i, i]
        if q:
            for r in range(i + 1):
                x[r] -= q * H[r, i]
    return tuple(x)


def tv_distance_mod_parallelotope(B, params: GaussianParams, trials: int,
                                  rng: random.Random) -> TvEstimate:
    """TV between ``D_{Z^n,s,c}`` modulo ``L(B)`` and uniform over the cosets."""
    B = check_full_rank(B)
    n = B.rows
    det = abs(B.det())
    if n > 3 or det > 1000 or not B.is_integral():
        raise BudgetError("coset histogram needs an integer basis with n <= 3, |det| <= 1000")
    H, _ = hnf(B)
    c = params.c or (0,) * n
    counts: Counter = Counter()
    for _ in range(trials):
        x = [sample_dgauss_int(params.s, ci, rng) for ci in c]
        counts[coset_key(H, x)] += 1
    return tv_from_counts(counts, int(det), trials)


def tv_dual_coordinate(S: SnfBasis, s: float, trials: int, rng: random.Random,
                       center: Sequence | None = None) -> TvEstimate:
    """TV between the first coordinate of ``phi3(x)`` and uniform ``F_N``.

    ``x`` is drawn from the mod-``N`` Gaussian; wrap-around is harmless here
    because ``N Z^n`` lies inside the SNF lattice.
    """
    center = center or (0,) * S.n
    counts: Counter = Counter()
    for _ in range(trials):
        x = sample_dgauss_fn(S.N, S.n, s, center, rng, allow_wrap=True)
        counts[phi3(S, x).a] += 1
    return tv_from_counts(counts, S.N, trials)
