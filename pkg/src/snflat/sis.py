"""Rank-1 short integer solutions modulo a prime.

Homogeneous: find small ``h != 0`` with ``sum h_i g_i = 0 (mod N)``.
Non-homogeneous: find small ``(h_0, h)`` with ``sum h_i g_i = h_0 (mod N)``;
``h_0`` is stored first. The dimension ``n`` is the least integer with
``n^(delta n) >= N`` and solutions must satisfy ``max |h_i| <= 2 n^delta``.

An *oracle* is any callable ``oracle(inst, rng=None) -> SisSolution | None``.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import mpmath

from .errors import BudgetError, OracleFailure
from .lattice import svp_bruteforce
from .linalg import Matrix, det_exact, floor_rational_power, lll, mod_inverse, norm_sq

EXHAUSTIVE_LIMIT = 10**8
HALF_LIMIT = 10**6
NONHOM_RETRIES = 16


def as_delta(x) -> Fraction:
    """Exact exponent from an int, Fraction, decimal string or float (via its repr)."""
    if isinstance(x, (int, Fraction)):
        d = Fraction(x)
    elif isinstance(x, float):
        d = Fraction(repr(x))
    else:
        d = Fraction(str(x).strip())
    if d <= 0:
        raise ValueError("delta must be positive")
    return d


def _power_at_least(n: int, delta: Fraction, N: int) -> bool:
    """Decide ``n^(delta n) >= N``; floats, then 160-bit logs, then exact powers on a near tie."""
    if n == 1:
        return N <= 1
    lhs_f = float(delta) * n * math.log(n)
    rhs_f = math.log(N)
    if abs(lhs_f - rhs_f) > 1e-9 * (abs(lhs_f) + abs(rhs_f) + 1):
        return lhs_f > rhs_f
    ctx = mpmath.MPContext()
    ctx.prec = 160
    lhs = ctx.mpf(delta.numerator) / delta.denominator * n * ctx.log(n)
    rhs = ctx.log(N)
    if abs(lhs - rhs) > ctx.ldexp(abs(lhs) + abs(rhs) + 1, -100):
        return lhs > rhs
    p, q = delta.numerator, delta.denominator
    return n ** (p * n) >= N ** q


def dimension_for_modulus(N: int, delta) -> int:
    """Least ``n >= 1`` with ``n^(delta n) >= N``."""
    if N < 2:
        raise ValueError("N must be at least 2")
    delta = as_delta(delta)
    n = 2
    while not _power_at_least(n, delta, N):
        n += 1
    return n


def norm_cap(n: int, delta, scale: int = 2) -> int:
    """``floor(scale * n^delta)``, exactly."""
    return floor_rational_power(n, as_delta(delta), scale)


@dataclass(frozen=True)
class SisInstance:
    N: int
    delta: Fraction
    n: int
    g: tuple[int, ...]
    homogeneous: bool = True

    def __post_init__(self):
        object.__setattr__(self, "delta", as_delta(self.delta))
        object.__setattr__(self, "g", tuple(int(x) % self.N for x in self.g))
        if len(self.g) != self.n:
            raise ValueError(f"{len(self.g)} entries for dimension {self.n}")

    def is_minimal(self) -> bool:
        return self.n == dimension_for_modulus(self.N, self.delta)

    def bound(self) -> int:
        """Largest admissible ``max |h_i|``: ``floor(2 n^delta)``."""
        return norm_cap(self.n, self.delta)

    def residue(self, h: Sequence[int]) -> int:
        """``sum h_i g_i - h_0`` (non-homogeneous) or ``sum h_i g_i``, mod N."""
        if self.homogeneous:
            return sum(a * b for a, b in zip(h, self.g)) % self.N
        return (sum(a * b for a, b in zip(h[1:], self.g)) - h[0]) % self.N


@dataclass(frozen=True)
class SisSolution:
    h: tuple[int, ...]
    gamma: float

    @property
    def max_abs(self) -> int:
        return max((abs(x) for x in self.h), default=0)


@dataclass(frozen=True)
class Verdict:
    accepted: bool
    reason: str
    gamma: float


def gamma_of(inst: SisInstance, h: Sequence[int]) -> float:
    """``max |h_i| / (2 n^delta)``; at most 1 for an exact solution."""
    return max((abs(x) for x in h), default=0) / (2 * inst.n ** float(inst.delta))


def make_solution(inst: SisInstance, h: Sequence[int]) -> SisSolution:
    return SisSolution(tuple(int(x) for x in h), gamma_of(inst, h))


def verify(inst: SisInstance, sol: SisSolution | Sequence[int], bound: int | None = None) -> Verdict:
    """Check length, non-triviality, the congruence and the norm bound."""
    h = tuple(sol.h if isinstance(sol, SisSolution) else sol)
    want = inst.n + (0 if inst.homogeneous else 1)
    if len(h) != want:
        return Verdict(False, "length", math.nan)
    gamma = gamma_of(inst, h)
    if not any(h):
        return Verdict(False, "zero", gamma)
    if inst.residue(h):
        return Verdict(False, "congruence", gamma)
    cap = inst.bound() if bound is None else bound
    if max(abs(x) for x in h) > cap:
        return Verdict(False, "norm", gamma)
    return Verdict(True, "ok", gamma)


def gen_random_instance(N: int, delta, rng: random.Random, homogeneous: bool = True) -> SisInstance:
    n = dimension_for_modulus(N, delta)
    return SisInstance(N, delta, n, tuple(rng.randrange(N) for _ in range(n)), homogeneous)


# ---------------------------------------------------------------------------
# solvers
# ---------------------------------------------------------------------------

def _collision_search(g: Sequence[int], N: int, bound: int, budget: int) -> list[int] | None:
    """Pigeonhole over ``[0, bound]^n``: two points with equal residue differ by a solution."""
    seen: dict[int, tuple[int, ...]] = {}
    for steps, h in enumerate(itertools.product(range(bound + 1), repeat=len(g))):
        if steps > budget:
            raise BudgetError(f"collision search exceeded {budget} steps")
        r = sum(a * b for a, b in zip(h, g)) % N
        other = seen.get(r)
        if other is not None:
            return [a - b for a, b in zip(h, other)]
        seen[r] = h
    return None


def _half_table(g: Sequence[int], N: int, bound: int) -> dict[int, list[tuple[int, ...]]]:
    table: dict[int, list[tuple[int, ...]]] = {}
    for h in itertools.product(range(-bound, bound + 1), repeat=len(g)):
        bucket = table.setdefault(sum(a * b for a, b in zip(h, g)) % N, [])
        if len(bucket) < 2:
            bucket.append(h)
    return table


def _meet_in_middle(g: Sequence[int], N: int, bound: int, targets: Sequence[int]) -> tuple[int, list[int]] | None:
    """Exhaustive search for ``h`` in the box with ``<g, h> = t`` for the first feasible target.

    The zero vector is never returned.
    """
    n = len(g)
    k = (n + 1) // 2
    if (2 * bound + 1) ** k > HALF_LIMIT:
        raise BudgetError(f"meet-in-the-middle halves exceed {HALF_LIMIT}")
    left = _half_table(g[:k], N, bound)
    right_box = list(itertools.product(range(-bound, bound + 1), repeat=n - k))
    for t in targets:
        for h2 in right_box:
            r2 = sum(a * b for a, b in zip(h2, g[k:])) % N
            for h1 in left.get((t - r2) % N, ()):
                h = list(h1) + list(h2)
                if any(h):
                    return t, h
    return None


def _signed_targets(bound: int) -> list[int]:
    out = []
    for k in range(1, bound + 1):
        out += [k, -k]
    return out + [0]


def solve_bruteforce(inst: SisInstance, bound: int | None = None,
                     rng: random.Random | None = None,
                     budget: int = EXHAUSTIVE_LIMIT) -> SisSolution | None:
    """A nonzero solution with ``max |h_i| <= bound``, or ``None`` if none exists.

    Homogeneous instances whose box ``[0, bound]^n`` outnumbers ``N`` use a
    collision search, which always succeeds within ``N + 1`` points. All
    other cases are searched exhaustively by meet-in-the-middle, so ``None``
    certifies that no solution exists. Non-homogeneous searches prefer a
    nonzero ``h_0``.

    Args:
        rng: when given, coordinates are permuted and sign-flipped at random
            first, so repeated calls return different solutions.
    """
    n, N = inst.n, inst.N
    bound = inst.bound() if bound is None else bound
    if bound < 0:
        raise ValueError("bound must be non-negative")
    perm = list(range(n))
    signs = [1] * n
    if rng is not None:
        rng.shuffle(perm)
        signs = [rng.choice((1, -1)) for _ in range(n)]
    g = [signs[i] * inst.g[perm[i]] % N for i in range(n)]

    if inst.homogeneous:
        if (bound + 1) ** n > N:
            h = _collision_search(g, N, bound, budget)
        else:
            found = _meet_in_middle(g, N, bound, [0])
            h = found[1] if found else None
        if h is None:
            return None
        out = [0] * n
        for i in range(n):
            out[perm[i]] = signs[i] * h[i]
        return make_solution(inst, out)

    targets = _signed_targets(bound)
    if rng is not None:
        nonzero = targets[:-1]
        rng.shuffle(nonzero)
        targets = nonzero + [0]
    found = _meet_in_middle(g, N, bound, targets)
    if found is None:
        # Only h = 0 with h0 = 0 remains, which is trivial.
        return None
    h0, h = found
    out = [0] * n
    for i in range(n):
        out[perm[i]] = signs[i] * h[i]
    return make_solution(inst, [h0] + out)


def kernel_basis(g: Sequence[int], N: int) -> Matrix:
    """Columns spanning ``{h in Z^n : <g, h> = 0 mod N}``."""
    n = len(g)
    g = [x % N for x in g]
    pivot = next((i for i, x in enumerate(g) if x), None)
    if pivot is None:
        return Matrix.identity(n)
    inv = mod_inverse(g[pivot], N)
    cols = []
    for i in range(n):
        col = [0] * n
        if i == pivot:
            col[pivot] = N
        else:
            col[i] = 1
            col[pivot] = -(g[i] * inv) % N
        cols.append(col)
    return Matrix.from_columns(cols)


def solve_lll(inst: SisInstance, rng: random.Random | None = None) -> SisSolution:
    """Shortest column of an LLL-reduced kernel basis.

    Always a lattice vector; the achieved ``gamma`` may exceed 1. For a
    non-homogeneous instance the kernel of ``(-1, g)`` is used and a column
    with ``h_0 != 0`` is preferred.
    """
    if inst.homogeneous:
        B = kernel_basis(inst.g, inst.N)
    else:
        B = kernel_basis((-1,) + inst.g, inst.N)
    red, _ = lll(B)
    cols = sorted(red.columns(), key=lambda c: (norm_sq(c), max(abs(x) for x in c)))
    if not inst.homogeneous:
        cols = [c for c in cols if c[0] % inst.N] + [c for c in cols if c[0] % inst.N == 0]
    return make_solution(inst, cols[0])


Oracle = Callable[..., "SisSolution | None"]


def bruteforce_oracle(scale: int = 2) -> Oracle:
    """``solve_bruteforce`` with bound ``floor(scale * n^delta)``."""

    def oracle(inst: SisInstance, rng: random.Random | None = None) -> SisSolution | None:
        return solve_bruteforce(inst, norm_cap(inst.n, inst.delta, scale), rng)

    return oracle


def lll_oracle(inst: SisInstance, rng: random.Random | None = None) -> SisSolution:
    return solve_lll(inst)


def hom_from_nonhom(oracle: Oracle | None = None, max_retries: int = NONHOM_RETRIES) -> Oracle:
    """Homogeneous solver at ``delta`` built from a non-homogeneous one at ``delta/2``.

    The inner oracle is called on ``g`` and then on ``h_0^{-1} g``, both in
    the same dimension; ``h'_i - h'_0 h_i`` is then a homogeneous solution.
    The default inner oracle is exhaustive search with bound
    ``floor(n^(delta/2))``, which keeps the result below ``2 n^delta``.
    A zero ``h_0`` or a zero combination triggers a retry with fresh
    randomness. If every retry returns ``h_0 = 0``, the tail of such an
    answer is already a homogeneous solution and is returned as is.
    """
    inner = oracle or bruteforce_oracle(scale=1)

    def solver(inst: SisInstance, rng: random.Random | None = None) -> SisSolution:
        if not inst.homogeneous:
            raise ValueError("expected a homogeneous instance")
        rng = rng or random.Random(0)
        half = inst.delta / 2
        fallback = None
        for _ in range(max_retries):
            first = inner(SisInstance(inst.N, half, inst.n, inst.g, False), rng)
            if first is None:
                raise OracleFailure("inner oracle found no solution for g")
            h0 = first.h[0] % inst.N
            if h0 == 0:
                if fallback is None and any(first.h[1:]):
                    fallback = first.h[1:]
                continue
            inv = mod_inverse(h0, inst.N)
            scaled = tuple(inv * x % inst.N for x in inst.g)
            second = inner(SisInstance(inst.N, half, inst.n, scaled, False), rng)
            if second is None:
                raise OracleFailure("inner oracle found no solution for h0^-1 g")
            combo = [b - second.h[0] * a for a, b in zip(first.h[1:], second.h[1:])]
            if any(combo):
                return make_solution(inst, combo)
        if fallback is not None:
            # h_0 = 0 makes the tail itself a homogeneous solution.
            return make_solution(inst, fallback)
        raise OracleFailure(f"no usable combination after {max_retries} attempts")

    return solver


# ---------------------------------------------------------------------------
# SNF correspondence and density
# ---------------------------------------------------------------------------

def snf_to_sis(S, delta=Fraction(1, 2)) -> SisInstance:
    """Non-homogeneous instance whose solution set is ``L(B_snf)`` modulo ``N``.

    ``g = (b_2, ..., b_n)``: ``(h_0, h)`` solves it exactly when
    ``h_0 = sum b_j h_j (mod N)``, the SNF membership condition.
    """
    return SisInstance(S.N, delta, S.n - 1, tuple(S.b), homogeneous=False)


def sis_lattice_equals_snf(S, max_points: int = 10**6) -> bool:
    """Set equality of the SNF lattice and the SIS solution set, over all of ``F_N^n``."""
    if S.N ** S.n > max_points:
        raise BudgetError(f"N^n = {S.N ** S.n} exceeds {max_points}")
    inst = snf_to_sis(S)
    for h in itertools.product(range(S.N), repeat=S.n):
        if S.contains(h) != (inst.residue(h) == 0):
            return False
    return True


@dataclass(frozen=True)
class DensityStats:
    N: int
    delta: Fraction
    n: int
    alpha: Fraction
    lambda1_sq: list
    determinants: list
    fraction_dense: float

    @property
    def lambda1(self) -> list[float]:
        return [math.sqrt(x) for x in self.lambda1_sq]


def at_least_scaled_power(value_sq, alpha: Fraction, n: int, delta: Fraction) -> bool:
    """``sqrt(value_sq) >= alpha n^delta``, decided exactly."""
    p, q = delta.numerator, delta.denominator
    lhs = Fraction(value_sq) / (alpha * alpha)
    return lhs ** q >= Fraction(n) ** (2 * p)


def density_experiment(N: int, delta, trials: int, rng: random.Random,
                       alpha=Fraction(1, 4)) -> DensityStats:
    """``lambda_1`` of random kernel lattices ``L(g)^perp`` and how often it reaches ``alpha n^delta``."""
    delta = as_delta(delta)
    alpha = as_delta(alpha)
    n = dimension_for_modulus(N, delta)
    lam, dets, dense = [], [], 0
    for _ in range(trials):
        g = [rng.randrange(N) for _ in range(n)]
        B = kernel_basis(g, N)
        _, l1 = svp_bruteforce(B)
        lam.append(l1)
        dets.append(abs(det_exact(B)))
        dense += at_least_scaled_power(l1, alpha, n, delta)
    return DensityStats(N, delta, n, alpha, lam, dets, dense / trials if trials else math.nan)
