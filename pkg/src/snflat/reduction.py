"""Worst-case decoding through a random rank-1 SIS oracle.

One trial of the decoder:

1. LLL-reduce ``B``, shift ``v`` by the rounded lattice vector, take QR.
2. Reduce ``R`` to SNF, fix ``m`` (least with ``m^(delta m) >= N``),
   ``eps = m^-5`` and ``s = T * Phi``.
3. Pick a nonzero ``c`` in ``[-m^(1+delta), m^(1+delta)]`` and a uniform
   ``u`` in ``L_N``; aim Gaussians at ``c^-1 T v_hat + u``.
4. Hand only the dual coordinates ``a_1..a_m`` to the oracle.
5. On ``sum alpha_i = c`` combine the samples into ``x0`` in ``L_N`` and
   map it back to ``L(B)``.

Every returned vector is certified to lie in ``L(B)`` exactly.
"""

from __future__ import annotations

import hashlib
import math
import random
import time
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .errors import BudgetError, BudgetExhaustedError, NotInLatticeError
from .gaussian import (
    TvEstimate,
    sample_dgauss_fn,
    smoothing_parameter,
    smoothing_upper_estimate,
)
from .lattice import check_full_rank, membership, mod_centered
from .linalg import Matrix, QrFactor, floor_rational_power, lll, mod_inverse, qr, rank_exact, solve_exact
from .sis import Oracle, SisInstance, as_delta, bruteforce_oracle, dimension_for_modulus
from .snf import SnfBasis, SnfReduction, backmap_coefficients, phi3, reduce_to_snf, sample_ln_uniform

C_RESAMPLES = 64
DEFAULT_CONSTANT = 8

FAIL_ORACLE = "oracle-failed"
FAIL_SUM = "coefficient-sum-mismatch"
FAIL_C_ZERO = "c-zero-resample-exhausted"


@dataclass
class ReductionConfig:
    """Tunables of the decoder.

    Attributes:
        phi: upper bound on the smoothing parameter. ``None`` means
            ``phi_mode`` decides: ``"estimate"`` uses the LLL-basis upper
            estimate, ``"exact"`` computes it (small dimensions only).
        trial_budget: trials for the amplified drivers; ``None`` means
            ``ceil(8 m^2)``.
        oracle: SIS solver; defaults to exhaustive search at ``2 n^delta``.
        constant: the explicit constant in the distance bound.
    """

    delta: Fraction = Fraction(1, 2)
    phi: float | None = None
    phi_mode: str = "estimate"
    trial_budget: int | None = None
    seed: int = 0
    oracle: Oracle | None = None
    precision_bits: int = 256
    constant: float = DEFAULT_CONSTANT
    accuracy: tuple[int, int] = (1, 2)
    T: int | None = None
    jobs: int = 1

    def __post_init__(self):
        self.delta = as_delta(self.delta)
        if self.trial_budget is not None and self.trial_budget < 1:
            raise ValueError("trial_budget must be at least 1")
        if self.phi_mode not in ("estimate", "exact"):
            raise ValueError("phi_mode must be 'estimate' or 'exact'")


@dataclass(frozen=True)
class ReductionSetup:
    """Everything shared by the trials on one basis."""

    B: Matrix
    B_lll: Matrix
    qr: QrFactor
    red: SnfReduction
    m: int
    epsilon: float
    phi: float
    s: float
    c_range: int
    bound: float
    delta: Fraction

    @property
    def snf(self) -> SnfBasis:
        return self.red.snf

    @property
    def N(self) -> int:
        return self.red.N

    @property
    def n(self) -> int:
        return self.B.rows


@dataclass
class ReductionTrace:
    m: int
    N: int
    T: int
    s: float
    epsilon: float
    phi: float
    c: int | None = None
    success: bool = False
    oracle_success: bool = False
    reason: str = ""
    sum_coeff: int | None = None
    gamma: float | None = None
    achieved_distance: float | None = None
    bound: float | None = None
    theorem_violation: bool = False
    degraded: bool = False
    x0_in_LN: bool | None = None
    sum_alpha_y_zero: bool | None = None
    backmap_norm_ok: bool | None = None
    oracle_error: str = ""
    timings: dict = field(default_factory=dict)

    def lines(self) -> list[str]:
        out = []
        for key in ("m", "N", "T", "s", "epsilon", "phi", "c", "success", "oracle_success",
                    "reason", "sum_coeff", "gamma", "achieved_distance", "bound",
                    "theorem_violation", "degraded", "x0_in_LN", "sum_alpha_y_zero",
                    "backmap_norm_ok"):
            val = getattr(self, key)
            if isinstance(val, float):
                val = repr(val)
            out.append(f"{key}={val}")
        return out


@dataclass
class TrialResult:
    trace: ReductionTrace
    x_out: list[int] | None = None


def trial_rng(seed: int, index: int) -> random.Random:
    """Independent stream for trial ``index``, split from ``seed`` by hashing."""
    digest = hashlib.sha256(f"snflat:{seed}:{index}".encode()).digest()
    return random.Random(int.from_bytes(digest, "big"))


def distance_bound(phi: float, n: int, delta: Fraction, det_B, constant: float = DEFAULT_CONSTANT,
                   gamma: float = 1.0) -> float:
    """``C Phi gamma n^(1.5+delta) max(n, log2 det B)^(1+delta)``."""
    d = float(delta)
    log_det = math.log2(abs(det_B)) if det_B else 0.0
    return constant * phi * max(gamma, 1.0) * n ** (1.5 + d) * max(n, log_det) ** (1 + d)


def prepare(B, cfg: ReductionConfig) -> ReductionSetup:
    """LLL, QR, SNF and the parameters ``m, eps, Phi, s`` for basis ``B``.

    ``m`` depends only on ``N``, so ``eps = m^-5`` and ``Phi`` follow in a
    single pass.
    """
    B = check_full_rank(B)
    if not B.is_integral():
        raise ValueError("the decoder needs an integer basis")
    B_lll, _ = lll(B)
    factor = qr(B_lll, cfg.precision_bits)
    red = reduce_to_snf(factor.R, *cfg.accuracy, T=cfg.T)
    m = dimension_for_modulus(red.N, cfg.delta)
    epsilon = float(m) ** -5
    if cfg.phi is not None:
        phi = float(cfg.phi)
    elif cfg.phi_mode == "exact":
        phi = smoothing_parameter(B_lll, epsilon).s_star
    else:
        phi = smoothing_upper_estimate(B_lll, epsilon)
    c_range = floor_rational_power(m, 1 + cfg.delta)
    bound = distance_bound(phi, B.rows, cfg.delta, B.det(), cfg.constant)
    return ReductionSetup(B, B_lll, factor, red, m, epsilon, phi, red.T * phi, c_range, bound, cfg.delta)


def _rounded_target(setup: ReductionSetup, v: Sequence[int]) -> tuple[list[int], list[int]]:
    """``(shift, t)``: the lattice shift removed from ``v`` and ``round(T Q^T (v - shift))``."""
    coeffs = solve_exact(setup.B_lll, list(v))
    shift = setup.B_lll @ [round(c) for c in coeffs]
    reduced = [a - b for a, b in zip(v, shift)]
    ctx = setup.qr.context()
    Q = setup.qr.Q
    n = setup.n
    t = []
    for i in range(n):
        acc = ctx.fsum(Q[k, i] * reduced[k] for k in range(n))
        t.append(int(ctx.nint(acc * setup.red.T)))
    return shift, t


def _draw_c(setup: ReductionSetup, rng: random.Random) -> int | None:
    for _ in range(C_RESAMPLES):
        c = rng.randint(-setup.c_range, setup.c_range)
        if c % setup.N:
            return c
    return None


def run_trial(setup: ReductionSetup, v: Sequence[int] | None, rng: random.Random,
              oracle: Oracle, constant: float = DEFAULT_CONSTANT) -> TrialResult:
    """One trial. ``v = None`` runs the short-vector variant (target, shift and ``u`` all zero)."""
    S = setup.snf
    N, n, m = setup.N, setup.n, setup.m
    trace = ReductionTrace(m=m, N=N, T=setup.red.T, s=setup.s, epsilon=setup.epsilon, phi=setup.phi)
    clock = time.perf_counter()
    sivp = v is None

    if sivp:
        shift, t, c, u = [0] * n, [0] * n, None, [0] * n
        center = [0] * n
    else:
        shift, t = _rounded_target(setup, v)
        c = _draw_c(setup, rng)
        trace.c = c
        if c is None:
            trace.reason = FAIL_C_ZERO
            return TrialResult(trace)
        u = sample_ln_uniform(S, rng)
        c_inv = mod_inverse(c, N)
        center = [(c_inv * ti + ui) % N for ti, ui in zip(t, u)]
    trace.timings["setup"] = time.perf_counter() - clock

    clock = time.perf_counter()
    xs, ys = [], []
    for _ in range(m):
        x = sample_dgauss_fn(N, n, setup.s, center, rng)
        xs.append(x)
        ys.append(phi3(S, x))
    trace.timings["sample"] = time.perf_counter() - clock

    clock = time.perf_counter()
    # The oracle sees N, delta and the dual coordinates, nothing else.
    inst = SisInstance(N, setup.delta, m, tuple(y.a for y in ys))
    try:
        sol = oracle(inst, rng=rng)
    except Exception as exc:  # any oracle crash counts as an oracle failure
        sol = None
        trace.oracle_error = repr(exc)
    trace.timings["oracle"] = time.perf_counter() - clock
    if sol is None or len(sol.h) != m or not any(sol.h) or inst.residue(sol.h):
        trace.reason = FAIL_ORACLE
        return TrialResult(trace)
    alpha = sol.h
    trace.oracle_success = True
    trace.gamma = sol.gamma
    trace.degraded = sol.gamma > 1
    trace.sum_coeff = sum(alpha)
    if not sivp and trace.sum_coeff != c:
        trace.reason = FAIL_SUM
        return TrialResult(trace)

    clock = time.perf_counter()
    trace.sum_alpha_y_zero = all(
        sum(a * y.y[k] for a, y in zip(alpha, ys)) % N == 0 for k in range(n))
    k_c = 0 if sivp else c
    x0 = [(sum(a * (y.y[k] + x[k]) for a, x, y in zip(alpha, xs, ys)) - k_c * u[k]) % N
          for k in range(n)]
    trace.x0_in_LN = S.contains(x0)
    lifted = [ti + di for ti, di in zip(t, mod_centered([a - b for a, b in zip(x0, t)], N))]
    coeffs = backmap_coefficients(setup.red, lifted)
    x_out = [a + b for a, b in zip(setup.B_lll @ coeffs, shift)]
    if not membership(setup.B, x_out)[0]:
        raise NotInLatticeError("decoded vector failed the membership certificate")
    norm_x0 = Fraction(sum(x * x for x in lifted), setup.red.T ** 2)
    trace.backmap_norm_ok = norm_x0 <= setup.red.det_R() ** 2 * Fraction(n) ** (2 * setup.red.params[0])
    target = [0] * n if sivp else list(v)
    trace.achieved_distance = math.sqrt(sum((a - b) ** 2 for a, b in zip(x_out, target)))
    trace.bound = distance_bound(setup.phi, n, setup.delta, setup.B.det(), constant, sol.gamma)
    trace.theorem_violation = trace.achieved_distance > trace.bound
    trace.success = True
    trace.reason = "ok"
    trace.timings["backmap"] = time.perf_counter() - clock
    return TrialResult(trace, x_out)


def _oracle(cfg: ReductionConfig) -> Oracle:
    return cfg.oracle or bruteforce_oracle(2)


def gdd_reduce_once(B, v: Sequence[int], cfg: ReductionConfig, rng: random.Random,
                    setup: ReductionSetup | None = None) -> TrialResult:
    setup = setup or prepare(B, cfg)
    if len(v) != setup.n:
        raise ValueError(f"target of length {len(v)} for dimension {setup.n}")
    return run_trial(setup, v, rng, _oracle(cfg), cfg.constant)


def default_budget(m: int) -> int:
    return math.ceil(8 * m * m)


def _run_trials(setup: ReductionSetup, v, cfg: ReductionConfig, budget: int, start: int = 0):
    """Yield ``(index, TrialResult)`` in index order, ``cfg.jobs`` trials at a time."""
    oracle = _oracle(cfg)
    jobs = max(1, cfg.jobs)

    def one(i):
        return run_trial(setup, v, trial_rng(cfg.seed, i), oracle, cfg.constant)

    if jobs == 1:
        for i in range(start, start + budget):
            yield i, one(i)
        return
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        for base in range(start, start + budget, jobs):
            idx = list(range(base, min(base + jobs, start + budget)))
            yield from zip(idx, pool.map(one, idx))


@dataclass
class GddResult:
    x_out: list[int]
    trace: ReductionTrace
    trials: int
    tally: Counter
    traces: list[ReductionTrace]


def gdd_reduce(B, v: Sequence[int], cfg: ReductionConfig, setup: ReductionSetup | None = None) -> GddResult:
    """Repeat independent trials until one succeeds.

    Trial ``i`` draws from ``trial_rng(cfg.seed, i)``, so results do not
    depend on ``cfg.jobs``.

    Raises:
        BudgetExhaustedError: every trial failed; carries the FAIL tally.
    """
    setup = setup or prepare(B, cfg)
    budget = cfg.trial_budget or default_budget(setup.m)
    tally: Counter = Counter()
    traces = []
    for i, res in _run_trials(setup, list(v), cfg, budget):
        traces.append(res.trace)
        tally[res.trace.reason] += 1
        if res.trace.success:
            return GddResult(res.x_out, res.trace, i + 1, tally, traces)
    raise BudgetExhaustedError(f"no success in {budget} trials", tally, traces)


@dataclass
class SivpResult:
    vectors: list[list[int]]
    traces: list[ReductionTrace]
    trials: int
    tally: Counter


def sivp_reduce(B, cfg: ReductionConfig, setup: ReductionSetup | None = None) -> SivpResult:
    """Collect decoder outputs at target zero until they span ``n`` dimensions.

    A trial succeeds whenever the oracle does; outputs that do not raise
    the rank (including zero) are discarded.
    """
    setup = setup or prepare(B, cfg)
    budget = cfg.trial_budget or default_budget(setup.m)
    n = setup.n
    vectors: list[list[int]] = []
    kept: list[ReductionTrace] = []
    tally: Counter = Counter()
    trials = 0
    for _, res in _run_trials(setup, None, cfg, budget):
        trials += 1
        tally[res.trace.reason] += 1
        if res.trace.success and rank_exact(vectors + [res.x_out]) > len(vectors):
            vectors.append(res.x_out)
            kept.append(res.trace)
            if len(vectors) == n:
                return SivpResult(vectors, kept, trials, tally)
    raise BudgetExhaustedError(f"rank {len(vectors)} < {n} after {budget} trials", tally, kept)


# ---------------------------------------------------------------------------
# statistics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BlindnessEstimate:
    """TV between oracle inputs under two values of ``c``.

    ``single`` compares one dual coordinate; given ``c`` the ``m``
    coordinates are independent, so the batch distance is at most
    ``1 - (1 - single)^m``.
    """

    single: TvEstimate
    batch_tv: float
    batch_radius: float
    m: int


def oracle_blindness_test(S: SnfBasis, s: float, m: int, trials: int, rng: random.Random,
                          c1: int = 1, c2: int = 2, target: Sequence[int] | None = None) -> BlindnessEstimate:
    """Two-sample TV of ``a = phi3(x).a`` with ``x`` aimed at ``c^-1 t + u``, for ``c1`` vs ``c2``."""
    if S.N > 101 or S.n > 3:
        raise BudgetError("blindness histograms need N <= 101 and n <= 3")
    t = list(target) if target is not None else [(7 * k + 3) % S.N for k in range(S.n)]
    counts = []
    for c in (c1, c2):
        inv = mod_inverse(c, S.N)
        hist: Counter = Counter()
        for _ in range(trials):
            u = sample_ln_uniform(S, rng)
            center = [(inv * ti + ui) % S.N for ti, ui in zip(t, u)]
            x = sample_dgauss_fn(S.N, S.n, s, center, rng, allow_wrap=True)
            hist[phi3(S, x).a] += 1
        counts.append(hist)
    keys = set(counts[0]) | set(counts[1])
    tv = sum(abs(counts[0][k] - counts[1][k]) for k in keys) / (2 * trials)
    radius = 3 * math.sqrt(S.N / trials)
    single = TvEstimate(tv, radius, S.N, trials)
    return BlindnessEstimate(single, 1 - (1 - tv) ** m, min(1.0, m * radius), m)
