"""Command-line entry point: ``snflat <subcommand> ...``.

Exit status is 0 on success, 1 on a domain or input error (with a
``reason=<code>`` line on standard output), 2 on a usage error.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import hashlib
import io
import json
import math
import random
import sys
import time
from fractions import Fraction
from pathlib import Path

from . import __version__
from .errors import BudgetExhaustedError, FormatError, SnflatError
from .gaussian import (
    GaussianParams,
    sample_dgauss_fn,
    sample_dgauss_int,
    smoothing_parameter,
    tv_distance_mod_parallelotope,
)
from .lattice import check_full_rank
from .linalg import hnf, is_lll_reduced, lll, qr
from .reduction import (
    ReductionConfig,
    gdd_reduce,
    oracle_blindness_test,
    prepare,
    run_trial,
    sivp_reduce,
    trial_rng,
)
from .sis import (
    as_delta,
    at_least_scaled_power,
    bruteforce_oracle,
    density_experiment,
    gen_random_instance,
    lll_oracle,
    solve_bruteforce,
    solve_lll,
    verify,
)
from .snf import SnfBasis, phi3, reduce_to_snf, sample_dual_uniform, sample_ln_uniform, validate_snf
from .textio import (
    format_instance,
    format_matrix,
    format_reduction,
    format_solution,
    format_vector,
    parse_instance,
    parse_matrix,
    parse_snf,
    parse_solution,
    parse_vector,
)


class UsageError(Exception):
    """Bad flag combination discovered after argparse."""


# ---------------------------------------------------------------------------
# input helpers
# ---------------------------------------------------------------------------

def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc.strerror}") from exc


def _read_matrix(path: str):
    return parse_matrix(_read(path))


def _read_snf(path: str) -> SnfBasis:
    return parse_snf(_read(path))


def _vector_arg(text: str) -> list:
    return parse_vector(text.strip() + "\n")


def _delta(text: str) -> Fraction:
    try:
        return as_delta(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"invalid delta {text!r}") from exc


def _float_list(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x]


def _oracle(name: str):
    return lll_oracle if name == "lll" else bruteforce_oracle(2)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_hnf(args, out) -> int:
    H, U = hnf(_read_matrix(args.matrix))
    out.write("H\n" + format_matrix(H) + "U\n" + format_matrix(U))
    return 0


def cmd_lll(args, out) -> int:
    B_red, U = lll(_read_matrix(args.matrix), Fraction(args.delta))
    out.write("B\n" + format_matrix(B_red) + "U\n" + format_matrix(U))
    return 0


def cmd_snf_reduce(args, out) -> int:
    B = _read_matrix(args.matrix)
    if args.upper:
        R = B
    else:
        B_lll, _ = lll(check_full_rank(B))
        R = qr(B_lll, args.precision).R
    red = reduce_to_snf(R, args.a, args.b, T=args.T)
    out.write(format_reduction(red))
    return 0


def cmd_snf_phi3(args, out) -> int:
    S = _read_snf(args.snf)
    validate_snf(S.matrix())
    x = [int(v) % S.N for v in _vector_arg(args.x)]
    d = phi3(S, x)
    out.write(f"a={d.a}\n")
    out.write("y=" + format_vector(d.y))
    return 0


def cmd_sample(args, out) -> int:
    rng = random.Random(args.seed)
    if args.kind in ("ln", "dual"):
        if not args.snf:
            raise UsageError(f"--kind {args.kind} needs --snf")
        S = _read_snf(args.snf)
        for _ in range(args.count):
            v = sample_ln_uniform(S, rng) if args.kind == "ln" else list(sample_dual_uniform(S, rng).y)
            out.write(format_vector(v))
        return 0
    if args.s is None:
        raise UsageError(f"--kind {args.kind} needs --s")
    if args.kind == "gauss-int":
        c = Fraction(args.center or "0")
        for _ in range(args.count):
            out.write(f"{sample_dgauss_int(args.s, c, rng)}\n")
        return 0
    if args.N is None:
        raise UsageError("--kind gauss-fn needs --N")
    center = [Fraction(t) for t in args.center.split()] if args.center else [0] * args.n
    for _ in range(args.count):
        out.write(format_vector(sample_dgauss_fn(args.N, len(center), args.s, center, rng, args.allow_wrap)))
    return 0


def cmd_smoothing(args, out) -> int:
    res = smoothing_parameter(_read_matrix(args.matrix), args.epsilon)
    out.write(f"{res.epsilon!r} {res.s_star!r} {res.dual_sum!r}\n")
    return 0


def cmd_sis_gen(args, out) -> int:
    inst = gen_random_instance(args.N, args.delta, random.Random(args.seed), not args.nonhom)
    out.write(format_instance(inst))
    return 0


def cmd_sis_solve(args, out) -> int:
    inst = parse_instance(_read(args.instance))
    rng = random.Random(args.seed)
    if args.solver == "lll":
        sol = solve_lll(inst)
    else:
        sol = solve_bruteforce(inst, args.bound, rng)
    if sol is None:
        out.write("reason=no-solution\n")
        return 1
    out.write(format_solution(sol))
    return 0


def cmd_sis_verify(args, out) -> int:
    inst = parse_instance(_read(args.instance))
    h = parse_solution(_read(args.solution))
    verdict = verify(inst, h, args.bound)
    word = "accept" if verdict.accepted else "reject"
    out.write(f"{word}\nreason={verdict.reason}\ngamma={verdict.gamma!r}\n")
    return 0 if verdict.accepted else 1


def _reduction_config(args) -> ReductionConfig:
    return ReductionConfig(
        delta=args.delta, phi=args.phi, phi_mode=args.phi_mode, trial_budget=args.trials,
        seed=args.seed, oracle=_oracle(args.oracle), constant=args.constant, jobs=args.jobs,
    )


def cmd_gdd(args, out) -> int:
    B = _read_matrix(args.basis)
    v = parse_vector(_read(args.target))
    if len(v) != B.rows or any(not isinstance(x, int) for x in v):
        raise FormatError(f"target must be {B.rows} integers", 1)
    cfg = _reduction_config(args)
    try:
        res = gdd_reduce(B, v, cfg)
    except BudgetExhaustedError as exc:
        out.write("".join(f"fail_{k}={n}\n" for k, n in sorted(exc.tally.items())))
        raise
    out.write(format_vector(res.x_out))
    out.write("\n".join(res.trace.lines()) + "\n")
    out.write(f"trials={res.trials}\n")
    return 0


def cmd_sivp(args, out) -> int:
    B = _read_matrix(args.basis)
    cfg = _reduction_config(args)
    res = sivp_reduce(B, cfg)
    for v in res.vectors:
        out.write(format_vector(v))
    for i, tr in enumerate(res.traces):
        out.write(f"vector={i} achieved_distance={tr.achieved_distance!r} bound={tr.bound!r} "
                  f"theorem_violation={tr.theorem_violation}\n")
    out.write(f"trials={res.trials}\n")
    return 0


# ---------------------------------------------------------------------------
# bench
# ---------------------------------------------------------------------------

def _snf_from_args(args) -> SnfBasis:
    if args.snf:
        return _read_snf(args.snf)
    if args.N is None:
        raise UsageError("give --snf FILE or --N with --b")
    return SnfBasis(args.N, tuple(int(x) for x in (args.b or "").split(",") if x))


def bench_density(args, out) -> int:
    stats = density_experiment(args.N, args.delta, args.trials, random.Random(args.seed), as_delta(args.alpha))
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["trial", "N", "n", "lambda1_sq", "lambda1", "det", "dense"])
    for i, (l2, d) in enumerate(zip(stats.lambda1_sq, stats.determinants)):
        dense = at_least_scaled_power(l2, stats.alpha, stats.n, stats.delta)
        w.writerow([i, stats.N, stats.n, l2, f"{math.sqrt(l2):.6f}", d, int(dense)])
    return 0


def bench_uniformity(args, out) -> int:
    B = _read_matrix(args.basis)
    eta = smoothing_parameter(B, args.epsilon).s_star
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["ratio", "s", "tv", "radius", "classes", "trials"])
    for k, ratio in enumerate(_float_list(args.ratios)):
        est = tv_distance_mod_parallelotope(B, GaussianParams(ratio * eta), args.trials,
                                            trial_rng(args.seed, k))
        w.writerow([ratio, f"{ratio * eta:.6f}", f"{est.tv:.6f}", f"{est.radius:.6f}", est.classes, est.trials])
    return 0


def bench_blindness(args, out) -> int:
    S = _snf_from_args(args)
    eta = smoothing_parameter(S.matrix(), args.epsilon).s_star
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["ratio", "s", "m", "c1", "c2", "single_tv", "single_radius", "batch_tv", "batch_radius",
                "two_eps_m"])
    for k, ratio in enumerate(_float_list(args.ratios)):
        est = oracle_blindness_test(S, ratio * eta, args.m, args.trials, trial_rng(args.seed, k),
                                    args.c1, args.c2)
        w.writerow([ratio, f"{ratio * eta:.6f}", args.m, args.c1, args.c2, f"{est.single.tv:.6f}",
                    f"{est.single.radius:.6f}", f"{est.batch_tv:.6f}", f"{est.batch_radius:.6f}",
                    f"{2 * args.epsilon * args.m:.6f}"])
    return 0


def bench_success_rate(args, out) -> int:
    B = _read_matrix(args.basis)
    v = _vector_arg(args.target) if args.target else [0] * B.rows
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["delta", "m", "trials", "successes", "rate", "kappa"])
    for delta in args.deltas.split(","):
        cfg = ReductionConfig(delta=delta, phi_mode=args.phi_mode, seed=args.seed, oracle=_oracle(args.oracle))
        setup = prepare(B, cfg)
        oracle = _oracle(args.oracle)
        wins = sum(run_trial(setup, v, trial_rng(args.seed, i), oracle).trace.success
                   for i in range(args.trials))
        rate = wins / args.trials
        w.writerow([delta, setup.m, args.trials, wins, f"{rate:.6f}", f"{rate * setup.m ** 2:.6f}"])
    return 0


# ---------------------------------------------------------------------------
# selftest
# ---------------------------------------------------------------------------

def _suite_linalg() -> bool:
    from .linalg import Matrix, det_exact, is_hnf, is_unimodular

    rng = random.Random(11)
    for _ in range(20):
        A = Matrix([[rng.randint(-20, 20) for _ in range(3)] for _ in range(3)])
        if det_exact(A) == 0:
            continue
        H, U = hnf(A)
        B, V = lll(A)
        if not (is_hnf(H) and A @ U == H and is_unimodular(U)):
            return False
        if not (A @ V == B and is_unimodular(V) and is_lll_reduced(B)):
            return False
    return True


def _suite_lattice() -> bool:
    from .lattice import parallelotope_points

    S = SnfBasis(7, (3,))
    return len(parallelotope_points(S.matrix())) == 7


def _suite_snf() -> bool:
    from .snf import backmap

    S = SnfBasis(7, (3,))
    for x0 in range(7):
        for x1 in range(7):
            y = phi3(S, [x0, x1]).y
            if not S.contains([x0 + y[0], x1 + y[1]]):
                return False
    red = reduce_to_snf([[2, 1], [0, 3]])
    validate_snf(red.B_snf)
    return backmap(red, red.basis.col(0), check_norm=False) == [2, 0]


def _suite_gaussian() -> bool:
    eps = 2 * math.fsum(math.exp(-math.pi * k * k) for k in range(1, 8))
    return abs(smoothing_parameter([[1]], eps).s_star - 1) < 1e-4


def _suite_sis() -> bool:
    rng = random.Random(5)
    for _ in range(50):
        inst = gen_random_instance(13, Fraction(1, 2), rng)
        sol = solve_bruteforce(inst)
        if sol is None or not verify(inst, sol).accepted:
            return False
    return True


def _suite_reduction() -> bool:
    cfg = ReductionConfig(delta=Fraction(1, 2), phi_mode="exact", seed=3)
    res = gdd_reduce([[2, 1], [0, 3]], [5, 1], cfg)
    return res.trace.success and not res.trace.theorem_violation


SUITES = [
    ("exact-linalg", _suite_linalg),
    ("lattice-core", _suite_lattice),
    ("snf-core", _suite_snf),
    ("gaussian", _suite_gaussian),
    ("sis", _suite_sis),
    ("reduction", _suite_reduction),
]


def cmd_selftest(args, out) -> int:
    ok = True
    for name, suite in SUITES:
        try:
            passed = suite()
        except SnflatError:
            passed = False
        ok &= passed
        out.write(f"{'PASS' if passed else 'FAIL'} {name}\n")
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# parser and manifest
# ---------------------------------------------------------------------------

def _add_reduction_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--basis", required=True, help="integer basis, matrix format")
    p.add_argument("--delta", type=_delta, default=Fraction(1, 2), help="SIS exponent (default 1/2)")
    p.add_argument("--phi", type=float, help="upper bound on the smoothing parameter")
    p.add_argument("--phi-mode", choices=["estimate", "exact"], default="estimate",
                   help="how to obtain Phi when --phi is absent")
    p.add_argument("--trials", type=int, help="trial budget (default ceil(8 m^2))")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--oracle", choices=["bruteforce", "lll"], default="bruteforce")
    p.add_argument("--constant", type=float, default=8.0, help="explicit constant in the distance bound")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="snflat", description="Systematic-normal-form lattice toolkit.")
    parser.add_argument("--version", action="version", version=f"snflat {__version__}")
    parser.add_argument("--manifest", help="write a JSON run manifest to this path")
    parser.add_argument("--replay", help="re-run the command recorded in a manifest and compare outputs")
    parser.add_argument("--jobs", type=int, default=1, help="parallel trials for gdd/sivp")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("hnf", help="Hermite normal form H = A U")
    p.add_argument("--matrix", required=True)
    p.set_defaults(func=cmd_hnf)

    p = sub.add_parser("lll", help="LLL reduction of the columns")
    p.add_argument("--matrix", required=True)
    p.add_argument("--delta", default="3/4", help="Lovasz parameter (default 3/4)")
    p.set_defaults(func=cmd_lll)

    p = sub.add_parser("snf-reduce", help="reduce a basis to systematic normal form")
    p.add_argument("--matrix", required=True)
    p.add_argument("--upper", action="store_true", help="input is already the upper-triangular R")
    p.add_argument("--a", type=int, default=1)
    p.add_argument("--b", type=int, default=2)
    p.add_argument("--T", type=int, help="fixed scale instead of the certified search")
    p.add_argument("--precision", type=int, default=256)
    p.set_defaults(func=cmd_snf_reduce)

    p = sub.add_parser("snf-phi3", help="dual point y with x + y in L_N")
    p.add_argument("--snf", required=True)
    p.add_argument("--x", required=True, help='vector, e.g. "2 1"')
    p.set_defaults(func=cmd_snf_phi3)

    p = sub.add_parser("sample", help="draw samples, one per line")
    p.add_argument("--kind", choices=["ln", "dual", "gauss-int", "gauss-fn"], default="ln")
    p.add_argument("--snf")
    p.add_argument("--s", type=float)
    p.add_argument("--center", help='center, e.g. "0 0" (gauss-fn) or "3/2" (gauss-int)')
    p.add_argument("--N", type=int)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--allow-wrap", action="store_true")
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("smoothing", help="print 'epsilon s_star dual_sum'")
    p.add_argument("--matrix", required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.set_defaults(func=cmd_smoothing)

    p = sub.add_parser("sis", help="rank-1 SIS instances")
    sis_sub = p.add_subparsers(dest="sis_command")
    q = sis_sub.add_parser("gen")
    q.add_argument("--N", type=int, required=True)
    q.add_argument("--delta", type=_delta, default=Fraction(1, 2))
    q.add_argument("--nonhom", action="store_true")
    q.add_argument("--seed", type=int, default=0)
    q.set_defaults(func=cmd_sis_gen)
    q = sis_sub.add_parser("solve")
    q.add_argument("--instance", required=True)
    q.add_argument("--solver", choices=["bruteforce", "lll"], default="bruteforce")
    q.add_argument("--bound", type=int)
    q.add_argument("--seed", type=int)
    q.set_defaults(func=cmd_sis_solve)
    q = sis_sub.add_parser("verify")
    q.add_argument("--instance", required=True)
    q.add_argument("--solution", required=True)
    q.add_argument("--bound", type=int)
    q.set_defaults(func=cmd_sis_verify)

    p = sub.add_parser("gdd", help="decode a target through the SIS oracle")
    _add_reduction_flags(p)
    p.add_argument("--target", required=True)
    p.set_defaults(func=cmd_gdd)

    p = sub.add_parser("sivp", help="n independent short vectors through the SIS oracle")
    _add_reduction_flags(p)
    p.set_defaults(func=cmd_sivp)

    p = sub.add_parser("bench", help="statistical benches, CSV on standard output")
    bench = p.add_subparsers(dest="bench_command")
    q = bench.add_parser("density", help="columns: trial,N,n,lambda1_sq,lambda1,det,dense")
    q.add_argument("--N", type=int, required=True)
    q.add_argument("--delta", type=_delta, default=Fraction(1, 2))
    q.add_argument("--trials", type=int, default=200)
    q.add_argument("--alpha", default="1/4")
    q.add_argument("--seed", type=int, default=0)
    q.set_defaults(func=bench_density)
    q = bench.add_parser("uniformity", help="columns: ratio,s,tv,radius,classes,trials")
    q.add_argument("--basis", required=True)
    q.add_argument("--epsilon", type=float, default=0.01)
    q.add_argument("--ratios", default="0.1,0.5,1,2")
    q.add_argument("--trials", type=int, default=20000)
    q.add_argument("--seed", type=int, default=0)
    q.set_defaults(func=bench_uniformity)
    q = bench.add_parser("blindness",
                         help="columns: ratio,s,m,c1,c2,single_tv,single_radius,batch_tv,batch_radius,two_eps_m")
    q.add_argument("--snf")
    q.add_argument("--N", type=int)
    q.add_argument("--b", help="comma-separated first-row entries")
    q.add_argument("--epsilon", type=float, default=0.01)
    q.add_argument("--m", type=int, default=6)
    q.add_argument("--ratios", default="0.1,1.1")
    q.add_argument("--c1", type=int, default=1)
    q.add_argument("--c2", type=int, default=2)
    q.add_argument("--trials", type=int, default=20000)
    q.add_argument("--seed", type=int, default=0)
    q.set_defaults(func=bench_blindness)
    q = bench.add_parser("success-rate", help="columns: delta,m,trials,successes,rate,kappa")
    q.add_argument("--basis", required=True)
    q.add_argument("--target", help='target vector, e.g. "5 1" (default zero)')
    q.add_argument("--deltas", default="1/2")
    q.add_argument("--phi-mode", choices=["estimate", "exact"], default="exact")
    q.add_argument("--oracle", choices=["bruteforce", "lll"], default="bruteforce")
    q.add_argument("--trials", type=int, default=200)
    q.add_argument("--seed", type=int, default=0)
    q.set_defaults(func=bench_success_rate)

    p = sub.add_parser("selftest", help="run the pinned-seed invariant suites")
    p.set_defaults(func=cmd_selftest)
    return parser


def _input_paths(args) -> list[str]:
    keys = ("matrix", "snf", "basis", "target", "instance", "solution")
    paths = []
    for k in keys:
        val = getattr(args, k, None)
        if val and Path(val).is_file():
            paths.append(val)
    return paths


def _digest(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def _execute(argv: list[str], stdout, stderr) -> tuple[int, str, dict]:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.replay:
        return _replay(args.replay, stdout, stderr)
    if not getattr(args, "func", None):
        parser.print_usage(stderr)
        return 2, "", {}
    buf = io.StringIO()
    started = time.time()
    try:
        code = args.func(args, buf)
    except UsageError as exc:
        stderr.write(f"snflat: error: {exc}\n")
        return 2, "", {}
    except (SnflatError, ValueError, ArithmeticError) as exc:
        reason = getattr(exc, "reason", "invalid-input")
        buf.write(f"reason={reason}\n")
        stderr.write(f"snflat: {exc}\n")
        code = 1
    output = buf.getvalue()
    stdout.write(output)
    manifest = {
        "tool": "snflat",
        "version": __version__,
        "subcommand": args.command,
        "argv": argv,
        "flags": {k: (str(v) if not isinstance(v, (int, float, bool, type(None))) else v)
                  for k, v in vars(args).items() if k not in ("func", "manifest", "replay")},
        "seed": getattr(args, "seed", None),
        "inputs": {p: _digest(_read(p)) for p in _input_paths(args)},
        "output_sha256": _digest(output),
        "exit_code": code,
        "started": started,
        "finished": time.time(),
    }
    if args.manifest:
        Path(args.manifest).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return code, output, manifest


def _strip_manifest_flags(argv: list[str]) -> list[str]:
    out, skip = [], False
    for tok in argv:
        if skip:
            skip = False
            continue
        if tok in ("--manifest", "--replay"):
            skip = True
            continue
        if tok.startswith(("--manifest=", "--replay=")):
            continue
        out.append(tok)
    return out


def _replay(path: str, stdout, stderr) -> tuple[int, str, dict]:
    try:
        recorded = json.loads(_read(path))
    except json.JSONDecodeError as exc:
        raise FormatError(f"manifest is not JSON: {exc.msg}", exc.lineno) from exc
    for p, digest in recorded.get("inputs", {}).items():
        if _digest(_read(p)) != digest:
            stdout.write("reason=input-changed\n")
            stderr.write(f"snflat: input {p} differs from the manifest\n")
            return 1, "", {}
    code, output, manifest = _execute(_strip_manifest_flags(recorded["argv"]), stdout, stderr)
    if manifest and manifest["output_sha256"] != recorded["output_sha256"]:
        stdout.write("reason=replay-mismatch\n")
        return 1, output, manifest
    return code, output, manifest


def run(argv: list[str] | None = None, stdout=None, stderr=None) -> int:
    """Run the CLI and return the exit code instead of exiting."""
    argv = list(sys.argv[1:] if argv is None else argv)
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        with contextlib.redirect_stderr(stderr):
            code, _, _ = _execute(argv, stdout, stderr)
    except SystemExit as exc:  # argparse usage errors and --help
        return int(exc.code or 0)
    except (SnflatError, ValueError) as exc:
        stdout.write(f"reason={getattr(exc, 'reason', 'invalid-input')}\n")
        stderr.write(f"snflat: {exc}\n")
        return 1
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
