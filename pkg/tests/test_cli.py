import io
import json
import shutil
from pathlib import Path

import pytest

from snflat import __version__
from snflat.cli import run

HERE = Path(__file__).parent
DATA = HERE / "data"
GOLDEN = HERE / "golden"


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run([str(a) for a in argv], out, err)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    for f in DATA.iterdir():
        shutil.copy(f, tmp_path / f.name)
    monkeypatch.chdir(tmp_path)
    return tmp_path


GOLDEN_RUNS = [
    ("snf_reduce.txt", ["snf-reduce", "--matrix", "basis_2x2.txt"]),
    ("gdd.txt", ["gdd", "--basis", "basis_2x2.txt", "--target", "target.txt", "--phi-mode", "exact",
                 "--seed", "4"]),
    ("bench_density.txt", ["bench", "density", "--N", "13", "--trials", "20", "--seed", "1"]),
]


@pytest.mark.parametrize("golden,argv", GOLDEN_RUNS)
def test_golden(workdir, golden, argv):
    code, out, _ = call(*argv)
    assert code == 0
    assert out == (GOLDEN / golden).read_text()


@pytest.mark.parametrize("golden,argv", GOLDEN_RUNS)
def test_manifest_replay(workdir, golden, argv):
    code, out, _ = call("--manifest", "run.json", *argv)
    assert code == 0
    manifest = json.loads(Path("run.json").read_text())
    assert manifest["version"] == __version__
    assert manifest["subcommand"] == argv[0]
    assert manifest["exit_code"] == 0
    code, replayed, _ = call("--replay", "run.json")
    assert code == 0 and replayed == out


def test_replay_detects_changed_input(workdir):
    call("--manifest", "run.json", "hnf", "--matrix", "basis_2x2.txt")
    Path("basis_2x2.txt").write_text("2 2\n1 0\n0 1\n")
    code, out, _ = call("--replay", "run.json")
    assert code == 1 and "reason=input-changed" in out


def test_snf_phi3_example(workdir):
    code, out, _ = call("snf-phi3", "--snf", "snf_7.txt", "--x", "2 1")
    assert code == 0 and out == "a=5\ny=5 6\n"


def test_selftest():
    code, out, _ = call("selftest")
    assert code == 0
    lines = out.splitlines()
    assert len(lines) == 6 and all(line.startswith("PASS ") for line in lines)


def test_version(capsys):
    assert call("--version")[0] == 0


class TestExitCodes:
    def test_usage(self):
        assert call()[0] == 2
        assert call("nonsense")[0] == 2
        assert call("sis")[0] == 2
        assert call("hnf")[0] == 2

    def test_missing_file(self, workdir):
        code, out, _ = call("hnf", "--matrix", "absent.txt")
        assert code == 1 and out.strip().startswith("reason=")

    def test_bad_format_reports_line(self, workdir):
        Path("bad.txt").write_text("2 2\n1 x\n0 1\n")
        code, out, err = call("hnf", "--matrix", "bad.txt")
        assert code == 1 and "reason=format" in out and "line 2" in err

    def test_domain_error(self, workdir):
        Path("sing.txt").write_text("2 2\n1 2\n2 4\n")
        code, out, _ = call("lll", "--matrix", "sing.txt")
        assert code == 1 and "reason=rank-deficient" in out

    def test_sis_verify_reject(self, workdir):
        Path("inst.txt").write_text("5 1/2 3 1\n1 2 3\n")
        Path("h.txt").write_text("1 0 0\n")
        code, out, _ = call("sis", "verify", "--instance", "inst.txt", "--solution", "h.txt")
        assert code == 1 and "reason=congruence" in out

    def test_density_over_dimension_cap(self, workdir):
        code, out, _ = call("bench", "density", "--N", "101", "--trials", "2")
        assert code == 1 and "reason=budget" in out


def test_sis_round_trip(workdir):
    code, inst, _ = call("sis", "gen", "--N", "31", "--seed", "3")
    assert code == 0
    Path("inst.txt").write_text(inst)
    for solver in ("bruteforce", "lll"):
        code, sol, _ = call("sis", "solve", "--instance", "inst.txt", "--solver", solver, "--seed", "1")
        assert code == 0
        Path("h.txt").write_text(sol)
        code, out, _ = call("sis", "verify", "--instance", "inst.txt", "--solution", "h.txt",
                            "--bound", "1000")
        assert code == 0 and out.startswith("accept")


def test_samplers(workdir):
    code, out, _ = call("sample", "--kind", "ln", "--snf", "snf_7.txt", "--count", "5", "--seed", "2")
    assert code == 0 and len(out.splitlines()) == 5
    for line in out.splitlines():
        x1, x2 = map(int, line.split())
        assert (x1 - 3 * x2) % 7 == 0
    code, out, _ = call("sample", "--kind", "gauss-fn", "--N", "101", "--n", "2", "--s", "3",
                        "--center", "0 50", "--count", "3")
    assert code == 0 and len(out.splitlines()) == 3
    code, out, _ = call("sample", "--kind", "gauss-fn", "--N", "101", "--s", "30", "--center", "0")
    assert code == 1 and "reason=wrap-precision" in out


def test_bench_csv_headers(workdir):
    code, out, _ = call("bench", "uniformity", "--basis", "basis_2x2.txt", "--trials", "2000")
    rows = out.splitlines()
    assert code == 0 and rows[0] == "ratio,s,tv,radius,classes,trials" and len(rows) == 5
    tvs = [float(r.split(",")[2]) for r in rows[1:]]
    assert tvs[0] > tvs[-1]
    code, out, _ = call("bench", "blindness", "--N", "101", "--b", "45", "--trials", "500",
                        "--c1", "2", "--c2", "2", "--ratios", "1.1")
    assert code == 0 and len(out.splitlines()) == 2
    code, out, _ = call("bench", "success-rate", "--basis", "basis_2x2.txt", "--trials", "20")
    assert code == 0 and out.splitlines()[0] == "delta,m,trials,successes,rate,kappa"


def test_gdd_jobs_match(workdir):
    argv = ["gdd", "--basis", "basis_2x2.txt", "--target", "target.txt", "--phi-mode", "exact", "--seed", "4"]
    assert call(*argv)[1] == call("--jobs", "3", *argv)[1]


ONE_BY_ONE = [
    ["hnf", "--matrix", "basis_1x1.txt"],
    ["lll", "--matrix", "basis_1x1.txt"],
    ["snf-reduce", "--matrix", "basis_1x1.txt"],
    ["snf-phi3", "--snf", "snf_1.txt", "--x", "4"],
    ["sample", "--kind", "ln", "--snf", "snf_1.txt", "--count", "2"],
    ["sample", "--kind", "dual", "--snf", "snf_1.txt", "--count", "2"],
    ["smoothing", "--matrix", "basis_1x1.txt", "--epsilon", "0.01"],
    ["gdd", "--basis", "basis_1x1.txt", "--target", "target_1.txt", "--phi-mode", "exact"],
    ["sivp", "--basis", "basis_1x1.txt", "--phi-mode", "exact"],
    ["bench", "uniformity", "--basis", "basis_1x1.txt", "--trials", "200"],
    ["bench", "blindness", "--snf", "snf_1.txt", "--trials", "200"],
    ["bench", "success-rate", "--basis", "basis_1x1.txt", "--trials", "5"],
]


@pytest.mark.parametrize("argv", ONE_BY_ONE, ids=lambda a: " ".join(a[:2]))
def test_one_dimensional_lattice(workdir, argv):
    code, out, _ = call(*argv)
    # Either a result or a structured domain error, never a crash or usage error.
    assert code in (0, 1)
    if code == 1:
        assert out.splitlines()[-1].startswith("reason=")
