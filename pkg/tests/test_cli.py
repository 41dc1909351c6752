import json

import pytest

from dmsuc import data_path
from dmsuc.cli import main
from dmsuc.milp.mps import read_mps
from dmsuc.tree_builder import load_library

CONFIG = str(data_path("toy_config.yaml"))
SYSTEM = str(data_path("toy_2bus.yaml"))
LIBRARY = str(data_path("toy_library"))


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_build_library_from_config_with_overrides(tmp_path, capsys):
    code, out, _ = run(capsys, "build-library", "--config", CONFIG, "--out", str(tmp_path / "lib"),
                       "--epochs", "2", "--N", "200")
    assert code == 0 and "4 trees (2 epochs x 2 bins)" in out
    lib = load_library(tmp_path / "lib")
    assert lib.epochs == [0, 1]
    assert lib.params["N"] == 200 and lib.params["T"] == 3


def test_build_library_defaults_to_a_phase_cycle(tmp_path, capsys):
    code, _, _ = run(capsys, "build-library", "--data", str(data_path("toy_load_history.csv")),
                     "--out", str(tmp_path / "lib"), "--P", "24", "--T", "6", "--c", "1",
                     "--N", "50", "--structure", "2,1,1,1,1")
    assert code == 0
    lib = load_library(tmp_path / "lib")
    assert lib.epochs == [0, 1, 2, 3]
    tree = lib.entries[(0, 0)]
    assert tree.n_nodes == 1 + 2 * 5


def test_update_library_writes_copy(tmp_path, capsys):
    out = tmp_path / "lib2"
    code, text, _ = run(capsys, "update-library", "--config", CONFIG, "--epoch", "1",
                        "--out", str(out))
    assert code == 0 and "updated tree (1," in text
    before, after = load_library(LIBRARY), load_library(out)
    changed = [k for k in before.entries if before.entries[k] != after.entries[k]]
    assert len(changed) == 1 and changed[0][0] == 1


def test_solve_then_validate_solution(tmp_path, capsys):
    sol, tree = tmp_path / "s.json", tmp_path / "t.json"
    code, out, _ = run(capsys, "solve", "--system", SYSTEM, "--library", LIBRARY,
                       "--epoch", "2", "--present", "95", "--out", str(sol),
                       "--tree-out", str(tree), "--export-mps", str(tmp_path / "m.mps"))
    assert code == 0 and out.startswith("status optimal")
    assert json.loads(sol.read_text())["status"] == "optimal"
    assert read_mps(tmp_path / "m.mps").n_integer > 0
    code, out, _ = run(capsys, "validate", "--system", SYSTEM, "--tree", str(tree),
                       "--solution", str(sol))
    assert code == 0 and "3 item(s) valid" in out


def test_solve_prints_threshold_advice(tmp_path, capsys):
    code, _, err = run(capsys, "solve", "--system", SYSTEM, "--library", LIBRARY,
                       "--present", "95", "--backend", "internal",
                       "--binary-threshold", "2")
    assert code == 0 and "consider --backend highs" in err


def test_export_mps(tmp_path, capsys):
    code, out, _ = run(capsys, "export-mps", "--system", SYSTEM, "--library", LIBRARY,
                       "--present", "90", "--out", str(tmp_path / "x.mps"))
    assert code == 0
    lp = read_mps(tmp_path / "x.mps")
    assert f"{lp.n_vars} columns ({lp.n_integer} integer)" in out


def test_simulate_writes_report(tmp_path, capsys):
    code, out, _ = run(capsys, "simulate", "--config", CONFIG, "--epochs", "2",
                       "--out", str(tmp_path / "rep"), "--learn")
    assert code == 0 and "2 epochs" in out
    summary = json.loads((tmp_path / "rep" / "summary.json").read_text())
    assert summary["epochs"] == 2
    assert (tmp_path / "rep" / "library" / "index.json").exists()


def test_simulate_deterministic(tmp_path, capsys):
    code, _, _ = run(capsys, "simulate", "--config", CONFIG, "--deterministic", "--epochs", "2",
                     "--out", str(tmp_path / "rep"))
    assert code == 0
    doc = json.loads((tmp_path / "rep" / "epoch_000_solution.json").read_text())
    assert len(doc["nodes"]) == 3  # one node per stage


def test_validate_reports_problems(tmp_path, capsys):
    bad = tmp_path / "gap.csv"
    bad.write_text("timestamp,load_mw\n0,1\n1,2\n3,4\n")
    code, out, _ = run(capsys, "validate", "--timeseries", str(bad), "--library", LIBRARY)
    assert code == 1 and "missing timestamp 2" in out


@pytest.mark.parametrize("argv,fragment", [
    (["solve", "--system", SYSTEM], "give --tree or --library"),
    (["solve", "--system", SYSTEM, "--library", LIBRARY], "--present is required"),
    (["build-library", "--data", "nope.csv", "--out", "x"], "does not exist"),
    (["validate"], "nothing to validate"),
    (["simulate", "--config", CONFIG, "--pricing", CONFIG, "--out", "x"], "unknown pricing"),
])
def test_errors_exit_one(capsys, argv, fragment):
    code, _, err = run(capsys, *argv)
    assert code == 1
    assert err.startswith(f"dmsuc {argv[0]}: error:") and fragment in err


def test_usage_errors_exit_two(capsys):
    with pytest.raises(SystemExit) as info:
        main(["solve", "--mip-gap", "lots"])
    assert info.value.code == 2
    with pytest.raises(SystemExit) as info:
        main([])
    assert info.value.code == 2
