import json
import math

import numpy as np
import pytest

from irg.bounds import exact_connectivity_finite, gilbert_connectivity_exact
from irg.cli import main
from irg.graph import connected_components, parse_region
from irg.kernel import Block, Constant, Counterexample, TorusBand, TorusProfile
from irg.sampler import read_edge_list, sample_graph
from irg.space import FiniteWeighted, UnitInterval, UnitTorus


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv)
    assert code == 0, err
    return json.loads(out)


def test_oracle_gilbert(capsys):
    code, out, _ = run(capsys, "oracle", "gilbert", "--n", 2, "--p", 0.5)
    assert code == 0 and out.strip() == "0.5"
    _, out, _ = run(capsys, "oracle", "gilbert", "--n", 40, "--p", 0.1)
    assert float(out) == gilbert_connectivity_exact(40, 0.1)


def test_oracle_finite(capsys):
    _, out, _ = run(capsys, "oracle", "finite", "--space", "finite:weights=[0.4,0.6]",
                    "--kernel", "block:matrix=[[2,1],[1,3]]", "--n", 5)
    k = Block([[2.0, 1.0], [1.0, 3.0]])
    assert float(out) == exact_connectivity_finite(FiniteWeighted([0.4, 0.6]), k, 5)
    code, _, err = run(capsys, "oracle", "finite", "--space", "interval", "--kernel", "constant:c=1", "--n", 3)
    assert code == 1 and err.startswith("irg-error:")


def test_kernel_info_constant(capsys):
    d = run_json(capsys, "kernel-info", "--kernel", "constant:c=2")
    assert d["lambda_star"] == 2.0 and d["lambda2_sup"] == 2.0 and d["l2"] is True


def test_kernel_info_counterexample(capsys):
    d = run_json(capsys, "kernel-info", "--kernel", "counterexample:c=2")
    assert d["lambda_star"] == pytest.approx(1.0) and d["l2"] is False
    assert d["lambda2_sup"] == "inf"


def test_kernel_info_on_finite_space(capsys):
    d = run_json(capsys, "kernel-info", "--kernel", "block:matrix=[[3,1],[1,3]]", "--space", "finite:weights=[0.5,0.5]")
    assert d["lambda_star"] == 2.0


def test_bounds_formulas(capsys):
    from irg import bounds

    d = run_json(capsys, "bounds", "--formula", "small-k", "--n", 1000, "--k", 1, "--lambda-star", 1, "--lambda2", 1)
    assert d["formula"] == "small-k" and d["value"] == bounds.cut_bound_small_k(bounds.BoundInputs(1000, 1, 1.0, 1.0))
    d = run_json(capsys, "bounds", "--formula", "large-k", "--n", 1000, "--k", 500, "--lambda-star", 2, "--lambda2", 2)
    assert d["value"] == bounds.cut_bound_large_k(bounds.BoundInputs(1000, 500, 2.0, 2.0))
    d = run_json(capsys, "bounds", "--formula", "delta", "--lambda-star", 1, "--lambda2", 1)
    assert d["value"] == bounds.min_component_fraction(1.0, 1.0)
    d = run_json(capsys, "bounds", "--formula", "isolated-lb", "--kernel", "constant:c=0.5", "--n", 100, "--threshold", 1)
    assert d["value"] == pytest.approx(9.9638, abs=5e-5)
    d = run_json(capsys, "bounds", "--formula", "rate", "--t", 0.5)
    assert d["value"] == pytest.approx(0.5 * math.log(0.5) + 0.5, rel=1e-12)
    assert d["inputs"] == {"t": 0.5}


def test_bounds_missing_inputs(capsys):
    code, _, err = run(capsys, "bounds", "--formula", "large-k", "--n", 10)
    assert code == 1 and err.startswith("irg-error:") and "--k" in err


def test_partition_command(capsys):
    d = run_json(capsys, "partition", "--kernel", "torus_band:c=4,r=0.25", "--m", 4)
    assert d["m"] == 4 and len(d["cells"]) == 16
    assert d["main_component"]["measure"] == 1.0
    assert len(d["edges"]) == 16 * 3
    d = run_json(capsys, "partition", "--kernel", "constant:c=1", "--m", 5, "--probe")
    assert d["verdict"] == "irreducible-compatible" and d["first_level"] == 1
    d = run_json(capsys, "partition", "--kernel", "block:matrix=[[1,0],[0,1]]", "--space", "finite:weights=[0.5,0.5]",
                 "--m", 1, "--probe")
    assert d["verdict"] == "reducible-evidence" and d["split"] == [0.5, 0.5]
    d = run_json(capsys, "partition", "--kernel", "torus_band:c=4,r=0.25", "--m", 3, "--method", "grid")
    assert d["approximate"] is True


def test_sample_and_analyze(capsys, tmp_path):
    out = tmp_path / "g.txt"
    d = run_json(capsys, "sample", "--kernel", "constant:c=2", "--n", 50, "--seed", 7, "--out", out)
    assert d["seed"] == 7 and d["n"] == 50
    a = run_json(capsys, "analyze", out)
    assert a["seed"] == 7
    expect = connected_components(sample_graph(UnitInterval(), Constant(2.0), 50, 7)).to_dict()
    assert {k: a[k] for k in expect} == expect
    r = run_json(capsys, "analyze", out, "--region", "x<0.5")
    assert "isolated_in_region" in r


def test_seed_printed_when_not_given(capsys, tmp_path):
    d = run_json(capsys, "sample", "--kernel", "constant:c=2", "--n", 20, "--out", tmp_path / "g.txt")
    assert 0 <= d["seed"] < 2**64
    assert read_edge_list(tmp_path / "g.txt").seed == d["seed"]
    w = run_json(capsys, "window", "--n", 20, "--reps", 5)
    assert 0 <= w["seed"] < 2**64
    c = run_json(capsys, "counterexample", "--c", 4, "--n", 100, "--reps", 3)
    assert 0 <= c["seed"] < 2**64


CONFIGS = [
    ("interval", "constant:c=1.5", UnitInterval(), Constant(1.5)),
    ("torus", "torus_band:c=3,r=0.2", UnitTorus(), TorusBand(3.0, 0.2)),
    ("torus", "torus_profile:breakpoints=[0.1],values=[4,0.5]", UnitTorus(), TorusProfile((0.1,), (4.0, 0.5))),
    ("interval", "counterexample:c=4", UnitInterval(), Counterexample(4.0)),
    ("finite:weights=[0.3,0.7]", "block:matrix=[[2,0.5],[0.5,1]]", FiniteWeighted([0.3, 0.7]),
     Block([[2.0, 0.5], [0.5, 1.0]])),
]


def test_round_trip_random_configurations(capsys, tmp_path):
    rng = np.random.default_rng(12)
    out = tmp_path / "g.txt"
    for t in range(100):
        space_text, kernel_text, space, kernel = CONFIGS[t % len(CONFIGS)]
        n = int(rng.integers(1, 300))
        seed = int(rng.integers(0, 2**63))
        mode = ["naive", "auto"][t % 2]
        run_json(capsys, "sample", "--space", space_text, "--kernel", kernel_text, "--n", n, "--seed", seed,
                 "--mode", mode, "--out", out)
        argv = ["analyze", out]
        region = None
        if not isinstance(space, FiniteWeighted):
            argv += ["--region", "x<0.3"]
            region = parse_region("x<0.3")
        got = run_json(capsys, *argv)
        assert got.pop("seed") == seed
        g = sample_graph(space, kernel, n, seed, mode)
        assert got == connected_components(g, region).to_dict()


def test_sweep_workers_and_outputs(capsys, tmp_path):
    plan = {"space": "interval", "kernel": "constant:c=1", "scales": [0.5, 2.0], "sizes": [40, 80],
            "replicates": 6, "seed": 11}
    (tmp_path / "plan.json").write_text(json.dumps(plan))
    a = run_json(capsys, "sweep", "--plan", tmp_path / "plan.json", "--out", tmp_path / "a.csv",
                 "--svg", tmp_path / "a.svg", "--workers", 1)
    b = run_json(capsys, "sweep", "--plan", tmp_path / "plan.json", "--out", tmp_path / "b.csv", "--workers", 2)
    assert a["seed"] == b["seed"] == 11 and a["records"] == 24
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert (tmp_path / "a.summary.json").read_text() == (tmp_path / "b.summary.json").read_text()
    assert (tmp_path / "a.svg").read_text().startswith("<svg")


def test_sweep_overrides(capsys, tmp_path):
    plan = {"space": "interval", "kernel": "constant:c=1", "scales": [1.0], "sizes": [30], "replicates": 2}
    (tmp_path / "plan.json").write_text(json.dumps(plan))
    d = run_json(capsys, "sweep", "--plan", tmp_path / "plan.json", "--out", tmp_path / "r.csv",
                 "--seed", 5, "--reps", 3, "--scales", "0.5,1.5", "--sizes", "20")
    assert d["seed"] == 5 and d["records"] == 6
    assert [c["n"] for c in d["cells"]] == [20, 20]
    d = run_json(capsys, "sweep", "--plan", tmp_path / "plan.json", "--out", tmp_path / "r.csv")
    assert 0 <= d["seed"] < 2**64


def test_sweep_guard_exit_code(capsys, tmp_path):
    plan = {"space": "interval", "kernel": "constant:c=1", "scales": [1.0], "sizes": [10_000], "replicates": 10,
            "seed": 1}
    (tmp_path / "plan.json").write_text(json.dumps(plan))
    code, out, err = run(capsys, "sweep", "--plan", tmp_path / "plan.json", "--out", tmp_path / "r.csv",
                         "--budget", 1e6)
    assert code == 2 and out == "" and err.startswith("irg-error:")
    assert not (tmp_path / "r.csv").exists()


def test_bad_plan_file(capsys, tmp_path):
    (tmp_path / "plan.json").write_text("{not json")
    code, _, err = run(capsys, "sweep", "--plan", tmp_path / "plan.json", "--out", tmp_path / "r.csv")
    assert code == 1 and err.startswith("irg-error:")
    code, _, err = run(capsys, "sweep", "--plan", tmp_path / "missing.json", "--out", tmp_path / "r.csv")
    assert code == 1 and err.startswith("irg-error:")


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["frobnicate"],
        ["sample", "--kernel", "constant:c=1", "--n", "5"],
        ["oracle", "gilbert", "--n", "5", "--p", "0.5", "--bogus"],
        ["sample", "--kernel", "constant:c=1", "--n", "5", "--out", "x", "--seed", "-1"],
        ["sample", "--kernel", "nonsense", "--n", "5", "--out", "x"],
        ["sample", "--kernel", "torus_band:c=1,r=0.2", "--space", "interval", "--n", "5", "--out", "x"],
        ["analyze", "/nonexistent/file.txt"],
        ["oracle", "gilbert", "--n", "0", "--p", "0.5"],
        ["counterexample", "--c", "1", "--n", "500", "--reps", "3"],
        ["window", "--n", "1000", "--reps", "3"],
        ["partition", "--kernel", "constant:c=1", "--m", "0"],
    ],
)
def test_errors_exit_one(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 1
    assert out == ""
    assert err.startswith("irg-error:")


def test_window_and_counterexample_commands(capsys):
    w = run_json(capsys, "window", "--n", 2, "--reps", 100, "--seed", 1)
    assert w["exact"] == pytest.approx(math.log(2) / 2)
    c = run_json(capsys, "counterexample", "--c", 4, "--n", 200, "--reps", 20, "--seed", 3)
    assert c["seed"] == 3 and c["lambda_star"] == pytest.approx(2.0)
    assert c["limit"] == pytest.approx(math.exp(-2))


def test_module_entry_point():
    import subprocess
    import sys

    r = subprocess.run([sys.executable, "-m", "irg", "oracle", "gilbert", "--n", "2", "--p", "0.5"],
                       capture_output=True, text=True, check=False)
    assert r.returncode == 0 and r.stdout.strip() == "0.5"
