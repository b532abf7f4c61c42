import csv
import json

import numpy as np
import pytest

from sgkit import cli
from sgkit.graph import DirectedGameGraph, Node, TargetSpec
from sgkit.instances import assemble_security_game
from sgkit.optim import SolverError
from sgkit.serialize import dump_graph_document, save_game

SMALL = """
seed = 4
[game]
domain = "gsg"
name = "{name}"
num_timesteps = 3
force_return = {force_return}
schedule_form = {schedule_form}
general_sum = {general_sum}
randomize_targets = {randomize}
home_bases = [[[2.16, 16.04]]]

[gsg]
tracks = "builtin:toy_tracks.csv"
bbox = [2.0530, 2.2837, 15.8790, 16.2038]
rows = 3
cols = 3
num_clusters = 4

[experiment]
kind = "{kind}"
"""


def small_config(tmp_path, name="small", kind="sparsity", schedule_form=False, general_sum=False, randomize=False, force_return=True, extra=""):
    p = tmp_path / f"{name}.toml"
    text = SMALL.format(
        name=name, kind=kind, schedule_form=str(schedule_form).lower(), general_sum=str(general_sum).lower(),
        randomize=str(randomize).lower(), force_return=str(force_return).lower(),
    )
    p.write_text(text + extra)
    return p


def run(*argv):
    return cli.main([str(a) for a in argv])


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_generate_preset_counts(tmp_path, capsys):
    assert run("generate", "--config", "preset:lobeke_sse", "--out", tmp_path) == 0
    out = capsys.readouterr().out
    assert "nodes=49" in out and "targets=10" in out


def test_generate_is_deterministic(tmp_path):
    cfg = small_config(tmp_path)
    for d in ("a", "b"):
        assert run("generate", "--config", cfg, "--out", tmp_path / d, "--format", "nfg") == 0
    for f in ("small.json", "small.nfg"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_rt_mode_reproducible(tmp_path):
    cfg = small_config(tmp_path, general_sum=True, randomize=True)
    run("generate", "--config", cfg, "--out", tmp_path / "a")
    run("generate", "--config", cfg, "--out", tmp_path / "b")
    run("generate", "--config", cfg, "--out", tmp_path / "c", "--seed", 99)
    a, b, c = (json.loads((tmp_path / d / "small.json").read_text())["targets"] for d in "abc")
    assert a == b and a != c


def test_nash_lp_on_nfg(tmp_path, capsys):
    cfg = small_config(tmp_path)
    run("generate", "--config", cfg, "--out", tmp_path, "--format", "nfg")
    assert run("solve", tmp_path / "small.nfg", "--solver", "nash_lp", "--out", tmp_path) == 0
    rec = json.loads((tmp_path / "small.nash_lp.json").read_text())
    assert abs(sum(rec["row_strategy"]) - 1) < 1e-9
    assert rec["gap"] < 1e-7


def _singleton_game(path):
    g = DirectedGameGraph((Node(0, (0.0, 0.0)), Node(1, (0.0, 0.001)), Node(2, (0.0, 0.002))), frozenset({(0, 1), (1, 0), (1, 2), (2, 1)}))
    targets = [TargetSpec(0, 4.0, -4.0, 0.0, 0.0, 4.0), TargetSpec(2, 2.0, -2.0, 0.0, 0.0, 2.0)]
    game = assemble_security_game(g, targets, [(1,)], num_timesteps=3, schedule_form=True, simple=True, general_sum=True, name="pair")
    save_game(game, path)


def test_sse_simple_matches_example(tmp_path):
    _singleton_game(tmp_path / "pair.json")
    assert run("solve", tmp_path / "pair.json", "--solver", "sse_simple", "--out", tmp_path, "--format", "csv") == 0
    row = read_csv(tmp_path / "pair.sse_simple.csv")[0]
    assert float(row["u_d"]) == pytest.approx(-4 / 3)
    assert row["form"] == "sse_simple" and row["support"] == "2"


def test_do_sfg_equals_nash_lp(tmp_path):
    run("generate", "--config", "preset:lobeke_convergence", "--out", tmp_path)
    game = tmp_path / "lobeke_sfg_t7.json"
    vals = {}
    for solver in ("do_sfg", "nash_lp"):
        assert run("solve", game, "--solver", solver, "--out", tmp_path) == 0
        vals[solver] = json.loads((tmp_path / f"{game.stem}.{solver}.json").read_text())["value"]
    assert vals["do_sfg"] == pytest.approx(vals["nash_lp"], abs=1e-6)


def test_solver_form_mismatch(tmp_path, capsys):
    cfg = small_config(tmp_path, schedule_form=True, general_sum=True)
    run("generate", "--config", cfg, "--out", tmp_path)
    assert run("solve", tmp_path / "small.json", "--solver", "nash_lp", "--out", tmp_path) == 2
    assert run("solve", tmp_path / "small.json", "--solver", "do_sfg", "--out", tmp_path) == 2
    assert run("solve", tmp_path / "small.json", "--solver", "sse_general", "--out", tmp_path) == 0


def test_exit_codes(tmp_path, capsys, monkeypatch):
    assert run("generate", "--config", tmp_path / "missing.toml") == 2
    bad = small_config(tmp_path, extra="")
    bad.write_text(bad.read_text().replace("num_timesteps = 3", "num_timesteps = 0"))
    assert run("generate", "--config", bad, "--out", tmp_path) == 2
    assert "game.num_timesteps" in capsys.readouterr().err
    typo = small_config(tmp_path, name="typo")
    typo.write_text(typo.read_text().replace("rows = 3", "rows = 3\nrowz = 3"))
    assert run("generate", "--config", typo, "--out", tmp_path) == 2
    assert "gsg.rowz" in capsys.readouterr().err
    cfg = small_config(tmp_path)
    run("generate", "--config", cfg, "--out", tmp_path)

    def boom(*a, **k):
        raise SolverError("backend failed")

    monkeypatch.setattr(cli, "nash_lp", boom)
    assert run("solve", tmp_path / "small.json", "--solver", "nash_lp", "--out", tmp_path) == 3


def _isg_files(tmp_path):
    nodes = tuple(Node(i, (0.005, 0.003 * i)) for i in range(4))
    g = DirectedGameGraph(nodes, frozenset({(0, 1), (1, 0), (1, 2), (2, 1), (2, 3), (3, 2)}))
    (tmp_path / "streets.json").write_text(dump_graph_document(g, []))
    square = [[0.0, 0.0], [0.0, 0.01], [0.01, 0.01], [0.01, 0.0]]
    (tmp_path / "blocks.json").write_text(json.dumps([{"geoid": "b", "population": 80, "polygon": square}]))
    (tmp_path / "weights.json").write_text(json.dumps({"hospital": 1.5, "school": 1.0}))
    (tmp_path / "features.csv").write_text("id,type,lat,lon\n1,hospital,0.005,0.0\n2,school,0.005,0.009\n")
    cfg = tmp_path / "isg.toml"
    cfg.write_text(
        """
[game]
domain = "isg"
name = "city"
num_timesteps = 4
home_bases = [[[0.005, 0.003]]]

[isg]
weights = "weights.json"
features = "features.csv"
blocks = "blocks.json"
street_graph = "streets.json"
"""
    )
    return cfg


def test_isg_generate(tmp_path, capsys):
    cfg = _isg_files(tmp_path)
    assert run("generate", "--config", cfg, "--out", tmp_path / "out") == 0
    assert "targets=2" in capsys.readouterr().out


def test_missing_feature_weight_names_type(tmp_path, capsys):
    cfg = _isg_files(tmp_path)
    (tmp_path / "features.csv").write_text("id,type,lat,lon\n1,hospital,0.005,0.0\n2,stadium,0.005,0.009\n")
    assert run("generate", "--config", cfg, "--out", tmp_path / "out") == 2
    assert "stadium" in capsys.readouterr().err


def test_sparsity_k_norm(tmp_path):
    cfg = small_config(tmp_path, force_return=False)
    assert run("experiment", "sparsity", "--config", cfg, "--out", tmp_path) == 0
    rows = read_csv(tmp_path / "sparsity.csv")
    summary = json.loads((tmp_path / "sparsity_summary.json").read_text())
    k_max = summary["k_max_nash"]
    last = [r for r in rows if int(r["k"]) == k_max][0]
    assert float(last["k_norm"]) == 1.0
    assert (tmp_path / "sparsity.svg").read_text().startswith("<?xml")


def test_experiment_kind_mismatch(tmp_path):
    cfg = small_config(tmp_path, kind="convergence")
    assert run("experiment", "sparsity", "--config", cfg, "--out", tmp_path) == 2


def test_random_lab_needs_seed(tmp_path):
    assert run("experiment", "random_lab", "--config", "preset:random_lab", "--out", tmp_path) == 2


def _strip_timing(path, cols):
    rows = read_csv(path)
    return [{k: v for k, v in r.items() if k not in cols} for r in rows]


def test_experiment_deterministic(tmp_path):
    cfg = small_config(tmp_path, kind="sse_compare", schedule_form=True, general_sum=True, extra="baselines = 3\n")
    for d in ("a", "b"):
        assert run("experiment", "sse_compare", "--config", cfg, "--out", tmp_path / d) == 0
    a = _strip_timing(tmp_path / "a" / "sse_compare.csv", {"runtime_s"})
    b = _strip_timing(tmp_path / "b" / "sse_compare.csv", {"runtime_s"})
    assert a == b and len(a) == 1 + 3 * 3
    assert (tmp_path / "a" / "sse_compare.svg").stat().st_size > 0


def test_convergence_experiment(tmp_path):
    cfg = small_config(tmp_path, kind="convergence", schedule_form=True, extra="iterations = 200\nsample_interval = 50\nbaselines = 1\n")
    assert run("experiment", "convergence", "--config", cfg, "--out", tmp_path) == 0
    for alg in ("do", "rm", "rm_plus", "prm_plus"):
        rows = read_csv(tmp_path / f"convergence_real_{alg}.csv")
        assert rows and all(float(r["gap"]) >= 0 for r in rows)
    assert json.loads((tmp_path / "convergence_summary.json").read_text())["runs"][0]["stop"] == "converged"


def test_random_lab_cli(tmp_path):
    cfg = tmp_path / "lab.toml"
    cfg.write_text('[experiment]\nkind = "random_lab"\nn = 5\nnum_samples = 12\n')
    assert run("experiment", "random_lab", "--config", cfg, "--seed", 1, "--out", tmp_path / "a") == 0
    assert run("experiment", "random_lab", "--config", cfg, "--seed", 1, "--out", tmp_path / "b", "--no-plot") == 0
    assert (tmp_path / "a" / "random_lab.csv").read_bytes() == (tmp_path / "b" / "random_lab.csv").read_bytes()
    assert not (tmp_path / "b" / "random_lab.svg").exists()


def test_export_formats(tmp_path):
    cfg = small_config(tmp_path)
    run("generate", "--config", cfg, "--out", tmp_path)
    assert run("export", tmp_path / "small.json", "--out", tmp_path / "x.nfg") == 0
    assert run("export", tmp_path / "small.json", "--out", tmp_path / "x.csv", "--format", "csv") == 0
    assert run("export", tmp_path / "small.json", "--out", tmp_path / "x.json", "--format", "json") == 0
    assert (tmp_path / "x.json").read_text() == (tmp_path / "small.json").read_text()
    assert run("export", tmp_path / "x.nfg", "--out", tmp_path / "y.json", "--format", "json") == 2
    rows = read_csv(tmp_path / "x.csv")
    assert {"row", "col", "u_row", "u_col"} == set(rows[0])


def test_threads_env(monkeypatch):
    from sgkit.experiments import workers

    monkeypatch.setenv("SGKIT_THREADS", "1")
    assert workers() == 1
    monkeypatch.setenv("SGKIT_THREADS", "many")
    with pytest.raises(ValueError):
        workers()
