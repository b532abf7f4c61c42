"""Command-line front end: generate, solve, experiment and export."""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import experiments as ex
from .config import ConfigError, Section, load_config
from .games import BimatrixGame, SolveReport
from .gambit import NfgError, dumps_nfg, import_nfg
from .generate import build_game
from .ingest import IngestError
from .instances import SecurityGame
from .optim import SolverError
from .randlab import RandomGameModel
from .regret import regret_matching
from .serialize import SchemaError, dumps_game, load_game
from .stackelberg import SSEResult, sse_multiple_lp, sse_schedule_form
from .zero_sum import double_oracle_nfg, double_oracle_sfg, nash_lp, sparse_nash_milp

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 2, 3
SOLVERS = ("nash_lp", "sparse_milp", "do_nfg", "do_sfg", "rm", "rm_plus", "prm_plus", "sse_general", "sse_simple")


class UsageError(ValueError):
    """Solver and game form do not fit together."""


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, header, rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow(["" if v is None else (repr(float(v)) if isinstance(v, (float, np.floating)) else v) for v in r])


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# --- generate ----------------------------------------------------------------


def _counts(game: SecurityGame) -> dict:
    out = {"name": game.name, "nodes": len(game.graph), "targets": len(game.targets)}
    if game.sfg is not None:
        out["schedules"] = [len(s) for s in game.sfg.schedules]
        out["joint_actions"] = len(game.sfg.joint_actions)
    if game.nfg is not None:
        out["defender_actions"], out["attacker_actions"] = game.nfg.shape
    return out


def cmd_generate(args) -> int:
    cfg = load_config(args.config)
    game = build_game(cfg, args.seed)
    out = _out_dir(args)
    path = out / f"{game.name}.json"
    path.write_text(dumps_game(game))
    written = [path]
    if args.format == "nfg":
        nfg_path = out / f"{game.name}.nfg"
        nfg_path.write_text(dumps_nfg(game.matrix_game(), game.name))
        written.append(nfg_path)
    info = _counts(game)
    print(" ".join(f"{k}={v}" for k, v in info.items()))
    for p in written:
        print(f"wrote {p}")
    return EXIT_OK


# --- solve -----------------------------------------------------------------------


def _load_any(path) -> SecurityGame | BimatrixGame:
    path = Path(path)
    if path.suffix.lower() == ".nfg":
        return import_nfg(path)
    return load_game(path)


def _matrix(game) -> BimatrixGame:
    return game if isinstance(game, BimatrixGame) else game.matrix_game()


def _zero_sum_matrix(game, solver) -> np.ndarray:
    g = _matrix(game)
    if not g.zero_sum:
        raise UsageError(f"{solver} needs a zero-sum game")
    return g.A


def _rescaled(rep: SolveReport, game: SecurityGame) -> SolveReport:
    """Structured oracles work in raw payoffs; report in the normalized matrix's units."""
    s = ex.raw_scale(game)
    trace = tuple((it, t, g / s) for it, t, g in rep.trace)
    return replace(rep, value=rep.value / s, trace=trace, info={**rep.info, "raw_value": rep.value, "raw_scale": s})


def run_solver(game, solver: str, k: int | None = None, iterations: int = 10_000, runtime_cap: float = 120.0, sample_interval: int = 10):
    """Dispatch one solver; raises :class:`UsageError` on a solver/game-form mismatch."""
    sec = isinstance(game, SecurityGame)
    if solver == "nash_lp":
        return nash_lp(_zero_sum_matrix(game, solver))
    if solver == "sparse_milp":
        if k is None:
            raise UsageError("sparse_milp needs --k")
        return sparse_nash_milp(_zero_sum_matrix(game, solver), k)
    if solver in ("rm", "rm_plus", "prm_plus"):
        return regret_matching(_zero_sum_matrix(game, solver), solver, iterations, runtime_cap, sample_interval)
    if solver == "do_nfg":
        if sec and game.general_sum:
            raise UsageError("do_nfg needs a zero-sum game")
        if sec and game.sfg is None:
            return _rescaled(double_oracle_nfg(game), game)
        return double_oracle_nfg(_zero_sum_matrix(game, solver))
    if solver == "do_sfg":
        if not sec or game.sfg is None:
            raise UsageError("do_sfg needs a schedule-form game")
        if game.general_sum:
            raise UsageError("do_sfg needs a zero-sum game")
        return _rescaled(double_oracle_sfg(game.sfg), game)
    if solver == "sse_general":
        if sec and game.sfg is not None:
            return sse_schedule_form(game.sfg, simple=False)
        g = _matrix(game)
        return sse_multiple_lp(g.A, g.B)
    if solver == "sse_simple":
        if not sec or game.sfg is None or not game.sfg.is_simple():
            raise UsageError("sse_simple needs a schedule-form game with singleton schedules")
        return sse_schedule_form(game.sfg, simple=True)
    raise UsageError(f"unknown solver {solver!r}")


def result_record(name: str, solver: str, res) -> dict:
    if isinstance(res, SSEResult):
        return {
            "instance": name,
            "solver": solver,
            "u_d": res.value,
            "response": res.response,
            "support": res.support,
            "multiplicity": res.multiplicity,
            "strategy": res.strategy,
            "runtime_s": res.runtime,
            "column_values": res.column_values,
        }
    assert isinstance(res, SolveReport)
    return {
        "instance": name,
        "solver": solver,
        "value": res.value,
        "gap": res.gap,
        "support": res.row_strategy.support_size,
        "row_strategy": res.row_strategy.probs,
        "col_strategy": None if res.col_strategy is None else res.col_strategy.probs,
        "iterations": res.iterations,
        "runtime_s": res.wall_time,
        "trace": res.trace_rows(),
        "info": {k: v for k, v in res.info.items() if isinstance(v, (str, int, float, bool))},
    }


def cmd_solve(args) -> int:
    game = _load_any(args.game)
    name = game.name if isinstance(game, SecurityGame) else Path(args.game).stem
    res = run_solver(game, args.solver, args.k, args.iterations, args.runtime_cap, args.sample_interval)
    rec = result_record(name, args.solver, res)
    out = _out_dir(args)
    stem = out / f"{name}.{args.solver}"
    if args.format == "csv":
        if isinstance(res, SSEResult):
            _write_csv(stem.with_suffix(stem.suffix + ".csv"), ("instance", "form", "u_d", "runtime_s", "support"),
                       [(name, args.solver, res.value, res.runtime, res.support)])
        else:
            _write_csv(stem.with_suffix(stem.suffix + ".csv"), ("instance", "solver", "value", "gap", "support", "iterations", "runtime_s"),
                       [(name, args.solver, res.value, res.gap, rec["support"], res.iterations, res.wall_time)])
            _write_csv(stem.with_suffix(stem.suffix + ".trace.csv"), ("iteration", "time_s", "gap"), res.trace_rows())
    else:
        _write_json(stem.with_suffix(stem.suffix + ".json"), rec)
    value = rec.get("u_d", rec.get("value"))
    print(f"{args.solver}: value={value!r} support={rec['support']}")
    return EXIT_OK


# --- experiment --------------------------------------------------------------------


def _experiment_params(cfg: dict, kind: str) -> Section:
    raw = cfg.get("experiment", {})
    s = Section(raw, "experiment")
    declared = s.str("kind", kind, choices=ex.KINDS)
    if declared != kind:
        raise ConfigError(f"experiment.kind: config is for {declared!r}, command asked for {kind!r}")
    return s


def run_experiment(kind: str, cfg: dict, seed: int | None) -> ex.ExperimentResult:
    p = _experiment_params(cfg, kind)
    if kind == "random_lab":
        model = p.str("model", "uniform_bimatrix", choices=("uniform_bimatrix", "random_security"))
        kw = {}
        if model == "uniform_bimatrix":
            kw["n"] = p.int("n", minimum=1)
        else:
            kw["T"] = p.int("T", minimum=1)
            kw["R"] = p.float("R", minimum=0)
            kw["partition"] = tuple(int(x) for x in p.numbers("partition"))
        num = p.int("num_samples", minimum=1)
        p.finish()
        try:
            m = RandomGameModel(model, seed=seed, **kw)
        except ValueError as exc:
            raise ConfigError(f"experiment: {exc}") from None
        return ex.random_lab(m, num)
    game = build_game(cfg, seed)
    seed = game.meta.get("seed", 0)
    if kind == "sparsity":
        kw = dict(baselines=p.int("baselines", 0, minimum=0), k_max=p.int("k_max", None, minimum=1),
                  method=p.str("method", "auto", choices=("auto", "bnb", "highs")))
        p.finish()
        return ex.sparsity(game, seed=seed, **kw)
    if kind == "convergence":
        kw = dict(
            algorithms=p.strings("algorithms", list(ex.ALGORITHMS), choices=ex.ALGORITHMS),
            iterations=p.int("iterations", 10_000, minimum=1),
            runtime_cap=p.float("runtime_cap", 120.0, minimum=0),
            sample_interval=p.int("sample_interval", 10, minimum=1),
            baselines=p.int("baselines", 0, minimum=0),
        )
        p.finish()
        return ex.convergence(game, seed=seed, **kw)
    kw = dict(baselines=p.int("baselines", 10, minimum=0), forms=p.strings("forms", list(ex.SSE_FORMS), choices=ex.SSE_FORMS))
    p.finish()
    try:
        return ex.sse_compare(game, seed=seed, **kw)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_experiment(args) -> int:
    cfg = load_config(args.config)
    if args.kind == "random_lab" and args.seed is None:
        raise ConfigError("--seed is required for random_lab")
    res = run_experiment(args.kind, cfg, args.seed)
    out = _out_dir(args)
    for fname, table in res.tables.items():
        _write_csv(out / fname, table.header, table.rows)
    _write_json(out / f"{args.kind}_summary.json", res.summary)
    written = [out / f for f in res.tables] + [out / f"{args.kind}_summary.json"]
    if not args.no_plot:
        from .plotting import plot_result

        written.append(plot_result(res, out / f"{args.kind}.svg"))
    for p in written:
        print(f"wrote {p}")
    return EXIT_OK


# --- export ------------------------------------------------------------------------


def cmd_export(args) -> int:
    game = _load_any(args.game)
    out = Path(args.out)
    if out.parent != Path(""):
        out.parent.mkdir(parents=True, exist_ok=True)
    if args.format == "nfg":
        title = game.name if isinstance(game, SecurityGame) else Path(args.game).stem
        out.write_text(dumps_nfg(_matrix(game), title))
    elif args.format == "csv":
        g = _matrix(game)
        n, m = g.shape
        _write_csv(out, ("row", "col", "u_row", "u_col"), [(i, j, g.A[i, j], g.B[i, j]) for i in range(n) for j in range(m)])
    else:
        if not isinstance(game, SecurityGame):
            raise UsageError("json export needs a game JSON input")
        out.write_text(dumps_game(game))
    print(f"wrote {out}")
    return EXIT_OK


# --- entry point -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sgkit", description="Security-game generation, solving and experiments.")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="build a game from a config file")
    g.add_argument("--config", required=True, help="TOML/JSON file or preset:<name>")
    g.add_argument("--seed", type=int, default=None)
    g.add_argument("--out", default=".", help="output directory")
    g.add_argument("--format", choices=("json", "nfg"), default="json", help="nfg also writes a Gambit file")
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="solve a game JSON or .nfg file")
    s.add_argument("game")
    s.add_argument("--solver", choices=SOLVERS, required=True)
    s.add_argument("--k", type=int, default=None, help="support bound for sparse_milp")
    s.add_argument("--iterations", type=int, default=10_000)
    s.add_argument("--runtime-cap", type=float, default=120.0)
    s.add_argument("--sample-interval", type=int, default=10)
    s.add_argument("--seed", type=int, default=None, help="accepted for symmetry; solvers are deterministic")
    s.add_argument("--out", default=".")
    s.add_argument("--format", choices=("json", "csv"), default="json")
    s.set_defaults(func=cmd_solve)

    e = sub.add_parser("experiment", help="run an experiment and write CSV, JSON summary and a figure")
    e.add_argument("kind", choices=ex.KINDS)
    e.add_argument("--config", required=True, help="TOML/JSON file or preset:<name>")
    e.add_argument("--seed", type=int, default=None)
    e.add_argument("--out", default=".")
    e.add_argument("--format", choices=("csv",), default="csv")
    e.add_argument("--no-plot", action="store_true", help="skip the SVG figure")
    e.set_defaults(func=cmd_experiment)

    x = sub.add_parser("export", help="convert a game to .nfg, payoff CSV or JSON")
    x.add_argument("game")
    x.add_argument("--out", required=True, help="output file")
    x.add_argument("--format", choices=("json", "nfg", "csv"), default="nfg")
    x.set_defaults(func=cmd_export)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SolverError as exc:
        print(f"sgkit: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ConfigError, SchemaError, NfgError, IngestError, UsageError) as exc:
        print(f"sgkit: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, ValueError) as exc:
        print(f"sgkit: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
