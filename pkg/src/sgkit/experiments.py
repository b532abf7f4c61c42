"""Experiment drivers: sparsity sweeps, iterative convergence, SSE real-vs-random and random-game statistics."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .graph import evaluate_actions, target_utility_matrix
from .instances import SecurityGame, randomize_target_values
from .randlab import RandomGameModel, degeneracy_report
from .regret import regret_matching
from .schedules import Schedule, ScheduleFormGame, schedule_game_matrix
from .stackelberg import sse_multiple_lp, sse_schedule_form
from .zero_sum import double_oracle_matrix, double_oracle_nfg, double_oracle_sfg, nash_lp, sparse_nash_milp

KINDS = ("sparsity", "convergence", "sse_compare", "random_lab")
ALGORITHMS = ("do", "rm", "rm_plus", "prm_plus")
SSE_FORMS = ("RM", "RT", "RTS")
NORM_TOL = 1e-12


def workers() -> int:
    """Worker cap: ``SGKIT_THREADS`` if set, else the CPU count."""
    cpus = os.cpu_count() or 1
    env = os.environ.get("SGKIT_THREADS")
    if env:
        try:
            return max(1, min(int(env), cpus))
        except ValueError:
            raise ValueError(f"SGKIT_THREADS must be an integer, got {env!r}") from None
    return cpus


def _ordered_map(fn, items):
    items = list(items)
    n = workers()
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


@dataclass
class Table:
    header: tuple[str, ...]
    rows: list[tuple]


@dataclass
class ExperimentResult:
    kind: str
    tables: dict[str, Table]
    summary: dict = field(default_factory=dict)


def random_matrix_like(M: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Entries iid uniform over the observed payoff range of ``M``."""
    return rng.uniform(float(M.min()), float(M.max()), M.shape)


def zero_sum_matrix(game) -> np.ndarray:
    if isinstance(game, SecurityGame):
        if game.general_sum:
            raise ValueError("this experiment needs a zero-sum game")
        return game.matrix_game().A
    return np.asarray(game, dtype=float)


# --- sparsity ------------------------------------------------------------------


def _norm(x, lo, hi):
    den = hi - lo
    if abs(den) <= NORM_TOL:
        return None
    return (x - lo) / den


def sparsity(game, baselines: int = 0, seed: int = 0, k_max: int | None = None, method: str = "auto") -> ExperimentResult:
    """Sweep the support bound k of the sparse Nash MILP on the real matrix and RM baselines.

    k runs from 1 to the largest Nash support over all instances (``k_maxNash``)
    unless ``k_max`` is given. Per row: U_norm = (U - U_1) / (U_Nash - U_1),
    R_norm = (R - R_min) / (R_max - R_min) within the instance, and
    k_norm = k / k_maxNash. A zero denominator gives ``None`` and sets ``flag``.
    """
    A = zero_sum_matrix(game)
    instances = [("real", A)] + [(f"rm{i}", random_matrix_like(A, np.random.default_rng(seed + i))) for i in range(baselines)]
    nash = _ordered_map(lambda inst: nash_lp(inst[1]), instances)
    k_nash = [r.row_strategy.support_size for r in nash]
    k_max_nash = max(k_nash)
    top = k_max if k_max is not None else k_max_nash
    top = min(top, A.shape[0])

    def sweep(idx):
        name, M = instances[idx]
        out = []
        for k in range(1, top + 1):
            r = sparse_nash_milp(M, k, method)
            out.append((k, r.value, r.wall_time, r.row_strategy.support_size))
        return out

    sweeps = _ordered_map(sweep, range(len(instances)))
    rows = []
    summary = {"k_max_nash": k_max_nash, "instances": []}
    for (name, _), nr, kn, sw in zip(instances, nash, k_nash, sweeps):
        u1 = sw[0][1]
        times = [s[2] for s in sw]
        r_lo, r_hi = min(times), max(times)
        for k, v, rt, sup in sw:
            u = _norm(v, u1, nr.value)
            r = _norm(rt, r_lo, r_hi)
            flag = ";".join(f for f, val in (("u_norm_undefined", u), ("r_norm_undefined", r)) if val is None)
            rows.append((name, k, v, u, rt, r, sup, k / k_max_nash, flag))
        summary["instances"].append(
            {"instance": name, "nash_value": nr.value, "nash_support": kn, "nash_runtime_s": nr.wall_time, "shape": list(A.shape)}
        )
    header = ("instance", "k", "value", "u_norm", "runtime_s", "r_norm", "support", "k_norm", "flag")
    return ExperimentResult("sparsity", {"sparsity.csv": Table(header, rows)}, summary)


# --- convergence -----------------------------------------------------------------


def raw_scale(game: SecurityGame) -> float:
    """Factor between the structured oracles' raw payoffs and the normalized matrix."""
    if game.sfg is not None:
        raw = schedule_game_matrix(game.sfg, normalize=False).A
        s = float(np.max(np.abs(raw)))
        return s if s > 0 else 1.0
    A = game.nfg.A
    i, j = np.unravel_index(int(np.argmax(np.abs(A))), A.shape)
    if A[i, j] == 0:
        return 1.0
    d, a = game.nfg.row_labels[i], game.nfg.col_labels[j]
    raw = evaluate_actions(d, a, list(game.targets), game.protocol, game.graph)[1]
    return float(raw / A[i, j])


def _double_oracle_trace(game, A):
    if isinstance(game, SecurityGame):
        if game.sfg is not None:
            rep = double_oracle_sfg(game.sfg)
        else:
            rep = double_oracle_nfg(game)
        s = raw_scale(game)
        return rep, [(it, t, g / s) for it, t, g in rep.trace_rows()]
    rep = double_oracle_matrix(A)
    return rep, rep.trace_rows()


def convergence(
    game,
    algorithms=ALGORITHMS,
    iterations: int = 10_000,
    runtime_cap: float = 120.0,
    sample_interval: int = 10,
    baselines: int = 0,
    seed: int = 0,
) -> ExperimentResult:
    """Gap traces of DO, RM, RM+ and PRM+ on the real game and RM baselines.

    Gaps are in units of the max-abs normalized matrix. DO on the real game uses
    the structured best-response oracles; on baselines it runs on the matrix.
    """
    bad = [a for a in algorithms if a not in ALGORITHMS]
    if bad:
        raise ValueError(f"unknown algorithm {bad[0]!r}; choose from {', '.join(ALGORITHMS)}")
    A = zero_sum_matrix(game)
    instances = [("real", game, A)] + [
        (f"rm{i}", None, random_matrix_like(A, np.random.default_rng(seed + i))) for i in range(baselines)
    ]
    jobs = [(inst, alg) for inst in instances for alg in algorithms]

    def run(job):
        (name, g, M), alg = job
        if alg == "do":
            rep, trace = _double_oracle_trace(g if g is not None else M, M)
        else:
            rep = regret_matching(M, alg, iterations, runtime_cap, sample_interval)
            trace = rep.trace_rows()
        return name, alg, rep, trace

    results = _ordered_map(run, jobs)
    tables = {}
    summary = {"shape": list(A.shape), "runs": []}
    for name, alg, rep, trace in results:
        tables[f"convergence_{name}_{alg}.csv"] = Table(("iteration", "time_s", "gap"), [tuple(r) for r in trace])
        summary["runs"].append(
            {
                "instance": name,
                "algorithm": alg,
                "iterations": rep.iterations,
                "wall_time_s": rep.wall_time,
                "final_gap": trace[-1][2] if trace else None,
                "stop": rep.info.get("stop", "converged"),
            }
        )
    return ExperimentResult("convergence", tables, summary)


# --- Stackelberg real versus random ----------------------------------------------


def randomize_schedules(sfg: ScheduleFormGame, rng: np.random.Generator) -> ScheduleFormGame:
    """Same schedule count per defender; each schedule covers ``ceil(mean real length)``
    random distinct targets. Schedule i keeps the movement cost of real schedule i."""
    lengths = [len(s.targets) for group in sfg.schedules for s in group]
    size = min(math.ceil(float(np.mean(lengths))), len(sfg.targets)) if lengths else 0
    groups = []
    for group in sfg.schedules:
        new = []
        for s in group:
            picks = rng.choice(len(sfg.targets), size=size, replace=False) if size else []
            new.append(Schedule(frozenset(sfg.targets[i] for i in picks), s.movement_steps, s.movement_cost))
        groups.append(tuple(new))
    return ScheduleFormGame(sfg.targets, tuple(groups), sfg.target_utilities)


def _randomize_values(sfg: ScheduleFormGame, rng) -> ScheduleFormGame:
    specs = randomize_target_values(sfg.target_specs(), rng, general_sum=True)
    return ScheduleFormGame(sfg.targets, sfg.schedules, target_utility_matrix(specs), sfg.joint_actions)


def sse_baseline(game: SecurityGame, form: str, rng: np.random.Generator):
    """One randomized counterpart of a general-sum schedule-form game, solved."""
    sfg = game.sfg
    if form == "RM":
        g = schedule_game_matrix(sfg, general_sum=True)
        return sse_multiple_lp(random_matrix_like(g.A, rng), random_matrix_like(g.B, rng))
    if form == "RT":
        return sse_schedule_form(_randomize_values(sfg, rng))
    if form == "RTS":
        rt = _randomize_values(sfg, rng)
        return sse_schedule_form(randomize_schedules(rt, rng), simple=False)
    raise ValueError(f"unknown baseline form {form!r}; choose from {', '.join(SSE_FORMS)}")


def sse_compare(game: SecurityGame, baselines: int = 10, forms=SSE_FORMS, seed: int = 0) -> ExperimentResult:
    """SSE utility, runtime and support of the real game against RM, RT and RTS baselines.

    Baseline i of every form draws from ``default_rng(seed + i)``.
    """
    if not isinstance(game, SecurityGame) or game.sfg is None or not game.general_sum:
        raise ValueError("sse_compare needs a general-sum schedule-form game")
    for f in forms:
        if f not in SSE_FORMS:
            raise ValueError(f"unknown baseline form {f!r}; choose from {', '.join(SSE_FORMS)}")
    real = sse_schedule_form(game.sfg)
    jobs = [(f, i) for f in forms for i in range(baselines)]
    res = _ordered_map(lambda j: sse_baseline(game, j[0], np.random.default_rng(seed + j[1])), jobs)
    rows = [(game.name, "Real", real.value, real.runtime, real.support)]
    rows += [(f"{game.name}/seed{seed + i}", f, r.value, r.runtime, r.support) for (f, i), r in zip(jobs, res)]
    summary = {"instance": game.name, "real": {"u_d": real.value, "support": real.support, "runtime_s": real.runtime}}
    for f in forms:
        sub = [r for (ff, _), r in zip(jobs, res) if ff == f]
        sup = [r.support for r in sub]
        summary[f] = {
            "support": sup,
            "median_support": float(np.median(sup)),
            "mean_support": float(np.mean(sup)),
            "mean_u_d": float(np.mean([r.value for r in sub])),
        }
    header = ("instance", "form", "u_d", "runtime_s", "support")
    return ExperimentResult("sse_compare", {"sse_compare.csv": Table(header, rows)}, summary)


# --- random games ----------------------------------------------------------------


def random_lab(model: RandomGameModel, num_samples: int) -> ExperimentResult:
    rep = degeneracy_report(model, num_samples)
    header = ("sample", "support", "value", "pure_value")
    return ExperimentResult("random_lab", {"random_lab.csv": Table(header, rep.rows())}, rep.summary())

