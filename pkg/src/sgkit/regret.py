"""Regret matching for zero-sum matrix games: RM, RM+ and predictive RM+."""

from __future__ import annotations

import time

import numpy as np

from .games import MixedStrategy, SolveReport, exploitability

VARIANTS = ("rm", "rm_plus", "prm_plus")


def regret_strategy(regrets: np.ndarray) -> np.ndarray:
    """Proportional to the positive part of ``regrets``; uniform when none is positive."""
    pos = np.maximum(regrets, 0.0)
    s = pos.sum()
    if s <= 0.0:
        return np.full(regrets.size, 1.0 / regrets.size)
    return pos / s


def regret_matching(
    A,
    variant: str = "rm_plus",
    iterations: int = 10_000,
    runtime_cap: float = 120.0,
    sample_interval: int = 10,
) -> SolveReport:
    """Run a regret-matching variant and return the average strategies.

    ``rm`` updates both players simultaneously and averages uniformly. ``rm_plus``
    clips cumulative regrets at zero, alternates updates (row first) and weights
    iterate t by t. ``prm_plus`` adds the last instantaneous regret as a prediction
    and weights iterate t by t^2. The duality gap of the averages is sampled every
    ``sample_interval`` iterations and at the last one. The loop stops at the
    iteration cap or the runtime cap, whichever comes first; ``info["stop"]`` says which.
    """
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}, got {variant!r}")
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.size == 0:
        raise ValueError("expected a nonempty 2-D matrix")
    if not np.isfinite(A).all():
        raise ValueError("payoff matrix has non-finite entries")
    if iterations < 1 or sample_interval < 1:
        raise ValueError("iterations and sample_interval must be >= 1")
    n, m = A.shape
    Rx, Ry = np.zeros(n), np.zeros(m)
    px, py = np.zeros(n), np.zeros(m)  # predictions (PRM+ only)
    sx, sy = np.zeros(n), np.zeros(m)
    plus = variant != "rm"
    predictive = variant == "prm_plus"
    power = {"rm": 0, "rm_plus": 1, "prm_plus": 2}[variant]
    trace = []
    stop = "iterations"
    t0 = time.perf_counter()
    it = 0
    for it in range(1, iterations + 1):
        if predictive:
            x = regret_strategy(Rx + px)
            y = regret_strategy(Ry + py)
        else:
            x = regret_strategy(Rx)
            y = regret_strategy(Ry)
        if plus:
            ux = A @ y
            rx = ux - x @ ux
            Rx = np.maximum(Rx + rx, 0.0)
            x = regret_strategy(Rx + rx) if predictive else regret_strategy(Rx)
            uy = -(x @ A)
            ry = uy - uy @ y
            Ry = np.maximum(Ry + ry, 0.0)
            y = regret_strategy(Ry + ry) if predictive else regret_strategy(Ry)
            if predictive:
                px, py = rx, ry
        else:
            ux = A @ y
            uy = -(x @ A)
            Rx += ux - x @ ux
            Ry += uy - uy @ y
        w = float(it) ** power
        sx += w * x
        sy += w * y
        last = it == iterations
        elapsed = time.perf_counter() - t0
        if elapsed >= runtime_cap and not last:
            stop = "runtime"
            last = True
        if it % sample_interval == 0 or last:
            trace.append((it, elapsed, exploitability(A, sx / sx.sum(), sy / sy.sum())))
        if last:
            break
    xbar, ybar = sx / sx.sum(), sy / sy.sum()
    return SolveReport(
        value=float(xbar @ A @ ybar),
        row_strategy=MixedStrategy(xbar),
        col_strategy=MixedStrategy(ybar),
        iterations=it,
        wall_time=time.perf_counter() - t0,
        trace=tuple(trace),
        info={"solver": variant, "stop": stop},
    )
