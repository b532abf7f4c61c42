"""Static figures for experiment results (Agg backend; SVG output is byte-stable)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "sgkit"
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from scipy import stats  # noqa: E402

from .experiments import ExperimentResult  # noqa: E402


def _save(fig, path) -> Path:
    path = Path(path)
    fig.tight_layout()
    meta = {"Date": None} if path.suffix == ".svg" else {}
    fig.savefig(path, dpi=120, metadata=meta)
    plt.close(fig)
    return path


def _style(name: str) -> str:
    return "-" if name == "real" else "--"


def plot_sparsity(result: ExperimentResult, path) -> Path:
    rows = result.tables["sparsity.csv"].rows
    fig, (ax_u, ax_r) = plt.subplots(1, 2, figsize=(9, 3.6))
    for name in dict.fromkeys(r[0] for r in rows):
        sub = [r for r in rows if r[0] == name]
        k = [r[7] for r in sub]
        u = [np.nan if r[3] is None else r[3] for r in sub]
        rt = [np.nan if r[5] is None else r[5] for r in sub]
        ax_u.plot(k, u, _style(name), marker="o", ms=3, label=name)
        ax_r.plot(k, rt, _style(name), marker="o", ms=3, label=name)
    ax_u.set_xlabel("k_norm")
    ax_u.set_ylabel("U_norm")
    ax_r.set_xlabel("k_norm")
    ax_r.set_ylabel("R_norm")
    for ax in (ax_u, ax_r):
        ax.grid(True, alpha=0.3)
    ax_u.legend(fontsize=7)
    return _save(fig, path)


def plot_convergence(result: ExperimentResult, path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    colors = {"do": "C0", "rm": "C1", "rm_plus": "C2", "prm_plus": "C3"}
    for run in result.summary["runs"]:
        name, alg = run["instance"], run["algorithm"]
        rows = result.tables[f"convergence_{name}_{alg}.csv"].rows
        if not rows:
            continue
        it = [r[0] for r in rows]
        gap = [max(r[2], 1e-16) for r in rows]
        label = alg if name == "real" else None
        ax.plot(it, gap, _style(name), color=colors[alg], label=label, alpha=1.0 if name == "real" else 0.5)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("iteration")
    ax.set_ylabel("duality gap")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    return _save(fig, path)


def plot_sse_compare(result: ExperimentResult, path) -> Path:
    rows = result.tables["sse_compare.csv"].rows
    forms = list(dict.fromkeys(r[1] for r in rows))
    fig, (ax_s, ax_u) = plt.subplots(1, 2, figsize=(8, 3.6))
    for i, f in enumerate(forms):
        sup = [r[4] for r in rows if r[1] == f]
        ud = [r[2] for r in rows if r[1] == f]
        x = np.full(len(sup), i) + np.linspace(-0.15, 0.15, len(sup)) * (len(sup) > 1)
        ax_s.scatter(x, sup, s=12)
        ax_s.hlines(np.median(sup), i - 0.3, i + 0.3, color="k")
        ax_u.scatter(x, ud, s=12)
        ax_u.hlines(np.mean(ud), i - 0.3, i + 0.3, color="k")
    for ax, lab in ((ax_s, "support"), (ax_u, "u_d")):
        ax.set_xticks(range(len(forms)), forms)
        ax.set_ylabel(lab)
        ax.grid(True, axis="y", alpha=0.3)
    return _save(fig, path)


def plot_random_lab(result: ExperimentResult, path) -> Path:
    rows = result.tables["random_lab.csv"].rows
    sup = np.array([r[1] for r in rows])
    pure = np.array([r[3] for r in rows])
    fig, (ax_s, ax_v) = plt.subplots(1, 2, figsize=(8, 3.6))
    bins = np.arange(0.5, sup.max() + 1.5)
    ax_s.hist(sup, bins=bins, rwidth=0.8)
    ax_s.set_xlabel("SSE support size")
    ax_s.set_ylabel("count")
    ax_v.hist(pure, bins=30, density=True, alpha=0.6)
    n = result.summary.get("n", 0)
    if result.summary.get("kind") == "uniform_bimatrix" and n:
        v = np.linspace(max(pure.min(), 0.0), 1.0, 200)
        ax_v.plot(v, stats.beta(n, 1).pdf(v), "k-", label=f"Beta({n}, 1)")
        ax_v.legend(fontsize=8)
        ax_v.set_xlabel("V(x*(1))")
    else:
        ax_v.set_xlabel("construction value")
    ax_v.set_ylabel("density")
    return _save(fig, path)


PLOTTERS = {
    "sparsity": plot_sparsity,
    "convergence": plot_convergence,
    "sse_compare": plot_sse_compare,
    "random_lab": plot_random_lab,
}


def plot_result(result: ExperimentResult, path) -> Path:
    return PLOTTERS[result.kind](result, path)
