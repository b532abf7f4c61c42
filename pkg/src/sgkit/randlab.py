"""Random-game laboratory: pure and sparse leader values in uniform games, the two
proof constructions (sparse leader strategy, random security defense), and
degeneracy statistics.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .games import SUPPORT_TOL, MixedStrategy
from .stackelberg import sse_multiple_lp, sse_partition

CHUNK = 4096
SPARSE_C0 = 200.0
DEFENSE_DELTA = 1e-9


@dataclass(frozen=True)
class RandomGameModel:
    """``uniform_bimatrix``: n x n entries iid U[0,1]. ``random_security``: ``T`` targets
    split into schedules of the given ``partition`` sizes, ``R`` resources."""

    kind: str
    n: int = 0
    T: int = 0
    R: float = 1.0
    partition: tuple[int, ...] = ()
    seed: int = 0

    def __post_init__(self):
        if self.kind == "uniform_bimatrix":
            if self.n < 1:
                raise ValueError("n must be >= 1")
        elif self.kind == "random_security":
            object.__setattr__(self, "partition", tuple(int(s) for s in self.partition))
            if sum(self.partition) != self.T or any(s < 1 for s in self.partition):
                raise ValueError("partition sizes must be positive and sum to T")
            if self.R <= 0:
                raise ValueError("R must be > 0")
        else:
            raise ValueError(f"unknown model kind {self.kind!r}")

    def rng(self, index: int) -> np.random.Generator:
        """Stream for sample ``index``; independent of how samples are scheduled."""
        return np.random.default_rng([self.seed, index])


# --- uniform bimatrix games -------------------------------------------------


def best_pure_sse_value(A, B) -> np.ndarray | float:
    """max_i A[i, j(i)] with j(i) = argmax_j B[i, j] (lowest j on ties).

    Accepts single games or stacks of shape (..., n, m).
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    j = np.argmax(B, axis=-1)
    vals = np.take_along_axis(A, j[..., None], axis=-1)[..., 0]
    out = vals.max(axis=-1)
    return float(out) if out.ndim == 0 else out


def sample_pure_values(n: int, num_samples: int, seed: int) -> np.ndarray:
    """Monte-Carlo draws of V(x*(1)) for uniform n x n games.

    Draws come in fixed-size chunks, chunk c using ``default_rng([seed, c])``.
    """
    out = np.empty(num_samples)
    for c, start in enumerate(range(0, num_samples, CHUNK)):
        size = min(CHUNK, num_samples - start)
        rng = np.random.default_rng([seed, c])
        AB = rng.random((size, 2, n, n))  # sample-major: a shorter run is a prefix of a longer one
        out[start:start + size] = best_pure_sse_value(AB[:, 0], AB[:, 1])
    return out


def leader_value(A, B, x, tol: float = 1e-12) -> float:
    """V(x): leader payoff when the follower best-responds, ties to the leader."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    x = np.asarray(x, dtype=float)
    fb = x @ B
    best = np.flatnonzero(fb >= fb.max() - tol)
    return float(np.max(x @ A[:, best]))


def best_k_sparse_sse_value(A, B, k: int) -> float:
    """Best SSE leader value over strategies supported on at most ``k`` rows (n <= 12)."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    n = A.shape[0]
    if n > 12:
        raise ValueError("exact sparse SSE enumeration is limited to n <= 12")
    if not 1 <= k:
        raise ValueError("k must be >= 1")
    k = min(k, n)
    if k == 1:
        return best_pure_sse_value(A, B)
    best = -math.inf
    for rows in itertools.combinations(range(n), k):
        r = list(rows)
        best = max(best, sse_multiple_lp(A[r], B[r]).value)
    return best


def sparse_delta(n: int) -> float:
    return 2.0 ** 11 * math.sqrt(math.log(n)) / n ** 1.5


@dataclass(frozen=True)
class SparseConstruction:
    strategy: MixedStrategy
    i_star: int | None
    j_star: int | None
    eta: float
    rows: tuple[int, ...] = ()
    notes: tuple[str, ...] = ()


def construct_sparse_leader_strategy(A, B, c0: float = SPARSE_C0) -> SparseConstruction:
    """Sparse leader strategy of the uniform-game lower-bound construction.

    S holds entries with ``A >= 1 - delta_n``; (i*, j*) maximizes B over S. R(j*)
    collects other rows with ``B[i, j*] >= 3/4`` whose only possible S-entry is
    in column j*; R* keeps the ``floor(c0 log n) - 1`` of them with largest
    ``A[i, j*]``. The mix puts ``1 - eta`` on i* and spreads ``eta = 8 (1 - B[i*, j*])``
    over R*. eta is clipped to [0, 1]; with R* empty the pure row i* is returned.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    n = A.shape[0]
    if n < 2:
        raise ValueError("n must be >= 2")
    S = A >= 1.0 - sparse_delta(n)
    if not S.any():
        return SparseConstruction(MixedStrategy.pure(0, n), None, None, 0.0, (), ("S empty",))
    masked = np.where(S, B, -np.inf)
    i_star, j_star = np.unravel_index(int(np.argmax(masked)), masked.shape)
    i_star, j_star = int(i_star), int(j_star)
    others = S.copy()
    others[:, j_star] = False
    cand = [i for i in range(n) if i != i_star and B[i, j_star] >= 0.75 and not others[i].any()]
    cand.sort(key=lambda i: (-A[i, j_star], i))
    l0 = max(int(math.floor(c0 * math.log(n))) - 1, 0)
    r_star = tuple(cand[:l0])
    eta = min(max(8.0 * (1.0 - B[i_star, j_star]), 0.0), 1.0)
    notes = []
    x = np.zeros(n)
    if not r_star:
        notes.append("R* empty")
        x[i_star] = 1.0
    else:
        x[i_star] = 1.0 - eta
        x[list(r_star)] += eta / len(r_star)
    return SparseConstruction(MixedStrategy(x), i_star, j_star, eta, r_star, tuple(notes))


# --- random security games ---------------------------------------------------


@dataclass(frozen=True)
class SecurityInstance:
    u_d: np.ndarray  # uncovered defender payoffs, in [-1, 0]
    u_a: np.ndarray  # uncovered attacker payoffs, in [0, 1]
    groups: tuple[tuple[int, ...], ...]
    R: float

    def utility_matrix(self) -> np.ndarray:
        z = np.zeros_like(self.u_d)
        return np.vstack([self.u_d, z, z, self.u_a])


def sample_security_instance(rng: np.random.Generator, T: int, partition: Sequence[int], R: float) -> SecurityInstance:
    if sum(partition) != T:
        raise ValueError("partition sizes must sum to T")
    u_d = rng.uniform(-1.0, 0.0, T)
    u_a = rng.uniform(0.0, 1.0, T)
    bounds = np.cumsum([0] + list(partition))
    groups = tuple(tuple(range(bounds[i], bounds[i + 1])) for i in range(len(partition)))
    return SecurityInstance(u_d, u_a, groups, float(R))


def random_partition(rng: np.random.Generator, T: int, k: int) -> tuple[int, ...]:
    """Uniformly random composition of T into k positive parts."""
    cuts = np.sort(rng.choice(np.arange(1, T), size=k - 1, replace=False)) if k > 1 else np.array([], dtype=int)
    edges = np.concatenate([[0], cuts, [T]])
    return tuple(int(d) for d in np.diff(edges))


@dataclass(frozen=True)
class DefenseResult:
    p: np.ndarray  # coverage per schedule (input order)
    target: int
    value: float
    L_max: int
    l_star: int
    attacker_values: np.ndarray = field(repr=False)
    verified: bool = True


def construct_random_security_defense(inst: SecurityInstance, delta: float = DEFENSE_DELTA) -> DefenseResult:
    """Defense of the random-security lower-bound construction.

    Schedules are ordered by their best attacker value ``v_i``; ``L_max`` is the
    last position l with ``sum_{s<=l} (v_s - v_l) / v_s < R``; the defender steers
    the attack to the position ``l* <= L_max`` with the best uncovered defender
    payoff by covering each earlier schedule with ``(v_i - v_l* + delta) / v_i``.
    The attacker's exact best response is then recomputed and compared with the
    intended target.
    """
    k = len(inst.groups)
    v = np.array([inst.u_a[list(g)].max() for g in inst.groups])
    t_best = [g[int(np.argmax(inst.u_a[list(g)]))] for g in inst.groups]
    order = sorted(range(k), key=lambda i: (-v[i], i))
    vo = v[order]
    L_max = 1
    for l in range(1, k + 1):
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(vo[:l] > 0, (vo[:l] - vo[l - 1]) / vo[:l], 0.0)
        if terms.sum() < inst.R:
            L_max = l
    cand = [inst.u_d[t_best[order[l]]] for l in range(L_max)]
    l_star = int(np.argmax(cand)) + 1
    v_star = vo[l_star - 1]
    p = np.zeros(k)
    if v_star > 0:
        for l in range(1, l_star):
            i = order[l - 1]
            p[i] = (v[i] - v_star + delta) / v[i]
    cov = np.zeros(len(inst.u_a))
    for i, g in enumerate(inst.groups):
        cov[list(g)] = p[i]
    att = (1.0 - cov) * inst.u_a
    target = t_best[order[l_star - 1]]
    winners = np.flatnonzero(att >= att.max() - 1e-15)
    verified = bool(winners.size == 1 and winners[0] == target)
    return DefenseResult(p, int(target), float(inst.u_d[target]), L_max, l_star, att, verified)


# --- degeneracy statistics ---------------------------------------------------


@dataclass(frozen=True)
class DegeneracyReport:
    model: RandomGameModel
    support: np.ndarray
    value: np.ndarray
    pure_value: np.ndarray

    def summary(self) -> dict:
        def stats(a):
            return {
                "mean": float(np.mean(a)),
                "median": float(np.median(a)),
                "q10": float(np.quantile(a, 0.1)),
                "q90": float(np.quantile(a, 0.9)),
            }

        return {
            "kind": self.model.kind,
            "n": self.model.n,
            "T": self.model.T,
            "R": self.model.R,
            "seed": self.model.seed,
            "samples": int(self.support.size),
            "support": stats(self.support),
            "value": stats(self.value),
            "pure_value": stats(self.pure_value),
        }

    def rows(self) -> list[tuple[int, int, float, float]]:
        return [(i, int(s), float(v), float(p)) for i, (s, v, p) in enumerate(zip(self.support, self.value, self.pure_value))]


def degeneracy_report(model: RandomGameModel, num_samples: int) -> DegeneracyReport:
    """Per-sample SSE support size and leader value, plus V(x*(1)) (uniform model)
    or the construction's value (security model)."""
    if model.kind == "uniform_bimatrix" and model.n > 50:
        raise ValueError("SSE statistics are limited to n <= 50")
    sup, val, pure = [], [], []
    for i in range(num_samples):
        rng = model.rng(i)
        if model.kind == "uniform_bimatrix":
            A, B = rng.random((2, model.n, model.n))
            res = sse_multiple_lp(A, B)
            sup.append(res.support)
            val.append(res.value)
            pure.append(best_pure_sse_value(A, B))
        else:
            inst = sample_security_instance(rng, model.T, model.partition, model.R)
            res = sse_partition(inst.utility_matrix(), inst.groups, inst.R)
            sup.append(res.support)
            val.append(res.value)
            pure.append(construct_random_security_defense(inst).value)
    return DegeneracyReport(model, np.array(sup), np.array(val), np.array(pure))


def beta_tail_sigma(C: float, N: int) -> float:
    """Standard error of an empirical frequency whose mean is e^-C."""
    p = math.exp(-C)
    return math.sqrt(p * (1.0 - p) / N)


def support_sizes(strategies, tol: float = SUPPORT_TOL) -> list[int]:
    return [int(np.count_nonzero(np.asarray(s) > tol)) for s in strategies]
