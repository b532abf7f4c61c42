"""Shared game containers: bimatrix games, mixed strategies and solver reports."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

SUPPORT_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class BimatrixGame:
    """Payoff matrices for a row (defender/leader) and column (attacker/follower) player.

    ``A`` holds the row player's payoffs and ``B`` the column player's. Zero-sum
    games store ``B = -A``.
    """

    A: np.ndarray
    B: np.ndarray
    row_labels: tuple = ()
    col_labels: tuple = ()
    zero_sum: bool = False

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        B = np.asarray(self.B, dtype=float)
        if A.ndim != 2 or A.shape != B.shape:
            raise ValueError(f"payoff matrices must be 2-D with equal shapes, got {A.shape} and {B.shape}")
        if A.size == 0:
            raise ValueError("empty game")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "row_labels", tuple(self.row_labels))
        object.__setattr__(self, "col_labels", tuple(self.col_labels))

    @classmethod
    def from_zero_sum(cls, A, row_labels=(), col_labels=()) -> "BimatrixGame":
        A = np.asarray(A, dtype=float)
        return cls(A, -A, row_labels, col_labels, zero_sum=True)

    @property
    def shape(self) -> tuple[int, int]:
        return self.A.shape

    def __eq__(self, other):
        if not isinstance(other, BimatrixGame):
            return NotImplemented
        return (
            np.array_equal(self.A, other.A)
            and np.array_equal(self.B, other.B)
            and self.row_labels == other.row_labels
            and self.col_labels == other.col_labels
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class MixedStrategy:
    """Probability vector over a labeled action set."""

    probs: np.ndarray
    labels: tuple = ()

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float).ravel()
        if p.size == 0:
            raise ValueError("empty strategy")
        if np.any(p < -SUPPORT_TOL) or not np.isfinite(p).all():
            raise ValueError("negative or non-finite probability")
        if abs(p.sum() - 1.0) > 1e-6:
            raise ValueError(f"probabilities sum to {p.sum()!r}")
        p = np.clip(p, 0.0, None)
        p = p / p.sum()
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "labels", tuple(self.labels))

    @classmethod
    def pure(cls, index: int, size: int, labels=()) -> "MixedStrategy":
        p = np.zeros(size)
        p[index] = 1.0
        return cls(p, labels)

    @classmethod
    def uniform(cls, size: int, labels=()) -> "MixedStrategy":
        return cls(np.full(size, 1.0 / size), labels)

    def support(self, tol: float = SUPPORT_TOL) -> np.ndarray:
        return np.flatnonzero(self.probs > tol)

    @property
    def support_size(self) -> int:
        return int(self.support().size)

    def __len__(self):
        return self.probs.size

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.probs, dtype=dtype)


@dataclass(frozen=True)
class SolveReport:
    """Outcome of an equilibrium computation.

    ``trace`` holds ``(iteration, time_s, gap)`` samples; it is not required to be
    monotone.
    """

    value: float
    row_strategy: MixedStrategy
    col_strategy: MixedStrategy | None
    iterations: int = 1
    wall_time: float = 0.0
    trace: tuple = ()
    info: dict[str, Any] = field(default_factory=dict)

    @property
    def gap(self) -> float:
        return self.trace[-1][2] if self.trace else 0.0

    def trace_rows(self) -> list[tuple[int, float, float]]:
        return [tuple(r) for r in self.trace]


def exploitability(A: np.ndarray, x: Sequence[float], y: Sequence[float]) -> float:
    """Duality gap of ``(x, y)`` in the zero-sum game where the row player maximizes ``x^T A y``."""
    A = np.asarray(A, dtype=float)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return float(np.max(A @ y) - np.min(x @ A))
