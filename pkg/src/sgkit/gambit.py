"""Gambit ``.nfg`` payoff-format export and import for two-player games."""

from __future__ import annotations

import math
import re
import shlex
from pathlib import Path

import numpy as np

from .games import BimatrixGame

PLAYERS = ("Defender", "Attacker")


class NfgError(ValueError):
    pass


def format_payoff(x: float) -> str:
    """Shortest decimal that round-trips to the same double; integers lose the ``.0``."""
    x = float(x)
    if not math.isfinite(x):
        raise NfgError(f"non-finite payoff {x}")
    if x == 0:
        return "0"
    if x.is_integer() and abs(x) < 1e16:
        return str(int(x))
    return repr(x)


def dumps_nfg(game: BimatrixGame, title: str = "sgkit game") -> str:
    n, m = game.shape
    if '"' in title:
        raise NfgError("title may not contain double quotes")
    header = f'NFG 1 R "{title}" {{ "{PLAYERS[0]}" "{PLAYERS[1]}" }} {{ {n} {m} }}'
    vals = []
    # Gambit order: the first player's strategy varies fastest.
    for j in range(m):
        for i in range(n):
            vals.append(format_payoff(game.A[i, j]))
            vals.append(format_payoff(game.B[i, j]))
    return header + "\n\n" + " ".join(vals) + "\n"


def export_nfg(game: BimatrixGame, path, title: str = "sgkit game") -> None:
    Path(path).write_text(dumps_nfg(game, title))


_BRACES = re.compile(r"\{([^{}]*)\}")


def loads_nfg(text: str) -> BimatrixGame:
    """Parse a two-player payoff-format file (outcome format is not supported)."""
    text = text.strip()
    if not text.startswith("NFG"):
        raise NfgError("missing NFG header")
    groups = list(_BRACES.finditer(text))
    if len(groups) < 2:
        raise NfgError("header needs player and strategy-count blocks")
    players = shlex.split(groups[0].group(1))
    if len(players) != 2:
        raise NfgError(f"expected 2 players, got {len(players)}")
    counts = groups[1].group(1).split()
    if len(counts) != 2 or not all(c.isdigit() for c in counts):
        raise NfgError("strategy counts must be two integers (payoff format only)")
    n, m = int(counts[0]), int(counts[1])
    body = text[groups[1].end():].split()
    if len(body) != 2 * n * m:
        raise NfgError(f"expected {2 * n * m} payoffs, got {len(body)}")
    try:
        vals = np.array([float(v) for v in body])
    except ValueError as exc:
        raise NfgError(f"bad payoff: {exc}") from None
    if not np.isfinite(vals).all():
        raise NfgError("non-finite payoff")
    pairs = vals.reshape(m, n, 2)
    A = pairs[:, :, 0].T.copy()
    B = pairs[:, :, 1].T.copy()
    return BimatrixGame(A, B, zero_sum=bool(np.array_equal(A, -B)))


def import_nfg(path) -> BimatrixGame:
    return loads_nfg(Path(path).read_text())
