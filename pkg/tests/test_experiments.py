import math

import numpy as np
import pytest

from sgkit.experiments import random_matrix_like, randomize_schedules, sparsity, sse_baseline
from sgkit.schedules import Schedule, ScheduleFormGame


def _sfg():
    U = np.array([[-4.0, -2, -1, -3], [-1, -0.5, -0.2, -0.6], [1, 0.5, 0.2, 0.6], [4, 2, 1, 3]])
    groups = ((Schedule({0}, 2, 1.0), Schedule({0, 1}, 4, 2.0)), (Schedule({2, 3}, 6, 3.0),))
    return ScheduleFormGame((0, 1, 2, 3), groups, U)


def test_randomize_schedules_shape():
    sfg = _sfg()
    out = randomize_schedules(sfg, np.random.default_rng(0))
    assert [len(g) for g in out.schedules] == [2, 1]
    size = math.ceil(np.mean([1, 2, 2]))
    for g_old, g_new in zip(sfg.schedules, out.schedules):
        for a, b in zip(g_old, g_new):
            assert len(b.targets) == size
            assert b.movement_cost == a.movement_cost
    assert np.array_equal(out.target_utilities, sfg.target_utilities)


def test_random_matrix_range():
    M = np.array([[-2.0, 1.0], [0.5, 3.0]])
    R = random_matrix_like(M, np.random.default_rng(1))
    assert R.shape == M.shape and R.min() >= -2.0 and R.max() <= 3.0


def test_baselines_reproducible():
    from types import SimpleNamespace

    game = SimpleNamespace(sfg=_sfg())
    for form in ("RM", "RT", "RTS"):
        a = sse_baseline(game, form, np.random.default_rng(5))
        b = sse_baseline(game, form, np.random.default_rng(5))
        assert a.value == b.value and a.support == b.support
    with pytest.raises(ValueError):
        sse_baseline(game, "XX", np.random.default_rng(0))


def test_sparsity_flags_degenerate_normalization():
    res = sparsity(np.array([[1.0, 0.0], [1.0, 0.0]]))
    rows = res.tables["sparsity.csv"].rows
    assert all(r[3] is None and "u_norm_undefined" in r[8] for r in rows)


def test_sparsity_normalization():
    res = sparsity(np.eye(3), baselines=1, seed=2)
    rows = [r for r in res.tables["sparsity.csv"].rows if r[0] == "real"]
    assert [r[1] for r in rows] == [1, 2, 3]
    assert rows[0][3] == 0.0 and rows[-1][3] == pytest.approx(1.0)
    assert rows[-1][7] == 3 / res.summary["k_max_nash"]
