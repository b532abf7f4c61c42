import numpy as np
import pytest
from hypothesis import given, strategies as st

from sgkit.graph import TargetSpec
from sgkit.schedules import Schedule, ScheduleFormGame
from sgkit.stackelberg import sse_bruteforce_oracle, sse_multiple_lp, sse_partition, sse_schedule_form, sse_simple_schedules
from sgkit.zero_sum import nash_lp

pair = st.integers(1, 4).flatmap(
    lambda n: st.integers(1, 4).flatmap(
        lambda m: st.tuples(
            *[st.lists(st.floats(-3, 3, allow_nan=False), min_size=n * m, max_size=n * m).map(lambda v: np.array(v).reshape(n, m))] * 2
        )
    )
)


def test_multiple_lp_example():
    r = sse_multiple_lp([[2, 4], [1, 3]], [[1, 0], [0, 1]])
    assert r.response == 1
    assert r.value == pytest.approx(3.5)
    assert np.allclose(r.strategy, [0.5, 0.5])


def test_single_cell():
    assert sse_multiple_lp([[7.0]], [[1.0]]).value == 7.0


def test_ties_report_multiplicity():
    r = sse_multiple_lp([[1.0, 1.0]], [[0.0, 0.0]])
    assert r.response == 0 and r.multiplicity == 2


def test_oracle_examples():
    assert sse_bruteforce_oracle([[1.0, 5.0, 3.0]], [[2.0, 1.0, 2.0]]) == 3.0
    assert sse_bruteforce_oracle([[1.0, 5.0], [2.0, 0.0]], [[1.0, 1.0], [4.0, 4.0]]) == 5.0
    with pytest.raises(ValueError):
        sse_bruteforce_oracle(np.zeros((5, 2)), np.zeros((5, 2)))


@given(pair)
def test_multiple_lp_matches_oracle(AB):
    A, B = AB
    r = sse_multiple_lp(A, B)
    assert r.value == pytest.approx(sse_bruteforce_oracle(A, B), abs=1e-6)
    x = r.strategy
    br = x @ B
    assert br[r.response] >= br.max() - 1e-8


@given(pair)
def test_zero_sum_sse_equals_nash(AB):
    A, _ = AB
    assert sse_multiple_lp(A, -A).value == pytest.approx(nash_lp(A).value, abs=1e-7)


@given(pair, st.floats(0.1, 10))
def test_positive_scaling(AB, s):
    A, B = AB
    r1, r2 = sse_multiple_lp(A, B), sse_multiple_lp(s * A, s * B)
    assert r2.value == pytest.approx(s * r1.value, abs=1e-6 * max(1, s))
    assert r2.response == r1.response or abs(r1.column_values[r2.response] - r1.value) <= 1e-6


def _pure_ne_values(A, B):
    out = []
    for i in range(A.shape[0]):
        for j in range(A.shape[1]):
            if A[i, j] >= A[:, j].max() and B[i, j] >= B[i].max():
                out.append(A[i, j])
    return out


@given(st.lists(st.floats(-3, 3), min_size=8, max_size=8))
def test_sse_beats_nash_2x2(v):
    A = np.array(v[:4]).reshape(2, 2)
    B = np.array(v[4:]).reshape(2, 2)
    sse = sse_multiple_lp(A, B).value
    for ne in _pure_ne_values(A, B):
        assert sse >= ne - 1e-9
    # fully mixed NE via indifference, when one exists
    dA = A[0, 0] - A[0, 1] - A[1, 0] + A[1, 1]
    dB = B[0, 0] - B[0, 1] - B[1, 0] + B[1, 1]
    if abs(dA) > 1e-6 and abs(dB) > 1e-6:
        p = (B[1, 1] - B[1, 0]) / dB
        q = (A[1, 1] - A[0, 1]) / dA
        if 0 < p < 1 and 0 < q < 1:
            x, y = np.array([p, 1 - p]), np.array([q, 1 - q])
            assert sse >= x @ A @ y - 1e-7


def _utils(u_d_unc, u_a_unc, u_d_cov=None, u_a_cov=None):
    n = len(u_d_unc)
    return np.array([u_d_unc, u_d_cov or [0.0] * n, u_a_cov or [0.0] * n, u_a_unc], dtype=float)


def test_coverage_lp_examples():
    r = sse_simple_schedules(_utils([-4, -2], [4, 2]), 1)
    assert r.value == pytest.approx(-4 / 3)
    r = sse_simple_schedules(_utils([-4, -2], [4, 2], [-1, -0.5], [1, 1.5]), 2)
    assert np.allclose(r.strategy, [1, 1])
    assert r.value == pytest.approx(-0.5)
    r = sse_simple_schedules(_utils([-4], [4], [-1], [0]), 0.25)
    assert r.strategy[0] == pytest.approx(0.25)
    assert r.value == pytest.approx(0.25 * -1 + 0.75 * -4)


@given(st.integers(1, 6), st.floats(0.2, 4), st.integers(0, 2**32 - 1))
def test_coverage_lp_feasible(n, R, seed):
    rng = np.random.default_rng(seed)
    ua = rng.uniform(0.1, 5, n)
    ud = -rng.uniform(0.1, 5, n)
    r = sse_simple_schedules(_utils(ud, ua, list(ud * rng.uniform(0, 1, n)), list(ua * rng.uniform(0, 1, n))), R)
    c = r.strategy
    assert c.sum() <= R + 1e-9
    assert np.all(c >= -1e-12) and np.all(c <= 1 + 1e-12)


def test_singleton_sfg_matches_coverage_example():
    U = _utils([-4, -2], [4, 2])
    sfg = ScheduleFormGame((0, 1), ((Schedule({0}), Schedule({1})),), U)
    r = sse_schedule_form(sfg)
    assert r.value == pytest.approx(-4 / 3)
    assert r.support == 2
    assert sse_schedule_form(sfg, simple=False).value == pytest.approx(-4 / 3)


def test_simple_solver_rejects_general_schedules():
    sfg = ScheduleFormGame((0, 1), ((Schedule({0, 1}),),), _utils([-4, -2], [4, 2]))
    with pytest.raises(ValueError):
        sse_schedule_form(sfg, simple=True)


@given(st.integers(2, 5), st.integers(1, 2), st.integers(0, 2**32 - 1))
def test_per_resource_coverage_matches_expansion(n, m, seed):
    rng = np.random.default_rng(seed)
    ua = rng.uniform(0.1, 5, n)
    U = _utils(list(-ua), list(ua), list(-ua / 5), list(ua / 5))
    groups = tuple(tuple(Schedule({int(t)}) for t in sorted(rng.choice(n, size=rng.integers(1, n + 1), replace=False))) for _ in range(m))
    sfg = ScheduleFormGame(tuple(range(n)), groups, U)
    a = sse_schedule_form(sfg, simple=True).value
    b = sse_schedule_form(sfg, simple=False).value
    assert a == pytest.approx(b, abs=1e-7)


def test_partition_lp():
    U = _utils([-1, -1], [1, 1])
    r = sse_partition(U, [[0, 1]], 1.0)
    assert r.value == pytest.approx(0.0)
    with pytest.raises(ValueError):
        sse_partition(U, [[0], [0, 1]], 1.0)
