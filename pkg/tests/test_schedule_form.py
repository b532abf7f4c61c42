import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import tour_feasible
from sgkit.graph import DirectedGameGraph, TargetSpec
from sgkit.schedules import (
    Schedule,
    ScheduleFormGame,
    defender_schedules,
    general_schedules,
    get_full_path,
    scale_target_utilities,
    schedule_game_matrix,
    simple_schedules,
)


def line(n):
    return DirectedGameGraph.from_edges(range(n), [(i, i + 1) for i in range(n - 1)], undirected=True)


@st.composite
def undirected_graphs(draw, max_nodes=8):
    n = draw(st.integers(1, max_nodes))
    pairs = list(itertools.combinations(range(n), 2))
    edges = draw(st.lists(st.sampled_from(pairs), max_size=len(pairs), unique=True)) if pairs else []
    return DirectedGameGraph.from_edges(range(n), edges, undirected=True)


def test_simple_condition_examples():
    g = line(3)
    assert [s.targets for s in simple_schedules(g, 0, 5, 2, [2])] == [frozenset({2})]
    assert simple_schedules(g, 0, 4, 2, [2]) == []
    assert [s.targets for s in simple_schedules(g, 0, 1, 1, [0])] == [frozenset({0})]


def test_general_line_graph():
    sets = {s.targets for s in general_schedules(line(3), 0, 6, 1, [1, 2])}
    assert {frozenset({1}), frozenset({2}), frozenset({1, 2})} <= sets


def test_general_no_budget():
    assert {s.targets for s in general_schedules(line(3), 0, 1, 1, [0, 1, 2])} == {frozenset({0})}


def test_general_empty_seed():
    g = DirectedGameGraph.from_edges([0, 1], [])
    assert general_schedules(g, 0, 5, 1, [1]) == []


def test_full_path_examples():
    g = line(2)
    assert get_full_path(g, 0, {1}, 1).cost == 2
    fp = get_full_path(g, 0, {1}, 3)
    assert fp.cost == 4 and fp.path == (0, 1, 1, 1, 0) and fp.steps == 2
    assert not get_full_path(DirectedGameGraph.from_edges([0, 1], []), 0, {1}, 1).feasible


def test_idle_schedule_only_when_empty():
    g = DirectedGameGraph.from_edges([0, 1], [])
    assert defender_schedules(g, [0], 5, 1, [1]) == [Schedule(frozenset())]
    assert all(not s.is_idle for s in defender_schedules(line(2), [0], 5, 1, [1]))


def _sfg(u_a_unc, u_a_cov=None, u_d_unc=None, u_d_cov=None, schedules=None):
    n = len(u_a_unc)
    u_a_cov = u_a_cov or [0.0] * n
    u_d_unc = u_d_unc or [-x for x in u_a_unc]
    u_d_cov = u_d_cov or [0.0] * n
    U = np.array([u_d_unc, u_d_cov, u_a_cov, u_a_unc], dtype=float)
    return ScheduleFormGame(tuple(range(n)), schedules, U)


def test_matrix_direct_fill():
    sfg = _sfg([4, 2], schedules=((Schedule({0}), Schedule({1})),))
    g = schedule_game_matrix(sfg, general_sum=True)
    assert g.B.tolist() == [[0.0, 2.0], [4.0, 0.0]]


def test_matrix_uncovered_and_double_cover():
    sfg = _sfg([4, 2], u_a_cov=[1, 1], u_d_cov=[-1, -1], schedules=((Schedule({0}),), (Schedule({0}),)))
    g = schedule_game_matrix(sfg, general_sum=True)
    assert g.A.tolist() == [[-1.0, -2.0]]
    assert g.B.tolist() == [[1.0, 2.0]]


def test_matrix_subtracts_cost():
    sfg = _sfg([4], schedules=((Schedule({0}, 2, 1.5),),))
    assert schedule_game_matrix(sfg, general_sum=True).A.tolist() == [[-1.5]]


def test_scale_examples():
    t = scale_target_utilities([TargetSpec(0, 3.0, -5.0, 0.0, 0.0, 3.0)], 3.0, 5.0)[0]
    assert t.u_d_covered == -1.0 and t.u_a_covered == 1.0
    t = scale_target_utilities([TargetSpec(0, 3.0, -5.0, 0.0, 0.0, 3.0)], 1.0, 1.0)[0]
    assert t.u_d_covered == -5.0 and t.u_a_covered == 3.0
    with pytest.raises(ValueError):
        scale_target_utilities([TargetSpec(0, 1.0)], 0.0, 1.0)


def test_bad_joint_action():
    with pytest.raises(ValueError):
        ScheduleFormGame((0,), ((Schedule({0}),),), np.zeros((4, 1)), ((3,),))


@given(undirected_graphs(7), st.integers(1, 7), st.integers(1, 3), st.data())
def test_general_schedules_match_tour_oracle(g, T, delta, data):
    nodes = list(g.node_ids)
    home = data.draw(st.sampled_from(nodes))
    targets = sorted(data.draw(st.sets(st.sampled_from(nodes), min_size=1, max_size=5)))
    got = {s.targets for s in general_schedules(g, home, T, delta, targets)}
    want = {
        frozenset(S)
        for r in range(1, len(targets) + 1)
        for S in itertools.combinations(targets, r)
        if tour_feasible(g, home, S, T, delta)
    }
    assert got == want
    simple = {s.targets for s in simple_schedules(g, home, T, delta, targets)}
    assert simple == {S for S in want if len(S) == 1}


@given(undirected_graphs(6), st.integers(1, 7), st.integers(1, 2), st.floats(0, 3), st.data())
def test_schedule_cost_bound(g, T, delta, cost, data):
    home = data.draw(st.sampled_from(list(g.node_ids)))
    for s in general_schedules(g, home, T, delta, list(g.node_ids)[:5], cost):
        assert s.movement_cost <= cost * T + 1e-12
        assert s.path[0] == home and s.path[-1] == home


@given(st.lists(st.integers(1, 4), min_size=1, max_size=3))
def test_joint_action_count(sizes):
    groups = tuple(tuple(Schedule({i % 2}) for i in range(k)) for k in sizes)
    sfg = _sfg([1, 2], schedules=groups)
    assert len(sfg.joint_actions) == int(np.prod(sizes))
    assert schedule_game_matrix(sfg).A.shape == (int(np.prod(sizes)), 2)
