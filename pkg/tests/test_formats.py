import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sgkit.gambit import NfgError, dumps_nfg, format_payoff, loads_nfg
from sgkit.games import BimatrixGame
from sgkit.serialize import SchemaError, dump_graph_document, dumps_game, load_graph_document, loads_game

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)
games = st.integers(1, 5).flatmap(
    lambda n: st.integers(1, 5).flatmap(
        lambda m: st.tuples(
            *[st.lists(finite, min_size=n * m, max_size=n * m).map(lambda v: np.array(v).reshape(n, m))] * 2
        )
    )
)


def test_payload_order():
    g = BimatrixGame.from_zero_sum(np.array([[1.0, -1.0], [-1.0, 1.0]]))
    text = dumps_nfg(g, "pennies")
    head, body = text.strip().split("\n\n")
    assert head == 'NFG 1 R "pennies" { "Defender" "Attacker" } { 2 2 }'
    assert body == "1 -1 -1 1 -1 1 1 -1"
    assert text.endswith("\n")


def test_single_cell():
    text = dumps_nfg(BimatrixGame(np.array([[0.5]]), np.array([[-2.0]])))
    assert text.split("\n\n")[1].split() == ["0.5", "-2"]


def test_nonfinite_rejected():
    with pytest.raises((NfgError, ValueError)):
        dumps_nfg(BimatrixGame(np.array([[np.inf]]), np.array([[0.0]])))


def test_bad_payload_count():
    with pytest.raises(NfgError):
        loads_nfg('NFG 1 R "x" { "a" "b" } { 1 1 }\n1\n')


@given(games)
def test_nfg_roundtrip_bit_exact(AB):
    A, B = AB
    g = loads_nfg(dumps_nfg(BimatrixGame(A, B)))
    assert np.array_equal(g.A, A) and np.array_equal(g.B, B)
    assert g.A.tobytes() == (A + 0.0).tobytes()


@given(finite)
def test_payoff_shortest_repr(x):
    s = format_payoff(x)
    assert float(s) == x
    assert len(s) <= len(repr(x))


def test_game_json_roundtrip(lobeke_sse):
    text = dumps_game(lobeke_sse)
    back = loads_game(text)
    assert dumps_game(back) == text
    assert back.sfg == lobeke_sse.sfg
    assert back.nfg == lobeke_sse.nfg
    assert back.targets == lobeke_sse.targets
    assert back.graph == lobeke_sse.graph
    assert back.config == lobeke_sse.config


def test_graph_document_roundtrip(lobeke_sse):
    text = dump_graph_document(lobeke_sse.graph, lobeke_sse.targets)
    g, t = load_graph_document(text)
    assert g == lobeke_sse.graph and tuple(t) == lobeke_sse.targets
    assert dump_graph_document(g, t) == text


def test_schema_errors_name_path(lobeke_sse):
    d = json.loads(dumps_game(lobeke_sse))
    del d["graph"]
    with pytest.raises(SchemaError, match=r"\$"):
        loads_game(json.dumps(d))
    with pytest.raises(SchemaError):
        loads_game("{not json")
