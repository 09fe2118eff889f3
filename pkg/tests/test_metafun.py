from hypothesis import given, settings
from hypothesis import strategies as st

from pdflow.konts import Empty, Push
from pdflow.marks import DENY, GRANT, PermMap, ok_abstract, ok_abstract_nested
from pdflow.metafun import TerminalQuery, brute_force_terminal, terminal, terminal_shared


def rel(edges):
    return lambda t: edges.get(t, ())


def test_chain():
    assert terminal(rel({"a": ["b"], "b": ["c"]}), "a") == {"c"}


def test_cycle_has_no_answer():
    assert terminal(rel({"a": ["b"], "b": ["a"]}), "a") == set()


def test_diamond():
    g = {"a": ["b", "c"], "b": ["c"]}
    assert terminal(rel(g), "a") == {"c"} == brute_force_terminal(g, "a")


def test_start_without_successors():
    assert terminal(rel({}), "a") == {"a"}


def test_shared_query_does_not_reexplore():
    q = TerminalQuery()
    g = {"a": ["b"], "b": ["c"]}
    assert terminal_shared(q, rel(g), "a") == {"c"}
    assert terminal_shared(q, rel(g), "b") == set()
    assert q.expansions == 3


def test_flat_shared_equals_terminal():
    g = {1: [2, 3], 2: [4], 3: [4, 5]}
    assert terminal_shared(TerminalQuery(), rel(g), 1) == terminal(rel(g), 1) == {4, 5}


def test_nested_self_referential_query_terminates():
    # τ ↦ {φ^∅·τ}: every unrolling loops, so there is no answer
    tau = "τ"
    k = Push("φ", PermMap(), tau)
    kstore = {tau: frozenset([k])}
    assert ok_abstract_nested(kstore, {"p"}, k) == set()
    assert ok_abstract(kstore, {"p"}, k) == set()
    # with an exit the loop is harmless
    kstore2 = {tau: frozenset([k, Empty(PermMap({"p": DENY}))])}
    assert ok_abstract_nested(kstore2, {"p"}, k) == {False}
    kstore3 = {tau: frozenset([k, Empty(PermMap({"p": GRANT}))])}
    assert ok_abstract_nested(kstore3, {"p"}, k) == {True}


graphs = st.integers(2, 50).flatmap(lambda n: st.tuples(
    st.just(n),
    st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=150),
    st.integers(0, n - 1),
))


@settings(max_examples=300, deadline=None)
@given(graphs)
def test_matches_brute_force(g):
    n, edge_list, start = g
    edges = {}
    for a, b in edge_list:
        edges.setdefault(a, []).append(b)
    stats = {}
    got = terminal(rel(edges), start, stats)
    assert got == brute_force_terminal(edges, start)
    # each term expanded at most once
    assert len(stats["expanded"]) == len(set(stats["expanded"]))
