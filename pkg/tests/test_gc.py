import random

from hypothesis import given, settings
from hypothesis import strategies as st

from pdflow.concrete import CEv, run
from pdflow.domains import EMPTY_ENV, EMPTY_STORE, AppL, AppR, Closure, Const, Env, Store
from pdflow.engine import analyze
from pdflow.gc import (
    gc_concrete, gc_exact, gc_union, kll_abstract, kll_concrete, reach, touched,
)
from pdflow.konts import AKONT_EMPTY, CKont, Empty, Push
from pdflow.marks import EMPTY_MARKS
from pdflow.pushdown import Ev
from pdflow.syntax import parse
from support import closed_program, seeds


def frame_on(addr, name="y"):
    return AppL(parse(name), Env({name: addr}), 0)


def closure_over(addrs):
    """A closure whose free variables are bound to ``addrs``."""
    names = [f"f{i}" for i in range(len(addrs))]
    body = "0"
    for n in names:
        body = f"(+ {n} {body})"
    return Closure(parse(f"(λ (x) {body})"), Env(dict(zip(names, addrs))))


def test_touched_examples():
    assert touched(parse("(λ (x) x)"), EMPTY_ENV) == set()
    assert touched(parse("y"), Env({"y": "a"})) == {"a"}
    clo = Closure(parse("(λ (x) z)"), Env({"z": "b"}))
    assert touched(AppR(clo, 0)) == {"b"}
    assert touched(Const(3)) == set()


def test_reach_examples():
    store = Store({"a": frozenset([Closure(parse("(λ (x) y)"), Env({"y": "b"}))]),
                   "b": frozenset([Const(1)])})
    assert reach(set(), store) == set()
    assert reach({"a"}, store) == {"a", "b"}
    assert reach({"b"}, store) == {"b"}


store_graphs = st.integers(1, 20).flatmap(lambda n: st.tuples(
    st.just(n),
    st.lists(st.sets(st.integers(0, n - 1), max_size=4), min_size=n, max_size=n),
    st.sets(st.integers(0, n - 1), max_size=3),
))


def _closure_matrix(n, succ):
    m = [[j in succ[i] for j in range(n)] for i in range(n)]
    for i in range(n):
        m[i][i] = True
    for k in range(n):
        for i in range(n):
            if m[i][k]:
                for j in range(n):
                    m[i][j] = m[i][j] or m[k][j]
    return m


@settings(max_examples=200, deadline=None)
@given(store_graphs)
def test_reach_is_transitive_closure(g):
    n, succ, root = g
    store = Store({i: frozenset([closure_over(sorted(succ[i]))]) for i in range(n)})
    m = _closure_matrix(n, succ)
    expect = {j for i in root for j in range(n) if m[i][j]}
    assert reach(root, store) == expect


@settings(max_examples=100, deadline=None)
@given(store_graphs, st.sets(st.integers(0, 19), max_size=3))
def test_reach_monotone(g, more):
    n, succ, root = g
    store = Store({i: frozenset([closure_over(sorted(succ[i]))]) for i in range(n)})
    bigger_root = root | {x for x in more if x < n}
    assert reach(root, store) <= reach(bigger_root, store)
    extra = store.join(0, Const(9)).join(n, Const(1))
    assert reach(root, store) <= reach(root, extra)


def test_kll_concrete():
    assert kll_concrete(CKont.of([])) == set()
    assert kll_concrete(CKont.of([frame_on("a")])) == {"a"}
    assert kll_concrete(CKont.of([frame_on("a"), frame_on("b", "z")])) == {"a", "b"}


def test_kll_abstract():
    tau = "τ"
    fa, fb = frame_on("a"), frame_on("b", "z")
    assert kll_abstract({}, AKONT_EMPTY) == {frozenset()}
    k = Push(fa, EMPTY_MARKS, tau)
    assert kll_abstract({tau: {AKONT_EMPTY}}, k) == {frozenset({"a"})}
    loop = {tau: {AKONT_EMPTY, Push(fb, EMPTY_MARKS, tau)}}
    assert kll_abstract(loop, k) == {frozenset({"a"}), frozenset({"a", "b"})}


def _two_stack_fixture():
    t1, t2 = "τ1", "τ2"
    kstore = {
        t1: {Push(frame_on("a"), EMPTY_MARKS, t2), Push(frame_on("b", "z"), EMPTY_MARKS, t2)},
        t2: {AKONT_EMPTY},
    }
    k = Push(AppL(parse("1"), EMPTY_ENV, 0), EMPTY_MARKS, t1)
    store = Store({"a": frozenset([Const(1)]), "b": frozenset([Const(2)]),
                   "g": frozenset([Const(3)])})
    return Ev(parse("5"), EMPTY_ENV, store, k, ()), kstore


def test_gc_exact_examples():
    clean = Ev(parse("y"), Env({"y": "a"}), Store({"a": frozenset([Const(1)])}), AKONT_EMPTY, ())
    assert gc_exact(clean, {}) == {clean}
    dirty = clean.with_store(clean.store.join("g", Const(2)))
    (got,) = gc_exact(dirty, {})
    assert set(got.store) == {"a"}
    s, kstore = _two_stack_fixture()
    stores = {frozenset(x.store) for x in gc_exact(s, kstore)}
    assert stores == {frozenset({"a"}), frozenset({"b"})}


def test_gc_union_examples():
    s, kstore = _two_stack_fixture()
    assert set(gc_union(s, kstore).store) == {"a", "b"}
    clean = Ev(parse("y"), Env({"y": "a"}), Store({"a": frozenset([Const(1)])}), AKONT_EMPTY, ())
    assert gc_union(clean, {}) == clean
    # with an empty stack the union is the concrete collection
    dirty = clean.with_store(clean.store.join("g", Const(2)))
    conc = CEv(dirty.expr, dirty.env, dirty.store, CKont.of([]), (), 0)
    assert set(gc_union(dirty, {}).store) == set(gc_concrete(conc).store) == {"a"}


def test_gc_concrete_examples():
    s = CEv(parse("5"), EMPTY_ENV, Store({"a": frozenset([Const(1)])}),
            CKont.of([frame_on("a")]), (), 0)
    assert gc_concrete(s) == s
    s2 = CEv(parse("5"), EMPTY_ENV, s.store.join("g", Const(1)), s.kont, (), 0)
    assert set(gc_concrete(s2).store) == {"a"}
    s3 = CEv(parse("5"), EMPTY_ENV, EMPTY_STORE, CKont.of([]), (), 0)
    assert gc_concrete(s3) == s3


def _reachable_concrete_states(n, seed=0):
    rng = random.Random(seed)
    out = []
    i = 0
    while len(out) < n:
        e = closed_program(rng.getrandbits(32))
        trace = run(e, 300).trace
        out.extend(rng.sample(trace, min(len(trace), 5)))
        i += 1
    return out[:n]


def test_gc_concrete_idempotent_on_reachable_states():
    for s in _reachable_concrete_states(1000):
        once = gc_concrete(s)
        assert gc_concrete(once) == once
        assert once.store.leq(s.store)


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_exact_below_union_and_idempotent(seed):
    e = closed_program(seed)
    system = analyze(e, "pushdown")
    for s in system.seen:
        u = gc_union(s, system.kstore)
        assert gc_union(u, system.kstore) == u
        for x in gc_exact(s, system.kstore):
            assert x.store.leq(u.store)
