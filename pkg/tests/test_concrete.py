import json

import pytest
from hypothesis import given, settings

from pdflow.alloc import FreshAlloc
from pdflow.concrete import (
    CCo, CEv, Comp, OpenProgram, cstep, inject, iter_run, meta_length, run, trace_line,
)
from pdflow.domains import EMPTY_ENV, EMPTY_STORE, Closure, Const, Env, Store
from pdflow.konts import EMPTY_KONT
from pdflow.syntax import Reset, free_vars, parse
from support import closed_program, evaluate, read_back, seeds, show_term

I = "(λ (x) x)"
OMEGA = "((λ (x) (x x)) (λ (x) (x x)))"


def test_inject():
    e = parse(I)
    s = inject(e)
    assert s == CEv(e, EMPTY_ENV, EMPTY_STORE, EMPTY_KONT, (), 0)
    e2 = parse(f"({I} {I})")
    assert inject(e2).expr is e2


def test_inject_rejects_open():
    with pytest.raises(OpenProgram):
        inject(parse("x"))


def test_variable_rule():
    e = parse(I)
    clo = Closure(e, EMPTY_ENV)
    body = e.body  # Var x
    s = CEv(body, Env({"x": 0}), Store({0: frozenset([clo])}), EMPTY_KONT, (), 0)
    (nxt,) = cstep(s, FreshAlloc())
    assert nxt == CCo(EMPTY_KONT, (), clo, s.store, 0)


def test_test_rule_on_unmarked_stack_passes():
    # nothing on the stack denies p, so the test succeeds
    e = parse("(test (p) 1 2)")
    (nxt,) = cstep(inject(e), FreshAlloc())
    assert isinstance(nxt, CEv) and nxt.expr is e.then
    assert run(e, 10).value == Const(1)
    assert run(parse("(frame () (test (p) 1 2))"), 10).value == Const(2)


def test_identity_application_result():
    e = parse(f"({I} (λ (y) y))")
    r = run(e, 100)
    assert r.outcome == "value"
    assert isinstance(r.value, Closure)
    assert r.value.lam is e.arg and r.value.env == EMPTY_ENV


def test_self_application_of_identity():
    e = parse(f"({I} {I})")
    r = run(e, 100)
    assert r.outcome == "value" and r.value.lam is e.arg


def test_omega_runs_out_of_fuel():
    r = run(parse(OMEGA), 50)
    assert r.outcome == "out-of-fuel"
    assert len(r.trace) == 51


def test_literal():
    r = run(parse("5"), 1)
    assert r.outcome == "value" and r.value == Const(5)


def test_stuck_is_data():
    r = run(parse("(1 2)"), 100)
    assert r.outcome == "stuck" and "non-function" in r.reason
    r = run(parse("(not 3)"), 100)
    assert r.outcome == "stuck"
    last = r.trace[-1]
    succ = cstep(last, FreshAlloc())
    assert not succ and succ.stuck


def test_primitives():
    assert run(parse("(<= 1 2)"), 50).value == Const(True)
    assert run(parse("(+ 2 3)"), 50).value == Const(5)
    assert run(parse("(not #f)"), 50).value == Const(True)


def test_shift_reset_examples():
    assert run(parse("(reset 1)"), 50).value == Const(1)
    assert run(parse("(reset (shift k (k 1)))"), 50).value == Const(1)
    assert run(parse("(+ 1 (reset (+ 2 (shift k (k (k 3))))))"), 200).value == Const(8)
    assert run(parse("(+ 1 (reset (+ 2 (shift k 5))))"), 200).value == Const(6)


def test_marks_examples():
    assert run(parse("(grant (p) (test (p) 1 2))"), 50).value == Const(1)
    # frame denies everything not listed
    assert run(parse("(grant (p) (frame (q) (test (p) 1 2)))"), 50).value == Const(2)


def test_trace_line_is_json():
    r = run(parse(f"({I} 3)"), 50)
    recs = [json.loads(trace_line(i, s)) for i, s in enumerate(r.trace)]
    assert recs[0]["kind"] == "ev" and recs[-1]["value"] == "3"


# ---------------------------------------------------------------- properties

@settings(max_examples=150, deadline=None)
@given(seeds)
def test_agrees_with_substitution(seed):
    e = closed_program(seed)
    outcome, term = evaluate(e, 3000)
    r = run(e, 20_000)
    if outcome == "out-of-fuel" or r.outcome == "out-of-fuel":
        return
    assert r.outcome == outcome
    if outcome == "value":
        assert read_back(r.value, r.final.store) == show_term(term)


def _trace(seed, **kw):
    return run(closed_program(seed, **kw), 400).trace


@settings(max_examples=100, deadline=None)
@given(seeds)
def test_deterministic_and_monotone(seed):
    trace = _trace(seed, marks=True)
    policy = FreshAlloc()
    for s in trace[:-1]:
        assert len(cstep(s, policy)) <= 1
    for a, b in zip(trace, trace[1:]):
        for addr, vs in a.store.items():
            assert vs <= b.store[addr]


@settings(max_examples=100, deadline=None)
@given(seeds)
def test_free_variable_safety(seed):
    for s in _trace(seed, marks=True):
        if isinstance(s, CEv):
            assert free_vars(s.expr) <= set(s.env)
            assert all(a in s.store for a in s.env.values())


@settings(max_examples=150, deadline=None)
@given(seeds)
def test_meta_balance(seed):
    trace = _trace(seed, control=True)
    for a, b in zip(trace, trace[1:]):
        delta = meta_length(b.meta) - meta_length(a.meta)
        if isinstance(a, CEv) and isinstance(a.expr, Reset):
            assert delta == 1
        elif isinstance(a, CCo) and a.kont.is_empty():
            assert delta == -1
        elif isinstance(a, CCo) and isinstance(getattr(a.kont.frame, "fn", None), Comp):
            assert delta == 1
        else:
            assert delta == 0


def test_gc_run_matches_plain_run():
    for seed in range(40):
        e = closed_program(seed)
        a, b = run(e, 500), run(e, 500, gc=True)
        assert a.outcome == b.outcome
        assert len(a.trace) == len(b.trace)


def test_iter_run_status():
    status = {}
    states = list(iter_run(parse("(+ 1 2)"), 100, status=status))
    assert status["outcome"] == "value" and states[-1].value == Const(3)
