import random

import pytest

from pdflow.concrete import run
from pdflow.corpus import bundled, load_dir, read_header
from pdflow.domains import ANY_INT, Const, show_value
from pdflow.engine import analyze
from pdflow.facts import result_values
from pdflow.gen import programs, random_source
from pdflow.syntax import closed, max_depth, parse, uses_control, uses_marks

# concrete results of the bundled programs, frozen from the oracle run
CONCRETE = {
    "church": "4", "cm-callee-frame": "0", "cm-deny-under-grant": "2", "cm-escape": "1",
    "cm-frame-test": "1", "cm-grant-shadows-deny": "1", "cm-grant-test": "1",
    "cm-higher-order": "#f", "cm-no-grant": "1", "cm-partial": "1", "cm-same-frame": "2",
    "cm-two-contexts": "2", "cm-two-perms": "1", "identity": "(λ (y) y)", "memo-repeat": "3",
    "proxy-map": "(λ (ps) ((ps pa) pb))", "sr-abort": "6", "sr-cps": "#t", "sr-direct": "#t",
    "sr-nested": "121", "sr-twice": "12", "two-callers": "#f",
}


def test_header():
    assert read_header("; machine: cm\n;; note: two words\n(λ (x) x)\n; late: no") == {
        "machine": "cm", "note": "two words"}
    assert read_header("(λ (x) x)") == {}


def test_bundled_programs_are_closed():
    progs = bundled()
    assert {p.name for p in progs} == set(CONCRETE) | {"omega"}
    for p in progs:
        e = p.parse()
        assert closed(e)
        assert uses_marks(e) == (p.machine == "cm")
        assert uses_control(e) == (p.machine == "shift-reset")


def test_cm_corpus_size():
    names = {p.name for p in bundled("cm")}
    assert len(names) >= 10 and "cm-grant-shadows-deny" in names


@pytest.mark.parametrize("prog", bundled(), ids=lambda p: p.name)
def test_concrete_results(prog):
    r = run(prog.parse(), 10_000)
    if prog.name == "omega":
        assert r.outcome == "out-of-fuel"
    else:
        assert r.outcome == "value" and show_value(r.value) == CONCRETE[prog.name]


@pytest.mark.parametrize("prog", bundled(), ids=lambda p: p.name)
def test_abstract_results_contain_concrete(prog):
    e = prog.parse()
    system = analyze(e, prog.machine)
    r = run(e, 10_000)
    if r.outcome != "value":
        assert system.results() == set()
        return
    v = r.value
    if isinstance(v, Const) and type(v.value) is int:
        assert v in system.results() or ANY_INT in system.results()
    else:
        assert show_value(v) in result_values(system)


def test_load_dir(tmp_path):
    (tmp_path / "a.scm").write_text("; machine: cesik\n1\n", encoding="utf-8")
    (tmp_path / "b.txt").write_text("2", encoding="utf-8")
    (prog,) = load_dir(tmp_path)
    assert prog.name == "a" and prog.machine == "cesik"


def test_generator_depth_and_closure():
    for kw in ({}, {"marks": True}, {"control": True}):
        for e in programs(200, seed=3, **kw):
            assert closed(e) and max_depth(e) <= 6
            if not kw:
                assert not uses_marks(e) and not uses_control(e)


def test_generator_is_seeded():
    a = random_source(random.Random(9))
    assert a == random_source(random.Random(9))
    assert parse(a) is not None
