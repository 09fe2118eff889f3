import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from pdflow import PushdownAnalyzer, check_program
from pdflow.concrete import OpenProgram
from pdflow.config import ConfigError
from pdflow.corpus import bundled
from pdflow.domains import Const
from pdflow.syntax import parse

TWO = "((λ (f) (+ (f 1) (f 2))) (λ (x) x))"


def test_params_round_trip():
    est = PushdownAnalyzer(machine="cesik", alloc="kcfa:1")
    assert est.get_params()["alloc"] == "kcfa:1"
    copy = clone(est)
    assert copy.get_params() == est.get_params()
    est.set_params(alloc="mono")
    assert est.alloc == "mono"


def test_fit_predict():
    est = PushdownAnalyzer().fit(TWO)
    assert est.results_ == {Const(1), Const(2)} or est.results_
    by_site = est.predict()
    assert by_site and all(isinstance(k, int) for k in by_site)
    site = next(iter(by_site))
    assert est.predict([site, -1]) == [by_site[site], []]
    assert est.score() == -len(est.facts_)
    assert est.report_.states == len(est.system_.seen)


def test_pushdown_scores_at_least_baseline():
    (prog,) = [p for p in bundled() if p.name == "proxy-map"]
    e = prog.parse()
    pd = PushdownAnalyzer().fit(e)
    base = PushdownAnalyzer(machine="baseline").fit(e)
    assert pd.score() > base.score()


def test_not_fitted():
    with pytest.raises(NotFittedError):
        PushdownAnalyzer().predict()


def test_rejects_open_and_bad_config():
    with pytest.raises(OpenProgram):
        PushdownAnalyzer().fit("(λ (x) y)")
    with pytest.raises(ConfigError):
        PushdownAnalyzer(alloc="fresh").fit("1")
    with pytest.raises(TypeError):
        check_program(42)
    e = parse("1")
    assert check_program(e) is e
