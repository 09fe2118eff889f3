"""Estimator-style front end: configure, fit on a program, query the results."""

from __future__ import annotations

import time

from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .concrete import OpenProgram
from .config import Config, check_config
from .engine import analyze
from .facts import return_flow, returns_by_site
from .report import make_report
from .syntax import Expr, closed, parse

__all__ = ["PushdownAnalyzer", "check_program"]


def check_program(program) -> Expr:
    """Parse source text if needed and reject open programs."""
    if isinstance(program, str):
        program = parse(program)
    if not isinstance(program, Expr):
        raise TypeError(f"expected program text or an Expr, got {type(program).__name__}")
    if not closed(program):
        raise OpenProgram("program has free variables")
    return program


class PushdownAnalyzer(BaseEstimator):
    """Run one abstract machine over a program.

    ``fit`` analyzes; ``predict`` maps application labels to the
    ``(function label, frame signature)`` pairs that call may return into.
    """

    def __init__(self, machine="pushdown", alloc="mono", gc="none", memo=False, budget=None):
        self.machine = machine
        self.alloc = alloc
        self.gc = gc
        self.memo = memo
        self.budget = budget

    def config(self) -> Config:
        return Config(machine=self.machine, alloc=self.alloc, gc=self.gc,
                      memo=self.memo, budget=self.budget)

    def fit(self, X, y=None):
        program = check_program(X)
        config = check_config(self.config(), program)
        t0 = time.perf_counter()
        system = analyze(program, config.machine, config.policy(), config.gc,
                         config.memo, config.budget)
        self.program_ = program
        self.system_ = system
        self.facts_ = return_flow(system)
        self.results_ = frozenset(system.results())
        self.report_ = make_report(system, time.perf_counter() - t0)
        return self

    def predict(self, X=None):
        """Return-flow pairs per application label; all sites when ``X`` is None."""
        check_is_fitted(self, "system_")
        by_site = returns_by_site(self.facts_)
        if X is None:
            return by_site
        return [by_site.get(site, []) for site in X]

    def score(self, X=None, y=None) -> float:
        """Negative count of return-flow facts (fewer means more precise)."""
        check_is_fitted(self, "system_")
        return -float(len(self.facts_))
