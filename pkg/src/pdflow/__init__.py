"""Pushdown control-flow analysis for a small higher-order language.

The package runs several abstract machines over the same programs: a
finite-state baseline, a pushdown machine whose continuations live in a
context-keyed table, a function-boundary variant of it, a stack-inspection
machine, and a machine for shift and reset.  A concrete interpreter serves
as the oracle for differential soundness checks.
"""

from .config import Config, ConfigError, check_config
from .diff import Verdict, diff
from .engine import BudgetExceeded, System, analyze
from .estimator import PushdownAnalyzer, check_program
from .facts import result_values, return_flow
from .syntax import ParseError, parse, unparse

__all__ = [
    "Config", "ConfigError", "check_config", "Verdict", "diff", "BudgetExceeded",
    "System", "analyze", "PushdownAnalyzer", "check_program", "result_values",
    "return_flow", "ParseError", "parse", "unparse",
]

__version__ = "0.1.0"
