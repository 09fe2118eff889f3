"""Shared test helpers: a substitution evaluator and term strategies."""

from __future__ import annotations

import random

from hypothesis import strategies as st

from pdflow.domains import Closure, Const
from pdflow.syntax import App, Lam, Lit, Prim, Var, parse, unparse

# Terms for the substitution evaluator are tuples:
#   ("var", x) ("lam", x, body) ("app", f, a) ("lit", v) ("prim", op, args)


def to_term(e):
    if isinstance(e, Var):
        return ("var", e.name)
    if isinstance(e, Lam):
        return ("lam", e.param, to_term(e.body))
    if isinstance(e, App):
        return ("app", to_term(e.fn), to_term(e.arg))
    if isinstance(e, Lit):
        return ("lit", e.value)
    if isinstance(e, Prim):
        return ("prim", e.op, tuple(to_term(a) for a in e.args))
    raise TypeError(f"no substitution rule for {type(e).__name__}")


def is_value(t) -> bool:
    return t[0] in ("lam", "lit")


def subst(t, x, v):
    """t[v/x]; v is closed so capture cannot happen."""
    tag = t[0]
    if tag == "var":
        return v if t[1] == x else t
    if tag == "lam":
        return t if t[1] == x else ("lam", t[1], subst(t[2], x, v))
    if tag == "app":
        return ("app", subst(t[1], x, v), subst(t[2], x, v))
    if tag == "prim":
        return ("prim", t[1], tuple(subst(a, x, v) for a in t[2]))
    return t


class Stuck(Exception):
    pass


def _delta(op, vals):
    xs = [v[1] if v[0] == "lit" else v for v in vals]
    isint = [isinstance(x, int) and not isinstance(x, bool) for x in xs]
    if op == "+" and all(isint):
        return ("lit", xs[0] + xs[1])
    if op == "<=" and all(isint):
        return ("lit", xs[0] <= xs[1])
    if op == "not" and isinstance(xs[0], bool):
        return ("lit", not xs[0])
    raise Stuck(op)


def step(t):
    """One call-by-value step, left to right; None for values."""
    tag = t[0]
    if is_value(t):
        return None
    if tag == "var":
        raise Stuck(t[1])
    if tag == "app":
        f, a = t[1], t[2]
        if not is_value(f):
            return ("app", step(f), a)
        if not is_value(a):
            return ("app", f, step(a))
        if f[0] != "lam":
            raise Stuck("apply")
        return subst(f[2], f[1], a)
    args = t[2]
    for i, a in enumerate(args):
        if not is_value(a):
            return ("prim", t[1], args[:i] + (step(a),) + args[i + 1:])
    return _delta(t[1], args)


def evaluate(e, fuel=10_000):
    """("value", term) | ("stuck", None) | ("out-of-fuel", None)."""
    t = to_term(e)
    for _ in range(fuel):
        try:
            nxt = step(t)
        except Stuck:
            return "stuck", None
        if nxt is None:
            return "value", t
        t = nxt
    return ("value", t) if is_value(t) else ("out-of-fuel", None)


def show_term(t) -> str:
    if t[0] == "lit":
        v = t[1]
        return ("#t" if v else "#f") if isinstance(v, bool) else str(v)
    if t[0] == "var":
        return t[1]
    if t[0] == "lam":
        return f"(λ ({t[1]}) {show_term(t[2])})"
    if t[0] == "app":
        return f"({show_term(t[1])} {show_term(t[2])})"
    return "(" + " ".join([t[1]] + [show_term(a) for a in t[2]]) + ")"


def read_back(v, store) -> str:
    """Print a machine value with its environment substituted in."""
    if isinstance(v, Const):
        return show_term(("lit", v.value))
    assert isinstance(v, Closure)
    t = to_term(v.lam)
    for x, a in v.env.items():
        (w,) = store[a]
        t = ("lam", t[1], subst(t[2], x, parse_term(read_back(w, store))))
    return show_term(t)


def parse_term(text):
    return to_term(parse(text))


# ---------------------------------------------------------------- strategies

NAMES = ("x", "y", "z")


def _src_strategy(leaf_names=NAMES, marks=True, control=True):
    leaves = st.one_of(
        st.sampled_from(leaf_names),
        st.integers(0, 9).map(str),
        st.sampled_from(["#t", "#f"]),
    )
    perms = st.sets(st.sampled_from(["p", "q", "r"]), min_size=1, max_size=2).map(
        lambda s: "(" + " ".join(sorted(s)) + ")")

    def extend(inner):
        opts = [
            st.tuples(st.sampled_from(leaf_names), inner).map(lambda t: f"(λ ({t[0]}) {t[1]})"),
            st.tuples(inner, inner).map(lambda t: f"({t[0]} {t[1]})"),
            st.tuples(st.sampled_from(["+", "<="]), inner, inner).map(lambda t: f"({t[0]} {t[1]} {t[2]})"),
            inner.map(lambda a: f"(not {a})"),
        ]
        if marks:
            opts += [
                st.tuples(st.sampled_from(["grant", "frame"]), perms, inner).map(
                    lambda t: f"({t[0]} {t[1]} {t[2]})"),
                st.tuples(perms, inner, inner).map(lambda t: f"(test {t[0]} {t[1]} {t[2]})"),
            ]
        if control:
            opts += [
                st.tuples(st.sampled_from(leaf_names), inner).map(lambda t: f"(shift {t[0]} {t[1]})"),
                inner.map(lambda a: f"(reset {a})"),
            ]
        return st.one_of(*opts)

    return st.recursive(leaves, extend, max_leaves=12)


source_texts = _src_strategy()
exprs = source_texts.map(parse)
pure_exprs = _src_strategy(marks=False, control=False).map(parse)

# closed programs come from the package generator, seeded by hypothesis
seeds = st.integers(0, 2**32 - 1)


def closed_program(seed, **kw):
    from pdflow.gen import random_program
    return random_program(random.Random(seed), 6, **kw)


def labels_unique(e) -> bool:
    from pdflow.syntax import walk
    labels = [n.label for n in walk(e)]
    return len(labels) == len(set(labels))


__all__ = [
    "evaluate", "read_back", "show_term", "exprs", "pure_exprs", "source_texts",
    "seeds", "closed_program", "labels_unique", "unparse",
]
