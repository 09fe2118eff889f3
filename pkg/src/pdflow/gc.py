"""Abstract and concrete garbage collection.

Live addresses are those reachable in the store from the addresses the
current control touches plus those the stack touches.  Abstract stacks are
walked through the continuation table, which can give several stack live
sets; exact collection keeps one collected state per live set, union
collection keeps a single state collected against their union.
"""

from __future__ import annotations

from .domains import AppL, AppR, Closure, PrimArgs, Store
from .metafun import terminal
from .syntax import Expr, free_vars

__all__ = [
    "touched", "reach", "kll_concrete", "kll_abstract", "live_sets",
    "gc_exact", "gc_union", "gc_concrete", "concrete_live",
]


def _touched_expr(e: Expr, env) -> frozenset:
    return frozenset(env[x] for x in free_vars(e) if x in env)


def touched(x, env=None) -> frozenset:
    """Addresses directly referenced by a value, a frame, or ``(expr, env)``."""
    if env is not None:
        return _touched_expr(x, env)
    if isinstance(x, tuple) and len(x) == 2 and isinstance(x[0], Expr):
        return _touched_expr(*x)
    if isinstance(x, Closure):
        got = x.__dict__.get("_touched")
        if got is None:
            got = _touched_expr(x.lam, x.env)
            object.__setattr__(x, "_touched", got)
        return got
    if isinstance(x, AppL):
        return _touched_expr(x.arg, x.env)
    if isinstance(x, AppR):
        return touched(x.fn)
    if isinstance(x, PrimArgs):
        out = set()
        for v in x.done:
            out |= touched(v)
        for e in x.prim.args[len(x.done):]:
            out |= _touched_expr(e, x.env)
        return frozenset(out)
    kont = getattr(x, "kont", None)
    if kont is not None and hasattr(kont, "frames"):  # captured continuation
        return kll_concrete(kont)
    return frozenset()


def reach(root, store: Store) -> frozenset:
    """Addresses reachable from ``root`` (root included)."""
    d = store._d
    seen = set(root)
    work = list(seen)
    while work:
        vs = d.get(work.pop())
        if not vs:
            continue
        for v in vs:
            t = v.__dict__.get("_touched") if type(v) is Closure else None
            if t is None:
                t = touched(v)
            for b in t:
                if b not in seen:
                    seen.add(b)
                    work.append(b)
    return frozenset(seen)


def kll_concrete(k) -> frozenset:
    """Addresses touched by the frames of a concrete stack.

    Stacks are persistent, so the answer is cached on each node and a push
    only costs the new frame.
    """
    pending = []
    node = k
    while node.rest is not None and node.live is None:
        pending.append(node)
        node = node.rest
    acc = frozenset() if node.rest is None else node.live
    for n in reversed(pending):
        t = touched(n.frame)
        acc = acc | t if not t <= acc else acc
        n.live = acc
    return acc


def kll_abstract(kstore, k) -> frozenset:
    """One live set per way of unrolling ``k`` through ``kstore``."""

    def step(term):
        if term[0] == "L":
            return ()
        _, kont, live = term
        if kont.tail is None:
            return (("L", live),)
        live2 = live | touched(kont.frame)
        return [("K", k2, live2) for k2 in kstore.get(kont.tail, ())]

    return frozenset(t[1] for t in terminal(step, ("K", k, frozenset())) if t[0] == "L")


def live_sets(s, kstore) -> frozenset:
    roots = s.roots()
    return frozenset(reach(roots | L, s.store) for L in kll_abstract(kstore, s.kont))


def gc_exact(s, kstore) -> frozenset:
    """One collected state per stack live set."""
    return frozenset(s.with_store(s.store.restrict(L)) for L in live_sets(s, kstore))


def gc_union(s, kstore):
    """A single state collected against every known stack at once."""
    stack = frozenset().union(*kll_abstract(kstore, s.kont))
    live = reach(s.roots() | stack, s.store)
    return s.with_store(s.store.restrict(live))


def concrete_live(s) -> frozenset:
    from .concrete import CEv

    roots = _touched_expr(s.expr, s.env) if isinstance(s, CEv) else touched(s.value)
    roots |= kll_concrete(s.kont)
    meta = s.meta
    while meta:
        roots |= kll_concrete(meta[0])
        meta = meta[1]
    return reach(roots, s.store)


def gc_concrete(s):
    from dataclasses import replace

    store = s.store.restrict(concrete_live(s))
    return s if store is s.store else replace(s, store=store)
