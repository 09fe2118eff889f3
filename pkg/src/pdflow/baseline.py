"""Finite-state baseline: continuations live at finite addresses.

A call at site ``l`` stores the current continuation at the address
``kalloc(l, t)``; a return pops every continuation ever stored there, so it
can flow to any caller that used the same site.  This exists to show the
return-flow imprecision that the context-keyed continuation table removes.

Two formulations share the rules.  :func:`bstep` keeps the continuation
bindings inside each state's store.  :func:`gstep` keeps them in one
global table (the engine's ``kstore``), which over-approximates the first
while avoiding one copy of the whole analysis per combination of stored
continuations.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Any

from .alloc import AllocPolicy
from .domains import hashcache, AppL, AppR, Closure, Const, Env, PrimArgs, Store, EMPTY_ENV, EMPTY_STORE, delta
from .gc import touched
from .konts import AKONT_EMPTY, Empty, Push
from .marks import EMPTY_MARKS
from .pushdown import Unsupported, enter
from .syntax import App, Expr, Lam, Lit, Prim, Var

__all__ = ["BEv", "BCo", "bstep", "gstep", "inject", "is_final", "store_konts"]


@hashcache
@dataclass(frozen=True)
class BEv:
    expr: Expr
    env: Env
    store: Store
    kont: Any
    time: Any

    def roots(self):
        return touched(self.expr, self.env)

    def with_store(self, store):
        return replace(self, store=store)


@hashcache
@dataclass(frozen=True)
class BCo:
    value: Any
    store: Store
    kont: Any
    time: Any

    def roots(self):
        return touched(self.value)

    def with_store(self, store):
        return replace(self, store=store)


def inject(e: Expr, policy: AllocPolicy) -> BEv:
    return BEv(e, EMPTY_ENV, EMPTY_STORE, AKONT_EMPTY, policy.initial_time())


def is_final(s) -> bool:
    return isinstance(s, BCo) and isinstance(s.kont, Empty)


def _step(s, policy, push, konts) -> list:
    """Shared rules; ``push(state, addr)`` records the continuation."""
    if isinstance(s, BEv):
        e, env, store, k, t = s.expr, s.env, s.store, s.kont, s.time
        if isinstance(e, Var):
            # a shared table can pair a continuation with a store from another
            # path that never bound the variable; that pairing has no successor
            return [(BCo(v, store, k, t), None) for v in store.get(env.lookup(e.name), ())]
        if isinstance(e, Lam):
            return [(BCo(Closure(e, env), store, k, t), None)]
        if isinstance(e, Lit):
            return [(BCo(Const(e.value), store, k, t), None)]
        if isinstance(e, (App, Prim)):
            a = policy.kalloc(e.label, t)
            store2, d = push(s, a)
            if isinstance(e, App):
                fr, first = AppL(e.arg, env, e.label), e.fn
            else:
                fr, first = PrimArgs(e, (), env), e.args[0]
            return [(BEv(first, env, store2, Push(fr, EMPTY_MARKS, a), t), d)]
        raise Unsupported(f"the baseline machine has no rule for {type(e).__name__}")

    v, store, k, t = s.value, s.store, s.kont, s.time
    if isinstance(k, Empty):
        return []
    fr, b = k.frame, k.tail
    if isinstance(fr, AppL):
        return [(BEv(fr.arg, fr.env, store, Push(AppR(v, fr.site), EMPTY_MARKS, b), t), None)]
    if isinstance(fr, AppR):
        if not isinstance(fr.fn, Closure):
            return []
        body, env2, store2, u = enter(fr.fn, v, store, t, fr.site, policy)
        return [(BEv(body, env2, store2, k2, u), None) for k2 in konts(s, b)]
    done = fr.done + (v,)
    if len(done) < len(fr.prim.args):
        nxt = Push(PrimArgs(fr.prim, done, fr.env), EMPTY_MARKS, b)
        return [(BEv(fr.prim.args[len(done)], fr.env, store, nxt, t), None)]
    results = delta(fr.prim.op, done, policy.abstract_numbers)
    return [(BCo(r, store, k2, t), None) for r in results for k2 in konts(s, b)]


def store_konts(store: Store, a) -> list:
    return [k for k in store.get(a, ()) if isinstance(k, (Empty, Push))]


def bstep(s, policy: AllocPolicy) -> list:
    """Successors with continuations joined into the state's own store."""
    return [t for t, _ in _step(
        s, policy,
        lambda st, a: (st.store.join(a, st.kont), None),
        lambda st, b: store_konts(st.store, b),
    )]


def gstep(s, kstore, policy: AllocPolicy) -> list:
    """Successors paired with deltas to the global continuation table."""
    return _step(
        s, policy,
        lambda st, a: (st.store, {a: frozenset([st.kont])}),
        lambda st, b: kstore.get(b, ()),
    )
