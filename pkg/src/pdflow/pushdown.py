"""Pushdown abstract machine with a continuation table.

Continuations are one frame deep, ``Push(frame, marks, ctx)``, where
``ctx`` names the application that pushed it.  The continuation table maps
each context to the continuations that were live when the application
started, so returns only flow to callers that really made that call.

The same rules give the continuation-mark (stack-inspection) machine: the
top mark map lives on the ``Empty``/``Push`` node and ``test`` asks every
stack the table can produce.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Any

from .alloc import AllocPolicy
from .domains import (
    hashcache,
    AppL, AppR, Closure, Const, Env, PrimArgs, Store, EMPTY_ENV, EMPTY_STORE,
    delta,
)
from .gc import touched
from .konts import AKONT_EMPTY, CKont, Empty, Push
from .marks import DENY, EMPTY_MARKS, GRANT, mark_update, ok_abstract
from .syntax import (
    App, Expr, Frame, Grant, Lam, Lit, Prim, Reset, Shift, Test, Var,
)

__all__ = [
    "AppContext", "Ev", "Co", "astep", "unroll", "inject", "is_final",
    "Unsupported",
]


class Unsupported(ValueError):
    """The program uses a form this machine does not implement."""


@hashcache
@dataclass(frozen=True)
class AppContext:
    """The call being made: expression, environment, store and time."""
    expr: Expr
    env: Env
    store: Store
    time: Any

    def __repr__(self):
        return f"⟨{self.expr.label}, σ#{len(self.store)}, {self.time!r}⟩"


@hashcache
@dataclass(frozen=True)
class Ev:
    expr: Expr
    env: Env
    store: Store
    kont: Any
    time: Any

    def roots(self):
        return touched(self.expr, self.env)

    def with_store(self, store):
        return self if store is self.store else replace(self, store=store)


@hashcache
@dataclass(frozen=True)
class Co:
    value: Any
    store: Store
    kont: Any
    time: Any

    def roots(self):
        return touched(self.value)

    def with_store(self, store):
        return self if store is self.store else replace(self, store=store)


def inject(e: Expr, policy: AllocPolicy) -> Ev:
    return Ev(e, EMPTY_ENV, EMPTY_STORE, AKONT_EMPTY, policy.initial_time())


def is_final(s) -> bool:
    return isinstance(s, Co) and isinstance(s.kont, Empty)


def _push_call(s: Ev, frame, first: Expr):
    tau = AppContext(s.expr, s.env, s.store, s.time)
    nxt = Ev(first, s.env, s.store, Push(frame, EMPTY_MARKS, tau), s.time)
    return nxt, {tau: frozenset([s.kont])}


def step_ev(s: Ev, kstore, policy: AllocPolicy) -> list:
    e, env, store, k, t = s.expr, s.env, s.store, s.kont, s.time
    if isinstance(e, Var):
        # under exact GC a state may pop into a caller from a stack other
        # than the one its store was collected for; that path is spurious
        return [(Co(v, store, k, t), None) for v in store.get(env.lookup(e.name), ())]
    if isinstance(e, Lam):
        return [(Co(Closure(e, env), store, k, t), None)]
    if isinstance(e, Lit):
        return [(Co(Const(e.value), store, k, t), None)]
    if isinstance(e, App):
        return [_push_call(s, AppL(e.arg, env, e.label), e.fn)]
    if isinstance(e, Prim):
        return [_push_call(s, PrimArgs(e, (), env), e.args[0])]
    if isinstance(e, Grant):
        return [(Ev(e.body, env, store, mark_update(k, e.perms, GRANT), t), None)]
    if isinstance(e, Frame):
        return [(Ev(e.body, env, store, mark_update(k, e.perms, DENY, "complement"), t), None)]
    if isinstance(e, Test):
        answers = ok_abstract(kstore, e.perms, k)
        out = []
        if True in answers:
            out.append((Ev(e.then, env, store, k, t), None))
        if False in answers:
            out.append((Ev(e.orelse, env, store, k, t), None))
        return out
    if isinstance(e, (Shift, Reset)):
        raise Unsupported("shift/reset needs the delimited-control machine")
    raise TypeError(f"unknown expression {e!r}")


def enter(fn: Closure, v, store: Store, t, site, policy: AllocPolicy):
    """Bind the argument; returns (body, env, store, time)."""
    u = policy.tick(t, site)
    a = policy.alloc(fn.lam.param, u)
    return fn.lam.body, fn.env.extend(fn.lam.param, a), store.join(a, v), u


def step_co(s: Co, kstore, policy: AllocPolicy) -> list:
    v, store, k, t = s.value, s.store, s.kont, s.time
    if isinstance(k, Empty):
        return []
    fr, tau = k.frame, k.tail
    if isinstance(fr, AppL):
        return [(Ev(fr.arg, fr.env, store, Push(AppR(v, fr.site), EMPTY_MARKS, tau), t), None)]
    if isinstance(fr, AppR):
        if not isinstance(fr.fn, Closure):
            return []
        body, env2, store2, u = enter(fr.fn, v, store, t, fr.site, policy)
        return [(Ev(body, env2, store2, k2, u), None) for k2 in kstore.get(tau, ())]
    if isinstance(fr, PrimArgs):
        done = fr.done + (v,)
        if len(done) < len(fr.prim.args):
            nxt = Push(PrimArgs(fr.prim, done, fr.env), EMPTY_MARKS, tau)
            return [(Ev(fr.prim.args[len(done)], fr.env, store, nxt, t), None)]
        results = delta(fr.prim.op, done, policy.abstract_numbers)
        return [(Co(r, store, k2, t), None) for r in results for k2 in kstore.get(tau, ())]
    raise TypeError(f"unknown frame {fr!r}")


def astep(s, kstore, policy: AllocPolicy) -> list:
    """Successors of ``s`` paired with the table entries they add.

    Each delta is ``None`` or a dict from context to a set of continuations.
    """
    if isinstance(s, Ev):
        return step_ev(s, kstore, policy)
    return step_co(s, kstore, policy)


def unroll(kstore, k, depth: int) -> frozenset:
    """Every explicit stack of at most ``depth`` frames that ``k`` stands for.

    Accepts ``Empty``/``Push`` continuations, or a ``(local, ref)`` pair from
    the function-boundary machine.  Results are :class:`CKont` values whose
    frames are the abstract frames.
    """
    if isinstance(k, tuple):
        from .cesik import unroll_local
        return unroll_local(kstore, k[0], k[1], depth)
    memo: dict = {}

    def go(kont, d):
        key = (kont, d)
        if key in memo:
            return memo[key]
        if isinstance(kont, Empty):
            res = frozenset([CKont(None, kont.marks, None)])
        elif d == 0:
            res = frozenset()
        else:
            res = frozenset(
                CKont(kont.frame, kont.marks, rest)
                for k2 in kstore.get(kont.tail, ())
                for rest in go(k2, d - 1)
            )
        memo[key] = res
        return res

    return go(k, depth)
