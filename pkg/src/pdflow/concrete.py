"""Concrete eval/continue machine.

One machine covers the plain lambda calculus, continuation marks and
shift/reset: the rules for a form only fire when the program uses it.  The
continuation is a :class:`~pdflow.konts.CKont`; the meta-continuation is a
cons list ``()`` or ``(kont, meta)`` of the continuations saved by prompts.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Iterator

from .alloc import AllocPolicy, FreshAlloc
from .domains import (
    hashcache,
    EMPTY_ENV, EMPTY_STORE, AppL, AppR, Closure, Const, Env, PrimArgs, Store,
    delta,
)
from .konts import EMPTY_KONT, CKont
from .marks import DENY, GRANT, mark_update, ok_concrete
from .syntax import (
    App, Expr, Frame, Grant, Lam, Lit, Prim, Reset, Shift, Test, Var, closed,
)

__all__ = [
    "Comp", "CEv", "CCo", "StepSet", "OpenProgram", "inject", "cstep", "run",
    "iter_run", "Run", "is_final", "meta_length", "trace_line",
]


class OpenProgram(ValueError):
    pass


@hashcache
@dataclass(frozen=True)
class Comp:
    """A captured delimited continuation."""
    kont: CKont

    def __repr__(self):
        return f"Comp({self.kont!r})"


@hashcache
@dataclass(frozen=True)
class CEv:
    expr: Expr
    env: Env
    store: Store
    kont: CKont
    meta: tuple
    time: Any


@hashcache
@dataclass(frozen=True)
class CCo:
    kont: CKont
    meta: tuple
    value: Any
    store: Store
    time: Any


class StepSet(frozenset):
    """Successor states; ``stuck`` explains an empty set that is not final."""

    stuck: str | None = None

    @classmethod
    def stuck_with(cls, reason):
        s = cls()
        s.stuck = reason
        return s


def inject(e: Expr, policy: AllocPolicy | None = None) -> CEv:
    if not closed(e):
        raise OpenProgram("program has free variables")
    t0 = policy.initial_time() if policy is not None else 0
    return CEv(e, EMPTY_ENV, EMPTY_STORE, EMPTY_KONT, (), t0)


def is_final(s) -> bool:
    return isinstance(s, CCo) and s.kont.is_empty() and s.meta == ()


def meta_length(meta) -> int:
    n = 0
    while meta:
        n += 1
        meta = meta[1]
    return n


def _eval_args(prim, done, env, store, kont, meta, time):
    return CEv(prim.args[len(done)], env, store,
               kont.push(PrimArgs(prim, done, env)), meta, time)


def cstep(s, policy: AllocPolicy) -> StepSet:
    """All successors of ``s`` (at most one under fresh allocation)."""
    if isinstance(s, CEv):
        e, env, store, k, meta, t = s.expr, s.env, s.store, s.kont, s.meta, s.time
        if isinstance(e, Var):
            vals = store.lookup(env.lookup(e.name))
            return StepSet(CCo(k, meta, v, store, t) for v in vals)
        if isinstance(e, Lam):
            return StepSet([CCo(k, meta, Closure(e, env), store, t)])
        if isinstance(e, Lit):
            return StepSet([CCo(k, meta, Const(e.value), store, t)])
        if isinstance(e, App):
            return StepSet([CEv(e.fn, env, store, k.push(AppL(e.arg, env, e.label)), meta, t)])
        if isinstance(e, Prim):
            return StepSet([_eval_args(e, (), env, store, k, meta, t)])
        if isinstance(e, Grant):
            return StepSet([CEv(e.body, env, store, mark_update(k, e.perms, GRANT), meta, t)])
        if isinstance(e, Frame):
            k2 = mark_update(k, e.perms, DENY, mode="complement")
            return StepSet([CEv(e.body, env, store, k2, meta, t)])
        if isinstance(e, Test):
            branch = e.then if ok_concrete(e.perms, k) else e.orelse
            return StepSet([CEv(branch, env, store, k, meta, t)])
        if isinstance(e, Shift):
            a, _ = policy.shift_alloc(e.param, e.label, t)
            store2 = store.join(a, Comp(k))
            return StepSet([CEv(e.body, env.extend(e.param, a), store2, EMPTY_KONT, meta, t)])
        if isinstance(e, Reset):
            return StepSet([CEv(e.body, env, store, EMPTY_KONT, (k, meta), t)])
        raise TypeError(f"unknown expression {e!r}")

    k, meta, v, store, t = s.kont, s.meta, s.value, s.store, s.time
    if k.is_empty():
        if meta:
            return StepSet([CCo(meta[0], meta[1], v, store, t)])
        return StepSet()
    fr, rest = k.frame, k.rest
    if isinstance(fr, AppL):
        return StepSet([CEv(fr.arg, fr.env, store, rest.push(AppR(v, fr.site)), meta, t)])
    if isinstance(fr, AppR):
        fn = fr.fn
        if isinstance(fn, Closure):
            u = policy.tick(t, fr.site)
            a = policy.alloc(fn.lam.param, u)
            return StepSet([CEv(fn.lam.body, fn.env.extend(fn.lam.param, a),
                                store.join(a, v), rest, meta, u)])
        if isinstance(fn, Comp):
            return StepSet([CCo(fn.kont, (rest, meta), v, store, t)])
        return StepSet.stuck_with(f"applied a non-function {fn!r}")
    if isinstance(fr, PrimArgs):
        done = fr.done + (v,)
        if len(done) < len(fr.prim.args):
            return StepSet([_eval_args(fr.prim, done, fr.env, store, rest, meta, t)])
        results = delta(fr.prim.op, done, policy.abstract_numbers)
        if not results:
            return StepSet.stuck_with(f"primitive {fr.prim.op} on {done!r}")
        return StepSet(CCo(rest, meta, r, store, t) for r in results)
    raise TypeError(f"unknown frame {fr!r}")


@dataclass
class Run:
    trace: list = field(repr=False)
    outcome: str
    value: Any = None
    reason: str | None = None

    @property
    def final(self):
        return self.trace[-1]


def iter_run(e: Expr, fuel: int, policy: AllocPolicy | None = None,
             gc: bool = False, status: dict | None = None) -> Iterator:
    """Yield the states of a deterministic run, at most ``fuel`` steps.

    ``status`` (if given) receives the outcome once the generator finishes.
    """
    from .gc import gc_concrete

    policy = policy if policy is not None else FreshAlloc()
    s = inject(e, policy)
    if gc:
        s = gc_concrete(s)
    status = status if status is not None else {}
    steps = 0
    while True:
        yield s
        if is_final(s):
            status.update(outcome="value", value=s.value)
            return
        if steps >= fuel:
            status.update(outcome="out-of-fuel")
            return
        succ = cstep(s, policy)
        if not succ:
            status.update(outcome="stuck", reason=succ.stuck)
            return
        if len(succ) > 1:
            raise ValueError("nondeterministic step; use a fresh policy")
        (s,) = succ
        if gc:
            s = gc_concrete(s)
        steps += 1


def run(e: Expr, fuel: int, policy: AllocPolicy | None = None, gc: bool = False) -> Run:
    """Run to a value, a stuck state, or until ``fuel`` steps are used."""
    status: dict = {}
    trace = list(iter_run(e, fuel, policy, gc, status))
    return Run(trace, status["outcome"], status.get("value"), status.get("reason"))


def trace_line(i: int, s) -> str:
    """One JSON line describing a concrete state."""
    from .domains import show_value

    rec = {"step": i, "kind": "ev" if isinstance(s, CEv) else "co",
           "store-size": len(s.store), "kont-depth": len(s.kont),
           "meta-depth": meta_length(s.meta), "time": repr(s.time)}
    if isinstance(s, CEv):
        rec["expr-label"] = s.expr.label
        rec["env"] = {x: repr(a) for x, a in sorted(s.env.items())}
    else:
        rec["value"] = show_value(s.value)
    return json.dumps(rec, ensure_ascii=False)
