"""Function-boundary variant of the pushdown machine.

The stack is split into a bounded local part (frames pushed since the
current function was entered) and a reference to the entry context.  The
table is only extended at function entry, keyed on the closure, argument
and store.  Popping through an empty local part follows table entries,
remembering which contexts it has visited so tail-call cycles terminate.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

from .alloc import AllocPolicy
from .domains import hashcache, AppL, AppR, Closure, Const, Env, PrimArgs, Store, EMPTY_ENV, EMPTY_STORE, delta
from .konts import CKont
from .marks import EMPTY_MARKS
from .pushdown import Unsupported, enter
from .syntax import App, Expr, Lam, Lit, Prim, Var

__all__ = [
    "DONE", "EntryContext", "IEv", "ICo", "pop", "reaches_done", "istep",
    "inject", "is_final", "unroll_local",
]


class _Done:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "Done"

    def __reduce__(self):
        return (_Done, ())


DONE = _Done()


@hashcache
@dataclass(frozen=True)
class EntryContext:
    fn: Closure
    arg: Any
    store: Store

    def __repr__(self):
        return f"⟨λ@{self.fn.lam.label}, {self.arg!r}, σ#{len(self.store)}⟩"


@hashcache
@dataclass(frozen=True)
class IEv:
    expr: Expr
    env: Env
    store: Store
    local: tuple
    ref: Any
    time: Any


@hashcache
@dataclass(frozen=True)
class ICo:
    value: Any
    store: Store
    local: tuple
    ref: Any
    time: Any


def inject(e: Expr, policy: AllocPolicy) -> IEv:
    return IEv(e, EMPTY_ENV, EMPTY_STORE, (), DONE, policy.initial_time())


def is_final(s) -> bool:
    return isinstance(s, ICo) and not s.local and s.ref is DONE


def pop(local: tuple, ref, kstore, stats: dict | None = None) -> frozenset:
    """Top frames reachable from ``(local, ref)`` with what lies beneath."""
    if local:
        return frozenset([(local[0], local[1:], ref)])
    out = set()
    if ref is DONE:
        return frozenset()
    guard = {ref}
    work = [ref]
    while work:
        tau = work.pop()
        for loc, r in kstore.get(tau, ()):
            if loc:
                out.add((loc[0], loc[1:], r))
            elif r is not DONE and r not in guard:
                guard.add(r)
                work.append(r)
    if stats is not None:
        stats["dereferenced"] = len(guard)
    return frozenset(out)


def reaches_done(local: tuple, ref, kstore) -> bool:
    """Whether an empty local part can bottom out at the program's base."""
    if local:
        return False
    if ref is DONE:
        return True
    guard = {ref}
    work = [ref]
    while work:
        for loc, r in kstore.get(work.pop(), ()):
            if loc:
                continue
            if r is DONE:
                return True
            if r not in guard:
                guard.add(r)
                work.append(r)
    return False


def istep(s, kstore, policy: AllocPolicy) -> list:
    """Successors paired with table deltas (``None`` or context -> entries)."""
    if isinstance(s, IEv):
        e, env, store, loc, ref, t = s.expr, s.env, s.store, s.local, s.ref, s.time
        if isinstance(e, Var):
            return [(ICo(v, store, loc, ref, t), None) for v in store.lookup(env.lookup(e.name))]
        if isinstance(e, Lam):
            return [(ICo(Closure(e, env), store, loc, ref, t), None)]
        if isinstance(e, Lit):
            return [(ICo(Const(e.value), store, loc, ref, t), None)]
        if isinstance(e, App):
            return [(IEv(e.fn, env, store, (AppL(e.arg, env, e.label),) + loc, ref, t), None)]
        if isinstance(e, Prim):
            return [(IEv(e.args[0], env, store, (PrimArgs(e, (), env),) + loc, ref, t), None)]
        raise Unsupported(f"the function-boundary machine has no rule for {type(e).__name__}")

    v, store, loc, ref, t = s.value, s.store, s.local, s.ref, s.time
    out = []
    for fr, loc2, ref2 in pop(loc, ref, kstore):
        if isinstance(fr, AppL):
            out.append((IEv(fr.arg, fr.env, store, (AppR(v, fr.site),) + loc2, ref2, t), None))
        elif isinstance(fr, AppR):
            if not isinstance(fr.fn, Closure):
                continue
            tau = EntryContext(fr.fn, v, store)
            body, env2, store2, u = enter(fr.fn, v, store, t, fr.site, policy)
            out.append((IEv(body, env2, store2, (), tau, u), {tau: frozenset([(loc2, ref2)])}))
        else:
            done = fr.done + (v,)
            if len(done) < len(fr.prim.args):
                nxt = (PrimArgs(fr.prim, done, fr.env),) + loc2
                out.append((IEv(fr.prim.args[len(done)], fr.env, store, nxt, ref2, t), None))
            else:
                for r in delta(fr.prim.op, done, policy.abstract_numbers):
                    out.append((ICo(r, store, loc2, ref2, t), None))
    # administrative step: a value whose stack can be empty becomes final
    if not loc and ref is not DONE and reaches_done(loc, ref, kstore):
        out.append((ICo(v, store, (), DONE, t), None))
    return out


def _eps_closure(ref, kstore):
    """Refs reachable from ``ref`` through entries with an empty local part."""
    seen = {ref}
    work = [ref]
    while work:
        r = work.pop()
        if r is DONE:
            continue
        for loc, r2 in kstore.get(r, ()):
            if not loc and r2 not in seen:
                seen.add(r2)
                work.append(r2)
    return seen


def unroll_local(kstore, local: tuple, ref, depth: int) -> frozenset:
    memo: dict = {}

    def from_ref(r, d):
        key = (r, d)
        if key in memo:
            return memo[key]
        res = set()
        for r1 in _eps_closure(r, kstore):
            if r1 is DONE:
                res.add(CKont(None, EMPTY_MARKS, None))
                continue
            for loc, r2 in kstore.get(r1, ()):
                if loc and len(loc) <= d:
                    res |= go(loc, r2, d)
        memo[key] = frozenset(res)
        return memo[key]

    def go(loc, r, d):
        out = set()
        for tail in from_ref(r, d - len(loc)):
            k = tail
            for fr in reversed(loc):
                k = CKont(fr, EMPTY_MARKS, k)
            out.add(k)
        return out

    if len(local) > depth:
        return frozenset()
    return frozenset(go(local, ref, depth))
