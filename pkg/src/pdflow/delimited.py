"""Pushdown analysis of shift and reset.

Captured continuations become values, so they cannot mention stores
directly (that would make the store recursive).  At capture time every
exact context in the continuation is flattened to an approximate one whose
store component is replaced by an address; a per-state *continuation
closure* maps such addresses to the stores they stood for.  Popping an
approximate context looks up every exact context in the table that agrees
on expression and environment and whose store and closure are covered.

Meta-continuations are bounded to a single meta-context, with the rest
kept in a second table.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Any

from .alloc import AllocPolicy
from .domains import (
    hashcache,
    AppL, AppR, Closure, Const, Env, FrozenMap, PrimArgs, Store, EMPTY_ENV,
    EMPTY_STORE, delta,
)
from .konts import AKONT_EMPTY, CKont, Empty, Push
from .marks import EMPTY_MARKS
from .pushdown import Unsupported, enter
from .syntax import App, Expr, Lam, Lit, Prim, Reset, Shift, Var

__all__ = [
    "KClosure", "EMPTY_KCLOSURE", "ExactContext", "ApproxContext", "ResetCtx",
    "InvokeCtx", "KontVal", "SEv", "SCo", "approximate", "resolve", "sr_pop",
    "sr_astep", "inject", "is_final", "is_flat", "ctx_index",
]


class KClosure(FrozenMap):
    """Address to a set of stores."""

    __slots__ = ()

    def join(self, a, stores) -> "KClosure":
        old = self._d.get(a, frozenset())
        new = old | frozenset(stores)
        if new == old:
            return self
        d = dict(self._d)
        d[a] = new
        return KClosure._wrap(d)

    def merge(self, other: "KClosure") -> "KClosure":
        if other.leq(self):
            return self
        d = dict(self._d)
        for a, ss in other._d.items():
            d[a] = d.get(a, frozenset()) | ss
        return KClosure._wrap(d)

    def leq(self, other: "KClosure") -> bool:
        if self is other:
            return True
        od = other._d
        for a, ss in self._d.items():
            o = od.get(a)
            if o is None or not ss <= o:
                return False
        return True

    def get(self, a, default=frozenset()):
        return self._d.get(a, default)


EMPTY_KCLOSURE = KClosure()


@hashcache
@dataclass(frozen=True)
class ExactContext:
    expr: Expr
    env: Env
    store: Store
    kclo: KClosure

    def __repr__(self):
        return f"⟨{self.expr.label}, σ#{len(self.store)}, χ#{len(self.kclo)}⟩"


@hashcache
@dataclass(frozen=True)
class ApproxContext:
    expr: Expr
    env: Env
    addr: Any

    def __repr__(self):
        return f"⟨{self.expr.label}, {self.addr!r}⟩"


def ctx_index(ctx: ExactContext):
    """Key under which exact contexts are indexed for approximate lookup."""
    return (ctx.expr.label, ctx.env)


@hashcache
@dataclass(frozen=True)
class ResetCtx:
    expr: Expr
    env: Env
    store: Store
    kclo: KClosure


@hashcache
@dataclass(frozen=True)
class InvokeCtx:
    kont: Any
    value: Any
    store: Store
    kclo: KClosure


@hashcache
@dataclass(frozen=True)
class KontVal:
    """A captured continuation as a storeable value (no stores inside)."""
    kont: Any

    def __repr__(self):
        return f"KontVal({self.kont!r})"


@hashcache
@dataclass(frozen=True)
class SEv:
    expr: Expr
    env: Env
    store: Store
    kclo: KClosure
    kont: Any
    meta: Any
    time: Any


@hashcache
@dataclass(frozen=True)
class SCo:
    kont: Any
    meta: Any
    value: Any
    store: Store
    kclo: KClosure
    time: Any


def inject(e: Expr, policy: AllocPolicy) -> SEv:
    return SEv(e, EMPTY_ENV, EMPTY_STORE, EMPTY_KCLOSURE, AKONT_EMPTY, None, policy.initial_time())


def is_final(s) -> bool:
    return isinstance(s, SCo) and isinstance(s.kont, Empty) and s.meta is None


# ---------------------------------------------------------------- flattening

def _approx_ctx(chi: KClosure, a, ctx):
    if isinstance(ctx, ExactContext):
        return chi.merge(ctx.kclo).join(a, [ctx.store]), ApproxContext(ctx.expr, ctx.env, a)
    if ctx.addr not in chi:
        raise KeyError(f"continuation closure has no entry for {ctx.addr!r}")
    return chi.join(a, chi[ctx.addr]), ApproxContext(ctx.expr, ctx.env, a)


def approximate(chi: KClosure, a, k):
    """Flatten ``k`` into a storeable continuation; returns ``(chi', k~)``."""
    if isinstance(k, Empty):
        return chi, k
    if isinstance(k, Push):
        chi2, tail = _approx_ctx(chi, a, k.tail)
        return chi2, Push(k.frame, k.marks, tail)
    return _approx_ctx(chi, a, k)


def is_flat(k) -> bool:
    if isinstance(k, Empty):
        return True
    tail = k.tail if isinstance(k, Push) else k
    return isinstance(tail, ApproxContext)


# ---------------------------------------------------------------- popping

def resolve(kstore, chi: KClosure, ctx) -> list:
    """Exact contexts an (exact or approximate) context may stand for.

    ``kstore.keys_at(index)`` lists the exact contexts with a given
    expression and environment.
    """
    if isinstance(ctx, ExactContext):
        return [ctx]
    stores = chi.get(ctx.addr, frozenset())
    return [
        c for c in kstore.keys_at((ctx.expr.label, ctx.env))
        if c.store in stores and c.kclo.leq(chi)
    ]


def _walk(kstore, chi, k):
    frames = set()
    empty = False
    if isinstance(k, Empty):
        return frames, True
    if isinstance(k, Push):
        return {(k.frame, k.tail)}, False
    guard = set()
    work = [k]
    while work:
        ctx = work.pop()
        for exact in resolve(kstore, chi, ctx):
            for k2 in kstore.get(exact, ()):
                if k2 in guard:
                    continue
                guard.add(k2)
                if isinstance(k2, Empty):
                    empty = True
                elif isinstance(k2, Push):
                    frames.add((k2.frame, k2.tail))
                else:
                    work.append(k2)
    return frames, empty


def sr_pop(kstore, chi: KClosure, k) -> frozenset:
    """Pairs (top frame, continuation beneath it)."""
    return frozenset(_walk(kstore, chi, k)[0])


def sr_reaches_empty(kstore, chi: KClosure, k) -> bool:
    return _walk(kstore, chi, k)[1]


# ---------------------------------------------------------------- stepping

def _exact(s: SEv):
    return ExactContext(s.expr, s.env, s.store, s.kclo)


def sr_astep(s, kstore, cstore, policy: AllocPolicy) -> list:
    """Successors with deltas ``{"kstore": {...}, "cstore": {...}}`` or None."""
    if isinstance(s, SEv):
        e, env, store, chi, k, C, t = s.expr, s.env, s.store, s.kclo, s.kont, s.meta, s.time
        if isinstance(e, Var):
            return [(SCo(k, C, v, store, chi, t), None) for v in store.lookup(env.lookup(e.name))]
        if isinstance(e, Lam):
            return [(SCo(k, C, Closure(e, env), store, chi, t), None)]
        if isinstance(e, Lit):
            return [(SCo(k, C, Const(e.value), store, chi, t), None)]
        if isinstance(e, (App, Prim)):
            tau = _exact(s)
            if isinstance(e, App):
                fr, first = AppL(e.arg, env, e.label), e.fn
            else:
                fr, first = PrimArgs(e, (), env), e.args[0]
            nxt = SEv(first, env, store, chi, Push(fr, EMPTY_MARKS, tau), C, t)
            return [(nxt, {"kstore": {tau: frozenset([k])}})]
        if isinstance(e, Shift):
            a, a2 = policy.shift_alloc(e.param, e.label, t)
            chi2, flat = approximate(chi, a2, k)
            store2 = store.join(a, KontVal(flat))
            return [(SEv(e.body, env.extend(e.param, a), store2, chi2, AKONT_EMPTY, C, t), None)]
        if isinstance(e, Reset):
            gamma = ResetCtx(e.body, env, store, chi)
            nxt = SEv(e.body, env, store, chi, AKONT_EMPTY, gamma, t)
            return [(nxt, {"cstore": {gamma: frozenset([(k, C)])}})]
        raise Unsupported(f"the delimited-control machine has no rule for {type(e).__name__}")

    k, C, v, store, chi, t = s.kont, s.meta, s.value, s.store, s.kclo, s.time
    if isinstance(k, Empty):
        if C is None:
            return []
        return [(SCo(k2, C2, v, store, chi, t), None) for k2, C2 in cstore.get(C, ())]
    frames, empty = _walk(kstore, chi, k)
    out = []
    for fr, rest in frames:
        if isinstance(fr, AppL):
            out.append((SEv(fr.arg, fr.env, store, chi, Push(AppR(v, fr.site), EMPTY_MARKS, rest), C, t), None))
        elif isinstance(fr, AppR):
            fn = fr.fn
            if isinstance(fn, Closure):
                body, env2, store2, u = enter(fn, v, store, t, fr.site, policy)
                out.append((SEv(body, env2, store2, chi, rest, C, u), None))
            elif isinstance(fn, KontVal):
                gamma = InvokeCtx(fn.kont, v, store, chi)
                out.append((SCo(fn.kont, gamma, v, store, chi, t),
                            {"cstore": {gamma: frozenset([(rest, C)])}}))
        else:
            done = fr.done + (v,)
            if len(done) < len(fr.prim.args):
                nxt = Push(PrimArgs(fr.prim, done, fr.env), EMPTY_MARKS, rest)
                out.append((SEv(fr.prim.args[len(done)], fr.env, store, chi, nxt, C, t), None))
            else:
                for r in delta(fr.prim.op, done, policy.abstract_numbers):
                    out.append((SCo(rest, C, r, store, chi, t), None))
    # administrative step: a bare context that can bottom out at the prompt
    if empty and not isinstance(k, Empty):
        out.append((SCo(AKONT_EMPTY, C, v, store, chi, t), None))
    return out


def unroll_sr(kstore, chi: KClosure, k, depth: int) -> frozenset:
    """Explicit stacks (as :class:`CKont`) of at most ``depth`` frames."""
    memo: dict = {}

    def go(kont, d):
        key = (kont, d)
        if key in memo:
            return memo[key]
        memo[key] = frozenset()
        if isinstance(kont, Empty):
            res = {CKont(None, EMPTY_MARKS, None)}
        elif isinstance(kont, Push):
            res = set()
            if d > 0:
                for rest in go(kont.tail, d - 1):
                    res.add(CKont(kont.frame, EMPTY_MARKS, rest))
        else:
            res = set()
            for exact in resolve(kstore, chi, kont):
                for k2 in kstore.get(exact, ()):
                    res |= go(k2, d)
        memo[key] = frozenset(res)
        return memo[key]

    return go(k, depth)
