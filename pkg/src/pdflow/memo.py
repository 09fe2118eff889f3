"""Memoized pushdown stepping.

At function entry the body configuration is recorded under the calling
context.  An application whose context already has recorded entries jumps
straight to them, keeping the caller's continuation, and still extends the
continuation table so results found later flow back to this caller.

Both the entry rule's reads of the continuation table and the call rule's
reads of the memo table are untracked: any caller added after an entry was
recorded short-circuits itself, and a caller added in the same sweep as a
new entry meets it through the rendezvous.
"""

from __future__ import annotations

from .domains import AppL, AppR, Closure
from .konts import Push
from .marks import EMPTY_MARKS
from .pushdown import AppContext, Co, Ev, astep, enter
from .syntax import App

__all__ = ["memo_step", "rendezvous"]


def memo_step(s, kstore, memo, policy) -> list:
    """Successors paired with deltas ``{"kstore": ..., "memo": ...}``.

    A successor of ``None`` carries a delta with no new state.
    """
    if isinstance(s, Ev) and isinstance(s.expr, App):
        e = s.expr
        tau = AppContext(e, s.env, s.store, s.time)
        dk = {"kstore": {tau: frozenset([s.kont])}}
        recorded = memo.peek(tau)
        if not recorded:
            nxt = Ev(e.fn, s.env, s.store, Push(AppL(e.arg, s.env, e.label), EMPTY_MARKS, tau), s.time)
            return [(nxt, dk)]
        return [(Ev(body, env, store, s.kont, u), dk) for body, env, store, u in recorded]
    if isinstance(s, Co) and isinstance(s.kont, Push) and isinstance(s.kont.frame, AppR):
        fr, tau = s.kont.frame, s.kont.tail
        if not isinstance(fr.fn, Closure):
            return []
        body, env, store, u = enter(fr.fn, s.value, s.store, s.time, fr.site, policy)
        dm = {"memo": {tau: frozenset([(body, env, store, u)])}}
        out = [(Ev(body, env, store, k, u), dm) for k in kstore.peek(tau)]
        return out or [(None, dm)]
    return [(t, None if d is None else {"kstore": d}) for t, d in astep(s, kstore, policy)]


def rendezvous(dk: dict, dm: dict) -> set:
    """States pairing continuations and entries added at the same context."""
    out = set()
    for tau in dk.keys() & dm.keys():
        for k in dk[tau]:
            for body, env, store, u in dm[tau]:
                out.add(Ev(body, env, store, k, u))
    return out
