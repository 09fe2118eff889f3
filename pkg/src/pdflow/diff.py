"""Differential soundness: every concrete state must be covered by the analysis.

The concrete machine runs with a shadow allocator, so each fresh address
remembers the variable and call history it was made for and can be mapped
to the address a finite policy would have used.  A concrete state is
covered when some reachable abstract state agrees on control, environment
and time, holds every abstracted binding of the concrete store, and has a
continuation that can unroll to the concrete stack.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from . import cesik, delimited
from .alloc import KCFAAlloc, ShadowAlloc
from .baseline import BCo, BEv, store_konts
from .concrete import CEv, Comp, iter_run
from .config import Config, ConfigError, check_config
from .domains import ANY_INT, AppL, AppR, Closure, Const, Env, PrimArgs
from .engine import analyze
from .konts import Empty, Push
from .marks import ok_abstract, ok_concrete
from .pushdown import Co, Ev
from .syntax import Test

__all__ = ["Verdict", "Checker", "check_trace", "check_marks", "diff"]


@dataclass
class Verdict:
    passed: bool
    checked: int
    outcome: str
    step: int | None = None
    state: Any = field(default=None, repr=False)
    reason: str | None = None

    def summary(self) -> str:
        if self.passed:
            return f"pass: {self.checked} states covered (concrete run: {self.outcome})"
        return f"fail at step {self.step}: {self.reason}"


def _vkey(v):
    if isinstance(v, Closure):
        return ("clo", v.lam.label, v.env)
    if v is ANY_INT or (isinstance(v, Const) and type(v.value) is int):
        return ("int",)
    if isinstance(v, Const):
        return ("bool", v.value)
    return ("kont",)


def _akey(s):
    if isinstance(s, (Ev, BEv, cesik.IEv, delimited.SEv)):
        return ("ev", s.expr.label, s.env, s.time)
    return ("co", _vkey(s.value), s.time)


def _akont(s):
    if isinstance(s, (cesik.IEv, cesik.ICo)):
        return (s.local, s.ref)
    return s.kont


class Checker:
    """Coverage queries against one finished analysis."""

    def __init__(self, system, shadow: ShadowAlloc):
        policy = system.policy
        if not isinstance(policy, KCFAAlloc):
            raise ConfigError("differential checking needs a finite k-CFA policy")
        self.system = system
        self.policy = policy
        self.shadow = shadow
        views = system.views()
        self.kstore = views["kstore"] if "kstore" in views else {}
        self.cstore = system.tables.data.get("cstore", {})
        self.name = system.machine.name
        self.index: dict = {}
        for s in system.seen:
            self.index.setdefault(_akey(s), []).append(s)
        self._addr: dict = {}
        self._env: dict = {}
        self._match: dict = {}
        self._keep: list = []
        self._pairs: dict = {}
        self._version = 0
        self._mark = 0
        self._cstore = None
        self._stores: dict = {}
        self._count: dict = {}

    # -- abstraction of concrete pieces

    def addr(self, a):
        got = self._addr.get(a)
        if got is None:
            got = self._addr[a] = self.shadow.abstract(a, self.policy)
        return got

    def env(self, env: Env) -> Env:
        got = self._env.get(id(env))
        if got is None or got[0] is not env:
            got = (env, Env({x: self.addr(a) for x, a in env.items()}))
            self._env[id(env)] = got
        return got[1]

    def time(self, t):
        return self.shadow.abstract_time(t, self.policy)

    def value(self, v):
        if isinstance(v, Closure):
            return Closure(v.lam, self.env(v.env))
        return v

    # -- orders

    def value_ok(self, cv, av, extra) -> bool:
        if isinstance(cv, Comp):
            return isinstance(av, delimited.KontVal) and self.kont_ok(cv.kont, av.kont, extra)
        w = self.value(cv)
        if w == av:
            return True
        return av is ANY_INT and isinstance(w, Const) and type(w.value) is int

    def frame_ok(self, cf, af, extra) -> bool:
        if isinstance(cf, AppL):
            return (isinstance(af, AppL) and cf.site == af.site and cf.arg.label == af.arg.label
                    and self.env(cf.env) == af.env)
        if isinstance(cf, AppR):
            return isinstance(af, AppR) and cf.site == af.site and self.value_ok(cf.fn, af.fn, extra)
        if isinstance(cf, PrimArgs):
            return (isinstance(af, PrimArgs) and cf.prim.label == af.prim.label and len(cf.done) == len(af.done)
                    and self.env(cf.env) == af.env
                    and all(self.value_ok(c, a, extra) for c, a in zip(cf.done, af.done)))
        return False

    def sync_store(self, cstore, gc: bool):
        """Bring the abstracted copy of the concrete store up to date.

        Without collection the concrete store only gains fresh addresses, so
        only addresses allocated since the last call are examined.
        """
        if gc:
            if cstore is self._cstore:
                return
            old = self._cstore._d.keys() if self._cstore is not None else set()
            new = cstore._d.keys()
            changed = False
            for a in old - new:
                changed |= self._count_pairs(a, self._cstore[a], -1)
            for a in new - old:
                changed |= self._count_pairs(a, cstore[a], 1)
            self._cstore = cstore
            if changed:
                self._version += 1
            return
        top = len(self.shadow.origin)
        grew = False
        for a in range(self._mark, top):
            vs = cstore.get(a)
            if vs is None:
                continue
            got = self._pairs.setdefault(self.addr(a), set())
            for v in vs:
                w = self.value(v)
                if w not in got:
                    got.add(w)
                    grew = True
        self._mark = top
        if grew:
            self._version += 1

    def _count_pairs(self, a, vs, delta) -> bool:
        """Adjust binding counts; true if a binding appeared or vanished."""
        A = self.addr(a)
        changed = False
        for v in vs:
            key = (A, self.value(v))
            n = self._count.get(key, 0) + delta
            if n:
                self._count[key] = n
            else:
                del self._count[key]
            if n == 0 or (n == 1 and delta > 0):
                changed = True
                if n:
                    self._pairs.setdefault(A, set()).add(key[1])
                else:
                    self._pairs[A].discard(key[1])
                    if not self._pairs[A]:
                        del self._pairs[A]
        return changed

    def store_ok(self, astore, extra) -> bool:
        """Whether ``astore`` holds every abstracted concrete binding."""
        key = (self._version, astore, extra)
        got = self._stores.get(key)
        if got is None:
            got = self._stores[key] = self._store_ok(astore, extra)
        return got

    def _store_ok(self, astore, extra) -> bool:
        for a, ws in self._pairs.items():
            got = astore.get(a)
            if got is None:
                return False
            for w in ws:
                if w in got:
                    continue
                if isinstance(w, Const) and type(w.value) is int and ANY_INT in got:
                    continue
                if isinstance(w, Comp) and any(self.value_ok(w, x, extra) for x in got):
                    continue
                return False
        return True

    # -- continuations

    def _pop(self, ak, extra):
        """``(frame, marks, rest)`` for each top frame ``ak`` can expose."""
        if self.name == "cesik":
            return [(fr, None, (loc, ref)) for fr, loc, ref in cesik.pop(ak[0], ak[1], self.kstore)]
        if self.name == "shift-reset":
            return [(fr, None, rest) for fr, rest in delimited.sr_pop(self.kstore, extra, ak)]
        if not isinstance(ak, Push):
            return []
        if self.name == "baseline-store":
            nxt = store_konts(extra, ak.tail)
        else:
            nxt = self.kstore.get(ak.tail, ())
        return [(ak.frame, ak.marks, k2) for k2 in nxt]

    def _ends(self, ak, marks, extra) -> bool:
        if self.name == "cesik":
            return cesik.reaches_done(ak[0], ak[1], self.kstore)
        if self.name == "shift-reset":
            if isinstance(ak, Empty):
                return True
            return not isinstance(ak, Push) and delimited.sr_reaches_empty(self.kstore, extra, ak)
        return isinstance(ak, Empty) and ak.marks == marks

    def kont_ok(self, ck, ak, extra=None) -> bool:
        """Whether ``ak`` unrolls (through the tables) to the concrete ``ck``.

        A depth-first search over pairs (concrete suffix, abstract
        continuation); results are cached per pair, and concrete suffixes
        are shared between consecutive states, so a push or pop re-checks
        only the top frame.
        """
        memo = self._match
        start = (id(ck), ak, extra)
        if start in memo:
            return memo[start]
        self._keep.append(ck)
        stack = [(ck, ak, None)]
        path: list = []
        visited = set()
        while stack:
            c, a, parent_depth = stack.pop()
            if parent_depth is not None:
                del path[parent_depth + 1:]
            key = (id(c), a, extra)
            known = memo.get(key)
            if known is False or key in visited:
                continue
            path.append(key)
            if known is True:
                for k in path:
                    memo[k] = True
                return True
            visited.add(key)
            if c.rest is None:
                if self._ends(a, c.marks, extra):
                    for k in path:
                        memo[k] = True
                    return True
                continue
            self._keep.append(c.rest)
            depth = len(path) - 1
            for fr, marks, rest in self._pop(a, extra):
                if marks is not None and marks != c.marks:
                    continue
                if self.frame_ok(c.frame, fr, extra):
                    stack.append((c.rest, rest, depth))
        for k in visited:
            memo[k] = False
        return False

    def meta_ok(self, cmeta, ameta, extra) -> bool:
        if not cmeta:
            return ameta is None
        if ameta is None:
            return False
        ck, rest = cmeta
        return any(self.kont_ok(ck, k2, extra) and self.meta_ok(rest, c2, extra)
                   for k2, c2 in self.cstore.get(ameta, ()))

    # -- states

    def explain(self, cs, gc: bool = False) -> str | None:
        """``None`` if ``cs`` is covered, otherwise why it is not."""
        why = []
        for _ in self._covering(cs, gc, why):
            return None
        return why[0]

    def covering(self, cs, gc: bool = False) -> list:
        """Every abstract state that covers ``cs``."""
        return list(self._covering(cs, gc, []))

    def _covering(self, cs, gc, why: list):
        self.sync_store(cs.store, gc)
        t = self.time(cs.time)
        if isinstance(cs, CEv):
            key = ("ev", cs.expr.label, self.env(cs.env), t)
        else:
            key = ("co", _vkey(self.value(cs.value)), t)
        cands = self.index.get(key, ())
        if not cands:
            why.append("no abstract state agrees on control, environment and time")
            return
        if not isinstance(cs, CEv):
            cands = [s for s in cands if self.value_ok(cs.value, s.value, self._extra(s))]
            if not cands:
                why.append("no abstract state holds the returned value")
                return
        cands = [s for s in cands if self.store_ok(s.store, self._extra(s))]
        if not cands:
            why.append("no matching abstract state covers the store")
            return
        for s in cands:
            extra = self._extra(s)
            if not self.kont_ok(cs.kont, _akont(s), extra):
                continue
            if self.name == "shift-reset":
                if not self.meta_ok(cs.meta, s.meta, extra):
                    continue
            elif cs.meta:
                continue
            yield s
        why.append("no matching abstract state covers the continuation")

    def _extra(self, s):
        if self.name == "shift-reset":
            return s.kclo
        if self.name == "baseline-store":
            return s.store
        return None


def _program(system, e):
    if e is None:
        return system.program
    if e is not system.program:
        # expressions and closures compare by node identity
        raise ValueError("check against the same tree that was analyzed")
    return e


def check_trace(system, e=None, fuel: int = 10_000, gc: bool | None = None) -> Verdict:
    """Run the analyzed program concretely and check each state against ``system``."""
    e = _program(system, e)
    k = system.policy.k if isinstance(system.policy, KCFAAlloc) else 0
    shadow = ShadowAlloc(depth=max(k, 1))
    checker = Checker(system, shadow)
    if gc is None:
        gc = system.gc != "none"
    status: dict = {}
    n = 0
    for i, cs in enumerate(iter_run(e, fuel, shadow, gc=gc, status=status)):
        why = checker.explain(cs, gc)
        if why is not None:
            return Verdict(False, n, "unfinished", step=i, state=cs, reason=why)
        n += 1
    return Verdict(True, n, status.get("outcome", "?"))


def check_marks(system, e=None, fuel: int = 10_000) -> list:
    """Compare each concrete ``test`` outcome with the abstract answers.

    Returns ``(step, perms, concrete answer, abstract answers)`` for every
    test the concrete run reaches and every abstract state covering it.
    """
    e = _program(system, e)
    shadow = ShadowAlloc(depth=max(getattr(system.policy, "k", 0), 1))
    checker = Checker(system, shadow)
    gc = system.gc != "none"
    out = []
    for i, cs in enumerate(iter_run(e, fuel, shadow, gc=gc)):
        if not (isinstance(cs, CEv) and isinstance(cs.expr, Test)):
            continue
        want = ok_concrete(cs.expr.perms, cs.kont)
        for s in checker.covering(cs, gc):
            out.append((i, cs.expr.perms, want, ok_abstract(system.kstore, cs.expr.perms, s.kont)))
    return out


def diff(e, config: Config, fuel: int = 10_000) -> Verdict:
    """Analyze ``e`` under ``config`` and check the concrete run against it."""
    check_config(config, e)
    policy = config.policy()
    if not policy.finite:
        raise ConfigError("differential checking needs a finite policy")
    system = analyze(e, config.machine, policy, config.gc, config.memo, config.budget)
    return check_trace(system, e, fuel)
