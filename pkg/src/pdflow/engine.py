"""Frontier fixpoint driver shared by every abstract machine.

Each sweep steps the whole frontier against a snapshot of the global
tables, then merges successors and table deltas.  Steps record which table
entries they read; when an entry grows, the states that read it are stepped
again, so pops and stack walks see continuations added after their first
visit.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable

from . import baseline, cesik, delimited, pushdown
from .alloc import AllocPolicy
from .gc import gc_exact, gc_union
from .memo import memo_step, rendezvous

__all__ = [
    "BudgetExceeded", "Tables", "View", "Machine", "MACHINES", "System",
    "analyze", "fixpoint",
]


class BudgetExceeded(RuntimeError):
    def __init__(self, steps: int, system: "System | None" = None):
        super().__init__(f"step budget exhausted after {steps} steps")
        self.steps = steps
        self.system = system


class Tables:
    """Named monotone tables ``key -> frozenset`` with optional key indexes."""

    def __init__(self, names, indexes: dict | None = None):
        self.data: dict = {n: {} for n in names}
        self.indexes = dict(indexes or {})
        self.by_index: dict = {n: {} for n in self.indexes}

    def get(self, name, key):
        return self.data[name].get(key, frozenset())

    def keys_at(self, name, idx):
        return self.by_index[name].get(idx, frozenset())

    def join(self, name, key, entries) -> bool:
        t = self.data[name]
        old = t.get(key)
        if old is None:
            t[key] = frozenset(entries)
            if name in self.indexes:
                i = self.indexes[name](key)
                self.by_index[name][i] = self.by_index[name].get(i, frozenset()) | {key}
            return True
        if entries <= old:
            return False
        t[key] = old | entries
        return True

    def size(self, name) -> int:
        return sum(len(v) for v in self.data[name].values())

    def __contains__(self, name):
        return name in self.data


class View:
    """One step's window on a table: tracked reads plus a pending delta."""

    __slots__ = ("tables", "name", "reads", "pending")

    def __init__(self, tables: Tables, name, reads: set, pending: dict | None = None):
        self.tables = tables
        self.name = name
        self.reads = reads
        self.pending = pending

    def peek(self, key, default=frozenset()):
        got = self.tables.get(self.name, key)
        if self.pending and key in self.pending:
            got = got | self.pending[key]
        return got if got else default

    def get(self, key, default=frozenset()):
        self.reads.add(("t", self.name, key))
        return self.peek(key, default)

    def keys_at(self, idx):
        self.reads.add(("i", self.name, idx))
        keys = self.tables.keys_at(self.name, idx)
        if self.pending:
            f = self.tables.indexes[self.name]
            keys = keys | {k for k in self.pending if f(k) == idx}
        return keys

    def __contains__(self, key):
        return bool(self.get(key))


@dataclass
class Machine:
    name: str
    inject: Callable
    step: Callable  # (state, views, policy) -> [(succ | None, delta | None)]
    is_final: Callable
    tables: tuple = ()
    indexes: dict = field(default_factory=dict)
    value_of: Callable = lambda s: s.value
    collectable: bool = False


def _pd_step(s, v, policy):
    return [(t, None if d is None else {"kstore": d}) for t, d in pushdown.astep(s, v["kstore"], policy)]


def _baseline_step(s, v, policy):
    return [(t, None if d is None else {"kstore": d}) for t, d in baseline.gstep(s, v["kstore"], policy)]


def _cesik_step(s, v, policy):
    return [(t, None if d is None else {"kstore": d}) for t, d in cesik.istep(s, v["kstore"], policy)]


def _sr_step(s, v, policy):
    return delimited.sr_astep(s, v["kstore"], v["cstore"], policy)


def _memo_step(s, v, policy):
    return memo_step(s, v["kstore"], v["memo"], policy)


MACHINES = {
    "baseline": Machine("baseline", baseline.inject, _baseline_step, baseline.is_final,
                        ("kstore",)),
    "baseline-store": Machine("baseline-store", baseline.inject,
                              lambda s, v, p: [(t, None) for t in baseline.bstep(s, p)],
                              baseline.is_final),
    "pushdown": Machine("pushdown", pushdown.inject, _pd_step, pushdown.is_final,
                        ("kstore",), collectable=True),
    "cm": Machine("cm", pushdown.inject, _pd_step, pushdown.is_final,
                  ("kstore",), collectable=True),
    "cesik": Machine("cesik", cesik.inject, _cesik_step, cesik.is_final, ("kstore",)),
    "shift-reset": Machine("shift-reset", delimited.inject, _sr_step, delimited.is_final,
                           ("kstore", "cstore"), {"kstore": delimited.ctx_index}),
    "memo": Machine("memo", pushdown.inject, _memo_step, pushdown.is_final,
                    ("kstore", "memo"), collectable=True),
}


@dataclass
class System:
    """The reachable state graph and final tables of one analysis."""
    machine: Machine
    policy: AllocPolicy
    gc: str
    initial: frozenset
    seen: set
    edges: set
    tables: Tables
    sweeps: int = 0
    steps: int = 0
    revisits: int = 0
    program: Any = None

    @property
    def kstore(self) -> dict:
        return self.tables.data.get("kstore", {})

    @property
    def memo(self) -> dict:
        return self.tables.data.get("memo", {})

    def final_states(self) -> list:
        return [s for s in self.seen if self.machine.is_final(s)]

    def results(self) -> frozenset:
        return frozenset(self.machine.value_of(s) for s in self.final_states())

    def views(self, reads=None, pending=None) -> dict:
        reads = set() if reads is None else reads
        return {n: View(self.tables, n, reads, (pending or {}).get(n)) for n in self.tables.data}

    def verify_fixpoint(self) -> list:
        """Re-step every state under the final tables; list what is missing."""
        problems = []
        # a memoized call site switches rules once its context has entries
        check_edges = "memo" not in self.tables
        for s in self.seen:
            for t, delta in _expand(self, s, set()):
                if t is not None and t not in self.seen:
                    problems.append(("state", s, t))
                if check_edges and t is not None and (s, t) not in self.edges:
                    problems.append(("edge", s, t))
                for name, d in (delta or {}).items():
                    for key, entries in d.items():
                        if not entries <= self.tables.get(name, key):
                            problems.append(("table", name, key))
        if "memo" in self.tables:
            dk, dm = self.tables.data["kstore"], self.tables.data["memo"]
            for t in rendezvous(dk, dm):
                for g in _collect(self, t, self.views()):
                    if g not in self.seen:
                        problems.append(("rendezvous", None, g))
        return problems


def _collect(system: System, t, views) -> list:
    if system.gc == "none" or not system.machine.collectable:
        return [t]
    kv = views["kstore"]
    if system.gc == "exact":
        return list(gc_exact(t, kv))
    return [gc_union(t, kv)]


def _expand(system: System, s, reads: set) -> list:
    """Step ``s``; collect each successor against the tables plus its delta."""
    views = system.views(reads)
    out = []
    for t, delta in system.machine.step(s, views, system.policy):
        if t is None:
            out.append((None, delta))
            continue
        if system.gc != "none" and system.machine.collectable:
            pv = system.views(reads, delta) if delta else views
            for g in _collect(system, t, pv):
                out.append((g, delta))
        else:
            out.append((t, delta))
    return out


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("AAM_THREADS", "1")))
    except ValueError:
        return 1


def fixpoint(system: System, frontier, budget: int | None = None) -> System:
    frontier = set(frontier)
    deps: dict = {}
    pool = ThreadPoolExecutor(_threads()) if _threads() > 1 else None
    try:
        while frontier:
            batch = list(frontier)
            system.seen.update(batch)
            system.sweeps += 1
            system.steps += len(batch)
            if budget is not None and system.steps > budget:
                raise BudgetExceeded(system.steps, system)

            def work(s):
                reads: set = set()
                return s, _expand(system, s, reads), reads

            results = list(pool.map(work, batch)) if pool else [work(s) for s in batch]

            # merge phase
            nxt = set()
            grown: set = set()
            fresh_deltas: dict = {n: {} for n in system.tables.data}
            for s, succs, reads in results:
                for r in reads:
                    deps.setdefault(r, set()).add(s)
                for t, delta in succs:
                    if t is not None:
                        system.edges.add((s, t))
                        if t not in system.seen:
                            nxt.add(t)
                    for name, d in (delta or {}).items():
                        idx = system.tables.indexes.get(name)
                        for key, entries in d.items():
                            before = system.tables.get(name, key)
                            new = entries - before
                            if not new:
                                continue
                            if idx is not None and key not in system.tables.data[name]:
                                grown.add(("i", name, idx(key)))
                            system.tables.join(name, key, entries)
                            grown.add(("t", name, key))
                            fd = fresh_deltas[name]
                            fd[key] = fd.get(key, frozenset()) | new
            if "memo" in system.tables:
                views = system.views()
                for t in rendezvous(fresh_deltas["kstore"], fresh_deltas["memo"]):
                    for g in _collect(system, t, views):
                        if g not in system.seen:
                            nxt.add(g)
            for key in grown:
                for s in deps.get(key, ()):
                    if s not in nxt:
                        system.revisits += 1
                        nxt.add(s)
            frontier = nxt
    finally:
        if pool:
            pool.shutdown()
    return system


def analyze(e, machine: str = "pushdown", policy: AllocPolicy | None = None, gc: str = "none",
            memo: bool = False, budget: int | None = None, verify: bool = False) -> System:
    """Run ``machine`` on ``e`` to a fixpoint and return the state graph."""
    from .alloc import MonoAlloc

    policy = policy or MonoAlloc()
    name = "memo" if memo else machine
    m = MACHINES[name]
    tables = Tables(m.tables, m.indexes)
    s0 = m.inject(e, policy)
    system = System(m, policy, gc, frozenset(), set(), set(), tables, program=e)
    init = _collect(system, s0, system.views())
    system.initial = frozenset(init)
    fixpoint(system, init, budget)
    if verify:
        problems = system.verify_fixpoint()
        if problems:
            raise AssertionError(f"not a fixpoint: {problems[:3]}")
    return system
