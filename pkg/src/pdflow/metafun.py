"""Terminating evaluation of recursive metafunctions.

A metafunction is given as a rewrite relation ``step(term) -> iterable of
terms``.  Its answers are the reachable terms that have no successor.  Over a
finite reachable set the exploration always terminates, and loops simply
contribute nothing.
"""

from __future__ import annotations

from collections import deque
from typing import Callable, Hashable, Iterable

__all__ = ["terminal", "TerminalQuery", "terminal_shared", "brute_force_terminal"]

Step = Callable[[Hashable], Iterable[Hashable]]


def terminal(step: Step, start, stats: dict | None = None) -> frozenset:
    """All terms reachable from ``start`` that ``step`` cannot rewrite.

    If ``stats`` is given it receives ``expanded``, a list of every term in
    the order it was expanded.
    """
    seen = {start}
    work = deque([start])
    out = set()
    expanded = [] if stats is not None else None
    while work:
        t = work.popleft()
        if expanded is not None:
            expanded.append(t)
        succ = False
        for u in step(t):
            succ = True
            if u not in seen:
                seen.add(u)
                work.append(u)
        if not succ:
            out.add(t)
    if stats is not None:
        stats["expanded"] = expanded
    return frozenset(out)


class TerminalQuery:
    """A seen set shared by nested metafunction calls.

    Rewrite rules that themselves call a metafunction pass the query along,
    so re-entering a term that is already being explored contributes nothing
    instead of recursing again.
    """

    def __init__(self):
        self.seen: set = set()
        self.expansions = 0

    def run(self, step: Step, start) -> frozenset:
        if start in self.seen:
            return frozenset()
        self.seen.add(start)
        work = deque([start])
        out = set()
        while work:
            t = work.popleft()
            self.expansions += 1
            succ = False
            for u in step(t):
                succ = True
                if u not in self.seen:
                    self.seen.add(u)
                    work.append(u)
            if not succ:
                out.add(t)
        return frozenset(out)


def terminal_shared(query: TerminalQuery, step: Step, start) -> frozenset:
    return query.run(step, start)


def brute_force_terminal(edges: dict, start) -> frozenset:
    """Reference implementation over an explicit adjacency dict."""
    reach = {start}
    frontier = [start]
    while frontier:
        nxt = []
        for t in frontier:
            for u in edges.get(t, ()):
                if u not in reach:
                    reach.add(u)
                    nxt.append(u)
        frontier = nxt
    return frozenset(t for t in reach if not edges.get(t))
