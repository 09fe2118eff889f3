"""Allocation and tick policies.

A policy decides which addresses bindings go to and how the machine clock
advances at function entry.  Times are tuples of call-site labels, newest
first; the concrete policy keeps a counter alongside.

Address shapes:

========  =====================  ======================
policy    value binding of ``x``  continuation at site 7
========  =====================  ======================
fresh     ``0, 1, 2, ...``        ``0, 1, 2, ...``
mono      ``"x"``                 ``"κ@7"``
kcfa:k    ``("x", (3, 1))``       ``("κ@7", (3, 1))``
========  =====================  ======================
"""

from __future__ import annotations

import itertools
import re
import threading

from .syntax import App, Lam, Prim, Shift, Expr, walk

__all__ = [
    "AllocPolicy", "FreshAlloc", "KCFAAlloc", "MonoAlloc", "ShadowAlloc",
    "parse_policy", "kont_addr",
]


def kont_addr(label) -> str:
    return f"κ@{label}"


class AllocPolicy:
    name = "abstract"
    finite = True
    abstract_numbers = True

    def initial_time(self):
        return ()

    def tick(self, time, site):
        return time

    def alloc(self, var, time):
        raise NotImplementedError

    def kalloc(self, site, time):
        raise NotImplementedError

    def shift_alloc(self, var, site, time):
        """The pair (value address, continuation-closure address)."""
        return self.alloc(var, time), self.kalloc(site, time)

    def describe(self) -> dict:
        return {"name": self.name, "finite": self.finite}

    def __repr__(self):
        return f"<{type(self).__name__} {self.name}>"


class FreshAlloc(AllocPolicy):
    """Never reuses an address.  Times count function entries."""

    name = "fresh"
    finite = False
    abstract_numbers = False

    def __init__(self):
        self._counter = itertools.count()
        self._clock = itertools.count(1)
        self._lock = threading.Lock()

    def _next(self):
        with self._lock:
            return next(self._counter)

    def initial_time(self):
        return 0

    def tick(self, time, site):
        with self._lock:
            return next(self._clock)

    def alloc(self, var, time):
        return self._next()

    def kalloc(self, site, time):
        return self._next()


class KCFAAlloc(AllocPolicy):
    """Call-string sensitivity: times are the last ``k`` call-site labels."""

    def __init__(self, k: int):
        if k < 0:
            raise ValueError("k must be non-negative")
        self.k = k
        self.name = f"kcfa:{k}"

    def tick(self, time, site):
        if self.k == 0:
            return ()
        return ((site,) + time)[: self.k]

    def alloc(self, var, time):
        return var if self.k == 0 else (var, time)

    def kalloc(self, site, time):
        return kont_addr(site) if self.k == 0 else (kont_addr(site), time)

    def histories(self, sites) -> list:
        sites = sorted(sites)
        out = [()]
        for n in range(1, self.k + 1):
            out.extend(itertools.product(sites, repeat=n))
        return out

    def address_space(self, e: Expr) -> frozenset:
        """Every address this policy can hand out while analyzing ``e``."""
        names = set()
        labels = set()
        calls = set()
        for node in walk(e):
            if isinstance(node, (Lam, Shift)):
                names.add(node.param)
            if isinstance(node, (App, Prim, Shift)):
                labels.add(node.label)
            if isinstance(node, App):
                calls.add(node.label)
        hs = self.histories(calls)
        space = {self.alloc(x, t) for x in names for t in hs}
        space |= {self.kalloc(l, t) for l in labels for t in hs}
        return frozenset(space)


class MonoAlloc(KCFAAlloc):
    """Every variable gets one address, namely itself."""

    def __init__(self):
        super().__init__(0)
        self.name = "mono"


class ShadowAlloc(FreshAlloc):
    """Fresh allocation that remembers what a finite policy would have done.

    The clock is the full call history truncated to ``depth``.  Each address
    records its origin so :meth:`abstract` can map it to the address a
    k-CFA policy with ``k <= depth`` would use.
    """

    name = "fresh"

    def __init__(self, depth: int = 4):
        super().__init__()
        self.depth = depth
        self.origin: dict = {}

    def initial_time(self):
        return ()

    def tick(self, time, site):
        return ((site,) + time)[: self.depth]

    def alloc(self, var, time):
        a = self._next()
        self.origin[a] = (var, time)
        return a

    def kalloc(self, site, time):
        a = self._next()
        self.origin[a] = (kont_addr(site), time)
        return a

    def abstract(self, addr, policy: KCFAAlloc):
        name, time = self.origin[addr]
        return name if policy.k == 0 else (name, time[: policy.k])

    def abstract_time(self, time, policy: KCFAAlloc):
        return time[: policy.k] if policy.k else ()


def parse_policy(text: str) -> AllocPolicy:
    """``fresh``, ``mono`` or ``kcfa:<k>``."""
    if text == "fresh":
        return FreshAlloc()
    if text == "mono":
        return MonoAlloc()
    m = re.fullmatch(r"kcfa:(\d+)", text)
    if m:
        k = int(m.group(1))
        return MonoAlloc() if k == 0 else KCFAAlloc(k)
    raise ValueError(f"unknown allocation policy '{text}'")
