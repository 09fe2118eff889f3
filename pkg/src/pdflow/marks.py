"""Continuation marks for stack inspection.

Each stack frame, and the empty stack, carries a permission map.  ``grant``
and ``frame`` rewrite the top map; ``test`` walks the stack checking that the
requested permissions are granted before being denied.
"""

from __future__ import annotations

from .metafun import terminal

__all__ = [
    "GRANT", "DENY", "PermMap", "EMPTY_MARKS", "passes", "mark_update",
    "ok_concrete", "ok_abstract", "ok_abstract_nested",
]

GRANT = "Grant"
DENY = "Deny"


class PermMap:
    """Permission to Grant/Deny/unset.

    Stored as explicit entries plus a default for every permission not
    listed, which lets the complement update work without knowing the set
    of all permissions.  ``None`` means unset.
    """

    __slots__ = ("entries", "default", "_h")

    def __init__(self, entries=None, default=None):
        entries = dict(entries or {})
        self.entries = {p: v for p, v in entries.items() if v != default}
        self.default = default
        self._h = None

    def __call__(self, p):
        return self.entries.get(p, self.default)

    def key(self):
        return (frozenset(self.entries.items()), self.default)

    def __eq__(self, other):
        return isinstance(other, PermMap) and self.key() == other.key()

    def __hash__(self):
        if self._h is None:
            self._h = hash(self.key())
        return self._h

    def __repr__(self):
        parts = [f"{p}↦{v}" for p, v in sorted(self.entries.items(), key=str)]
        if self.default is not None:
            parts.append(f"*↦{self.default}")
        return "{" + ", ".join(parts) + "}"

    def update(self, perms, gd) -> "PermMap":
        """Listed permissions become ``gd``."""
        entries = dict(self.entries)
        for p in perms:
            entries[p] = gd
        return PermMap(entries, self.default)

    def update_complement(self, perms, gd) -> "PermMap":
        """Every permission outside ``perms`` becomes ``gd``."""
        return PermMap({p: self(p) for p in perms}, gd)

    def denied(self, perms) -> frozenset:
        return frozenset(p for p in perms if self(p) == DENY)

    def granted(self, perms) -> frozenset:
        return frozenset(p for p in perms if self(p) == GRANT)

    def to_json(self):
        return {"entries": {p: v for p, v in sorted(self.entries.items())},
                "default": self.default}


EMPTY_MARKS = PermMap()


def passes(perms, m: PermMap) -> bool:
    return not m.denied(perms)


def mark_update(k, perms, gd, mode="listed"):
    """Rewrite the top mark map of ``k``; the stack length is unchanged."""
    m = k.marks
    m2 = m.update(perms, gd) if mode == "listed" else m.update_complement(perms, gd)
    return k.with_marks(m2)


def ok_concrete(perms, k) -> bool:
    """Walk a concrete stack (top first) deciding the test."""
    perms = frozenset(perms)
    while True:
        if not perms:
            return True
        m = k.marks
        if not passes(perms, m):
            return False
        if k.is_empty():
            return True
        perms = perms - m.granted(perms)
        k = k.rest


def ok_abstract(kstore, perms, k) -> frozenset:
    """Possible test outcomes over every stack ``k`` stands for.

    ``kstore.get(ctx, ())`` yields the continuations stored at a context.
    The answer is accumulated as the last component of each term so a plain
    worklist suffices.
    """

    def step(term):
        if isinstance(term, bool):
            return ()
        p, kont, acc = term
        if not p:
            return (acc,)
        m = kont.marks
        ok = acc and passes(p, m)
        if kont.tail is None:
            return (ok,)
        rest = p - m.granted(p)
        return [(rest, k2, ok) for k2 in kstore.get(kont.tail, ())]

    answers = terminal(step, (frozenset(perms), k, True))
    return frozenset(a for a in answers if isinstance(a, bool))


def ok_abstract_nested(kstore, perms, k, query=None) -> frozenset:
    """Same answers computed the direct way, recursing through a shared query.

    Each rule calls the metafunction again on the tail; the shared seen set
    makes re-entry on an abstract cycle return nothing instead of looping.
    """
    from .metafun import TerminalQuery

    query = query or TerminalQuery()

    # answers are tagged with the term that produced them so that two
    # queries can both report True without one hiding it from the other
    def step(term):
        if term[0] == "ans":
            return ()
        p, kont = term
        if not p:
            return (("ans", term, True),)
        m = kont.marks
        if kont.tail is None:
            return (("ans", term, passes(p, m)),)
        here = passes(p, m)
        rest = p - m.granted(p)
        out = set()
        for k2 in kstore.get(kont.tail, ()):
            for a in query.run(step, (rest, k2)):
                if a[0] == "ans":
                    out.add(("ans", term, here and a[2]))
        return out

    return frozenset(a[2] for a in query.run(step, (frozenset(perms), k)) if a[0] == "ans")
