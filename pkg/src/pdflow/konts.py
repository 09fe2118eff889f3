"""Continuation representations.

``CKont`` is the concrete stack, a linked list of marked frames ending in a
marked empty stack.  ``Empty`` and ``Push`` are the abstract continuations:
one frame on top of a table pointer.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

from .domains import hashcache
from .marks import EMPTY_MARKS, PermMap

__all__ = ["CKont", "EMPTY_KONT", "Empty", "Push", "AKONT_EMPTY"]


class CKont:
    __slots__ = ("frame", "marks", "rest", "depth", "_h", "live")

    def __init__(self, frame, marks: PermMap, rest: "CKont | None"):
        self.frame = frame
        self.marks = marks
        self.rest = rest
        self.depth = 0 if rest is None else rest.depth + 1
        self.live = None  # addresses the frames touch, filled in by gc
        if rest is None:
            self._h = hash(("ε", marks))
        else:
            self._h = hash((frame, marks, rest._h))

    def is_empty(self) -> bool:
        return self.rest is None

    def push(self, frame) -> "CKont":
        return CKont(frame, EMPTY_MARKS, self)

    def with_marks(self, marks) -> "CKont":
        return CKont(self.frame, marks, self.rest)

    def frames(self):
        k = self
        while k.rest is not None:
            yield k.frame
            k = k.rest

    def base(self) -> "CKont":
        k = self
        while k.rest is not None:
            k = k.rest
        return k

    def __len__(self):
        return self.depth

    def __hash__(self):
        return self._h

    def __eq__(self, other):
        a, b = self, other
        while True:
            if a is b:
                return True
            if not isinstance(b, CKont) or a._h != b._h or a.depth != b.depth:
                return False
            if a.marks != b.marks:
                return False
            if a.rest is None:
                return True
            if a.frame != b.frame:
                return False
            a, b = a.rest, b.rest

    def __repr__(self):
        parts = [type(f).__name__ + f"@{f.site}" for f in self.frames()]
        return "CKont[" + ", ".join(parts) + "]"

    @classmethod
    def of(cls, frames, marks=None) -> "CKont":
        """Build a stack from a top-first sequence of frames."""
        marks = list(marks) if marks is not None else [EMPTY_MARKS] * (len(frames) + 1)
        k = cls(None, marks[-1], None)
        for f, m in zip(reversed(frames), reversed(marks[:-1])):
            k = cls(f, m, k)
        return k


EMPTY_KONT = CKont(None, EMPTY_MARKS, None)


@hashcache
@dataclass(frozen=True)
class Empty:
    marks: PermMap = EMPTY_MARKS

    tail = None
    frame = None

    def with_marks(self, marks):
        return Empty(marks)

    def __repr__(self):
        return "ε" if self.marks == EMPTY_MARKS else f"ε^{self.marks!r}"


@hashcache
@dataclass(frozen=True)
class Push:
    frame: Any
    marks: PermMap
    tail: Any

    def with_marks(self, marks):
        return Push(self.frame, marks, self.tail)

    def __repr__(self):
        return f"{type(self.frame).__name__}@{self.frame.site}·τ"


AKONT_EMPTY = Empty()
