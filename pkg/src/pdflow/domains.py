"""Semantic domains shared by the concrete and abstract machines."""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass
from typing import Any

from .syntax import Expr, Lam, Prim


class UnboundVariable(KeyError):
    pass


class MissingAddress(KeyError):
    """An address was dereferenced that the store does not map."""


class FrozenMap(Mapping):
    """Immutable mapping with a cached hash."""

    __slots__ = ("_d", "_h")

    def __init__(self, data=()):
        self._d = dict(data)
        self._h = None

    @classmethod
    def _wrap(cls, d):
        m = cls.__new__(cls)
        m._d = d
        m._h = None
        return m

    def __getitem__(self, k):
        return self._d[k]

    def __iter__(self):
        return iter(self._d)

    def __len__(self):
        return len(self._d)

    def __contains__(self, k):
        return k in self._d

    def __hash__(self):
        if self._h is None:
            self._h = hash(frozenset(self._d.items()))
        return self._h

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, FrozenMap):
            return NotImplemented
        if self._h is not None and other._h is not None and self._h != other._h:
            return False
        return self._d == other._d

    def __repr__(self):
        inner = ", ".join(f"{k!r}: {v!r}" for k, v in self._d.items())
        return f"{type(self).__name__}({{{inner}}})"

    def set(self, k, v):
        d = dict(self._d)
        d[k] = v
        return type(self)._wrap(d)


class Env(FrozenMap):
    """Variable name to address."""

    __slots__ = ()

    def lookup(self, x):
        try:
            return self._d[x]
        except KeyError:
            raise UnboundVariable(x) from None

    def extend(self, x, a) -> "Env":
        return self.set(x, a)

    def restrict(self, names) -> "Env":
        return Env._wrap({x: a for x, a in self._d.items() if x in names})


EMPTY_ENV = Env()


class Store(FrozenMap):
    """Address to a nonempty frozenset of storeables, joined by union."""

    __slots__ = ()

    def lookup(self, a) -> frozenset:
        try:
            return self._d[a]
        except KeyError:
            raise MissingAddress(a) from None

    def join(self, a, v) -> "Store":
        old = self._d.get(a)
        if old is not None and v in old:
            return self
        d = dict(self._d)
        d[a] = frozenset([v]) if old is None else old | {v}
        return Store._wrap(d)

    def join_all(self, a, vs) -> "Store":
        old = self._d.get(a, frozenset())
        new = old | frozenset(vs)
        if new == old:
            return self
        d = dict(self._d)
        d[a] = new
        return Store._wrap(d)

    def restrict(self, live) -> "Store":
        if all(a in live for a in self._d):
            return self
        return Store._wrap({a: vs for a, vs in self._d.items() if a in live})

    def leq(self, other: "Store") -> bool:
        """Pointwise subset."""
        od = other._d
        for a, vs in self._d.items():
            ov = od.get(a)
            if ov is None or not vs <= ov:
                return False
        return True

    def merge(self, other: "Store") -> "Store":
        if other.leq(self):
            return self
        d = dict(self._d)
        for a, vs in other._d.items():
            d[a] = d.get(a, frozenset()) | vs
        return Store._wrap(d)


EMPTY_STORE = Store()


class Interner:
    """Hash-consing table; ``intern(x)`` returns the canonical copy of x."""

    def __init__(self):
        self._table: dict = {}
        self._ids: dict = {}

    def intern(self, x):
        got = self._table.get(x)
        if got is None:
            self._table[x] = x
            self._ids[id(x)] = len(self._ids)
            return x
        return got

    def ident(self, x) -> int:
        return self._ids[id(self.intern(x))]

    def __len__(self):
        return len(self._table)


def hashcache(cls):
    """Cache the dataclass-generated hash on the instance."""
    orig = cls.__hash__

    def __hash__(self):
        d = self.__dict__
        h = d.get("_h")
        if h is None:
            h = orig(self)
            object.__setattr__(self, "_h", h)
        return h

    cls.__hash__ = __hash__
    return cls


# ---------------------------------------------------------------- values

@hashcache
@dataclass(frozen=True)
class Closure:
    lam: Lam
    env: Env

    def __repr__(self):
        return f"Closure(λ{self.lam.param}@{self.lam.label})"


class Const:
    """An integer or boolean constant.  ``Const(1) != Const(True)``."""

    __slots__ = ("value",)

    def __init__(self, value):
        self.value = value

    def __eq__(self, other):
        return (
            isinstance(other, Const)
            and type(self.value) is type(other.value)
            and self.value == other.value
        )

    def __hash__(self):
        return hash((type(self.value), self.value))

    def __repr__(self):
        return f"Const({self.value!r})"


class _AnyInt:
    """Abstract integer produced by ``+`` in the finite abstractions."""

    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "AnyInt"

    def __reduce__(self):
        return (_AnyInt, ())


ANY_INT = _AnyInt()

TRUE = Const(True)
FALSE = Const(False)


def is_int(v) -> bool:
    return v is ANY_INT or (isinstance(v, Const) and type(v.value) is int)


def delta(op: str, args: tuple, abstract: bool) -> frozenset:
    """Primitive semantics.  An empty result means the primitive is stuck."""
    if op == "+":
        a, b = args
        if not (is_int(a) and is_int(b)):
            return frozenset()
        if abstract or a is ANY_INT or b is ANY_INT:
            return frozenset([ANY_INT])
        return frozenset([Const(a.value + b.value)])
    if op == "<=":
        a, b = args
        if not (is_int(a) and is_int(b)):
            return frozenset()
        if a is ANY_INT or b is ANY_INT:
            return frozenset([TRUE, FALSE])
        return frozenset([Const(a.value <= b.value)])
    if op == "not":
        (a,) = args
        if isinstance(a, Const) and type(a.value) is bool:
            return frozenset([Const(not a.value)])
        return frozenset()
    raise ValueError(f"unknown primitive {op}")


def value_leq(v, w) -> bool:
    """Order on first-order values: equal, or an integer below AnyInt."""
    if v == w:
        return True
    return w is ANY_INT and isinstance(v, Const) and type(v.value) is int


def show_value(v) -> str:
    if isinstance(v, Const):
        if isinstance(v.value, bool):
            return "#t" if v.value else "#f"
        return str(v.value)
    if v is ANY_INT:
        return "int"
    if isinstance(v, Closure):
        from .syntax import unparse
        return unparse(v.lam)
    return repr(v)


# ---------------------------------------------------------------- frames

@hashcache
@dataclass(frozen=True)
class AppL:
    """Evaluate the argument ``arg`` next; ``site`` is the application label."""
    arg: Expr
    env: Env
    site: int


@hashcache
@dataclass(frozen=True)
class AppR:
    """Apply ``fn`` to the value being returned."""
    fn: Any
    site: int


@hashcache
@dataclass(frozen=True)
class PrimArgs:
    """Evaluating the arguments of ``prim``; ``done`` holds the values so far."""
    prim: Prim
    done: tuple
    env: Env

    @property
    def site(self):
        return self.prim.label


def frame_signature(frame) -> tuple:
    """Kind and site of a frame, forgetting environments and values."""
    if isinstance(frame, AppL):
        return ("arg", frame.site)
    if isinstance(frame, AppR):
        return ("fun", frame.site)
    if isinstance(frame, PrimArgs):
        return ("prim", frame.prim.label)
    return ("?", None)
