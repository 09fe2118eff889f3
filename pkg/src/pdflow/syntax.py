"""Abstract syntax, reader and printer for the analyzed language.

The surface language is a small call-by-value lambda calculus written as
s-expressions.  Besides variables, single-argument lambdas and applications
it has integer and boolean literals, three primitives (``<=``, ``+`` and
``not``), the stack-inspection forms ``grant``, ``frame`` and ``test``, and
the delimited-control forms ``shift`` and ``reset``.

A handful of derived forms are expanded while reading so that the machines
only ever see the core tree:

* ``(λ (x y) e)`` curries to ``(λ (x) (λ (y) e))``
* ``(f a b)`` becomes ``((f a) b)``
* ``(let ([x e] ...) body)`` and ``let*`` become immediate applications

Every node of the expanded tree gets a label, assigned in preorder from 0.
Nodes compare by identity; :func:`same_shape` compares structure.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterator

__all__ = [
    "Expr", "Var", "App", "Lam", "Lit", "Prim", "Grant", "Frame", "Test",
    "Shift", "Reset", "ParseError", "ArityError", "KeywordError",
    "PRIM_ARITY", "parse", "unparse", "free_vars", "closed", "walk",
    "same_shape", "max_depth", "uses_marks", "uses_control", "node_at",
]

PRIM_ARITY = {"<=": 2, "+": 2, "not": 1}
_PRIM_ALIASES = {"≤": "<="}
_LAMBDA = ("λ", "lambda")
KEYWORDS = frozenset(
    list(_LAMBDA) + ["grant", "frame", "test", "shift", "reset", "let", "let*"]
)
# recognised so that we can give a clear message instead of "unbound"
_UNSUPPORTED = frozenset(
    ["set!", "call/cc", "if", "define", "quote", "letrec", "begin", "cond"]
)


class ParseError(ValueError):
    """Malformed program text.  ``line`` and ``col`` are 1-based."""

    def __init__(self, msg, line=None, col=None):
        self.line = line
        self.col = col
        where = f" at line {line}, column {col}" if line is not None else ""
        super().__init__(msg + where)


class ArityError(ParseError):
    pass


class KeywordError(ParseError):
    pass


@dataclass(eq=False)
class Expr:
    label: int = field(default=-1, init=False, repr=False)

    __hash__ = object.__hash__


@dataclass(eq=False)
class Var(Expr):
    name: str


@dataclass(eq=False)
class App(Expr):
    fn: Expr
    arg: Expr


@dataclass(eq=False)
class Lam(Expr):
    param: str
    body: Expr


@dataclass(eq=False)
class Lit(Expr):
    value: int | bool


@dataclass(eq=False)
class Prim(Expr):
    op: str
    args: tuple


@dataclass(eq=False)
class Grant(Expr):
    perms: frozenset
    body: Expr


@dataclass(eq=False)
class Frame(Expr):
    perms: frozenset
    body: Expr


@dataclass(eq=False)
class Test(Expr):
    perms: frozenset
    then: Expr
    orelse: Expr


@dataclass(eq=False)
class Shift(Expr):
    param: str
    body: Expr


@dataclass(eq=False)
class Reset(Expr):
    body: Expr


def children(e: Expr) -> tuple:
    if isinstance(e, App):
        return (e.fn, e.arg)
    if isinstance(e, (Lam, Grant, Frame, Shift, Reset)):
        return (e.body,)
    if isinstance(e, Prim):
        return e.args
    if isinstance(e, Test):
        return (e.then, e.orelse)
    return ()


def walk(e: Expr) -> Iterator[Expr]:
    """Preorder traversal."""
    stack = [e]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(children(node)))


def _relabel(e: Expr) -> Expr:
    for i, node in enumerate(walk(e)):
        node.label = i
    return e


def node_at(e: Expr, label: int) -> Expr:
    for node in walk(e):
        if node.label == label:
            return node
    raise KeyError(label)


# ---------------------------------------------------------------- reader

_TOKEN = re.compile(r"""\s+|;[^\n]*|([()\[\]])|([^\s()\[\];]+)""")


@dataclass
class _Tok:
    text: str
    line: int
    col: int


@dataclass
class _List:
    items: list
    line: int
    col: int
    bracket: str = "("


def _tokenize(text: str) -> list:
    toks = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:  # pragma: no cover - the pattern matches any char
            raise ParseError("unexpected character", line, pos - line_start + 1)
        chunk = m.group(0)
        if m.group(1) or m.group(2):
            toks.append(_Tok(chunk, line, pos - line_start + 1))
        nl = chunk.count("\n")
        if nl:
            line += nl
            line_start = pos + chunk.rindex("\n") + 1
        pos = m.end()
    return toks


_CLOSE = {"(": ")", "[": "]"}


def _read(toks: list) -> object:
    if not toks:
        raise ParseError("empty program", 1, 1)
    stack: list = []
    top = None
    for tok in toks:
        if tok.text in "([":
            stack.append(_List([], tok.line, tok.col, tok.text))
        elif tok.text in ")]":
            if not stack:
                raise ParseError(f"unexpected '{tok.text}'", tok.line, tok.col)
            lst = stack.pop()
            if _CLOSE[lst.bracket] != tok.text:
                raise ParseError(f"mismatched '{tok.text}'", tok.line, tok.col)
            if stack:
                stack[-1].items.append(lst)
            elif top is None:
                top = lst
            else:
                raise ParseError("more than one top-level form", lst.line, lst.col)
        else:
            if stack:
                stack[-1].items.append(tok)
            elif top is None:
                top = tok
            else:
                raise ParseError("more than one top-level form", tok.line, tok.col)
    if stack:
        lst = stack[-1]
        raise ParseError("unclosed parenthesis", lst.line, lst.col)
    return top


def _at(node):
    return node.line, node.col


def _symbol(node, what):
    if not isinstance(node, _Tok) or node.text in "()[]":
        raise ParseError(f"expected {what}", *_at(node))
    if node.text in KEYWORDS or node.text in _UNSUPPORTED:
        raise KeywordError(f"keyword '{node.text}' used as a variable", *_at(node))
    if _literal(node.text) is not None:
        raise ParseError(f"expected {what}, got a literal", *_at(node))
    return node.text


def _literal(text):
    if text in ("#t", "#true"):
        return True
    if text in ("#f", "#false"):
        return False
    if re.fullmatch(r"[+-]?\d+", text):
        return int(text)
    return None


def _perms(node):
    if not isinstance(node, _List):
        raise ParseError("expected a parenthesized permission list", *_at(node))
    return frozenset(_symbol(p, "permission symbol") for p in node.items)


def _expect_len(node, n, form):
    if len(node.items) != n:
        raise ParseError(f"bad '{form}' form: expected {n - 1} operand(s)", *_at(node))


def _convert(node) -> Expr:
    if isinstance(node, _Tok):
        lit = _literal(node.text)
        if lit is not None:
            return Lit(lit)
        if node.text in KEYWORDS or node.text in _UNSUPPORTED:
            raise KeywordError(f"keyword '{node.text}' used as an expression", *_at(node))
        return Var(node.text)

    items = node.items
    if not items:
        raise ParseError("empty application", *_at(node))
    head = items[0]
    kw = head.text if isinstance(head, _Tok) else None
    kw = _PRIM_ALIASES.get(kw, kw)

    if kw in _UNSUPPORTED:
        raise KeywordError(f"unsupported form '{kw}'", *_at(head))
    if kw in _LAMBDA:
        _expect_len(node, 3, kw)
        if not isinstance(items[1], _List) or not items[1].items:
            raise ParseError("lambda needs a non-empty parameter list", *_at(items[1]))
        params = [_symbol(p, "parameter name") for p in items[1].items]
        body = _convert(items[2])
        for p in reversed(params):
            body = Lam(p, body)
        return body
    if kw in ("let", "let*"):
        _expect_len(node, 3, kw)
        if not isinstance(items[1], _List):
            raise ParseError(f"bad '{kw}' bindings", *_at(items[1]))
        binds = []
        for b in items[1].items:
            if not isinstance(b, _List) or len(b.items) != 2:
                raise ParseError(f"bad '{kw}' binding", *_at(b))
            binds.append((_symbol(b.items[0], "variable"), _convert(b.items[1])))
        body = _convert(items[2])
        if kw == "let":
            for x, _ in reversed(binds):
                body = Lam(x, body)
            for _, e in binds:
                body = App(body, e)
            return body
        for x, e in reversed(binds):
            body = App(Lam(x, body), e)
        return body
    if kw in ("grant", "frame"):
        _expect_len(node, 3, kw)
        cls = Grant if kw == "grant" else Frame
        return cls(_perms(items[1]), _convert(items[2]))
    if kw == "test":
        _expect_len(node, 4, kw)
        return Test(_perms(items[1]), _convert(items[2]), _convert(items[3]))
    if kw == "shift":
        _expect_len(node, 3, kw)
        return Shift(_symbol(items[1], "continuation variable"), _convert(items[2]))
    if kw == "reset":
        _expect_len(node, 2, kw)
        return Reset(_convert(items[1]))
    if kw in PRIM_ARITY:
        args = items[1:]
        if len(args) != PRIM_ARITY[kw]:
            raise ArityError(
                f"primitive '{kw}' expects {PRIM_ARITY[kw]} argument(s), got {len(args)}",
                *_at(head),
            )
        return Prim(kw, tuple(_convert(a) for a in args))

    fn = _convert(head)
    if len(items) == 1:
        raise ParseError("application needs an argument", *_at(node))
    for a in items[1:]:
        fn = App(fn, _convert(a))
    return fn


def parse(text: str) -> Expr:
    """Read ``text`` into a labeled expression tree."""
    return _relabel(_convert(_read(_tokenize(text))))


# ---------------------------------------------------------------- printer

def _perm_text(perms):
    return "(" + " ".join(sorted(perms)) + ")"


def unparse(e: Expr) -> str:
    """Print ``e`` in core syntax; ``parse(unparse(e))`` has the same shape."""
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Lit):
        if isinstance(e.value, bool):
            return "#t" if e.value else "#f"
        return str(e.value)
    if isinstance(e, Lam):
        return f"(λ ({e.param}) {unparse(e.body)})"
    if isinstance(e, App):
        return f"({unparse(e.fn)} {unparse(e.arg)})"
    if isinstance(e, Prim):
        return "(" + " ".join([e.op] + [unparse(a) for a in e.args]) + ")"
    if isinstance(e, Grant):
        return f"(grant {_perm_text(e.perms)} {unparse(e.body)})"
    if isinstance(e, Frame):
        return f"(frame {_perm_text(e.perms)} {unparse(e.body)})"
    if isinstance(e, Test):
        return f"(test {_perm_text(e.perms)} {unparse(e.then)} {unparse(e.orelse)})"
    if isinstance(e, Shift):
        return f"(shift {e.param} {unparse(e.body)})"
    if isinstance(e, Reset):
        return f"(reset {unparse(e.body)})"
    raise TypeError(f"not an expression: {e!r}")


def same_shape(a: Expr, b: Expr) -> bool:
    """Structural equality ignoring labels."""
    if type(a) is not type(b):
        return False
    if isinstance(a, Var):
        return a.name == b.name
    if isinstance(a, Lit):
        return type(a.value) is type(b.value) and a.value == b.value
    if isinstance(a, (Lam, Shift)) and a.param != b.param:
        return False
    if isinstance(a, Prim) and a.op != b.op:
        return False
    if isinstance(a, (Grant, Frame, Test)) and a.perms != b.perms:
        return False
    ca, cb = children(a), children(b)
    return len(ca) == len(cb) and all(same_shape(x, y) for x, y in zip(ca, cb))


# ---------------------------------------------------------------- analyses

def free_vars(e: Expr) -> frozenset:
    """Free variables of ``e`` (cached per node)."""
    hit = e.__dict__.get("_fv")
    if hit is not None:
        return hit
    if isinstance(e, Var):
        fv = frozenset([e.name])
    elif isinstance(e, (Lam, Shift)):
        fv = free_vars(e.body) - {e.param}
    else:
        fv = frozenset().union(*(free_vars(c) for c in children(e)))
    e.__dict__["_fv"] = fv
    return fv


def closed(e: Expr) -> bool:
    return not free_vars(e)


def max_depth(e: Expr) -> int:
    """Nesting depth of the tree; a leaf has depth 1."""
    best = 0
    stack = [(e, 1)]
    while stack:
        node, d = stack.pop()
        best = max(best, d)
        stack.extend((c, d + 1) for c in children(node))
    return best


def uses_marks(e: Expr) -> bool:
    return any(isinstance(n, (Grant, Frame, Test)) for n in walk(e))


def uses_control(e: Expr) -> bool:
    return any(isinstance(n, (Shift, Reset)) for n in walk(e))
