"""Bundled example programs and their header comments.

A program file may start with comment lines of the form ``; key: value``.
``machine`` names the machine the program is written for; other keys are
free-form notes.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .syntax import Expr, parse

__all__ = ["Program", "read_header", "load", "load_dir", "bundled", "bundled_dir"]

_HEADER = re.compile(r"^;+\s*([\w-]+)\s*:\s*(.*?)\s*$")


@dataclass
class Program:
    name: str
    source: str
    header: dict = field(default_factory=dict)

    @property
    def machine(self) -> str:
        return self.header.get("machine", "pushdown")

    def parse(self) -> Expr:
        return parse(self.source)


def read_header(text: str) -> dict:
    out = {}
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if not line.startswith(";"):
            break
        m = _HEADER.match(line)
        if m:
            out[m.group(1).lower()] = m.group(2)
    return out


def load(path) -> Program:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    return Program(path.stem, text, read_header(text))


def load_dir(path) -> list:
    return [load(p) for p in sorted(Path(path).glob("*.scm"))]


def bundled_dir() -> Path:
    return Path(str(resources.files("pdflow") / "corpus"))


def bundled(machine: str | None = None) -> list:
    """The shipped programs, optionally only those written for ``machine``."""
    progs = load_dir(bundled_dir())
    if machine is not None:
        progs = [p for p in progs if p.machine == machine]
    return progs
