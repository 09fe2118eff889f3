"""Random closed programs for differential and property tests."""

from __future__ import annotations

import random

from .syntax import Expr, parse

__all__ = ["random_source", "random_program", "programs"]

PERMS = ("p", "q")


def random_source(rng: random.Random, depth: int = 6, marks: bool = False,
                  control: bool = False) -> str:
    """Source text of a closed term whose tree is at most ``depth`` deep."""
    counter = [0]

    def fresh():
        counter[0] += 1
        return f"v{counter[0]}"

    def perms():
        return "(" + " ".join(sorted(rng.sample(PERMS, rng.randint(1, len(PERMS))))) + ")"

    def lam(d, scope):
        x = fresh()
        return f"(λ ({x}) {go(d - 1, scope + [x])})"

    def go(d, scope):
        leaf = d <= 1
        kinds = ["lit"] + (["var"] * 3 if scope else [])
        if not leaf:
            kinds += ["lam"] * 2 + ["app"] * 3 + ["prim"]
            if d >= 3:
                kinds += ["let"] * 3
            if marks:
                kinds += ["grant", "frame", "test"]
            if control:
                kinds += ["shift", "reset"]
        kind = rng.choice(kinds)
        if kind == "var":
            return rng.choice(scope)
        if kind == "lit":
            return rng.choice(["0", "1", "2", "#t", "#f"])
        if kind == "lam":
            return lam(d, scope)
        if kind == "let":
            # an immediate redex binding a function or a number
            x = fresh()
            bound = go(d - 1, scope) if rng.random() < 0.3 else lam(d - 1, scope)
            return f"((λ ({x}) {go(d - 2, scope + [x])}) {bound})"
        if kind == "app":
            return f"({go(d - 1, scope)} {go(d - 1, scope)})"
        if kind == "prim":
            op = rng.choice(["+", "<=", "not"])
            if op == "not":
                return f"(not {go(d - 1, scope)})"
            return f"({op} {go(d - 1, scope)} {go(d - 1, scope)})"
        if kind == "grant":
            return f"(grant {perms()} {go(d - 1, scope)})"
        if kind == "frame":
            return f"(frame {perms()} {go(d - 1, scope)})"
        if kind == "test":
            return f"(test {perms()} {go(d - 1, scope)} {go(d - 1, scope)})"
        if kind == "shift":
            k = fresh()
            return f"(shift {k} {go(d - 1, scope + [k])})"
        return f"(reset {go(d - 1, scope)})"

    return go(depth, [])


def random_program(rng: random.Random, depth: int = 6, **kw) -> Expr:
    return parse(random_source(rng, depth, **kw))


def programs(n: int, seed: int = 0, depth: int = 6, **kw) -> list:
    """``n`` random programs from a fixed seed."""
    rng = random.Random(seed)
    return [random_program(rng, depth, **kw) for _ in range(n)]
