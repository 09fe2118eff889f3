"""JSON and DOT renderings of a finished analysis.

Stores are deduplicated: each distinct store gets one id and states refer to
it.  Ids follow a sort on the printed fields, so they are stable across runs
except among states that print identically.
"""

from __future__ import annotations

import json

from . import cesik, delimited
from .baseline import BEv
from .domains import FrozenMap, Store, frame_signature, show_value
from .konts import Empty, Push
from .pushdown import AppContext, Ev
from .syntax import Expr

__all__ = ["projection", "to_json", "load_json", "to_dot", "addr_str"]

_EV = (Ev, BEv, cesik.IEv, delimited.SEv)


def addr_str(a) -> str:
    if isinstance(a, tuple) and len(a) == 2:
        name, t = a
        return f"{name}@{'.'.join(map(str, t))}" if t else str(name)
    return str(a)


def _time(t):
    return list(t) if isinstance(t, tuple) else t


def _store_key(store: Store) -> str:
    return json.dumps(_bindings(store), sort_keys=True, ensure_ascii=False)


def _bindings(store) -> dict:
    return {addr_str(a): sorted(_val(v) for v in vs) for a, vs in store.items()}


def _val(v) -> str:
    if isinstance(v, (Empty, Push)):
        return "kont:" + _frame_desc(v)
    if isinstance(v, delimited.KontVal):
        return "kont:" + _flat(v.kont)
    return show_value(v)


def _frame_desc(k) -> str:
    return "ε" if isinstance(k, Empty) else _fsig(k.frame)


def _fsig(frame) -> str:
    kind, site = frame_signature(frame)
    return f"{kind}@{site}"


class _Ids:
    def __init__(self, items, key):
        ordered = sorted(items, key=key)
        self.ids = {x: i for i, x in enumerate(ordered)}
        self.items = ordered

    def __getitem__(self, x):
        return self.ids[x]


def _ctx_store(ctx):
    return getattr(ctx, "store", None)


def _ctx_label(ctx):
    if isinstance(ctx, (AppContext, delimited.ExactContext, delimited.ApproxContext, delimited.ResetCtx)):
        return ctx.expr.label
    if isinstance(ctx, cesik.EntryContext):
        return ctx.fn.lam.label
    return None


def _flat(k) -> str:
    """A captured (store-free) continuation."""
    if isinstance(k, Empty):
        return "ε"
    if isinstance(k, Push):
        return f"{_fsig(k.frame)} · {_flat(k.tail)}"
    return f"⟨{k.expr.label}, {addr_str(k.addr)}⟩"


def _akont_of(s):
    if isinstance(s, (cesik.IEv, cesik.ICo)):
        return (s.local, s.ref)
    return (s.kont, getattr(s, "value", None), s.env if hasattr(s, "env") else None)


class _Projector:
    def __init__(self, system):
        self.system = system
        stores = {s.store for s in system.seen}
        closures = [getattr(s, "kclo", None) for s in system.seen]
        for name in system.tables.data:
            for key in system.tables.data[name]:
                st = _ctx_store(key)
                if isinstance(st, Store):
                    stores.add(st)
                closures.append(getattr(key, "kclo", None))
        for entries in system.tables.data.get("memo", {}).values():
            stores.update(st for _, _, st, _ in entries)
        for chi in closures:
            for ss in (chi or {}).values():
                stores.update(ss)
        self.stores = _Ids(stores, _store_key)
        keys = set()
        for name in system.tables.data:
            if name != "memo":
                keys.update(system.tables.data[name])
        keys.update(system.tables.data.get("memo", {}))
        self.contexts = _Ids(keys, self._ctx_sort)
        self.states = _Ids(system.seen, self._state_sort)

    def kclo(self, chi) -> str:
        parts = [f"{addr_str(a)}: {sorted(self.stores[st] for st in ss)}"
                 for a, ss in sorted(chi.items(), key=lambda kv: addr_str(kv[0]))]
        return "χ{" + ", ".join(parts) + "}"

    def ctx_desc(self, ctx) -> dict:
        label = _ctx_label(ctx)
        st = _ctx_store(ctx)
        sid = self.stores[st] if isinstance(st, Store) else None
        if not hasattr(ctx, "__dataclass_fields__"):
            kind, name = "address", addr_str(ctx)
        else:
            kind = type(ctx).__name__
            if isinstance(ctx, AppContext):
                name = f"⟨{label}, σ{sid}, {_time(ctx.time)}⟩"
            elif isinstance(ctx, cesik.EntryContext):
                name = f"⟨λ{label}, {_val(ctx.arg)}, σ{sid}⟩"
            elif isinstance(ctx, delimited.InvokeCtx):
                name = f"⟨invoke {_flat(ctx.kont)}, {_val(ctx.value)}, σ{sid}, {self.kclo(ctx.kclo)}⟩"
            else:
                name = f"⟨{label}, σ{sid}, {self.kclo(ctx.kclo)}⟩"
        return {"kind": kind, "expr-label": label, "time": _time(getattr(ctx, "time", None)),
                "store-id": sid, "name": name}

    def _ctx_sort(self, ctx):
        d = self.ctx_desc(ctx)
        return (d["kind"], d["expr-label"] if d["expr-label"] is not None else -1,
                json.dumps(d["time"]), d["store-id"] if d["store-id"] is not None else -1, d["name"])

    def kont(self, k) -> str:
        if isinstance(k, tuple) and len(k) == 2 and isinstance(k[0], tuple):
            frames = [_fsig(f) for f in k[0]]
            return " · ".join(frames + [self.ref(k[1])])
        if k is None or isinstance(k, Empty):
            return "ε"
        if isinstance(k, Push):
            return f"{_frame_desc(k)} · {self.ref(k.tail)}"
        if isinstance(k, delimited.ApproxContext):
            return _flat(k)
        return self.ref(k)

    def ref(self, r) -> str:
        if r is cesik.DONE:
            return "done"
        if r in self.contexts.ids:
            return f"c{self.contexts[r]}"
        return repr(r)

    def state(self, s) -> dict:
        ev = isinstance(s, _EV)
        k = (s.local, s.ref) if isinstance(s, (cesik.IEv, cesik.ICo)) else s.kont
        d = {
            "kind": "ev" if ev else "co",
            "expr-label": s.expr.label if ev else None,
            "time": _time(s.time),
            "store-id": self.stores[s.store],
            "kont": self.kont(k),
        }
        if ev:
            d["env"] = {x: addr_str(a) for x, a in sorted(s.env.items())}
        else:
            d["value"] = _val(s.value)
        if hasattr(s, "meta"):
            d["meta"] = None if s.meta is None else self.ref(s.meta)
            d["kclo"] = self.kclo(s.kclo)
        return d

    def _state_sort(self, s):
        d = self.state(s)
        return (d["kind"], d["expr-label"] if d["expr-label"] is not None else -1,
                d.get("value", ""), json.dumps(d.get("env")), json.dumps(d["time"]),
                d["store-id"], d["kont"], str(d.get("meta")), d.get("kclo", ""),
                self.canon(_akont_of(s)))

    def canon(self, x) -> str:
        """A deterministic rendering of any piece of a state, used for ordering."""
        if isinstance(x, Store):
            return f"σ{self.stores[x]}"
        if isinstance(x, Expr):
            return f"e{x.label}"
        if x in self.contexts.ids:
            return f"c{self.contexts[x]}"
        if isinstance(x, FrozenMap):
            return "{" + ",".join(sorted(f"{self.canon(k)}:{self.canon(v)}" for k, v in x.items())) + "}"
        if isinstance(x, frozenset):
            return "{" + ",".join(sorted(self.canon(v) for v in x)) + "}"
        if isinstance(x, tuple):
            return "(" + ",".join(self.canon(v) for v in x) + ")"
        if hasattr(x, "__dataclass_fields__"):
            inner = ",".join(self.canon(getattr(x, f)) for f in x.__dataclass_fields__)
            return f"{type(x).__name__}({inner})"
        return repr(x)

    def project(self) -> dict:
        system = self.system
        states = []
        for s in self.states.items:
            d = {"id": self.states[s]}
            d.update(self.state(s))
            states.append(d)
        edges = sorted([self.states[a], self.states[b]] for a, b in system.edges)
        contexts = []
        for c in self.contexts.items:
            d = {"id": self.contexts[c]}
            d.update(self.ctx_desc(c))
            contexts.append(d)
        out = {
            "machine": system.machine.name,
            "policy": system.policy.name,
            "gc": system.gc,
            "states": states,
            "stores": [{"id": self.stores[st], "bindings": _bindings(st)} for st in self.stores.items],
            "edges": edges,
            "contexts": contexts,
            "initial": sorted(self.states[s] for s in system.initial),
        }
        for name in system.tables.data:
            if name == "memo":
                continue
            out[name] = [
                [self.contexts[c], sorted(self._entry(name, e) for e in entries)]
                for c, entries in sorted(system.tables.data[name].items(),
                                         key=lambda kv: self.contexts[kv[0]])
            ]
        out["memo"] = [
            [self.contexts[c], sorted(
                [{"expr-label": body.label, "store-id": self.stores[st], "time": _time(u)}
                 for body, _, st, u in entries],
                key=lambda x: json.dumps(x, sort_keys=True))]
            for c, entries in sorted(system.memo.items(), key=lambda kv: self.contexts[kv[0]])
        ]
        out["results"] = sorted({_val(v) for v in system.results()})
        return out

    def _entry(self, table, e) -> str:
        if table == "cstore":
            k, C = e
            return f"{self.kont(k)} | {'none' if C is None else self.ref(C)}"
        return self.kont(e)


def projection(system) -> dict:
    """The JSON-ready description of ``system``."""
    return _Projector(system).project()


def to_json(system, indent: int | None = None) -> str:
    return json.dumps(projection(system), ensure_ascii=False, indent=indent)


def load_json(text: str) -> dict:
    """Parse a graph written by :func:`to_json`."""
    data = json.loads(text)
    for key in ("states", "stores", "edges", "contexts", "results"):
        if key not in data:
            raise ValueError(f"graph is missing '{key}'")
    return data


def _q(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def to_dot(system) -> str:
    """States as nodes and steps as arrows; table entries as dashed edges."""
    proj = _Projector(system)
    p = proj.project()
    finals = {proj.states[s] for s in system.final_states()}
    lines = ["digraph analysis {", "  node [shape=ellipse, fontsize=10];"]
    for s in p["states"]:
        if s["kind"] == "ev":
            label = f"ev {s['expr-label']} t={s['time']}"
        else:
            label = f"co {s['value']} t={s['time']}"
        shape = ", shape=doublecircle" if s["id"] in finals else ""
        lines.append(f"  s{s['id']} [label={_q(label)}{shape}];")
    for a, b in p["edges"]:
        lines.append(f"  s{a} -> s{b};")
    for c in p["contexts"]:
        lines.append(f"  c{c['id']} [shape=box, label={_q(c['kind'] + ' ' + str(c['expr-label']))}];")
    for name in system.tables.data:
        if name == "memo":
            continue
        for cid, entries in p.get(name, []):
            for e in entries:
                for target in _refs(e):
                    lines.append(f"  c{cid} -> {target} [style=dashed, label={_q(e)}];")
    lines.append('  done [shape=point];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def _refs(entry: str) -> list:
    out = []
    for tok in entry.replace("|", " ").replace("·", " ").split():
        if tok[:1] == "c" and tok[1:].isdigit():
            out.append(tok)
    return out or ["done"]
