"""Summary of one analysis run."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

from .facts import result_values, return_flow, returns_by_site

__all__ = ["AnalysisReport", "make_report"]


@dataclass
class AnalysisReport:
    machine: str
    policy: str
    gc: str
    states: int
    edges: int
    kstore: int
    cstore: int
    memo: int
    results: list
    returns: dict = field(default_factory=dict)
    seconds: float = 0.0

    @property
    def facts(self) -> int:
        return sum(len(v) for v in self.returns.values())

    def to_dict(self) -> dict:
        d = asdict(self)
        d["returns"] = {str(k): [[lam, list(sig)] for lam, sig in v] for k, v in self.returns.items()}
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False)

    def text(self) -> str:
        lines = [
            f"machine   {self.machine} ({self.policy}, gc={self.gc})",
            f"states    {self.states}",
            f"edges     {self.edges}",
            f"tables    Ξ={self.kstore} ΞC={self.cstore} M={self.memo}",
            f"results   {{{', '.join(self.results)}}}",
            f"time      {self.seconds:.3f}s",
            "returns",
        ]
        for site, pairs in self.returns.items():
            shown = ", ".join(f"λ{lam}→{kind}@{where}" for lam, (kind, where) in pairs)
            lines.append(f"  @{site}: {shown}")
        return "\n".join(lines)


def make_report(system, seconds: float = 0.0) -> AnalysisReport:
    t = system.tables
    size = lambda name: t.size(name) if name in t else 0  # noqa: E731
    return AnalysisReport(
        machine=system.machine.name,
        policy=system.policy.name,
        gc=system.gc,
        states=len(system.seen),
        edges=len(system.edges),
        kstore=size("kstore"),
        cstore=size("cstore"),
        memo=size("memo"),
        results=result_values(system),
        returns=returns_by_site(return_flow(system)),
        seconds=seconds,
    )
