"""Analysis configuration and the checks that reject bad combinations."""

from __future__ import annotations

from dataclasses import asdict, dataclass

from .alloc import AllocPolicy, parse_policy
from .syntax import Expr, uses_control, uses_marks

__all__ = ["Config", "ConfigError", "check_config", "MACHINE_NAMES", "GC_MODES", "FORMATS"]

MACHINE_NAMES = ("baseline", "baseline-store", "pushdown", "cesik", "cm", "shift-reset")
GC_MODES = ("none", "exact", "union")
FORMATS = ("dot", "json", "summary")
COLLECTING = ("pushdown", "cm")


class ConfigError(ValueError):
    """Conflicting or unsupported configuration."""


@dataclass(frozen=True)
class Config:
    machine: str = "pushdown"
    alloc: str = "mono"
    gc: str = "none"
    memo: bool = False
    budget: int | None = None
    format: str = "summary"

    def policy(self) -> AllocPolicy:
        return parse_policy(self.alloc)

    def to_dict(self) -> dict:
        return asdict(self)


def check_config(config: Config, program: Expr | None = None) -> Config:
    """Return ``config`` unchanged or raise :class:`ConfigError`."""
    if config.machine not in MACHINE_NAMES:
        raise ConfigError(f"unknown machine '{config.machine}'")
    if config.gc not in GC_MODES:
        raise ConfigError(f"unknown gc mode '{config.gc}'")
    if config.format not in FORMATS:
        raise ConfigError(f"unknown format '{config.format}'")
    try:
        policy = config.policy()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if config.budget is not None and config.budget < 0:
        raise ConfigError("budget must be non-negative")
    if not policy.finite and config.budget is None:
        raise ConfigError("fresh allocation never reaches a fixpoint; give --budget")
    if config.gc != "none" and config.machine not in COLLECTING:
        raise ConfigError(f"garbage collection is not available for the {config.machine} machine")
    if config.memo:
        if config.machine != "pushdown":
            raise ConfigError("memoization requires the pushdown machine")
        if config.gc == "union":
            raise ConfigError("memoization is unsound with union garbage collection")
    if program is not None:
        if uses_marks(program) and config.machine != "cm":
            raise ConfigError("grant/frame/test need the cm machine")
        if uses_control(program) and config.machine != "shift-reset":
            raise ConfigError("shift/reset need the shift-reset machine")
    return config
