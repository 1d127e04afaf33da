"""Mitigation settings and the per-step estimate record."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any

METHODS = ("TREX", "DD", "PT", "ZNE", "SM")


@dataclass(frozen=True)
class TrexConfig:
    enabled: bool = False
    n_samples: int = 10


@dataclass(frozen=True)
class DDConfig:
    enabled: bool = False
    # fractions of the idle window before, between and after the two X pulses
    spacing: tuple[float, float, float] = (0.25, 0.5, 0.25)
    min_duration: float = 1.0


@dataclass(frozen=True)
class PTConfig:
    enabled: bool = False
    n_copies: int = 10


@dataclass(frozen=True)
class ZNEConfig:
    enabled: bool = False
    fold_factors: tuple[int, ...] = (1, 3, 5)
    fit: str = "linear"


@dataclass(frozen=True)
class SMConfig:
    enabled: bool = False
    dead_zone: float = 0.05
    p_max: float = 0.95


@dataclass(frozen=True)
class MitigationConfig:
    trex: TrexConfig = field(default_factory=TrexConfig)
    dd: DDConfig = field(default_factory=DDConfig)
    pt: PTConfig = field(default_factory=PTConfig)
    zne: ZNEConfig = field(default_factory=ZNEConfig)
    sm: SMConfig = field(default_factory=SMConfig)

    def __post_init__(self) -> None:
        if self.trex.n_samples < 1:
            raise ValueError("trex n_samples must be >= 1")
        if self.pt.n_copies < 1:
            raise ValueError("pt n_copies must be >= 1")
        f = tuple(int(x) for x in self.zne.fold_factors)
        if not f or f[0] != 1 or any(x % 2 == 0 for x in f) or any(
            b <= a for a, b in zip(f, f[1:])
        ):
            raise ValueError(f"fold factors must be odd, strictly increasing and start at 1: {f}")
        if self.zne.enabled and len(f) < 2:
            raise ValueError("ZNE needs at least two fold factors")
        if self.zne.fit not in ("linear", "exponential"):
            raise ValueError(f"unknown ZNE fit {self.zne.fit!r}")
        if self.dd.enabled and (len(self.dd.spacing) != 3 or abs(sum(self.dd.spacing) - 1) > 1e-12):
            raise ValueError("DD spacing must be three fractions summing to 1")
        if not 0 < self.sm.p_max <= 1:
            raise ValueError("SM p_max must lie in (0, 1]")

    @classmethod
    def from_label(cls, label: str, **overrides: Any) -> "MitigationConfig":
        """Build from a name such as ``"TREX+DD+PT+ZNE"`` or ``"NOQEM"``."""
        names = {p.strip().upper() for p in label.split("+") if p.strip()}
        names.discard("NOQEM")
        unknown = names - set(METHODS)
        if unknown:
            raise ValueError(f"unknown mitigation method(s): {sorted(unknown)}")
        cfg = cls()
        for name in names:
            key = name.lower()
            cfg = replace(cfg, **{key: replace(getattr(cfg, key), enabled=True)})
        return replace(cfg, **overrides) if overrides else cfg

    @property
    def label(self) -> str:
        on = [m for m in METHODS if getattr(self, m.lower()).enabled]
        return "+".join(on) if on else "NOQEM"


@dataclass
class MitigatedEstimate:
    raw: float
    mitigated: float
    std_error: float
    method_breakdown: dict[str, Any] = field(default_factory=dict)
    flags: list[str] = field(default_factory=list)
    step: int | None = None
    time: float | None = None
    circuits_executed: int = 0

    def __post_init__(self) -> None:
        if not self.std_error >= 0:
            raise ValueError(f"std_error must be non-negative, got {self.std_error}")
