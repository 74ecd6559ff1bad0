"""Curvature-bound parameters (m, delta, C) of Ric_X^m >= -(n-1) delta g."""

from __future__ import annotations

from dataclasses import asdict, dataclass

from belab.errors import ConfigError


@dataclass(frozen=True)
class BakryEmeryParams:
    m: float
    delta: float = 0.0
    C: float = 0.0

    def __post_init__(self) -> None:
        if not self.m > 0:
            raise ConfigError(f"m must be positive, got {self.m}", key="params.m")
        if self.delta < 0:
            raise ConfigError(f"delta must be non-negative, got {self.delta}", key="params.delta")
        if self.C < 0:
            raise ConfigError(f"C must be non-negative, got {self.C}", key="params.C")

    def to_dict(self) -> dict:
        return asdict(self)
