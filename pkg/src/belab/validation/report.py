"""Verification reports: one theorem check with both sides, margin and resolution."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from belab.config import REPORT_TOL
from belab.errors import DomainError


class Verdict(str, Enum):
    PASS = "pass"
    FAIL = "fail"

    @property
    def emoji(self) -> str:
        return {"pass": "✅", "fail": "❌"}[self.value]


def _plain(value):
    """JSON-friendly copy of numpy scalars and arrays."""
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, (np.floating, float)):
        value = float(value)
        if np.isnan(value) or np.isinf(value):
            return str(value)
        return value
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


@dataclass
class VerificationReport:
    """Result of one check; ``passed`` holds exactly when margin >= -tolerance."""
    check_name: str
    inputs: dict
    lhs: float | list
    rhs: float | list
    margin: float
    tolerance: float = REPORT_TOL
    resolution: dict = field(default_factory=dict)
    notes: str = ""

    def __post_init__(self) -> None:
        self.margin = float(self.margin)

    @property
    def passed(self) -> bool:
        return bool(self.margin >= -self.tolerance)

    @property
    def verdict(self) -> Verdict:
        return Verdict.PASS if self.passed else Verdict.FAIL

    def to_dict(self) -> dict:
        return {
            "check_name": self.check_name,
            "inputs": _plain(self.inputs),
            "lhs": _plain(self.lhs),
            "rhs": _plain(self.rhs),
            "margin": _plain(self.margin),
            "tolerance": self.tolerance,
            "passed": self.passed,
            "resolution": _plain(self.resolution),
            "notes": self.notes,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def __str__(self) -> str:
        return f"{self.verdict.emoji} {self.check_name:<28} margin {self.margin:+.3e} (tol {self.tolerance:.0e})"


def report_from_samples(check_name: str, inputs: dict, lhs: np.ndarray, rhs: np.ndarray, *,
                        tolerance: float = REPORT_TOL, resolution: dict | None = None,
                        notes: str = "") -> VerificationReport:
    """Report for a sampled inequality lhs <= rhs; margin is the smallest rhs - lhs."""
    lhs = np.asarray(lhs, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    if lhs.size == 0:
        raise ValueError(f"{check_name}: no samples to compare")
    if not (np.all(np.isfinite(lhs)) and np.all(np.isfinite(rhs))):
        bad = int(np.count_nonzero(~np.isfinite(lhs)) + np.count_nonzero(~np.isfinite(rhs)))
        raise DomainError(f"{check_name}: {bad} non-finite sample values")
    gap = rhs - lhs
    worst = int(np.argmin(gap))
    return VerificationReport(
        check_name=check_name,
        inputs=inputs,
        lhs=float(lhs.ravel()[worst]),
        rhs=float(rhs.ravel()[worst]),
        margin=float(gap.ravel()[worst]),
        tolerance=tolerance,
        resolution=resolution or {},
        notes=notes,
    )
