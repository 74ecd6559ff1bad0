"""Parameter ladders and resolution rechecks over verification reports."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from belab.config import LADDER_MIN_DECREASE, LADDER_MIN_RUNGS, MESH_SPACING, REPORT_TOL
from belab.errors import DomainError
from belab.geodesics.triangle import TriangleConfig
from belab.geometry.catalog import perturbed_cylinder
from belab.geometry.manifold import ChartManifold
from belab.geometry.params import BakryEmeryParams
from belab.validation.report import VerificationReport

log = logging.getLogger(__name__)

LADDER_MARGIN = 5.0      # cylinder half length beyond L


@dataclass(frozen=True)
class LadderRung:
    """One (epsilon, delta, 1/L) step on the perturbed cylinder; delta follows from the amplitude."""
    L: float
    epsilon: float
    amplitude: float
    m: float = 1.0

    def manifold(self) -> ChartManifold:
        return perturbed_cylinder(self.amplitude, half_length=self.L + LADDER_MARGIN)

    def params(self, M: ChartManifold) -> BakryEmeryParams:
        return BakryEmeryParams(m=self.m, delta=float(M.parameters["delta"]))

    def triangle(self, M: ChartManifold) -> TriangleConfig:
        reach = self.L + 1.0
        return TriangleConfig.on(M, (0.0, 0.0), (reach, 0.0), (-reach, 0.0), self.L, self.epsilon)

    def build(self) -> tuple[ChartManifold, BakryEmeryParams, TriangleConfig]:
        M = self.manifold()
        return M, self.params(M), self.triangle(M)

    def to_dict(self) -> dict:
        return {"L": self.L, "epsilon": self.epsilon, "amplitude": self.amplitude, "m": self.m}


def perturbed_cylinder_ladder(L: float = 10.0, epsilon: float = 0.1, amplitude: float = 0.01,
                              rungs: int = LADDER_MIN_RUNGS) -> list[LadderRung]:
    """Rungs with L doubling while epsilon and the warp amplitude halve."""
    return [LadderRung(L=L * 2**k, epsilon=epsilon / 2**k, amplitude=amplitude / 2**k) for k in range(rungs)]


def tracked_value(report: VerificationReport) -> np.ndarray:
    return np.atleast_1d(np.asarray(report.lhs, dtype=float))


@dataclass
class LadderResult:
    """The trend report plus the report of every rung."""
    report: VerificationReport
    rungs: list[VerificationReport] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.report.passed

    def to_dict(self) -> dict:
        return {"trend": self.report.to_dict(), "rungs": [r.to_dict() for r in self.rungs]}

    def __str__(self) -> str:
        return str(self.report)


def run_ladder(check: Callable[[Any], VerificationReport], rungs: Sequence[Any], *,
               quantity: Callable[[VerificationReport], Any] = tracked_value,
               decrease: float = LADDER_MIN_DECREASE, name: str | None = None) -> LadderResult:
    """Run ``check`` on every rung and require value(k+1) <= (1 - decrease) value(k) componentwise."""
    if len(rungs) < LADDER_MIN_RUNGS:
        raise DomainError(f"a ladder needs at least {LADDER_MIN_RUNGS} rungs, got {len(rungs)}")
    reports = [check(rung) for rung in rungs]
    values = np.stack([np.atleast_1d(np.asarray(quantity(r), dtype=float)) for r in reports])
    lhs = values[1:]
    rhs = (1.0 - decrease) * values[:-1]
    check_name = f"{name or reports[0].check_name}-ladder"
    for k, row in enumerate(values):
        log.info("%s rung %d: %s", check_name, k, np.array2string(row, precision=4))
    ratios = np.divide(values[1:], values[:-1], out=np.zeros_like(lhs), where=values[:-1] != 0)
    report = VerificationReport(
        check_name=check_name,
        inputs={"rungs": [r.to_dict() if hasattr(r, "to_dict") else r for r in rungs], "decrease": decrease},
        lhs=lhs.squeeze(-1).tolist() if lhs.shape[1] == 1 else lhs.tolist(),
        rhs=rhs.squeeze(-1).tolist() if rhs.shape[1] == 1 else rhs.tolist(),
        margin=float(np.min(rhs - lhs)),
        resolution={"rungs": len(rungs), "rung_margins": [r.margin for r in reports]},
        notes=f"calibrated trend; rung-to-rung ratios {np.array2string(ratios, precision=3)}",
    )
    return LadderResult(report=report, rungs=reports)


def recheck_at_double_resolution(report_fn: Callable[[float], VerificationReport],
                                 spacing: float = MESH_SPACING) -> VerificationReport:
    """Rerun at half the spacing; the margin may move by at most three tolerances."""
    coarse = report_fn(spacing)
    fine = report_fn(0.5 * spacing)
    shift = abs(fine.margin - coarse.margin)
    allowed = 3.0 * max(coarse.tolerance, REPORT_TOL)
    if shift > allowed:
        log.warning("%s margin moved by %.3g between spacing %g and %g", coarse.check_name, shift, spacing,
                    0.5 * spacing)
    return VerificationReport(
        check_name=f"{coarse.check_name}-resolution",
        inputs={"spacing": spacing, "check": coarse.check_name},
        lhs=shift,
        rhs=allowed,
        margin=allowed - shift,
        resolution={"coarse": coarse.resolution, "fine": fine.resolution},
        notes=f"margins {coarse.margin:.6g} and {fine.margin:.6g}",
    )
