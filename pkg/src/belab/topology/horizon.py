"""Topology report for horizon cross-sections from the explicit bounds.

A hypotheses file is flat TOML::

    n = 3
    Lambda = 0.0
    kappa = 1.0
    lambda_chi = -0.25
    C = 0.5
    D = 2.0
    V = 1.0
    gradient_case = false
"""

from __future__ import annotations

import json
import logging
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import asdict, dataclass
from pathlib import Path

from rich.table import Table

from belab.errors import ConfigError
from belab.geometry.horizon import HORIZON_M
from belab.topology.bounds import betti_bound_B, default_C0, generator_bound_N

log = logging.getLogger(__name__)

NON_CONSTRUCTIVE = "non-constructive threshold; cited, not computed"
REAL_KEYS = ("Lambda", "kappa", "lambda_chi", "C", "D", "V")


@dataclass(frozen=True)
class HorizonHypotheses:
    n: int
    Lambda: float
    kappa: float
    lambda_chi: float
    C: float
    D: float
    V: float
    gradient_case: bool = False

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ConfigError(f"n must be at least 2, got {self.n}", key="n")
        if not self.D > 0:
            raise ConfigError(f"D must be positive, got {self.D}", key="D")
        if not self.V > 0:
            raise ConfigError(f"V must be positive, got {self.V}", key="V")
        if self.C < 0:
            raise ConfigError(f"C must be non-negative, got {self.C}", key="C")

    @property
    def effective_bound(self) -> float:
        """The constant in Ric_X^2 >= ((2/n) Lambda + 2 kappa lambda_chi) g."""
        return 2.0 * self.Lambda / self.n + 2.0 * self.kappa * self.lambda_chi

    @property
    def delta_effective(self) -> float:
        return max(0.0, -self.effective_bound) / (self.n - 1)


def load_horizon_hypotheses(path: str | Path) -> HorizonHypotheses:
    path = Path(path)
    source = str(path)
    try:
        doc = tomllib.loads(path.read_text())
    except FileNotFoundError as exc:
        raise ConfigError("file not found", source=source) from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(str(exc), source=source) from exc
    known = {"n", "gradient_case", *REAL_KEYS}
    unknown = sorted(set(doc) - known)
    if unknown:
        raise ConfigError(f"unknown keys {unknown}", key=unknown[0], source=source)
    missing = [k for k in ("n", *REAL_KEYS) if k not in doc]
    if missing:
        raise ConfigError(f"missing keys {missing}", key=missing[0], source=source)
    if not isinstance(doc["n"], int) or isinstance(doc["n"], bool):
        raise ConfigError("expected an integer", key="n", source=source)
    for key in REAL_KEYS:
        if isinstance(doc[key], bool) or not isinstance(doc[key], (int, float)):
            raise ConfigError("expected a number", key=key, source=source)
    if not isinstance(doc.get("gradient_case", False), bool):
        raise ConfigError("expected true or false", key="gradient_case", source=source)
    try:
        return HorizonHypotheses(
            n=doc["n"],
            gradient_case=doc.get("gradient_case", False),
            **{k: float(doc[k]) for k in REAL_KEYS},
        )
    except ConfigError as exc:
        raise ConfigError(exc.message, key=exc.key, source=source) from exc


@dataclass(frozen=True)
class HorizonReport:
    hypotheses: HorizonHypotheses
    kappa_lambda: float
    effective_bound: float
    delta_effective: float
    positive_bound: bool
    generator_bound: float
    C0: float
    betti_bound: int
    betti_ceiling: int
    statements: tuple[tuple[str, str], ...]

    def to_dict(self) -> dict:
        out = asdict(self)
        out["hypotheses"] = asdict(self.hypotheses)
        out["statements"] = [{"claim": claim, "status": status} for claim, status in self.statements]
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_table(self) -> Table:
        table = Table(title=f"Horizon cross-section, n = {self.hypotheses.n}", show_lines=False)
        table.add_column("Quantity", style="cyan")
        table.add_column("Value", justify="right")
        rows = [
            ("kappa * lambda_chi", f"{self.kappa_lambda:.6g}"),
            ("(2/n) Lambda + 2 kappa lambda_chi", f"{self.effective_bound:.6g}"),
            ("delta_effective", f"{self.delta_effective:.6g}"),
            ("positive Bakry-Emery bound", "yes" if self.positive_bound else "no"),
            ("generator bound N", f"{self.generator_bound:.6g}"),
            ("C0 = m log 2 + C", f"{self.C0:.6g}"),
            ("Betti bound B", str(self.betti_bound)),
            ("b1 ceiling", str(self.betti_ceiling)),
        ]
        for name, value in rows:
            table.add_row(name, value)
        for claim, status in self.statements:
            table.add_row(claim, f"[dim]{status}[/dim]")
        return table


def horizon_report(hyp: HorizonHypotheses, gradient_case: bool | None = None) -> HorizonReport:
    """Every computable quantity for the cross-section, with m = 2 and the cited conclusions flagged."""
    gradient = hyp.gradient_case if gradient_case is None else gradient_case
    m = HORIZON_M
    delta = hyp.delta_effective
    C0 = default_C0(m, hyp.C)
    positive = hyp.effective_bound > 0
    ceiling = hyp.n if gradient else hyp.n + 2

    statements = [
        ("single component, no connected-sum splitting", NON_CONSTRUCTIVE),
        ("fundamental group almost abelian", NON_CONSTRUCTIVE),
        (f"b1 <= {ceiling} once delta is below its threshold", NON_CONSTRUCTIVE),
    ]
    if positive:
        statements.append(("positive Bakry-Emery bound holds: pi_1 finite", "hypothesis holds; conclusion cited"))
    log.debug("horizon report: delta_effective %.6g, positive bound %s", delta, positive)
    return HorizonReport(
        hypotheses=hyp,
        kappa_lambda=hyp.kappa * hyp.lambda_chi,
        effective_bound=hyp.effective_bound,
        delta_effective=delta,
        positive_bound=positive,
        generator_bound=generator_bound_N(hyp.n, m, delta, hyp.C, hyp.D, hyp.V),
        C0=C0,
        betti_bound=betti_bound_B(hyp.n, m, delta, C0, hyp.D),
        betti_ceiling=ceiling,
        statements=tuple(statements),
    )
