"""Run configuration: a TOML file parsed into RunConfig.

Example::

    scenario = "splitting"
    manifold = "cylinder"
    seed = 7
    output_dir = "belab-out/cylinder"

    [manifold_parameters]
    half_length = 120.0

    [params]
    m = 1.0

    [triangle]
    q_plus = [100.0, 0.0]
    q_minus = [-100.0, 0.0]
    L = 99.0
    epsilon = 0.01
    r = 2.0

Every section other than ``params`` is optional and falls back to its defaults.
"""

from __future__ import annotations

import logging
import os
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

from belab.config import (
    DEFAULT_OUTPUT_DIR,
    DEFAULT_RAYS,
    DEFAULT_SEED,
    DEFAULT_SEGMENT_PAIRS,
    LADDER_MIN_RUNGS,
    MESH_SPACING,
    SEED_ENV_VAR,
    SPLIT_SAMPLE_POINTS,
    SUITES,
)
from belab.errors import ConfigError
from belab.geometry.params import BakryEmeryParams

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Resolution:
    spacing: float = MESH_SPACING
    rays: int = DEFAULT_RAYS
    steps: int = 400
    double_check: bool = False


@dataclass(frozen=True)
class ComparisonSettings:
    p: list = field(default_factory=lambda: [0.5, 0.5])
    rho_max: float = 1.0
    rho_count: int = 50


@dataclass(frozen=True)
class TriangleSettings:
    p: list = field(default_factory=lambda: [0.0, 0.0])
    q_plus: list = field(default_factory=lambda: [100.0, 0.0])
    q_minus: list = field(default_factory=lambda: [-100.0, 0.0])
    L: float = 99.0
    epsilon: float = 0.01
    r: float = 2.0
    samples: int = 64
    triples: int = 8
    split_samples: int = SPLIT_SAMPLE_POINTS


@dataclass(frozen=True)
class SegmentSettings:
    p: list = field(default_factory=lambda: [3.0, 3.0])
    r: float = 0.5
    f: str = "one"
    bump_center: list = field(default_factory=lambda: [3.0, 3.0])
    bump_width: float = 0.5
    bump_height: float = 1.0
    trials: int = DEFAULT_SEGMENT_PAIRS


@dataclass(frozen=True)
class LadderSettings:
    L: float = 10.0
    epsilon: float = 0.1
    amplitude: float = 0.01
    rungs: int = LADDER_MIN_RUNGS
    r: float = 2.0


@dataclass(frozen=True)
class TopologySettings:
    lattice_rank: int = 2
    generators: list = field(default_factory=lambda: [[1, 0], [0, 1]])
    s_max: int = 20
    degree_bound: float | None = None
    p: list = field(default_factory=lambda: [0.0, 0.0])
    radii: list = field(default_factory=lambda: [0.5, 1.0, 2.0, 4.0])


@dataclass(frozen=True)
class AppendixSettings:
    p: list = field(default_factory=lambda: [3.0, 3.0])
    r1: float = 0.5
    r2: float = 1.0


SECTIONS = {
    "resolution": Resolution,
    "comparison": ComparisonSettings,
    "triangle": TriangleSettings,
    "segment": SegmentSettings,
    "ladder": LadderSettings,
    "topology": TopologySettings,
    "appendix": AppendixSettings,
}
TOP_KEYS = {"scenario", "manifold", "seed", "output_dir", "manifold_parameters", "params", *SECTIONS}


@dataclass(frozen=True)
class RunConfig:
    scenario: str
    manifold: str
    params: BakryEmeryParams
    seed: int = DEFAULT_SEED
    output_dir: Path = DEFAULT_OUTPUT_DIR
    manifold_parameters: dict = field(default_factory=dict)
    resolution: Resolution = field(default_factory=Resolution)
    comparison: ComparisonSettings = field(default_factory=ComparisonSettings)
    triangle: TriangleSettings = field(default_factory=TriangleSettings)
    segment: SegmentSettings = field(default_factory=SegmentSettings)
    ladder: LadderSettings | None = None
    topology: TopologySettings = field(default_factory=TopologySettings)
    appendix: AppendixSettings = field(default_factory=AppendixSettings)
    source: str = "<dict>"

    @property
    def checks(self) -> tuple[str, ...]:
        """The scenario as a tuple of check names."""
        return SUITES.get(self.scenario, (self.scenario,))


def _expect(value: Any, kind: type, key: str, source: str) -> Any:
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    if kind is bool and not isinstance(value, bool) or kind is not bool and isinstance(value, bool):
        raise ConfigError(f"expected {kind.__name__}, got {type(value).__name__}", key=key, source=source)
    if not isinstance(value, kind):
        raise ConfigError(f"expected {kind.__name__}, got {type(value).__name__}", key=key, source=source)
    return value


_KINDS = {"float": float, "int": int, "str": str, "bool": bool, "list": list, "float | None": float}


def _section(doc: dict, cls: type, name: str, source: str):
    """Build a settings dataclass from a TOML table, rejecting unknown keys and wrong types."""
    table = doc.get(name, {})
    if not isinstance(table, dict):
        raise ConfigError("expected a table", key=name, source=source)
    known = {f.name: f for f in fields(cls)}
    unknown = sorted(set(table) - set(known))
    if unknown:
        raise ConfigError(f"unknown keys {unknown}", key=f"{name}.{unknown[0]}", source=source)
    values = {}
    for key, value in table.items():
        values[key] = _expect(value, _KINDS[str(known[key].type)], f"{name}.{key}", source)
    return cls(**values)


def config_from_dict(doc: dict, source: str = "<dict>", base: Path | None = None) -> RunConfig:
    """Validate a parsed TOML document; ``base`` resolves a relative manifold file path."""
    unknown = sorted(set(doc) - TOP_KEYS)
    if unknown:
        raise ConfigError(f"unknown keys {unknown}", key=unknown[0], source=source)
    for key in ("scenario", "manifold", "params"):
        if key not in doc:
            raise ConfigError("missing required key", key=key, source=source)
    scenario = _expect(doc["scenario"], str, "scenario", source)
    known_checks = set(SUITES["all"]) | set(SUITES)
    if scenario not in known_checks:
        raise ConfigError(f"unknown scenario '{scenario}'; see --list-suites", key="scenario", source=source)

    manifold = _expect(doc["manifold"], str, "manifold", source)
    if manifold.endswith(".toml") and base is not None and not Path(manifold).is_absolute():
        manifold = str(base / manifold)

    params = doc["params"]
    if not isinstance(params, dict) or "m" not in params:
        raise ConfigError("params needs at least m", key="params.m", source=source)
    extra = sorted(set(params) - {"m", "delta", "C"})
    if extra:
        raise ConfigError(f"unknown keys {extra}", key=f"params.{extra[0]}", source=source)
    try:
        bakry_emery = BakryEmeryParams(**{k: _expect(v, float, f"params.{k}", source) for k, v in params.items()})
    except ConfigError as exc:
        raise ConfigError(exc.message, key=exc.key, source=source) from exc

    output_dir = Path(_expect(doc.get("output_dir", str(DEFAULT_OUTPUT_DIR)), str, "output_dir", source))
    manifold_parameters = doc.get("manifold_parameters", {})
    if not isinstance(manifold_parameters, dict):
        raise ConfigError("expected a table", key="manifold_parameters", source=source)

    sections = {name: _section(doc, cls, name, source) for name, cls in SECTIONS.items() if name != "ladder"}
    ladder = _section(doc, LadderSettings, "ladder", source) if "ladder" in doc else None
    if ladder is not None and ladder.rungs < LADDER_MIN_RUNGS:
        raise ConfigError(f"a ladder needs at least {LADDER_MIN_RUNGS} rungs", key="ladder.rungs", source=source)
    return RunConfig(
        scenario=scenario,
        manifold=manifold,
        params=bakry_emery,
        seed=_expect(doc.get("seed", DEFAULT_SEED), int, "seed", source),
        output_dir=output_dir,
        manifold_parameters=dict(manifold_parameters),
        ladder=ladder,
        source=source,
        **sections,
    )


def load_config(path: str | Path) -> RunConfig:
    """Parse and validate a run configuration file."""
    path = Path(path)
    source = str(path)
    try:
        doc = tomllib.loads(path.read_text())
    except FileNotFoundError as exc:
        raise ConfigError("file not found", source=source) from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"TOML syntax error: {exc}", source=source) from exc
    return config_from_dict(doc, source, base=path.parent)


def resolve_seed(config: RunConfig) -> int:
    """The config seed unless BELAB_SEED overrides it."""
    raw = os.environ.get(SEED_ENV_VAR)
    if raw is None or raw == "":
        return config.seed
    try:
        seed = int(raw)
    except ValueError as exc:
        raise ConfigError(f"expected an integer, got {raw!r}", key=SEED_ENV_VAR, source="environment") from exc
    if seed != config.seed:
        log.info("seed %d from %s overrides config seed %d", seed, SEED_ENV_VAR, config.seed)
    return seed
