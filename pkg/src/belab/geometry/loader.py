"""Load user-defined chart manifolds from TOML descriptions.

A description names its coordinates and gives metric entries and X components as
arithmetic expressions in them::

    name = "bumpy-torus"
    coordinates = ["x", "y"]
    lower = [0.0, 0.0]
    upper = [6.283185307179586, 6.283185307179586]
    periodic = [true, true]
    metric = [["1", "0"], ["0", "(1 + a*sin(x))**2"]]
    X = ["b", "0"]

    [parameters]
    a = 0.1
    b = 0.25
"""

from __future__ import annotations

import logging
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path

import sympy as sp
from sympy.parsing.sympy_parser import parse_expr, standard_transformations

from belab.errors import ConfigError, SingularMetricError
from belab.geometry.catalog import catalog_manifold
from belab.geometry.manifold import ChartManifold, compile_chart

log = logging.getLogger(__name__)

REQUIRED_KEYS = ("coordinates", "lower", "upper", "periodic", "metric", "X")
OPTIONAL_KEYS = ("name", "dimension", "parameters", "derivative_mode", "fd_step", "sample_lower",
                 "sample_upper", "compact")


def _expression(text, symbols: dict[str, sp.Symbol], key: str, source: str) -> sp.Expr:
    if isinstance(text, (int, float)):
        return sp.Float(text)
    if not isinstance(text, str):
        raise ConfigError(f"expected an expression string, got {type(text).__name__}", key=key, source=source)
    try:
        expr = parse_expr(text, local_dict=dict(symbols), transformations=standard_transformations)
    except (SyntaxError, TypeError, ValueError, sp.SympifyError) as exc:
        raise ConfigError(f"cannot parse expression {text!r}: {exc}", key=key, source=source) from exc
    unknown = {str(s) for s in expr.free_symbols} - set(symbols)
    if unknown:
        raise ConfigError(f"expression {text!r} uses unknown names {sorted(unknown)}", key=key, source=source)
    return expr


def _vector(doc: dict, key: str, n: int, source: str, kind=float) -> tuple:
    value = doc.get(key)
    if not isinstance(value, list) or len(value) != n:
        raise ConfigError(f"expected a list of {n} entries", key=key, source=source)
    try:
        return tuple(kind(v) for v in value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad entry: {exc}", key=key, source=source) from exc


def manifold_from_dict(doc: dict, source: str = "<dict>") -> ChartManifold:
    """Build a ChartManifold from a parsed TOML document."""
    missing = [k for k in REQUIRED_KEYS if k not in doc]
    if missing:
        raise ConfigError(f"missing keys {missing}", key=missing[0], source=source)
    unknown = sorted(set(doc) - set(REQUIRED_KEYS) - set(OPTIONAL_KEYS))
    if unknown:
        raise ConfigError(f"unknown keys {unknown}", key=unknown[0], source=source)

    names = doc["coordinates"]
    if not isinstance(names, list) or not all(isinstance(s, str) for s in names):
        raise ConfigError("coordinates must be a list of names", key="coordinates", source=source)
    n = len(names)
    if "dimension" in doc and doc["dimension"] != n:
        raise ConfigError(f"dimension {doc['dimension']} disagrees with {n} coordinates", key="dimension",
                          source=source)
    coords = sp.symbols(names, real=True)
    symbols = {str(c): c for c in coords}
    params = doc.get("parameters", {})
    if not isinstance(params, dict):
        raise ConfigError("parameters must be a table", key="parameters", source=source)
    for pname, pvalue in params.items():
        if pname in symbols:
            raise ConfigError(f"parameter '{pname}' shadows a coordinate", key=f"parameters.{pname}", source=source)
        if not isinstance(pvalue, (int, float)):
            raise ConfigError("parameters must be numbers", key=f"parameters.{pname}", source=source)
    scope = {**symbols, **{k: sp.Float(v) for k, v in params.items()}}

    rows = doc["metric"]
    if not isinstance(rows, list) or len(rows) != n or any(not isinstance(r, list) or len(r) != n for r in rows):
        raise ConfigError(f"metric must be a {n}x{n} array of expressions", key="metric", source=source)
    metric = sp.Matrix(
        [[_expression(rows[i][j], scope, f"metric[{i}][{j}]", source) for j in range(n)] for i in range(n)]
    )
    if metric != metric.T:
        raise ConfigError("metric must be symmetric", key="metric", source=source)
    X_raw = doc["X"]
    if not isinstance(X_raw, list) or len(X_raw) != n:
        raise ConfigError(f"X must have {n} components", key="X", source=source)
    X = [_expression(X_raw[i], scope, f"X[{i}]", source) for i in range(n)]

    lower = _vector(doc, "lower", n, source)
    upper = _vector(doc, "upper", n, source)
    periodic = _vector(doc, "periodic", n, source, kind=bool)
    optional = {}
    for key in ("sample_lower", "sample_upper", "fd_step"):
        if key in doc:
            optional[key] = _vector(doc, key, n, source)
    mode = doc.get("derivative_mode", "closed-form")
    if mode not in ("closed-form", "finite-difference"):
        raise ConfigError(f"unknown derivative mode {mode!r}", key="derivative_mode", source=source)

    try:
        manifold = compile_chart(
            str(doc.get("name", Path(source).stem)),
            coords,
            metric,
            X,
            lower=lower,
            upper=upper,
            periodic=periodic,
            derivative_mode=mode,
            compact=bool(doc.get("compact", all(periodic))),
            parameters=dict(params),
            **optional,
        )
        manifold.validate()
    except SingularMetricError as exc:
        raise ConfigError(str(exc), key="metric", source=source) from exc
    except ValueError as exc:
        raise ConfigError(str(exc), source=source) from exc
    log.info("loaded manifold %s from %s", manifold.name, source)
    return manifold


def load_manifold(path: str | Path) -> ChartManifold:
    """Parse a TOML manifold description; syntax errors carry the parser's line and column."""
    path = Path(path)
    try:
        doc = tomllib.loads(path.read_text())
    except FileNotFoundError as exc:
        raise ConfigError("file not found", source=str(path)) from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"TOML syntax error: {exc}", source=str(path)) from exc
    return manifold_from_dict(doc, source=str(path))


def resolve_manifold(name: str, **params) -> ChartManifold:
    """A catalog name or a path to a TOML description."""
    if name.endswith(".toml") or Path(name).is_file():
        return load_manifold(name)
    return catalog_manifold(name, **params)
