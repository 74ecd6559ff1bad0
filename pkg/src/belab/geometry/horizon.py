"""Near-horizon data (g, h, kappa, chi, Lambda) and the Bakry-Emery bound it induces with m = 2, X = -h."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np
import sympy as sp

from belab.config import DEFAULT_GRID_PER_AXIS
from belab.geometry.manifold import ChartManifold, lambdify_array
from belab.geometry.tensors import bakry_emery_tensor, relative_eigenvalues

HORIZON_M = 2.0


@dataclass(frozen=True, eq=False)
class NearHorizonData:
    """Cross-section data of a Killing horizon; ``h`` and ``chi`` are evaluated on chart points."""
    n: int
    Lambda: float
    kappa: float
    base: ChartManifold
    h: Callable[[np.ndarray], np.ndarray]
    chi: Callable[[np.ndarray], np.ndarray]
    h_jacobian: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self) -> None:
        if self.n != self.base.n:
            raise ValueError(f"horizon dimension {self.n} disagrees with base chart dimension {self.base.n}")


@dataclass(frozen=True, eq=False)
class HorizonPackage:
    """Output of horizon_to_bakry_emery."""
    manifold: ChartManifold
    m: float
    lambda_chi: float
    effective_bound: float

    def to_dict(self) -> dict:
        return {
            "manifold": self.manifold.name,
            "m": self.m,
            "lambda_chi": self.lambda_chi,
            "effective_bound": self.effective_bound,
        }


def near_horizon_data(
    base: ChartManifold,
    h: Sequence[str],
    chi: Sequence[Sequence[str]],
    Lambda: float,
    kappa: float,
) -> NearHorizonData:
    """Build NearHorizonData from expressions in the base chart's coordinate names."""
    coords = sp.symbols(list(base.coordinate_names), real=True)
    scope = {str(c): c for c in coords}
    n = base.n
    h_exprs = [sp.sympify(e, locals=scope) for e in h]
    chi_exprs = [[sp.sympify(e, locals=scope) for e in row] for row in chi]
    jac = [[sp.diff(h_exprs[j], coords[i]) for j in range(n)] for i in range(n)]
    return NearHorizonData(
        n=n,
        Lambda=Lambda,
        kappa=kappa,
        base=base,
        h=lambdify_array(coords, h_exprs, (n,)),
        chi=lambdify_array(coords, chi_exprs, (n, n)),
        h_jacobian=lambdify_array(coords, jac, (n, n)),
    )


def _with_drift(H: NearHorizonData) -> ChartManifold:
    def X_fn(points: np.ndarray) -> np.ndarray:
        return -H.h(points)

    X_jac = None
    if H.h_jacobian is not None:
        def X_jac(points: np.ndarray) -> np.ndarray:
            return -H.h_jacobian(points)

    return replace(H.base, name=f"{H.base.name}[X=-h]", X_fn=X_fn, X_jac_fn=X_jac)


def horizon_to_bakry_emery(H: NearHorizonData, grid: np.ndarray | None = None) -> HorizonPackage:
    """Manifold with X = -h and m = 2, plus kappa*lambda = inf min kappa chi(w, w) and (2/n)Lambda + 2 kappa*lambda."""
    manifold = _with_drift(H)
    pts = manifold.grid(DEFAULT_GRID_PER_AXIS) if grid is None else np.atleast_2d(grid)
    g = manifold.metric(pts)
    scaled = H.kappa * H.chi(pts)
    lambda_chi = float(np.min(relative_eigenvalues(scaled, g)))
    effective = 2.0 * H.Lambda / H.n + 2.0 * lambda_chi
    return HorizonPackage(manifold=manifold, m=HORIZON_M, lambda_chi=lambda_chi, effective_bound=effective)


def horizon_identity_residual(H: NearHorizonData, grid: np.ndarray | None = None) -> float:
    """max |Ric_X^2 - (2 Lambda / n) g - 2 kappa chi| over the grid, for data claimed to solve the horizon equations."""
    manifold = _with_drift(H)
    pts = manifold.grid(DEFAULT_GRID_PER_AXIS) if grid is None else np.atleast_2d(grid)
    lhs = bakry_emery_tensor(manifold, HORIZON_M, pts)
    rhs = 2.0 * H.Lambda / H.n * manifold.metric(pts) + 2.0 * H.kappa * H.chi(pts)
    return float(np.max(np.abs(lhs - rhs)))
