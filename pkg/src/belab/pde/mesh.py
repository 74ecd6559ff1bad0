"""Structured lattices over chart regions and the scalar fields that live on them."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property
from itertools import product
from pathlib import Path
from typing import Callable

import numpy as np
import pandas as pd

from belab.config import CSV_SIGNIFICANT_DIGITS, MESH_SPACING
from belab.errors import PreconditionError
from belab.geodesics.distance import distances_from
from belab.geometry.manifold import ChartManifold

log = logging.getLogger(__name__)

BALL_WIDTH_SAFETY = 1.25


@dataclass(frozen=True, eq=False)
class MeshGrid:
    """Tensor lattice origin + i * spacing; axes flagged in ``wraps`` close up periodically."""
    manifold: ChartManifold
    origin: np.ndarray
    spacing: np.ndarray
    shape: tuple[int, ...]
    wraps: tuple[bool, ...]

    def __post_init__(self) -> None:
        if np.any(np.asarray(self.spacing) <= 0):
            raise ValueError(f"mesh spacing must be positive, got {self.spacing}")
        if any(c < 3 for c in self.shape):
            raise ValueError(f"mesh needs at least three nodes per axis, got {self.shape}")

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @cached_property
    def indices(self) -> np.ndarray:
        return np.stack(np.unravel_index(np.arange(self.size), self.shape), axis=-1)

    @cached_property
    def points(self) -> np.ndarray:
        return self.origin + self.indices * self.spacing

    @cached_property
    def weights(self) -> np.ndarray:
        """Riemannian volume per node, sqrt|g| times the cell volume."""
        return self.manifold.volume_density(self.points) * self.cell_volume

    def neighbor(self, offset) -> np.ndarray:
        """Index of node + offset for every node, or -1 where it leaves the lattice."""
        target = self.indices + np.asarray(offset, dtype=int)
        valid = np.ones(self.size, dtype=bool)
        for k, count in enumerate(self.shape):
            if self.wraps[k]:
                target[:, k] = np.mod(target[:, k], count)
            else:
                valid &= (target[:, k] >= 0) & (target[:, k] < count)
        out = np.full(self.size, -1)
        out[valid] = np.ravel_multi_index(tuple(target[valid].T), self.shape)
        return out

    @cached_property
    def full_stencil(self) -> np.ndarray:
        """Nodes whose every neighbor in {-1, 0, 1}^n exists."""
        ok = np.ones(self.size, dtype=bool)
        for offset in product((-1, 0, 1), repeat=self.manifold.n):
            if any(offset):
                ok &= self.neighbor(offset) >= 0
        return ok

    def nearest(self, point) -> int:
        """Node closest in coordinates to ``point``."""
        delta = self.manifold.difference(self.points, np.asarray(point, dtype=float))
        return int(np.argmin(np.sum((delta / self.spacing) ** 2, axis=1)))


def box_grid(M: ChartManifold, spacing: float = MESH_SPACING) -> MeshGrid:
    """Lattice over the whole sampling box; periodic axes wrap."""
    lo, hi = M.sampling_box
    extent = hi - lo
    cells = np.maximum(3, np.rint(extent / spacing)).astype(int)
    counts = np.where(M.periodic_mask, cells, cells + 1)
    return MeshGrid(
        manifold=M,
        origin=lo.copy(),
        spacing=extent / cells,
        shape=tuple(int(c) for c in counts),
        wraps=tuple(bool(p) for p in M.periodic),
    )


def patch_grid(M: ChartManifold, center, half_width, spacing: float = MESH_SPACING) -> MeshGrid:
    """Lattice centred on ``center`` reaching ``half_width`` along each axis.

    A periodic axis narrower than the patch is covered completely and wraps.
    """
    center = np.asarray(center, dtype=float)
    half_width = np.broadcast_to(np.asarray(half_width, dtype=float), (M.n,))
    extent = M.extent
    origin = np.empty(M.n)
    step = np.empty(M.n)
    shape, wraps = [], []
    for k in range(M.n):
        if M.periodic[k] and 2 * half_width[k] >= extent[k]:
            cells = max(3, int(round(extent[k] / spacing)))
            origin[k], step[k] = M.lower[k], extent[k] / cells
            shape.append(cells)
            wraps.append(True)
            continue
        cells = max(2, int(np.ceil(half_width[k] / spacing)))
        origin[k], step[k] = center[k] - cells * spacing, spacing
        if not M.periodic[k] and (origin[k] < M.lower[k] or center[k] + cells * spacing > M.upper[k]):
            raise PreconditionError(
                "ball within chart coverage", detail=f"axis {k} patch leaves [{M.lower[k]}, {M.upper[k]}]"
            )
        shape.append(2 * cells + 1)
        wraps.append(False)
    return MeshGrid(manifold=M, origin=origin, spacing=step, shape=tuple(shape), wraps=tuple(wraps))


@dataclass(frozen=True, eq=False)
class MeshField:
    """Scalar values per lattice node; ``domain_mask`` marks the nodes that carry data."""
    grid: MeshGrid
    values: np.ndarray
    boundary_mask: np.ndarray
    domain_mask: np.ndarray | None = None
    name: str = "u"

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.size,):
            raise ValueError(f"{self.name}: expected {self.grid.size} values, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError(f"{self.name}: values must be finite at every node")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "boundary_mask", np.asarray(self.boundary_mask, dtype=bool))
        if self.domain_mask is not None:
            object.__setattr__(self, "domain_mask", np.asarray(self.domain_mask, dtype=bool))

    @classmethod
    def from_function(cls, grid: MeshGrid, fn: Callable[[np.ndarray], np.ndarray],
                      boundary_mask: np.ndarray | None = None, name: str = "u") -> MeshField:
        boundary = ~grid.full_stencil if boundary_mask is None else boundary_mask
        return cls(grid=grid, values=np.asarray(fn(grid.points), dtype=float), boundary_mask=boundary, name=name)

    @property
    def domain(self) -> np.ndarray:
        return np.ones(self.grid.size, dtype=bool) if self.domain_mask is None else self.domain_mask

    def with_values(self, values: np.ndarray, name: str | None = None) -> MeshField:
        return MeshField(self.grid, values, self.boundary_mask, self.domain_mask, name or self.name)

    def sample(self, points) -> np.ndarray:
        """Multilinear interpolation at chart points; NaN off the lattice or outside the domain."""
        grid = self.grid
        M = grid.manifold
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        middle = 0.5 * (np.asarray(grid.shape) - 1)
        centre = grid.origin + middle * grid.spacing
        rel = M.difference(pts, np.broadcast_to(centre, pts.shape)) / grid.spacing + middle
        base = np.floor(rel).astype(int)
        frac = rel - base
        domain = self.domain
        out = np.zeros(len(pts))
        valid = np.ones(len(pts), dtype=bool)
        for corner in product((0, 1), repeat=M.n):
            idx = base + np.asarray(corner)
            weight = np.prod(np.where(np.asarray(corner, dtype=bool), frac, 1.0 - frac), axis=1)
            for k, count in enumerate(grid.shape):
                if grid.wraps[k]:
                    idx[:, k] = np.mod(idx[:, k], count)
                else:
                    valid &= (idx[:, k] >= 0) & (idx[:, k] < count) | (weight == 0)
                    idx[:, k] = np.clip(idx[:, k], 0, count - 1)
            flat = np.ravel_multi_index(tuple(idx.T), grid.shape)
            valid &= domain[flat] | (weight == 0)
            out += weight * self.values[flat]
        return np.where(valid, out, np.nan)

    def to_frame(self) -> pd.DataFrame:
        names = self.grid.manifold.coordinate_names or tuple(f"x{k}" for k in range(self.grid.manifold.n))
        df = pd.DataFrame(self.grid.points, columns=list(names))
        df[self.name] = self.values
        df["boundary"] = self.boundary_mask
        if self.domain_mask is not None:
            df = df[self.domain_mask].reset_index(drop=True)
        return df

    def to_csv(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, index=False, float_format=f"%.{CSV_SIGNIFICANT_DIGITS}g")
        log.info("wrote %s (%d nodes) to %s", self.name, len(self.values), path)
        return path


@dataclass(frozen=True, eq=False)
class BallMesh:
    """A lattice around B_r(center): interior nodes (rho < r) and the Dirichlet band around them."""
    grid: MeshGrid
    center: np.ndarray
    radius: float
    rho: np.ndarray
    interior: np.ndarray
    band: np.ndarray

    @property
    def domain(self) -> np.ndarray:
        return self.interior | self.band

    @property
    def spacing(self) -> float:
        return float(np.max(self.grid.spacing))

    def to_dict(self) -> dict:
        return {
            "radius": self.radius,
            "spacing": self.grid.spacing.tolist(),
            "shape": list(self.grid.shape),
            "interior_nodes": int(self.interior.sum()),
            "band_nodes": int(self.band.sum()),
        }


def ball_masks(M: ChartManifold, grid: MeshGrid, center: np.ndarray, radius: float):
    """(rho, interior, band) of B_radius(center) on a lattice; the band is every lattice
    neighbor of the interior that is not interior itself."""
    spacing = float(np.max(grid.spacing))
    rho = distances_from(M, center, grid.points, refine_below=BALL_WIDTH_SAFETY * radius + 4.0 * spacing)
    inside = rho < radius
    band = np.zeros(grid.size, dtype=bool)
    for offset in product((-1, 0, 1), repeat=M.n):
        if not any(offset):
            continue
        nb = grid.neighbor(offset)
        missing = inside & (nb < 0)
        if missing.any():
            raise PreconditionError("ball within chart coverage", detail="ball reaches the edge of its mesh patch")
        band[nb[inside]] = True
    band &= ~inside
    return rho, inside, band


def ball_mesh(M: ChartManifold, center, radius: float, spacing: float = MESH_SPACING) -> BallMesh:
    """Lattice covering B_radius(center) with its one-cell Dirichlet band."""
    if radius <= 0:
        raise ValueError(f"ball radius must be positive, got {radius}")
    center = M.wrap(np.asarray(center, dtype=float))
    ginv = M.inverse_metric(center[None])[0]
    reach = BALL_WIDTH_SAFETY * radius * np.sqrt(np.diag(ginv)) + 2.0 * spacing
    grid = patch_grid(M, center, reach, spacing)
    rho, inside, band = ball_masks(M, grid, center, radius)
    log.debug("ball mesh r=%.3g on %s: %d interior, %d band nodes", radius, M.name, inside.sum(), band.sum())
    return BallMesh(grid=grid, center=center, radius=float(radius), rho=rho, interior=inside, band=band)
