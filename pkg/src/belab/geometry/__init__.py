"""Chart manifolds with a 1-form field, their curvature tensors, catalog and horizon data."""

from belab.geometry.catalog import catalog_manifold
from belab.geometry.horizon import NearHorizonData, horizon_to_bakry_emery
from belab.geometry.manifold import ChartManifold
from belab.geometry.params import BakryEmeryParams
from belab.geometry.tensors import (
    bakry_emery_tensor,
    christoffel,
    curvature_bound_deficit,
    lie_derivative_metric,
    ricci,
)

__all__ = [
    "BakryEmeryParams",
    "ChartManifold",
    "NearHorizonData",
    "bakry_emery_tensor",
    "catalog_manifold",
    "christoffel",
    "curvature_bound_deficit",
    "horizon_to_bakry_emery",
    "lie_derivative_metric",
    "ricci",
]
