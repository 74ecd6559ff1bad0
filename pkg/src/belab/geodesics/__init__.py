"""Distances, geodesic segments, thin triangles and polar data along rays."""

from belab.geodesics.distance import (
    DistanceBatch,
    GeodesicPath,
    distance,
    distances_from,
    distances_with_bounds,
    geodesic,
    geodesics_from,
    metric_graph,
)
from belab.geodesics.flow import exp_map, trace_geodesic
from belab.geodesics.polar import (
    PolarData,
    line_integral_X,
    polar_ball_volumes,
    radial_polar_data,
    riccati_residual,
)
from belab.geodesics.triangle import TriangleConfig, busemann_standin, excess

__all__ = [
    "DistanceBatch",
    "GeodesicPath",
    "PolarData",
    "TriangleConfig",
    "busemann_standin",
    "distance",
    "distances_from",
    "distances_with_bounds",
    "excess",
    "exp_map",
    "geodesic",
    "geodesics_from",
    "line_integral_X",
    "metric_graph",
    "polar_ball_volumes",
    "radial_polar_data",
    "riccati_residual",
    "trace_geodesic",
]
