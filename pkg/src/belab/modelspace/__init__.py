"""Comparison model spaces: profiles, mean curvature, Green barrier, volumes and growth functions."""

from belab.modelspace.comparison import (
    GreenBarrier,
    ModelSpace,
    ell,
    ell_prime,
    green_barrier,
    model_ball_volume,
    model_mean_curvature,
    model_sphere_area,
)
from belab.modelspace.growth import bishop_gromov_ratio_bound, growth_function_h, hbar

__all__ = [
    "GreenBarrier",
    "ModelSpace",
    "bishop_gromov_ratio_bound",
    "ell",
    "ell_prime",
    "green_barrier",
    "growth_function_h",
    "hbar",
    "model_ball_volume",
    "model_mean_curvature",
    "model_sphere_area",
]
