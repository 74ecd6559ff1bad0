"""Mesh fields, the drift Laplacian, Dirichlet and kernel solves, and the PDE estimates."""

from belab.pde.eigen import PrincipalEigenfunction, flux_defect, principal_eigenfunction
from belab.pde.estimates import (
    LINEAR,
    ZERO,
    Nonlinearity,
    cheng_yau_check,
    cheng_yau_constant,
    eigenfunction_cheng_yau_check,
    quantitative_max_principle_check,
)
from belab.pde.harmonic import (
    CutoffProfile,
    HarmonicReplacement,
    cutoff_profile,
    hessian_quantities,
    replacement_pair,
    x_harmonic_replacement,
)
from belab.pde.mesh import BallMesh, MeshField, MeshGrid, ball_mesh, box_grid, patch_grid
from belab.pde.operators import bochner_residual, drift_laplacian

__all__ = [
    "LINEAR",
    "ZERO",
    "BallMesh",
    "CutoffProfile",
    "HarmonicReplacement",
    "MeshField",
    "MeshGrid",
    "Nonlinearity",
    "PrincipalEigenfunction",
    "ball_mesh",
    "bochner_residual",
    "box_grid",
    "cheng_yau_check",
    "cheng_yau_constant",
    "cutoff_profile",
    "drift_laplacian",
    "eigenfunction_cheng_yau_check",
    "flux_defect",
    "hessian_quantities",
    "patch_grid",
    "principal_eigenfunction",
    "quantitative_max_principle_check",
    "replacement_pair",
    "x_harmonic_replacement",
]
