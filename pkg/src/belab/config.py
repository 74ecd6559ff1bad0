"""Tolerances, default resolutions, catalog and suite names, and shared configuration."""

from pathlib import Path

# ── Paths ────────────────────────────────────────────────────────────────────
PROJECT_ROOT = Path(__file__).resolve().parents[2]
DEFAULT_OUTPUT_DIR = Path("belab-out")
MANIFEST_NAME = "manifest.json"

# ── Environment ──────────────────────────────────────────────────────────────
SEED_ENV_VAR = "BELAB_SEED"
DEFAULT_SEED = 20240611

# ── Model space ──────────────────────────────────────────────────────────────
GREEN_CUTOFF_FRACTION = 1e-4     # backward G_r integration stops at this fraction of r
GREEN_RTOL = 1e-12
GREEN_ATOL = 1e-14
HBAR_SERIES_CUTOFF = 1e-2        # below this t, hbar uses its Taylor series
QUAD_EPSREL = 1e-12
QUAD_LIMIT = 400

# ── Geometry ─────────────────────────────────────────────────────────────────
FD_STEP_FRACTION = 1e-4          # finite-difference step as a fraction of chart extent
POLAR_CAP = 1e-2                 # angular radius of the sphere caps avoided by sampling
SEAM_SWITCH = 0.35               # a ray hops charts once it is this close to a chart pole
PERIODIC_FACE_TOL = 1e-12
DEFAULT_GRID_PER_AXIS = 9

CATALOG_NAMES = (
    "flat-torus",
    "round-sphere",
    "cylinder",
    "s1xs2",
    "warped-product",
    "perturbed-cylinder",
)

# ── Geodesics ────────────────────────────────────────────────────────────────
LATTICE_CELLS = 48               # default lattice cells along each axis for the Dijkstra seed
LATTICE_MAX_SPACING = 0.25       # upper bound on lattice spacing along long axes
LATTICE_MAX_NODES = 60_000
FLOW_STEP = 0.02                 # RK4 arc-length step of the geodesic flow
SHOOT_TOL = 1e-9                 # endpoint residual target of the shooting refinement
SHOOT_MAX_ITER = 30
CUT_SLACK = 0.005                # ray truncated once rho exceeds graph distance by 0.5%
DISTANCE_TOL = 1e-6

# ── Mesh PDE ─────────────────────────────────────────────────────────────────
MESH_SPACING = 0.1
LINEAR_RESIDUAL_TOL = 1e-10
KERNEL_RESIDUAL_TOL = 1e-8
EQUATION_RESIDUAL_TOL = 1e-2      # relative mismatch allowed in Delta_X u = a F(u) on sampled fields
LAPLACIAN_BOUND_TOL = 1e-6

# ── Verification ─────────────────────────────────────────────────────────────
REPORT_TOL = 1e-6
LADDER_MIN_DECREASE = 0.10       # each ladder rung must shrink the tracked quantity by 10%
LADDER_MIN_RUNGS = 3
MC_CONFIDENCE_Z = 2.5758293035489004   # two-sided 99% normal quantile
DEFAULT_RAYS = 64
DEFAULT_SEGMENT_PAIRS = 10_000
SEGMENT_PATH_SAMPLES = 33
SPLIT_SAMPLE_POINTS = 24

# ── Calibrated thresholds (golden values on the catalog families, not derived) ──
HESSIAN_THRESHOLD_SCALE = 1.0    # each Hessian quantity against scale * r^2 / L
PYTHAGORAS_THRESHOLD = 0.05
PROJECTION_THRESHOLD = 0.05
SPLIT_DISTORTION_CELLS = 2.0     # exact-product distortion allowance, in mesh cells

# ── Topology ─────────────────────────────────────────────────────────────────
ENUMERATION_BUDGET = 2_000_000
BETTI_MAX_R = 64

# ── Runner ───────────────────────────────────────────────────────────────────
SUITES = {
    "comparison": ("mean-curvature", "mean-curvature-difference", "area-volume"),
    "excess": ("abresch-gromoll",),
    "hessian": ("hessian-estimates",),
    "segment": ("segment-inequality",),
    "splitting": ("pythagoras-defect", "almost-split", "projection-smallness"),
    "topology": ("growth-count", "volume-estimate"),
    "appendix": ("cheng-yau",),
}
SUITES["all"] = tuple(name for suite in list(SUITES.values()) for name in suite)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG_ERROR = 2
EXIT_HYPOTHESIS_VIOLATION = 3
EXIT_SOLVER_FAILURE = 4

CSV_SIGNIFICANT_DIGITS = 17
TABLE_SAMPLES = 100
