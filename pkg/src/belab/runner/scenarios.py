"""Registry of runnable checks: each name maps to a function of the run context."""

from __future__ import annotations

import threading
import zlib
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from belab.config import SUITES
from belab.errors import ConfigError
from belab.geodesics.triangle import TriangleConfig
from belab.geometry.loader import resolve_manifold
from belab.geometry.manifold import ChartManifold
from belab.pde.eigen import principal_eigenfunction
from belab.pde.estimates import eigenfunction_cheng_yau_check
from belab.pde.harmonic import HarmonicReplacement, x_harmonic_replacement
from belab.pde.mesh import MeshField, box_grid, patch_grid
from belab.runner.settings import RunConfig
from belab.topology.growth import growth_count_check
from belab.topology.volume import check_volume_estimate
from belab.validation.comparison import (
    check_area_volume_comparison,
    check_mean_curvature_comparison,
    check_mean_curvature_difference,
)
from belab.validation.excess import check_abresch_gromoll
from belab.validation.hessian import check_hessian_estimates
from belab.validation.ladder import LadderRung, perturbed_cylinder_ladder, run_ladder
from belab.validation.report import VerificationReport
from belab.validation.segment import check_segment_inequality
from belab.validation.splitting import check_almost_splitting, check_projection_smallness, check_pythagoras_defect


@dataclass
class RunContext:
    """Everything a check needs: the config, its manifold, the seed and the mesh spacing in force."""
    config: RunConfig
    manifold: ChartManifold
    seed: int
    spacing: float
    _cache: dict = field(default_factory=dict, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    @classmethod
    def from_config(cls, config: RunConfig, seed: int) -> RunContext:
        M = resolve_manifold(config.manifold, **config.manifold_parameters)
        return cls(config=config, manifold=M, seed=seed, spacing=config.resolution.spacing)

    def rng(self, check_name: str) -> np.random.Generator:
        """A generator owned by one check, so results do not depend on scheduling."""
        return np.random.default_rng([self.seed, zlib.crc32(check_name.encode())])

    def at_spacing(self, spacing: float) -> RunContext:
        return replace(self, spacing=spacing, _cache={}, _lock=threading.Lock())

    def triangle(self) -> TriangleConfig:
        tri = self.config.triangle
        return self._cached("triangle", lambda: TriangleConfig.on(
            self.manifold, tri.p, tri.q_plus, tri.q_minus, tri.L, tri.epsilon))

    def h_plus(self) -> HarmonicReplacement:
        """h+ on B_r(p) of the configured triangle, solved once per context."""
        T = self.triangle()
        r = self.config.triangle.r
        return self._cached("h_plus", lambda: x_harmonic_replacement(self.manifold, T, 1, T.p, r, self.spacing))

    def _cached(self, key: str, build: Callable):
        with self._lock:
            if key not in self._cache:
                self._cache[key] = build()
            return self._cache[key]

    def ladder_rungs(self) -> list[LadderRung]:
        lad = self.config.ladder
        return perturbed_cylinder_ladder(lad.L, lad.epsilon, lad.amplitude, lad.rungs)


@dataclass(frozen=True)
class Check:
    """A registered check; ``uses_mesh`` marks checks that respond to the mesh spacing."""
    name: str
    suite: str
    description: str
    run: Callable[[RunContext], list[VerificationReport]]
    uses_mesh: bool = False


CHECKS: dict[str, Check] = {}


def register(name: str, description: str, uses_mesh: bool = False):
    suite = next(s for s, names in SUITES.items() if s != "all" and name in names)

    def decorator(fn: Callable[[RunContext], list[VerificationReport]]):
        CHECKS[name] = Check(name=name, suite=suite, description=description, run=fn, uses_mesh=uses_mesh)
        return fn

    return decorator


def get_check(name: str) -> Check:
    return CHECKS[name]


def list_checks() -> list[dict]:
    """Registered checks with their suite, in suite order."""
    return [
        {"name": c.name, "suite": c.suite, "description": c.description}
        for name in SUITES["all"]
        for c in [CHECKS[name]]
    ]


def _ladder_or_single(ctx: RunContext, single: Callable[[], VerificationReport],
                      on_rung: Callable[[LadderRung], VerificationReport]) -> list[VerificationReport]:
    if ctx.config.ladder is None:
        return [single()]
    result = run_ladder(on_rung, ctx.ladder_rungs())
    return [result.report, *result.rungs]


# ── Comparison ───────────────────────────────────────────────────────────────
@register("mean-curvature", "H_X against the model mean curvature along random rays")
def _mean_curvature(ctx: RunContext) -> list[VerificationReport]:
    cmp, res = ctx.config.comparison, ctx.config.resolution
    return [check_mean_curvature_comparison(ctx.manifold, ctx.config.params, cmp.p, res.rays, cmp.rho_max,
                                            steps=res.steps, rng=ctx.rng("mean-curvature"))]


@register("mean-curvature-difference", "H_X minus the n-dimensional model stays below C")
def _mean_curvature_difference(ctx: RunContext) -> list[VerificationReport]:
    cmp, res = ctx.config.comparison, ctx.config.resolution
    return [check_mean_curvature_difference(ctx.manifold, ctx.config.params, cmp.p, res.rays, cmp.rho_max,
                                            steps=res.steps, rng=ctx.rng("mean-curvature-difference"))]


@register("area-volume", "monotone area and volume ratios against the weighted model")
def _area_volume(ctx: RunContext) -> list[VerificationReport]:
    cmp = ctx.config.comparison
    rho_grid = np.linspace(cmp.rho_max / cmp.rho_count, cmp.rho_max, cmp.rho_count)
    return [check_area_volume_comparison(ctx.manifold, ctx.config.params, cmp.p, rho_grid,
                                         ctx.config.resolution.rays)]


# ── Excess ───────────────────────────────────────────────────────────────────
@register("abresch-gromoll", "excess on B_r(p) against the maximum-principle bound")
def _abresch_gromoll(ctx: RunContext) -> list[VerificationReport]:
    tri = ctx.config.triangle
    M = ctx.manifold
    T = ctx.triangle()
    rng = ctx.rng("abresch-gromoll")
    box = T.p + rng.uniform(-tri.r, tri.r, size=(tri.samples, M.n))
    samples = np.concatenate([T.p[None], M.wrap(box)])
    return [check_abresch_gromoll(M, ctx.config.params, T, tri.r, samples)]


# ── Hessian ──────────────────────────────────────────────────────────────────
@register("hessian-estimates", "sup |h - b|, mean |grad(h - b)|^2 and mean |Hess h|^2", uses_mesh=True)
def _hessian(ctx: RunContext) -> list[VerificationReport]:
    def on_rung(rung: LadderRung) -> VerificationReport:
        M, params, T = rung.build()
        return check_hessian_estimates(M, params, T, ctx.config.ladder.r, ctx.spacing)

    return _ladder_or_single(
        ctx,
        lambda: check_hessian_estimates(ctx.manifold, ctx.config.params, ctx.triangle(), ctx.config.triangle.r,
                                        ctx.spacing),
        on_rung,
    )


# ── Segment ──────────────────────────────────────────────────────────────────
def segment_field(ctx: RunContext) -> MeshField:
    """The integrand f of the segment check on a lattice covering B_2r(p)."""
    seg = ctx.config.segment
    M = ctx.manifold
    if all(M.periodic):
        grid = box_grid(M, ctx.spacing)
    else:
        grid = patch_grid(M, seg.p, 3.0 * seg.r + 3.0 * ctx.spacing, ctx.spacing)
    if seg.f == "one":
        return MeshField.from_function(grid, lambda x: np.ones(len(x)), name="one")
    if seg.f == "bump":
        center = np.asarray(seg.bump_center, dtype=float)

        def bump(x: np.ndarray) -> np.ndarray:
            s = np.sum(M.difference(x, np.broadcast_to(center, x.shape)) ** 2, axis=1) / seg.bump_width**2
            return seg.bump_height * np.clip(1.0 - s, 0.0, None) ** 2

        return MeshField.from_function(grid, bump, name="bump")
    raise ConfigError(f"unknown integrand '{seg.f}'; use 'one' or 'bump'", key="segment.f", source=ctx.config.source)


@register("segment-inequality", "Monte Carlo double integral of F_f against the segment bound", uses_mesh=True)
def _segment(ctx: RunContext) -> list[VerificationReport]:
    seg = ctx.config.segment
    return [check_segment_inequality(ctx.manifold, ctx.config.params, seg.p, seg.r, segment_field(ctx),
                                     seg.trials, rng=ctx.rng("segment-inequality"))]


# ── Splitting ────────────────────────────────────────────────────────────────
@register("pythagoras-defect", "d(x,y)^2 + d(y,z)^2 - d(x,z)^2 on level sets of h+", uses_mesh=True)
def _pythagoras(ctx: RunContext) -> list[VerificationReport]:
    tri = ctx.config.triangle

    def on_rung(rung: LadderRung) -> VerificationReport:
        M, params, T = rung.build()
        return check_pythagoras_defect(M, params, T, ctx.config.ladder.r, tri.triples, spacing=ctx.spacing,
                                       rng=ctx.rng("pythagoras-defect"))

    return _ladder_or_single(
        ctx,
        lambda: check_pythagoras_defect(ctx.manifold, ctx.config.params, ctx.triangle(), tri.r, tri.triples,
                                        spacing=ctx.spacing, rng=ctx.rng("pythagoras-defect"), h=ctx.h_plus()),
        on_rung,
    )


@register("almost-split", "distortion of x -> (h+(x), x_hat) into R x N", uses_mesh=True)
def _almost_split(ctx: RunContext) -> list[VerificationReport]:
    tri = ctx.config.triangle

    def on_rung(rung: LadderRung) -> VerificationReport:
        M, params, T = rung.build()
        return check_almost_splitting(M, params, T, ctx.config.ladder.r, spacing=ctx.spacing,
                                      samples=tri.split_samples, rng=ctx.rng("almost-split"))

    return _ladder_or_single(
        ctx,
        lambda: check_almost_splitting(ctx.manifold, ctx.config.params, ctx.triangle(), tri.r, spacing=ctx.spacing,
                                       samples=tri.split_samples, rng=ctx.rng("almost-split"), h=ctx.h_plus()),
        on_rung,
    )


@register("projection-smallness", "integral of <grad h+, X>^2 and the shifted curvature on grad h+", uses_mesh=True)
def _projection(ctx: RunContext) -> list[VerificationReport]:
    def on_rung(rung: LadderRung) -> VerificationReport:
        M, params, T = rung.build()
        return check_projection_smallness(M, params, T, ctx.config.ladder.r, spacing=ctx.spacing)

    return _ladder_or_single(
        ctx,
        lambda: check_projection_smallness(ctx.manifold, ctx.config.params, ctx.triangle(), ctx.config.triangle.r,
                                           spacing=ctx.spacing, h=ctx.h_plus()),
        on_rung,
    )


# ── Topology ─────────────────────────────────────────────────────────────────
@register("growth-count", "fitted word-growth degree of a lattice group against n + m")
def _growth(ctx: RunContext) -> list[VerificationReport]:
    top = ctx.config.topology
    bound = ctx.manifold.n + ctx.config.params.m if top.degree_bound is None else top.degree_bound
    generators = np.asarray(top.generators, dtype=np.int64)
    return [growth_count_check(top.lattice_rank, generators, top.s_max, bound)]


@register("volume-estimate", "weighted volume of cover balls against the explicit estimate", uses_mesh=True)
def _volume(ctx: RunContext) -> list[VerificationReport]:
    top = ctx.config.topology
    return [check_volume_estimate(ctx.manifold, ctx.config.params, top.p, top.radii,
                                  rays=ctx.config.resolution.rays, spacing=ctx.spacing)]


# ── Appendix ─────────────────────────────────────────────────────────────────
@register("cheng-yau", "gradient estimate for the principal eigenfunction u0", uses_mesh=True)
def _cheng_yau(ctx: RunContext) -> list[VerificationReport]:
    app = ctx.config.appendix
    eig = principal_eigenfunction(ctx.manifold, ctx.spacing)
    return [eigenfunction_cheng_yau_check(ctx.manifold, ctx.config.params, eig, app.r1, app.r2, app.p)]
