"""Topology bounds, word growth, cover volumes and the horizon report."""

from __future__ import annotations

import json
import math
from itertools import product

import numpy as np
import pytest

from belab.errors import ConfigError, DomainError, EnumerationOverflow
from belab.geometry.params import BakryEmeryParams
from belab.pde import MeshField, box_grid
from belab.topology.bounds import (
    betti_bound_B,
    betti_candidates,
    default_C0,
    generator_bound_N,
    polynomial_growth_bound,
    volume_estimate_bound,
    weighted_volume_lower_bound,
)
from belab.topology.growth import growth_count_check, growth_degree, word_counts
from belab.topology.horizon import (
    NON_CONSTRUCTIVE,
    HorizonHypotheses,
    horizon_report,
    load_horizon_hypotheses,
)
from belab.topology.volume import check_volume_estimate, cover_weighted_volumes

HORIZON_TOML = """\
n = 3
Lambda = 0.0
kappa = 1.0
lambda_chi = -0.25
C = 0.5
D = 2.0
V = 1.0
"""


def brute_force_ball(generators, s: int) -> set[tuple[int, ...]]:
    steps = [np.asarray(g) for g in generators] + [-np.asarray(g) for g in generators]
    ball = {tuple(np.zeros(len(generators[0]), dtype=int))}
    for length in range(1, s + 1):
        for word in product(steps, repeat=length):
            ball.add(tuple(int(v) for v in np.sum(word, axis=0)))
    return ball


class TestBounds:
    def test_flat_volume_estimate(self):
        # (r+1)^m times the Euclidean disc at delta = C = 0
        assert volume_estimate_bound(2, 2.0, 0.0, 0.0, 1.0) == pytest.approx(4 * math.pi)
        assert volume_estimate_bound(2, 2.0, 0.0, 0.0, 0.0) == 0.0

    def test_volume_estimate_grows_with_curvature(self):
        flat = volume_estimate_bound(3, 1.0, 0.0, 0.2, 1.5)
        curved = volume_estimate_bound(3, 1.0, 0.1, 0.2, 1.5)
        assert curved > flat

    def test_generator_bound(self):
        assert generator_bound_N(2, 2.0, 0.0, 0.0, 1.0, math.pi) == pytest.approx(36.0)

    def test_generator_bound_rejects_empty_volume(self):
        with pytest.raises(DomainError):
            generator_bound_N(2, 2.0, 0.0, 0.0, 1.0, 0.0)

    def test_negative_inputs(self):
        with pytest.raises(DomainError, match="delta"):
            volume_estimate_bound(2, 1.0, -0.1, 0.0, 1.0)

    def test_polynomial_growth_degree(self):
        ratio = polynomial_growth_bound(2, 1.0, 0.3, 1.0, 2.0) / polynomial_growth_bound(2, 1.0, 0.3, 1.0, 1.0)
        assert ratio == pytest.approx(2.0**3)

    def test_weighted_volume_lower_bound(self):
        assert weighted_volume_lower_bound(2.0, 0.5, 2.0) == pytest.approx(2.0 / math.e)

    def test_default_C0(self):
        assert default_C0(2.0, 0.5) == pytest.approx(2 * math.log(2) + 0.5)

    def test_betti_bound_is_monotone_in_delta(self):
        C0 = default_C0(1.0, 0.0)
        bounds = [betti_bound_B(3, 1.0, delta, C0, 1.0) for delta in (0.0, 0.01, 0.1)]
        assert bounds == sorted(bounds)
        assert bounds[0] >= 3

    def test_betti_candidates_cover_every_radius(self):
        candidates = betti_candidates(3, 1.0, 0.0, 1.0, 1.0, max_r=5)
        assert sorted(candidates) == [1, 2, 3, 4, 5]
        assert betti_bound_B(3, 1.0, 0.0, 1.0, 1.0, max_r=5) == min(candidates.values())


class TestGrowth:
    def test_rank_one_counts(self):
        assert word_counts(1, [[1]], 5).tolist() == [2 * s + 1 for s in range(6)]

    def test_rank_two_counts(self):
        counts = word_counts(2, [[1, 0], [0, 1]], 6)
        assert counts.tolist() == [2 * s * s + 2 * s + 1 for s in range(7)]

    @pytest.mark.parametrize("generators", [[[1, 0], [1, 1]], [[2, 1], [0, 1], [1, 3]]])
    def test_matches_brute_force(self, generators):
        counts = word_counts(2, generators, 3)
        assert counts.tolist() == [len(brute_force_ball(generators, s)) for s in range(4)]

    def test_growth_degree_of_lattice(self):
        counts = word_counts(2, [[1, 0], [0, 1]], 40)
        assert growth_degree(counts) == pytest.approx(2.0, abs=0.1)

    def test_overflow(self):
        with pytest.raises(EnumerationOverflow):
            word_counts(3, np.eye(3, dtype=int), 50, budget=1000)

    def test_rejects_zero_generator(self):
        with pytest.raises(DomainError, match="zero"):
            word_counts(2, [[0, 0]], 3)

    def test_check_against_degree_bound(self):
        report = growth_count_check(2, [[1, 0], [0, 1]], 20, degree_bound=3.0)
        assert report.check_name == "growth-count"
        assert report.passed
        assert not growth_count_check(2, [[1, 0], [0, 1]], 20, degree_bound=1.5).passed


class TestVolume:
    def test_flat_cover_volumes(self, torus):
        f = _zero_potential(torus)
        volumes = cover_weighted_volumes(torus, f, [1.0, 1.0], [0.5, 2.0, 5.0], rays=64)
        assert volumes == pytest.approx(math.pi * np.array([0.25, 4.0, 25.0]), rel=1e-2)

    def test_flat_torus_check(self, torus):
        report = check_volume_estimate(torus, BakryEmeryParams(m=1.0), [1.0, 1.0], [0.5, 1.0, 2.0], rays=32,
                                       spacing=0.3)
        assert report.check_name == "volume-estimate"
        assert report.passed

    def test_radii_must_be_positive(self, torus):
        with pytest.raises(DomainError):
            check_volume_estimate(torus, BakryEmeryParams(m=1.0), [1.0, 1.0], [0.0, 1.0])


def _zero_potential(M):
    return MeshField.from_function(box_grid(M, 0.3), lambda p: np.zeros(len(p)), name="f")


class TestHorizon:
    @pytest.fixture
    def hypotheses_file(self, tmp_path):
        path = tmp_path / "horizon.toml"
        path.write_text(HORIZON_TOML)
        return path

    def test_load(self, hypotheses_file):
        hyp = load_horizon_hypotheses(hypotheses_file)
        assert hyp.n == 3
        assert hyp.effective_bound == pytest.approx(-0.5)
        assert hyp.delta_effective == pytest.approx(0.25)

    def test_unknown_key(self, tmp_path):
        path = tmp_path / "horizon.toml"
        path.write_text(HORIZON_TOML + "mass = 1.0\n")
        with pytest.raises(ConfigError) as excinfo:
            load_horizon_hypotheses(path)
        assert excinfo.value.key == "mass"

    def test_missing_key(self, tmp_path):
        path = tmp_path / "horizon.toml"
        path.write_text(HORIZON_TOML.replace("V = 1.0\n", ""))
        with pytest.raises(ConfigError) as excinfo:
            load_horizon_hypotheses(path)
        assert excinfo.value.key == "V"

    def test_non_positive_diameter(self):
        with pytest.raises(ConfigError):
            HorizonHypotheses(n=3, Lambda=0.0, kappa=1.0, lambda_chi=0.0, C=0.0, D=0.0, V=1.0)

    def test_report_is_pure(self, hypotheses_file):
        hyp = load_horizon_hypotheses(hypotheses_file)
        assert horizon_report(hyp).to_json() == horizon_report(hyp).to_json()

    def test_report_flags_cited_statements(self, hypotheses_file):
        report = horizon_report(load_horizon_hypotheses(hypotheses_file))
        doc = json.loads(report.to_json())
        assert not doc["positive_bound"]
        assert all(s["status"] == NON_CONSTRUCTIVE for s in doc["statements"])
        assert doc["betti_ceiling"] == 5
        assert doc["C0"] == pytest.approx(2 * math.log(2) + 0.5)

    def test_positive_bound_and_gradient_case(self):
        hyp = HorizonHypotheses(n=3, Lambda=3.0, kappa=1.0, lambda_chi=0.0, C=0.0, D=1.0, V=1.0)
        report = horizon_report(hyp, gradient_case=True)
        assert report.positive_bound
        assert report.delta_effective == 0.0
        assert report.betti_ceiling == 3
        assert any("pi_1 finite" in claim for claim, _ in report.statements)
