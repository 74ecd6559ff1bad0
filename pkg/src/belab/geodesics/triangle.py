"""Thin triangles (p, q+, q-), the excess function E and the Busemann stand-ins b+-."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from belab.errors import HypothesisViolation
from belab.geodesics.distance import distance, distances_from
from belab.geometry.manifold import ChartManifold


@dataclass(frozen=True, eq=False)
class TriangleConfig:
    """Points p, q+ and q- with d(q+-, p) > L and E(p) < epsilon."""
    manifold: ChartManifold
    p: np.ndarray
    q_plus: np.ndarray
    q_minus: np.ndarray
    L: float
    epsilon: float
    d_plus: float
    d_minus: float
    base: float

    def __post_init__(self) -> None:
        if self.d_minus <= self.L:
            raise HypothesisViolation("d(q-, p) > L", self.d_minus, f"L = {self.L}")
        if self.d_plus <= self.L:
            raise HypothesisViolation("d(q+, p) > L", self.d_plus, f"L = {self.L}")
        if self.excess_at_p >= self.epsilon:
            raise HypothesisViolation("E(p) < epsilon", self.excess_at_p, f"epsilon = {self.epsilon}")

    @classmethod
    def on(cls, M: ChartManifold, p, q_plus, q_minus, L: float, epsilon: float) -> TriangleConfig:
        """Measure the three sides on M and validate the thin-triangle hypothesis."""
        p, q_plus, q_minus = (M.wrap(np.asarray(v, dtype=float)) for v in (p, q_plus, q_minus))
        d_plus, d_minus = distances_from(M, p, np.stack([q_plus, q_minus]), strict=True)
        return cls(
            manifold=M,
            p=p,
            q_plus=q_plus,
            q_minus=q_minus,
            L=float(L),
            epsilon=float(epsilon),
            d_plus=float(d_plus),
            d_minus=float(d_minus),
            base=distance(M, q_minus, q_plus),
        )

    @property
    def excess_at_p(self) -> float:
        return self.d_plus + self.d_minus - self.base

    def to_dict(self) -> dict:
        return {
            "manifold": self.manifold.name,
            "p": self.p.tolist(),
            "q_plus": self.q_plus.tolist(),
            "q_minus": self.q_minus.tolist(),
            "L": self.L,
            "epsilon": self.epsilon,
            "E(p)": self.excess_at_p,
        }


def excess_many(M: ChartManifold, T: TriangleConfig, points: np.ndarray) -> np.ndarray:
    pts = np.atleast_2d(points)
    return distances_from(M, T.q_minus, pts) + distances_from(M, T.q_plus, pts) - T.base


def excess(M: ChartManifold, T: TriangleConfig, x) -> float:
    """E(x) = d(x, q-) + d(x, q+) - d(q-, q+)."""
    return float(excess_many(M, T, np.asarray(x, dtype=float)[None])[0])


def busemann_many(M: ChartManifold, T: TriangleConfig, sign: int, points: np.ndarray) -> np.ndarray:
    if sign not in (1, -1):
        raise ValueError(f"sign must be +1 or -1, got {sign}")
    q, d_qp = (T.q_plus, T.d_plus) if sign > 0 else (T.q_minus, T.d_minus)
    return distances_from(M, q, np.atleast_2d(points)) - d_qp


def busemann_standin(M: ChartManifold, T: TriangleConfig, sign: int, x) -> float:
    """b+(x) = d(x, q+) - d(q+, p), and likewise b- with q-."""
    return float(busemann_many(M, T, sign, np.asarray(x, dtype=float)[None])[0])
