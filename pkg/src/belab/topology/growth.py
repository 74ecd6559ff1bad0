"""Word growth of finitely generated subgroups of Z^k and the polynomial degree check."""

from __future__ import annotations

import logging

import numpy as np
from sklearn.linear_model import LinearRegression

from belab.config import ENUMERATION_BUDGET
from belab.errors import DomainError, EnumerationOverflow
from belab.validation.report import VerificationReport

log = logging.getLogger(__name__)


def _generators(lattice_rank: int, generators) -> np.ndarray:
    gens = np.atleast_2d(np.asarray(generators))
    if lattice_rank < 1:
        raise DomainError(f"lattice rank must be positive, got {lattice_rank}")
    if gens.shape[1] != lattice_rank or not np.issubdtype(gens.dtype, np.integer):
        raise DomainError(f"generators must be integer vectors of length {lattice_rank}")
    if np.any(np.all(gens == 0, axis=1)):
        raise DomainError("a generator is the zero vector")
    return gens.astype(np.int64)


def word_counts(lattice_rank: int, generators, s_max: int, budget: int = ENUMERATION_BUDGET) -> np.ndarray:
    """#Gamma(s) for s = 0..s_max: distinct sums of at most s generators or their inverses."""
    gens = _generators(lattice_rank, generators)
    steps = np.concatenate([gens, -gens])
    ball = np.zeros((1, lattice_rank), dtype=np.int64)
    frontier = ball
    counts = [1]
    for s in range(1, s_max + 1):
        if len(frontier) * len(steps) + len(ball) > budget:
            raise EnumerationOverflow(f"word enumeration past {budget} elements at length {s}")
        grown = np.unique((frontier[:, None, :] + steps[None]).reshape(-1, lattice_rank), axis=0)
        merged = np.concatenate([ball, grown])
        _, first = np.unique(merged, axis=0, return_index=True)
        fresh = merged[first[first >= len(ball)]]
        ball = np.concatenate([ball, fresh])
        frontier = fresh
        counts.append(len(ball))
    return np.asarray(counts)


def growth_degree(counts: np.ndarray) -> float:
    """Slope of log #Gamma(s) against log s over the upper half of the lengths."""
    s = np.arange(len(counts))
    keep = s >= max(1, len(counts) // 2)
    if keep.sum() < 2:
        raise DomainError("need at least two word lengths for a growth fit")
    model = LinearRegression().fit(np.log(s[keep])[:, None], np.log(counts[keep]))
    return float(model.coef_[0])


def growth_count_check(lattice_rank: int, generators, s_max: int, degree_bound: float,
                       budget: int = ENUMERATION_BUDGET) -> VerificationReport:
    """Fitted growth degree of the word ball against ``degree_bound`` (n + m for the deck group)."""
    if s_max < 3:
        raise DomainError(f"s_max must be at least 3, got {s_max}")
    counts = word_counts(lattice_rank, generators, s_max, budget)
    degree = growth_degree(counts)
    log.info("word growth in Z^%d: #Gamma(%d) = %d, fitted degree %.4f", lattice_rank, s_max, counts[-1], degree)
    return VerificationReport(
        check_name="growth-count",
        inputs={"lattice_rank": lattice_rank, "generators": np.atleast_2d(generators).tolist(), "s_max": s_max},
        lhs=degree,
        rhs=degree_bound,
        margin=degree_bound - degree,
        resolution={"counts": counts.tolist(), "budget": budget},
        notes=f"#Gamma(s_max) = {counts[-1]}",
    )
