"""Model-space tables for external plotting."""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np
import pandas as pd

from belab.config import CSV_SIGNIFICANT_DIGITS, TABLE_SAMPLES
from belab.modelspace import ModelSpace, ell, green_barrier, model_mean_curvature

log = logging.getLogger(__name__)

COLUMNS = ("rho", "ell", "Hbar", "G")


def model_table(d: float, lam: float, r: float, samples: int = TABLE_SAMPLES) -> pd.DataFrame:
    """rho = r k / samples for k = 1..samples with l, Hbar_d and G_r at each."""
    model = ModelSpace(d=d, lam=lam)
    rho = r * np.arange(1, samples + 1) / samples
    barrier = green_barrier(model, r)
    return pd.DataFrame({
        "rho": rho,
        "ell": ell(model, rho),
        "Hbar": model_mean_curvature(model, rho),
        "G": barrier(rho),
    }, columns=list(COLUMNS))


def write_table(df: pd.DataFrame, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=False, float_format=f"%.{CSV_SIGNIFICANT_DIGITS}g", lineterminator="\n")
    log.info("wrote %d rows to %s", len(df), path)
    return path
