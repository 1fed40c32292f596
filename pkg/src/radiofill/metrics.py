"""Error metrics over the evaluated region."""

from dataclasses import dataclass

import numpy as np

from .grid import Rect


@dataclass
class MetricReport:
    mse: float
    ne: float
    cell_count: int
    region: Rect


def mse(truth: np.ndarray, estimate: np.ndarray, region: Rect) -> float:
    """Mean squared difference over the region's cells."""
    t, e = _region_pair(truth, estimate, region)
    return float(np.mean((t - e) ** 2))


def ne(truth: np.ndarray, estimate: np.ndarray, region: Rect) -> float:
    """Squared error normalized by the truth's squared magnitude over the region."""
    t, e = _region_pair(truth, estimate, region)
    denom = float(np.sum(t * t))
    if denom <= 0.0:
        raise ValueError("normalized error undefined: truth is all zero in region")
    return float(np.sum((t - e) ** 2)) / denom


def evaluate(truth: np.ndarray, estimate: np.ndarray, region: Rect) -> MetricReport:
    return MetricReport(mse=mse(truth, estimate, region),
                        ne=ne(truth, estimate, region),
                        cell_count=region.height * region.width,
                        region=region)


def _region_pair(truth, estimate, region):
    truth = np.asarray(truth, dtype=np.float64)
    estimate = np.asarray(estimate, dtype=np.float64)
    if truth.shape != estimate.shape:
        raise ValueError(f"shape mismatch: {truth.shape} vs {estimate.shape}")
    region.validate(*truth.shape)
    sl = region.slices()
    return truth[sl], estimate[sl]
