"""Exemplar-based reconstruction of missing areas in gridded radio maps."""

from ._kernels import BACKEND as KERNEL_BACKEND
from .grid import (CellCoord, CellStatus, ObstacleMap, RadioMap, Rect,
                   RegionState, Transmitter, denormalize, init_region_state,
                   normalize, region_state_from_mask)
from .priority import BoundaryPoint, PriorityConfig
from .fill import FillReport, Patch, PatchCell, ReconstructionError, reconstruct
from .estimators import EstimatorConfig, make_estimator
from .sparse import Dictionary, SparseCode
from .metrics import MetricReport, evaluate, mse, ne

__all__ = [
    "KERNEL_BACKEND",
    "CellCoord", "CellStatus", "ObstacleMap", "RadioMap", "Rect",
    "RegionState", "Transmitter", "denormalize", "init_region_state",
    "normalize", "region_state_from_mask",
    "BoundaryPoint", "PriorityConfig",
    "FillReport", "Patch", "PatchCell", "ReconstructionError", "reconstruct",
    "EstimatorConfig", "make_estimator",
    "Dictionary", "SparseCode",
    "MetricReport", "evaluate", "mse", "ne",
]
