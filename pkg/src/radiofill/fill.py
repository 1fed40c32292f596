"""Reconstruction loop: pick the best boundary patch, estimate it, commit, repeat."""

from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from .grid import CellCoord, CellStatus, ObstacleMap, RadioMap, RegionState, Transmitter
from .priority import PriorityConfig, confidence_term, extract_boundary, select_patch


class PatchCell(IntEnum):
    VALID = 0       # observed or filled
    HOLE = 1        # missing
    OUT_OF_GRID = 2


class ReconstructionError(RuntimeError):
    """Raised when the fill loop cannot make progress."""


@dataclass
class Patch:
    """Square window around a center cell; values are defined on VALID cells."""

    center: CellCoord
    size: int
    values: np.ndarray
    validity: np.ndarray

    def top_left(self) -> tuple[int, int]:
        half = self.size // 2
        return self.center.row - half, self.center.col - half

    def hole_count(self) -> int:
        return int(np.count_nonzero(self.validity == PatchCell.HOLE))


@dataclass
class FillStep:
    center: CellCoord
    priority: float
    diagnostics: dict = field(default_factory=dict)


@dataclass
class FillReport:
    iterations: int
    fill_order: list[FillStep]
    cells_filled: int


def extract_patch(values: np.ndarray, state: RegionState, center: CellCoord,
                  patch_size: int) -> Patch:
    """Clip an n-by-n window at the grid edge; validity mirrors cell status."""
    rows, cols = state.shape
    half = patch_size // 2
    vals = np.zeros((patch_size, patch_size))
    validity = np.full((patch_size, patch_size), int(PatchCell.OUT_OF_GRID), dtype=np.int8)
    r0, c0 = center.row - half, center.col - half
    gr0, gr1 = max(r0, 0), min(r0 + patch_size, rows)
    gc0, gc1 = max(c0, 0), min(c0 + patch_size, cols)
    if gr0 < gr1 and gc0 < gc1:
        pr0, pc0 = gr0 - r0, gc0 - c0
        vals[pr0:pr0 + (gr1 - gr0), pc0:pc0 + (gc1 - gc0)] = values[gr0:gr1, gc0:gc1]
        window_status = state.status[gr0:gr1, gc0:gc1]
        validity[pr0:pr0 + (gr1 - gr0), pc0:pc0 + (gc1 - gc0)] = np.where(
            window_status == CellStatus.MISSING,
            np.int8(PatchCell.HOLE), np.int8(PatchCell.VALID))
    return Patch(center=center, size=patch_size, values=vals, validity=validity)


def commit_patch(state: RegionState, values: np.ndarray, estimate: Patch,
                 confidence: float) -> int:
    """Write estimated values into the patch's hole cells and mark them filled.

    Only hole cells change; observed and previously filled values are never
    touched.  Returns the number of cells written.
    """
    holes = np.argwhere(estimate.validity == PatchCell.HOLE)
    hole_vals = estimate.values[estimate.validity == PatchCell.HOLE]
    if not np.all(np.isfinite(hole_vals)):
        raise ValueError("patch estimate contains non-finite values on hole cells")
    r0, c0 = estimate.top_left()
    written = 0
    for (i, j), v in zip(holes, hole_vals):
        r, c = r0 + int(i), c0 + int(j)
        values[r, c] = v
        state.status[r, c] = CellStatus.FILLED
        state.confidence[r, c] = confidence
        written += 1
    return written


def reconstruct(radio_map: RadioMap, state: RegionState, obstacles: ObstacleMap,
                txs: list[Transmitter], cfg: PriorityConfig,
                estimator) -> tuple[RadioMap, FillReport]:
    """Fill every missing cell patch by patch, highest priority first.

    ``estimator`` is a callable ``(target_patch, values, state) -> (patch, diag)``
    producing values for the target's hole cells.  The input map is not
    modified; the state is mutated in place until no missing cells remain.
    """
    values = radio_map.values.copy()
    initial_missing = state.missing_count()
    fill_order: list[FillStep] = []
    filled_total = 0
    block_cache: dict = {}
    iteration = 0
    while state.missing_count() > 0:
        iteration += 1
        if iteration > initial_missing:
            raise ReconstructionError(
                f"fill loop exceeded {initial_missing} iterations without finishing")
        boundary = extract_boundary(state)
        bp, score = select_patch(boundary, state, radio_map.with_values(values),
                                 obstacles, txs, cfg, block_cache=block_cache)
        patch_conf = confidence_term(state, bp.coord, cfg.patch_size)
        target = extract_patch(values, state, bp.coord, cfg.patch_size)
        try:
            estimate, diag = estimator(target, values, state)
        except Exception as exc:
            raise ReconstructionError(f"estimator failed at iteration {iteration}: {exc}") from exc
        written = commit_patch(state, values, estimate, patch_conf)
        if written == 0:
            raise ReconstructionError(
                f"iteration {iteration} selected a patch with no hole cells")
        filled_total += written
        fill_order.append(FillStep(center=bp.coord, priority=score, diagnostics=diag))
    report = FillReport(iterations=iteration, fill_order=fill_order,
                        cells_filled=filled_total)
    return radio_map.with_values(values), report


def write_fill_order(path, report: FillReport) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write("iteration,center_row,center_col,priority\n")
        for i, step in enumerate(report.fill_order, start=1):
            fh.write(f"{i},{step.center.row},{step.center.col},"
                     f"{format(step.priority, '.17g')}\n")
