"""Patch estimators: exemplar copy and sparse dictionary coding.

The exemplar estimator scans every window that lies entirely inside the
search source (by default the originally observed region) for the smallest
sum of squared differences over the target's known cells, then copies the
winner's values into the holes.  The dictionary estimator codes the known
cells against a trained dictionary and synthesizes hole values from the
reconstruction.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .fill import Patch, PatchCell, extract_patch
from .grid import CellCoord, CellStatus, RadioMap, RegionState
from .sparse import (Dictionary, SparseCode, sample_training_patches, sparse_code,
                     train_dictionary, window_all_true)

METHOD_EPC = "epc"
METHOD_EPD = "epd"

SOURCE_ORIGINAL = "original"
SOURCE_INCLUDE_FILLED = "include_filled"


@dataclass
class EstimatorConfig:
    method: str = METHOD_EPC
    lam: float = 0.01
    natoms: int = 500
    train_count: int = 2000
    ksvd_iters: int = 15
    sparse_max_iters: int = 200
    sparse_tol: float = 1e-6
    search_source: str = SOURCE_ORIGINAL
    clamp_output: bool = True
    rng_seed: int = 0

    def __post_init__(self):
        if self.method not in (METHOD_EPC, METHOD_EPD):
            raise ValueError(f"unknown estimator method {self.method!r}")
        if self.lam < 0:
            raise ValueError("lambda must be >= 0")
        if self.natoms < 1 or self.train_count < 1 or self.ksvd_iters < 1:
            raise ValueError("dictionary sizes and iteration counts must be >= 1")
        if self.search_source not in (SOURCE_ORIGINAL, SOURCE_INCLUDE_FILLED):
            raise ValueError(f"unknown search source {self.search_source!r}")


def epc_search(target: Patch, values: np.ndarray, state: RegionState,
               search_source: str = SOURCE_ORIGINAL,
               candidate_ok: np.ndarray | None = None
               ) -> tuple[Patch, float, tuple[int, int]]:
    """Best-matching source window for a target patch.

    Cost is the SSD over the target's valid cells; ties go to the smallest
    (row, col) top-left corner.  Returns (exemplar patch, cost, top-left).
    """
    tvalid = target.validity == PatchCell.VALID
    if not tvalid.any():
        raise ValueError("target patch has no valid cells to match on")
    if candidate_ok is None:
        candidate_ok = candidate_windows(state, target.size, search_source)
    if not candidate_ok.any():
        raise ValueError(
            f"no fully observed {target.size}x{target.size} source window exists; "
            "reduce the patch size")
    tvals = np.where(tvalid, target.values, 0.0)
    br, bc = _kernels.ssd_scan(values, candidate_ok, tvals, tvalid)
    if br < 0:
        raise ValueError("exemplar scan found no candidate window")
    cost = _window_cost(values, br, bc, target.values, tvalid)
    half = target.size // 2
    exemplar = Patch(
        center=CellCoord(br + half, bc + half),
        size=target.size,
        values=values[br:br + target.size, bc:bc + target.size].copy(),
        validity=np.full((target.size, target.size), int(PatchCell.VALID), dtype=np.int8),
    )
    return exemplar, cost, (int(br), int(bc))


def candidate_windows(state: RegionState, patch_size: int, search_source: str) -> np.ndarray:
    if search_source == SOURCE_ORIGINAL:
        mask = state.original_observed
    else:
        mask = state.status != CellStatus.MISSING
    return window_all_true(mask, patch_size)


def _window_cost(values, r, c, tvals, tvalid):
    # canonical sequential accumulation, independent of the scan backend
    n = tvals.shape[0]
    s = 0.0
    for i in range(n):
        for j in range(n):
            if tvalid[i, j]:
                d = float(values[r + i, c + j]) - float(tvals[i, j])
                s += d * d
    return s


def epc_fill(target: Patch, exemplar: Patch) -> Patch:
    """Copy exemplar values into the target's holes; keep valid cells as-is."""
    if exemplar.values.shape != target.values.shape:
        raise ValueError("exemplar and target patch shapes differ")
    holes = target.validity == PatchCell.HOLE
    out_vals = np.where(holes, exemplar.values, target.values)
    return Patch(center=target.center, size=target.size,
                 values=out_vals, validity=target.validity.copy())


def epd_fill(target: Patch, dictionary: Dictionary, cfg: EstimatorConfig
             ) -> tuple[Patch, SparseCode]:
    """Code the target's valid cells against the dictionary; holes become A@beta."""
    if dictionary.patch_size != target.size:
        raise ValueError(
            f"dictionary patch size {dictionary.patch_size} != target size {target.size}")
    flat_validity = target.validity.flatten(order="F")
    valid = flat_validity == PatchCell.VALID
    if not valid.any():
        raise ValueError("target patch has no valid cells to code")
    x = target.values.flatten(order="F")
    code = sparse_code(x[valid], dictionary.atoms[valid], cfg.lam,
                       max_iters=cfg.sparse_max_iters, tol=cfg.sparse_tol)
    synth = dictionary.atoms @ code.coefficients
    if cfg.clamp_output:
        synth = np.clip(synth, 0.0, 1.0)
    out_flat = x.copy()
    holes = flat_validity == PatchCell.HOLE
    out_flat[holes] = synth[holes]
    out_vals = out_flat.reshape((target.size, target.size), order="F")
    return (Patch(center=target.center, size=target.size,
                  values=out_vals, validity=target.validity.copy()),
            code)


class ExemplarCopyEstimator:
    """Fill holes by copying the closest source window."""

    def __init__(self, cfg: EstimatorConfig, state: RegionState, patch_size: int):
        self.cfg = cfg
        self.patch_size = patch_size
        self._static_candidates = None
        if cfg.search_source == SOURCE_ORIGINAL:
            self._static_candidates = candidate_windows(state, patch_size, cfg.search_source)

    def __call__(self, target: Patch, values: np.ndarray, state: RegionState):
        cand = self._static_candidates
        if cand is None:
            cand = candidate_windows(state, target.size, self.cfg.search_source)
        exemplar, cost, win = epc_search(target, values, state,
                                         self.cfg.search_source, candidate_ok=cand)
        filled = epc_fill(target, exemplar)
        return filled, {"window_row": win[0], "window_col": win[1], "ssd": cost}


class DictionaryEstimator:
    """Fill holes from a sparse combination of trained dictionary atoms."""

    def __init__(self, cfg: EstimatorConfig, radio_map: RadioMap, state: RegionState,
                 patch_size: int, dictionary: Dictionary | None = None):
        self.cfg = cfg
        if dictionary is None:
            rng = np.random.default_rng(cfg.rng_seed)
            samples = sample_training_patches(radio_map, state, cfg.train_count,
                                              patch_size, rng)
            dictionary = train_dictionary(samples, cfg.natoms, cfg.ksvd_iters, rng)
        self.dictionary = dictionary

    def __call__(self, target: Patch, values: np.ndarray, state: RegionState):
        filled, code = epd_fill(target, self.dictionary, self.cfg)
        return filled, {"nnz": code.nnz, "objective": code.objective}


def make_estimator(cfg: EstimatorConfig, radio_map: RadioMap, state: RegionState,
                   patch_size: int, dictionary: Dictionary | None = None):
    if cfg.method == METHOD_EPC:
        return ExemplarCopyEstimator(cfg, state, patch_size)
    return DictionaryEstimator(cfg, radio_map, state, patch_size, dictionary=dictionary)
