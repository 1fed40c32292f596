"""Patch-ordering priority for the fill front.

Every boundary cell gets a score that is the product of four terms:
confidence (how much of its patch is already known), a data term (how
strongly the map texture runs into the boundary), a radio propagation
term (inverse-distance influence of the transmitter, projected on the
boundary normal), and a block term (fraction of the transmitter-to-cell
segment that is not covered by buildings).  Patches are filled in
descending score order.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .grid import CellCoord, CellStatus, ObstacleMap, RadioMap, RegionState, Transmitter

MODE_FULL = "full"
MODE_TEXTURE = "texture"

_SOBEL_ROW = np.array([[-1.0, -2.0, -1.0], [0.0, 0.0, 0.0], [1.0, 2.0, 1.0]])
_SOBEL_COL = _SOBEL_ROW.T


@dataclass
class PriorityConfig:
    patch_size: int = 15
    beta: float = 2.0
    alpha: float = 1.0
    term_floor: float = 1e-3
    line_step: float = 0.25
    mode: str = MODE_FULL

    def __post_init__(self):
        if self.patch_size < 3 or self.patch_size % 2 == 0:
            raise ValueError("patch_size must be an odd integer >= 3")
        if self.beta < 0:
            raise ValueError("beta must be >= 0")
        if self.alpha <= 0:
            raise ValueError("alpha must be > 0")
        if not (0.0 < self.term_floor < 1.0):
            raise ValueError("term_floor must be in (0, 1)")
        if not (0.0 < self.line_step <= 1.0):
            raise ValueError("line_step must be in (0, 1]")
        if self.mode not in (MODE_FULL, MODE_TEXTURE):
            raise ValueError(f"unknown priority mode {self.mode!r}")


@dataclass
class BoundaryPoint:
    coord: CellCoord
    normal: np.ndarray
    isophote: np.ndarray | None = field(default=None, repr=False)


def extract_boundary(state: RegionState) -> list[BoundaryPoint]:
    """Missing cells with at least one non-missing 4-neighbor, row-major order."""
    missing = state.status == CellStatus.MISSING
    if not missing.any():
        return []
    known = ~missing
    if not known.any():
        raise ValueError("entire grid is missing; no cells to fill from")
    near_known = np.zeros_like(missing)
    near_known[1:, :] |= known[:-1, :]
    near_known[:-1, :] |= known[1:, :]
    near_known[:, 1:] |= known[:, :-1]
    near_known[:, :-1] |= known[:, 1:]
    coords = np.argwhere(missing & near_known)
    return [BoundaryPoint(CellCoord(int(r), int(c)), _boundary_normal(missing, int(r), int(c)))
            for r, c in coords]


def _boundary_normal(missing: np.ndarray, r: int, c: int) -> np.ndarray:
    rows, cols = missing.shape
    gr = 0.0
    gc = 0.0
    for i in range(3):
        rr = r - 1 + i
        if rr < 0 or rr >= rows:
            continue
        for j in range(3):
            cc = c - 1 + j
            if cc < 0 or cc >= cols:
                continue
            if missing[rr, cc]:
                gr += _SOBEL_ROW[i, j]
                gc += _SOBEL_COL[i, j]
    norm = np.hypot(gr, gc)
    if norm > 1e-12:
        return np.array([gr / norm, gc / norm])
    return _direction_to_nearest_known(missing, r, c)


def _direction_to_nearest_known(missing: np.ndarray, r: int, c: int) -> np.ndarray:
    # isolated missing cell: aim the normal at the closest known cell
    rows, cols = missing.shape
    for radius in range(1, max(rows, cols)):
        best = None
        for dr in range(-radius, radius + 1):
            for dc in range(-radius, radius + 1):
                if max(abs(dr), abs(dc)) != radius:
                    continue
                rr, cc = r + dr, c + dc
                if 0 <= rr < rows and 0 <= cc < cols and not missing[rr, cc]:
                    key = (dr * dr + dc * dc, dr, dc)
                    if best is None or key < best:
                        best = key
        if best is not None:
            _, dr, dc = best
            vec = np.array([float(dr), float(dc)])
            return vec / np.linalg.norm(vec)
    raise ValueError("no known cell found for normal fallback")


def confidence_term(state: RegionState, p: CellCoord, patch_size: int) -> float:
    """Summed per-cell confidence inside the patch over patch_size^2.

    Cells outside the grid count as zero; the divisor is always the full
    patch area.
    """
    half = patch_size // 2
    r0 = max(p.row - half, 0)
    r1 = min(p.row + half + 1, state.shape[0])
    c0 = max(p.col - half, 0)
    c1 = min(p.col + half + 1, state.shape[1])
    window_status = state.status[r0:r1, c0:c1]
    window_conf = state.confidence[r0:r1, c0:c1]
    known = window_status != CellStatus.MISSING
    return float(window_conf[known].sum()) / float(patch_size * patch_size)


def data_term(radio_map: RadioMap, state: RegionState, bp: BoundaryPoint,
              cfg: PriorityConfig) -> float:
    """Strength of map texture running into the boundary at this point.

    The isophote is the 90-degree rotation of the strongest finite-difference
    gradient among known cells of the patch, using only known neighbors
    (one-sided at the edge of the known region).  Degenerate patches fall
    back to the configured floor.
    """
    n = cfg.patch_size
    half = n // 2
    rows, cols = state.shape
    r0, c0 = bp.coord.row - half, bp.coord.col - half

    # values/validity on the patch padded by one cell, out-of-grid invalid
    ext_vals = np.zeros((n + 2, n + 2))
    ext_valid = np.zeros((n + 2, n + 2), dtype=bool)
    gr0, gr1 = max(r0 - 1, 0), min(r0 + n + 1, rows)
    gc0, gc1 = max(c0 - 1, 0), min(c0 + n + 1, cols)
    if gr0 < gr1 and gc0 < gc1:
        er0, ec0 = gr0 - (r0 - 1), gc0 - (c0 - 1)
        ext_vals[er0:er0 + (gr1 - gr0), ec0:ec0 + (gc1 - gc0)] = \
            radio_map.values[gr0:gr1, gc0:gc1]
        ext_valid[er0:er0 + (gr1 - gr0), ec0:ec0 + (gc1 - gc0)] = \
            state.status[gr0:gr1, gc0:gc1] != CellStatus.MISSING

    center_v = ext_vals[1:-1, 1:-1]
    center_ok = ext_valid[1:-1, 1:-1]
    grad_r = _masked_gradient(center_v, ext_vals[2:, 1:-1], ext_valid[2:, 1:-1],
                              ext_vals[:-2, 1:-1], ext_valid[:-2, 1:-1])
    grad_c = _masked_gradient(center_v, ext_vals[1:-1, 2:], ext_valid[1:-1, 2:],
                              ext_vals[1:-1, :-2], ext_valid[1:-1, :-2])
    mag2 = np.where(center_ok, grad_r ** 2 + grad_c ** 2, -1.0)
    idx = int(np.argmax(mag2))
    if mag2.flat[idx] <= 1e-24:
        return cfg.term_floor
    gr, gc = grad_r.flat[idx], grad_c.flat[idx]
    iso = np.array([-gc, gr])
    iso /= np.linalg.norm(iso)
    bp.isophote = iso
    return max(abs(float(iso @ bp.normal)) / cfg.alpha, cfg.term_floor)


def _masked_gradient(center, fwd, fwd_ok, bwd, bwd_ok):
    central = (fwd - bwd) * 0.5
    forward = fwd - center
    backward = center - bwd
    grad = np.where(fwd_ok & bwd_ok, central,
                    np.where(fwd_ok, forward, np.where(bwd_ok, backward, 0.0)))
    return grad


def radio_term(tx: Transmitter, bp: BoundaryPoint, cfg: PriorityConfig) -> float:
    """Inverse-distance transmitter influence projected on the boundary normal."""
    dr = bp.coord.row - tx.row
    dc = bp.coord.col - tx.col
    dist = float(np.hypot(dr, dc))
    if dist <= 1e-12:
        raise ValueError(f"cell {bp.coord} coincides with transmitter {tx.id}")
    direction = np.array([dr / dist, dc / dist])
    value = dist ** (-cfg.beta) * abs(float(direction @ bp.normal))
    return max(value, cfg.term_floor)


def block_term(obstacles: ObstacleMap, tx: Transmitter, p: CellCoord,
               cfg: PriorityConfig) -> float:
    """One minus the building-covered fraction of the transmitter-to-cell segment."""
    frac = blocked_fraction_batch(
        obstacles.cells,
        np.array([tx.row]), np.array([tx.col]),
        np.array([float(p.row)]), np.array([float(p.col)]),
        cfg.line_step)[0]
    return max(1.0 - float(frac), cfg.term_floor)


def blocked_fraction_batch(obstacle_cells: np.ndarray,
                           ty: np.ndarray, tx_: np.ndarray,
                           py: np.ndarray, px: np.ndarray,
                           step: float) -> np.ndarray:
    """Building-covered fraction of each (tx -> cell) segment, grid-clipped.

    Segments are clipped to the grid rectangle and sampled at ``step`` cell
    spacing (both endpoints included).
    """
    rows, cols = obstacle_cells.shape
    y0, x0, y1, x1, ok = _clip_segments(ty, tx_, py, px, rows, cols)
    length = np.hypot(y1 - y0, x1 - x0)
    nsamp = np.maximum((length / step).astype(np.int64) + 1, 2)
    counts = _kernels.blocked_counts(
        np.ascontiguousarray(obstacle_cells),
        y0, x0, y1, x1, nsamp)
    frac = counts / nsamp
    frac[~ok] = 0.0
    return frac


def _clip_segments(ay, ax, by, bx, rows, cols):
    # Liang-Barsky against the cell-extent rectangle
    ymin, ymax = -0.5, rows - 0.5
    xmin, xmax = -0.5, cols - 0.5
    ay = np.asarray(ay, dtype=np.float64)
    ax = np.asarray(ax, dtype=np.float64)
    by = np.asarray(by, dtype=np.float64)
    bx = np.asarray(bx, dtype=np.float64)
    dy = by - ay
    dx = bx - ax
    u0 = np.zeros(ay.shape)
    u1 = np.ones(ay.shape)
    ok = np.ones(ay.shape, dtype=bool)
    for p, q in ((-dy, ay - ymin), (dy, ymax - ay), (-dx, ax - xmin), (dx, xmax - ax)):
        parallel = p == 0.0
        ok &= ~(parallel & (q < 0.0))
        safe_p = np.where(parallel, 1.0, p)
        t = q / safe_p
        u0 = np.where(~parallel & (p < 0.0), np.maximum(u0, t), u0)
        u1 = np.where(~parallel & (p > 0.0), np.minimum(u1, t), u1)
    ok &= u0 <= u1
    u0 = np.where(ok, u0, 0.0)
    u1 = np.where(ok, u1, 0.0)
    return ay + u0 * dy, ax + u0 * dx, ay + u1 * dy, ax + u1 * dx, ok


def priority(bp: BoundaryPoint, state: RegionState, radio_map: RadioMap,
             obstacles: ObstacleMap, txs: list[Transmitter], cfg: PriorityConfig,
             _block_cache: dict | None = None) -> float:
    """Combined fill priority of one boundary point.

    Multiple transmitters contribute a summed block*radio factor; texture
    mode drops the radio term and uses the first transmitter's block term.
    """
    if not txs:
        raise ValueError("priority requires at least one transmitter")
    conf = confidence_term(state, bp.coord, cfg.patch_size)
    data = data_term(radio_map, state, bp, cfg)
    if cfg.mode == MODE_TEXTURE:
        return conf * data * _cached_block(obstacles, txs[0], 0, bp.coord, cfg, _block_cache)
    total = 0.0
    for i, tx in enumerate(txs):
        blk = _cached_block(obstacles, tx, i, bp.coord, cfg, _block_cache)
        total += blk * radio_term(tx, bp, cfg)
    return conf * data * total


def _cached_block(obstacles, tx, tx_index, coord, cfg, cache):
    if cache is None:
        return block_term(obstacles, tx, coord, cfg)
    key = (tx_index, coord.row, coord.col)
    value = cache.get(key)
    if value is None:
        value = block_term(obstacles, tx, coord, cfg)
        cache[key] = value
    return value


def select_patch(boundary: list[BoundaryPoint], state: RegionState,
                 radio_map: RadioMap, obstacles: ObstacleMap,
                 txs: list[Transmitter], cfg: PriorityConfig,
                 block_cache: dict | None = None) -> tuple[BoundaryPoint, float]:
    """Boundary point with the highest priority; ties go to smallest (row, col)."""
    if not boundary:
        raise ValueError("cannot select a patch from an empty boundary")
    best_bp = None
    best_val = -1.0
    for bp in boundary:  # extract_boundary yields row-major order, so strict > ties out
        val = priority(bp, state, radio_map, obstacles, txs, cfg, _block_cache=block_cache)
        if val > best_val:
            best_val = val
            best_bp = bp
    return best_bp, best_val
