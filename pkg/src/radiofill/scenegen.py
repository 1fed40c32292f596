"""Seeded synthetic scenes: power-law propagation, buildings, smooth shadowing.

Stands in for measured data in tests and sweeps.  Power at each cell is a
log-distance law attenuated per building-covered fraction of the
transmitter-to-cell segment (sampled the same way as the block priority
term) and modulated by a smooth positive value-noise field.
"""

from dataclasses import dataclass, field

import numpy as np

from .grid import ObstacleMap, RadioMap, Rect, Transmitter, normalize
from .priority import blocked_fraction_batch

LAYOUT_EMPTY = "empty"
LAYOUT_VERTICAL_STRIPES = "vertical_stripes"
LAYOUT_CITY_BLOCKS = "city_blocks"

_DIST_FLOOR = 1.0  # cells; reference distance of the power law
_LINE_STEP = 0.25


@dataclass
class SceneSpec:
    rows: int = 120
    cols: int = 160
    tx_row: float = -20.0
    tx_col: float = 80.0
    pathloss_exponent: float = 2.2
    reference_power: float = 1.0
    attenuation: float = 0.55
    building_layout: str | list[Rect] = LAYOUT_EMPTY
    shadow_amplitude: float = 0.0
    shadow_correlation: float = 8.0
    rng_seed: int = 0
    extra_rects: list[Rect] = field(default_factory=list)

    def __post_init__(self):
        if self.rows < 8 or self.cols < 8:
            raise ValueError("scene dimensions must be >= 8")
        if not (0.0 < self.attenuation <= 1.0):
            raise ValueError("attenuation must be in (0, 1]")
        if self.shadow_amplitude < 0:
            raise ValueError("shadow amplitude must be >= 0")
        if self.shadow_correlation <= 0:
            raise ValueError("shadow correlation length must be > 0")
        if self.reference_power <= 0:
            raise ValueError("reference power must be > 0")


def generate(spec: SceneSpec) -> tuple[RadioMap, ObstacleMap, Transmitter]:
    rng = np.random.default_rng(spec.rng_seed)
    obstacles = build_layout(spec)
    tx = Transmitter(row=spec.tx_row, col=spec.tx_col, id=0)

    rr, cc = np.meshgrid(np.arange(spec.rows, dtype=np.float64),
                         np.arange(spec.cols, dtype=np.float64), indexing="ij")
    dist = np.hypot(rr - tx.row, cc - tx.col)
    dist = np.maximum(dist, _DIST_FLOOR)

    frac = blocked_fraction_batch(
        obstacles.cells,
        np.full(rr.size, tx.row), np.full(rr.size, tx.col),
        rr.ravel(), cc.ravel(), _LINE_STEP).reshape(rr.shape)

    raw = spec.reference_power * dist ** (-spec.pathloss_exponent)
    raw *= spec.attenuation ** frac
    if spec.shadow_amplitude > 0:
        noise = value_noise(spec.rows, spec.cols, spec.shadow_correlation, rng)
        raw *= np.exp(spec.shadow_amplitude * (2.0 * noise - 1.0))

    radio_map = normalize(raw)
    return radio_map, obstacles, tx


def build_layout(spec: SceneSpec) -> ObstacleMap:
    cells = np.zeros((spec.rows, spec.cols), dtype=bool)
    layout = spec.building_layout
    rects: list[Rect]
    if isinstance(layout, str):
        if layout == LAYOUT_EMPTY:
            rects = []
        elif layout == LAYOUT_VERTICAL_STRIPES:
            rects = _vertical_stripes(spec.rows, spec.cols)
        elif layout == LAYOUT_CITY_BLOCKS:
            rects = _city_blocks(spec.rows, spec.cols)
        else:
            raise ValueError(f"unknown building layout {layout!r}")
    else:
        rects = list(layout)
    rects = rects + list(spec.extra_rects)
    for rect in rects:
        rect.validate(spec.rows, spec.cols)
        cells[rect.slices()] = True
    return ObstacleMap(cells)


def _vertical_stripes(rows: int, cols: int) -> list[Rect]:
    margin = max(rows // 10, 2)
    width = 2
    period = 8
    height = rows - 2 * margin
    return [Rect(margin, c, height, width)
            for c in range(4, cols - width, period)]


def _city_blocks(rows: int, cols: int) -> list[Rect]:
    bh = max(rows // 12, 3)
    bw = max(cols // 14, 3)
    step_r = bh + max(bh // 2, 2)
    step_c = bw + max(bw // 2, 2)
    out = []
    for top in range(2, rows - bh - 1, step_r):
        for left in range(2, cols - bw - 1, step_c):
            out.append(Rect(top, left, bh, bw))
    return out


def value_noise(rows: int, cols: int, correlation: float,
                rng: np.random.Generator) -> np.ndarray:
    """Smoothstep-interpolated lattice noise in [0, 1] with the given cell-scale."""
    lat_r = int(np.ceil(rows / correlation)) + 2
    lat_c = int(np.ceil(cols / correlation)) + 2
    lattice = rng.random((lat_r, lat_c))
    u = np.arange(rows, dtype=np.float64)[:, None] / correlation
    v = np.arange(cols, dtype=np.float64)[None, :] / correlation
    i0 = np.floor(u).astype(int)
    j0 = np.floor(v).astype(int)
    fu = u - i0
    fv = v - j0
    su = fu * fu * (3.0 - 2.0 * fu)
    sv = fv * fv * (3.0 - 2.0 * fv)
    v00 = lattice[i0, j0]
    v10 = lattice[i0 + 1, j0]
    v01 = lattice[i0, j0 + 1]
    v11 = lattice[i0 + 1, j0 + 1]
    top = v00 + (v01 - v00) * sv
    bottom = v10 + (v11 - v10) * sv
    return top + (bottom - top) * su
