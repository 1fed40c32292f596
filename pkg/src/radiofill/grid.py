"""Grid data model: radio map, per-cell region state, masks, and CSV I/O.

Values travel through the engine linearly normalized to [0, 1]; the
original-unit endpoints are kept on the map so results can be reported
in watts again.  Distances everywhere are cell units, center to center.
"""

from dataclasses import dataclass, field
from enum import IntEnum
from typing import NamedTuple

import numpy as np


class CellStatus(IntEnum):
    OBSERVED = 0
    MISSING = 1
    FILLED = 2


class CellCoord(NamedTuple):
    row: int
    col: int


class Rect(NamedTuple):
    """Axis-aligned cell rectangle: rows [top, top+height), cols [left, left+width)."""

    top: int
    left: int
    height: int
    width: int

    def validate(self, rows: int, cols: int) -> None:
        if self.height < 1 or self.width < 1:
            raise ValueError(f"rect {self} has empty extent")
        if (self.top < 0 or self.left < 0
                or self.top + self.height > rows
                or self.left + self.width > cols):
            raise ValueError(f"rect {self} does not fit inside a {rows}x{cols} grid")

    def slices(self) -> tuple[slice, slice]:
        return (slice(self.top, self.top + self.height),
                slice(self.left, self.left + self.width))


@dataclass
class Transmitter:
    """Transmitter location in continuous cell coordinates (may lie off-grid)."""

    row: float
    col: float
    id: int = 0

    def __post_init__(self):
        if not (np.isfinite(self.row) and np.isfinite(self.col)):
            raise ValueError("transmitter position must be finite")


@dataclass
class ObstacleMap:
    """Boolean building mask, True where a cell is covered by a building."""

    cells: np.ndarray

    def __post_init__(self):
        self.cells = np.asarray(self.cells, dtype=bool)
        if self.cells.ndim != 2:
            raise ValueError("obstacle map must be 2-D")

    @classmethod
    def empty(cls, rows: int, cols: int) -> "ObstacleMap":
        return cls(np.zeros((rows, cols), dtype=bool))


@dataclass
class RadioMap:
    """Dense grid of normalized power values plus normalization metadata."""

    values: np.ndarray
    cell_size: float = 1.0
    norm_min: float = 0.0
    norm_max: float = 1.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2 or self.values.size == 0:
            raise ValueError("radio map values must be a non-empty 2-D array")

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]

    def with_values(self, values: np.ndarray) -> "RadioMap":
        return RadioMap(values, self.cell_size, self.norm_min, self.norm_max)


@dataclass
class RegionState:
    """Per-cell fill status and confidence; owns the observed/missing bookkeeping.

    ``confidence`` is 1 on originally observed cells, 0 on missing cells, and
    carries the value assigned at fill time on filled cells.  The snapshot of
    the initial observed set never changes.
    """

    status: np.ndarray
    confidence: np.ndarray
    original_observed: np.ndarray = field(repr=False)

    @property
    def shape(self) -> tuple[int, int]:
        return self.status.shape

    def missing_count(self) -> int:
        return int(np.count_nonzero(self.status == CellStatus.MISSING))

    def counts(self) -> tuple[int, int, int]:
        observed = int(np.count_nonzero(self.status == CellStatus.OBSERVED))
        missing = int(np.count_nonzero(self.status == CellStatus.MISSING))
        filled = int(np.count_nonzero(self.status == CellStatus.FILLED))
        return observed, missing, filled


def normalize(raw_map: np.ndarray, cell_size: float = 1.0) -> RadioMap:
    """Linearly rescale a raw power grid to [0, 1], recording the endpoints.

    A constant grid maps to all zeros with norm_min == norm_max.
    """
    raw = np.asarray(raw_map, dtype=np.float64)
    if raw.ndim != 2 or raw.size == 0:
        raise ValueError("raw map must be a non-empty 2-D array")
    bad = ~np.isfinite(raw)
    if bad.any():
        r, c = np.argwhere(bad)[0]
        raise ValueError(f"non-finite value at cell ({r}, {c})")
    lo = float(raw.min())
    hi = float(raw.max())
    if hi > lo:
        values = (raw - lo) / (hi - lo)
    else:
        values = np.zeros_like(raw)
    return RadioMap(values, cell_size=cell_size, norm_min=lo, norm_max=hi)


def denormalize(radio_map: RadioMap) -> np.ndarray:
    """Map normalized values back to original units."""
    span = radio_map.norm_max - radio_map.norm_min
    return radio_map.values * span + radio_map.norm_min


def init_region_state(radio_map: RadioMap, restricted: Rect) -> RegionState:
    """Mark a rectangle as missing, everything else as observed."""
    restricted.validate(radio_map.rows, radio_map.cols)
    mask = np.zeros((radio_map.rows, radio_map.cols), dtype=bool)
    mask[restricted.slices()] = True
    return region_state_from_mask(radio_map, mask)


def region_state_from_mask(radio_map: RadioMap, missing_mask: np.ndarray) -> RegionState:
    """Build region state from an arbitrary boolean missing mask."""
    mask = np.asarray(missing_mask, dtype=bool)
    if mask.shape != radio_map.values.shape:
        raise ValueError(
            f"mask shape {mask.shape} does not match map shape {radio_map.values.shape}")
    status = np.where(mask, np.int8(CellStatus.MISSING), np.int8(CellStatus.OBSERVED))
    confidence = np.where(mask, 0.0, 1.0)
    return RegionState(status=status, confidence=confidence, original_observed=~mask)


# ---------------------------------------------------------------------------
# file formats: comma-separated rows of decimal reals, row-major
# ---------------------------------------------------------------------------

def read_grid_file(path) -> np.ndarray:
    rows = []
    width = None
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            tokens = line.split(",")
            if width is None:
                width = len(tokens)
            elif len(tokens) != width:
                raise ValueError(
                    f"{path}: line {lineno}: expected {width} values, got {len(tokens)}")
            try:
                rows.append([float(tok) for tok in tokens])
            except ValueError:
                raise ValueError(f"{path}: line {lineno}: non-numeric entry") from None
    if not rows:
        raise ValueError(f"{path}: empty grid file")
    return np.array(rows, dtype=np.float64)


def write_grid_file(path, array: np.ndarray) -> None:
    arr = np.asarray(array)
    if arr.ndim != 2:
        raise ValueError("grid files are 2-D")
    integral = arr.dtype.kind in "bui"
    with open(path, "w", encoding="ascii") as fh:
        for row in arr:
            if integral:
                fh.write(",".join(str(int(v)) for v in row))
            else:
                fh.write(",".join(format(float(v), ".17g") for v in row))
            fh.write("\n")


def read_bool_grid(path) -> np.ndarray:
    """Read a 0/1 grid file (mask or obstacle layer) as booleans."""
    return read_grid_file(path) != 0.0
