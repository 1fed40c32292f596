"""Binary PGM (P5, 8-bit) heatmaps for grids of values in [0, 1]."""

import numpy as np


def write_pgm(path, values01: np.ndarray) -> None:
    arr = np.asarray(values01, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError("pgm output expects a 2-D grid")
    clipped = np.clip(arr, 0.0, 1.0)
    pixels = np.floor(clipped * 255.0 + 0.5).astype(np.uint8)
    rows, cols = pixels.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{cols} {rows}\n255\n".encode("ascii"))
        fh.write(pixels.tobytes())
