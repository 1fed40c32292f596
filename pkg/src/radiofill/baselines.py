"""Reference reconstructions: radial-basis interpolation and a log-distance fit.

Both operate on the same map/state pair as the fill engine and only ever
write missing cells.
"""

import numpy as np

from .grid import CellStatus, RadioMap, RegionState, Transmitter, denormalize

_WATT_FLOOR = 1e-12


def rbf_reconstruct(radio_map: RadioMap, state: RegionState,
                    rbf_kind: str = "multiquadric",
                    shape_param: float | None = None,
                    center_budget: int = 600,
                    halo: int = 4) -> RadioMap:
    """Interpolate missing cells with a radial-basis fit on observed centers.

    Centers are the observed cells within ``halo`` of the missing region plus
    a uniform grid subsample, capped at ``center_budget``.  A low-degree
    polynomial tail (linear when three or more centers are available) makes
    constant and planar fields reproduce exactly; the radial block carries a
    small ridge jitter.
    """
    observed = state.status != CellStatus.MISSING
    missing = ~observed
    if not observed.any():
        raise ValueError("rbf interpolation needs at least one observed cell")
    if not missing.any():
        return radio_map.with_values(radio_map.values.copy())

    centers = _pick_centers(observed, missing, center_budget, halo)
    pts = centers.astype(np.float64)
    fvals = radio_map.values[centers[:, 0], centers[:, 1]]

    diff = pts[:, None, :] - pts[None, :, :]
    dist = np.sqrt(np.sum(diff * diff, axis=2))
    if shape_param is None:
        shape_param = _mean_nearest_spacing(dist)
    phi = _rbf_kernel(dist, rbf_kind, shape_param)

    npts = pts.shape[0]
    poly = _poly_block(pts, npts)
    q = poly.shape[1]
    system = np.zeros((npts + q, npts + q))
    system[:npts, :npts] = phi + 1e-8 * np.eye(npts)
    if q:
        system[:npts, npts:] = poly
        system[npts:, :npts] = poly.T
    rhs = np.zeros(npts + q)
    rhs[:npts] = fvals
    try:
        coefs = np.linalg.solve(system, rhs)
    except np.linalg.LinAlgError as exc:
        raise ValueError(f"rbf system singular even with ridge jitter: {exc}") from exc

    targets = np.argwhere(missing).astype(np.float64)
    tdiff = targets[:, None, :] - pts[None, :, :]
    tdist = np.sqrt(np.sum(tdiff * tdiff, axis=2))
    pred = _rbf_kernel(tdist, rbf_kind, shape_param) @ coefs[:npts]
    if q:
        pred += _poly_block(targets, npts) @ coefs[npts:]

    out = radio_map.values.copy()
    out[missing] = pred
    return radio_map.with_values(out)


def _pick_centers(observed, missing, budget, halo):
    rows, cols = observed.shape
    near = missing.copy()
    for _ in range(halo):
        grown = near.copy()
        grown[1:, :] |= near[:-1, :]
        grown[:-1, :] |= near[1:, :]
        grown[:, 1:] |= near[:, :-1]
        grown[:, :-1] |= near[:, 1:]
        near = grown
    ring = np.argwhere(near & observed)

    stride = max(1, int(np.ceil(np.sqrt(observed.sum() / max(budget - len(ring), 1)))))
    coarse = np.zeros_like(observed)
    coarse[::stride, ::stride] = True
    grid_pts = np.argwhere(coarse & observed & ~near)

    centers = np.vstack([ring, grid_pts]) if len(grid_pts) else ring
    if len(centers) > budget:
        keep = np.linspace(0, len(centers) - 1, budget).astype(int)
        centers = centers[keep]
    return centers


def _mean_nearest_spacing(dist):
    if dist.shape[0] < 2:
        return 1.0
    masked = dist + np.diag(np.full(dist.shape[0], np.inf))
    return float(np.mean(masked.min(axis=1)))


def _rbf_kernel(r, kind, c):
    if kind == "multiquadric":
        return np.sqrt(r * r + c * c)
    if kind == "gaussian":
        return np.exp(-(r / c) ** 2)
    if kind == "thin_plate":
        with np.errstate(divide="ignore", invalid="ignore"):
            out = r * r * np.log(r)
        return np.where(r > 0, out, 0.0)
    raise ValueError(f"unknown rbf kind {kind!r}")


def _poly_block(pts, ncenters):
    if ncenters >= 3:
        return np.column_stack([np.ones(len(pts)), pts[:, 0], pts[:, 1]])
    if ncenters == 2:
        return np.ones((len(pts), 1))
    return np.zeros((len(pts), 0))


def mbi_reconstruct(radio_map: RadioMap, state: RegionState,
                    tx: Transmitter) -> RadioMap:
    """Fit received power (dB) against log distance to the transmitter.

    Observed cells are denormalized to watts (floored at a tiny positive
    value), fitted with least squares in dB-vs-log10(distance), and missing
    cells are predicted from the line and renormalized.
    """
    observed = state.status != CellStatus.MISSING
    missing = ~observed
    if observed.sum() < 2:
        raise ValueError("log-distance fit needs at least two observed cells")

    raw = denormalize(radio_map)
    obs = np.argwhere(observed)
    d = np.hypot(obs[:, 0] - tx.row, obs[:, 1] - tx.col)
    if (d <= 0).any():
        raise ValueError("an observed cell coincides with the transmitter")
    logd = np.log10(d)
    if float(logd.max() - logd.min()) < 1e-12:
        raise ValueError("all observed cells are equidistant from the transmitter; "
                         "cannot fit a distance slope")
    power_db = 10.0 * np.log10(np.maximum(raw[observed], _WATT_FLOOR))
    design = np.column_stack([np.ones_like(logd), -10.0 * logd])
    (intercept, gamma), *_ = np.linalg.lstsq(design, power_db, rcond=None)

    out = radio_map.values.copy()
    if missing.any():
        tgt = np.argwhere(missing)
        td = np.maximum(np.hypot(tgt[:, 0] - tx.row, tgt[:, 1] - tx.col), 1e-9)
        pred_db = intercept - 10.0 * gamma * np.log10(td)
        pred_w = np.power(10.0, pred_db / 10.0)
        span = radio_map.norm_max - radio_map.norm_min
        if span > 0:
            pred_norm = (pred_w - radio_map.norm_min) / span
        else:
            pred_norm = np.zeros_like(pred_w)
        out[missing] = np.clip(pred_norm, 0.0, 1.0)
    result = radio_map.with_values(out)
    return result


def fitted_pathloss_exponent(radio_map: RadioMap, state: RegionState,
                             tx: Transmitter) -> float:
    """The slope of the log-distance fit on observed cells (diagnostic helper)."""
    observed = state.status != CellStatus.MISSING
    raw = denormalize(radio_map)
    obs = np.argwhere(observed)
    d = np.hypot(obs[:, 0] - tx.row, obs[:, 1] - tx.col)
    logd = np.log10(np.maximum(d, 1e-12))
    power_db = 10.0 * np.log10(np.maximum(raw[observed], _WATT_FLOOR))
    design = np.column_stack([np.ones_like(logd), -10.0 * logd])
    (_, gamma), *_ = np.linalg.lstsq(design, power_db, rcond=None)
    return float(gamma)
