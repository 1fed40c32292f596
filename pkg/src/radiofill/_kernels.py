"""Hot numeric kernels: numba-jitted loops with pure-numpy fallbacks.

The reconstruction loop spends nearly all of its time in three places:
the exemplar SSD window scan, the lasso coordinate-descent sweep, and
obstacle sampling along transmitter-to-cell segments.  Each kernel here
exists twice -- an ``@njit`` version and a vectorized numpy version --
and the module picks one pair at import time.  Set ``RADIOFILL_NO_NUMBA=1``
to force the numpy path (or it is used automatically when numba is not
installed).  ``benchmarks/bench_kernels.py`` times the two side by side.
"""

import os

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

_FLAG = os.environ.get("RADIOFILL_NO_NUMBA", "").strip().lower()
_NUMBA_DISABLED = _FLAG in ("1", "true", "yes")


# ---------------------------------------------------------------------------
# pure-numpy implementations
# ---------------------------------------------------------------------------

def _ssd_scan_numpy(values, cand_ok, tvals, tvalid):
    # cost(w) = sum_valid w^2 - 2*sum_valid w*t + sum_valid t^2, per window
    n = tvals.shape[0]
    win = sliding_window_view(values, (n, n))
    m = tvalid.astype(np.float64)
    t = np.where(tvalid, tvals, 0.0)
    cost = np.einsum("ijkl,kl->ij", win * win, m)
    cost -= 2.0 * np.einsum("ijkl,kl->ij", win, t)
    cost += float(np.sum(t * t))
    cost[~cand_ok] = np.inf
    flat = int(np.argmin(cost))  # first minimum in row-major order
    br, bc = divmod(flat, cost.shape[1])
    if not cand_ok[br, bc]:
        return -1, -1
    return br, bc


def _lasso_cd_numpy(A, x, lam, max_iters, tol):
    m, k = A.shape
    beta = np.zeros(k)
    resid = x.copy()
    colsq = np.einsum("ij,ij->j", A, A)
    thr = 0.5 * lam
    for _ in range(max_iters):
        max_delta = 0.0
        for j in range(k):
            if colsq[j] <= 0.0:
                continue
            old = beta[j]
            rho = float(A[:, j] @ resid) + colsq[j] * old
            if rho > thr:
                new = (rho - thr) / colsq[j]
            elif rho < -thr:
                new = (rho + thr) / colsq[j]
            else:
                new = 0.0
            if new != old:
                resid += A[:, j] * (old - new)
                beta[j] = new
                delta = abs(new - old)
                if delta > max_delta:
                    max_delta = delta
        if max_delta < tol:
            break
    return beta


def _blocked_counts_numpy(obstacles, y0, x0, y1, x1, nsamp):
    rows, cols = obstacles.shape
    out = np.zeros(y0.shape[0], dtype=np.int64)
    for s in range(y0.shape[0]):
        m = nsamp[s]
        if m <= 1:
            u = np.zeros(1)
        else:
            u = np.arange(m, dtype=np.float64) / (m - 1)
        py = y0[s] + (y1[s] - y0[s]) * u
        px = x0[s] + (x1[s] - x0[s]) * u
        iy = np.floor(py + 0.5).astype(np.int64)
        ix = np.floor(px + 0.5).astype(np.int64)
        np.clip(iy, 0, rows - 1, out=iy)
        np.clip(ix, 0, cols - 1, out=ix)
        out[s] = int(np.count_nonzero(obstacles[iy, ix]))
    return out


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

if not _NUMBA_DISABLED:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover - exercised via env flag instead
        njit = None
else:
    njit = None

if njit is not None:

    @njit(cache=True)
    def _ssd_scan_numba(values, cand_ok, tvals, tvalid):
        hh, ww = cand_ok.shape
        n = tvals.shape[0]
        best = np.inf
        br = -1
        bc = -1
        for r in range(hh):
            for c in range(ww):
                if not cand_ok[r, c]:
                    continue
                s = 0.0
                for i in range(n):
                    for j in range(n):
                        if tvalid[i, j]:
                            d = values[r + i, c + j] - tvals[i, j]
                            s += d * d
                if s < best:
                    best = s
                    br = r
                    bc = c
        return br, bc

    @njit(cache=True)
    def _lasso_cd_numba(A, x, lam, max_iters, tol):
        m, k = A.shape
        beta = np.zeros(k)
        resid = x.copy()
        colsq = np.zeros(k)
        for j in range(k):
            s = 0.0
            for i in range(m):
                s += A[i, j] * A[i, j]
            colsq[j] = s
        thr = 0.5 * lam
        for _ in range(max_iters):
            max_delta = 0.0
            for j in range(k):
                if colsq[j] <= 0.0:
                    continue
                old = beta[j]
                rho = colsq[j] * old
                for i in range(m):
                    rho += A[i, j] * resid[i]
                if rho > thr:
                    new = (rho - thr) / colsq[j]
                elif rho < -thr:
                    new = (rho + thr) / colsq[j]
                else:
                    new = 0.0
                if new != old:
                    d = old - new
                    for i in range(m):
                        resid[i] += A[i, j] * d
                    beta[j] = new
                    delta = abs(new - old)
                    if delta > max_delta:
                        max_delta = delta
            if max_delta < tol:
                break
        return beta

    @njit(cache=True)
    def _blocked_counts_numba(obstacles, y0, x0, y1, x1, nsamp):
        rows, cols = obstacles.shape
        out = np.zeros(y0.shape[0], dtype=np.int64)
        for s in range(y0.shape[0]):
            m = nsamp[s]
            count = 0
            for i in range(m):
                if m <= 1:
                    u = 0.0
                else:
                    u = i / (m - 1)
                py = y0[s] + (y1[s] - y0[s]) * u
                px = x0[s] + (x1[s] - x0[s]) * u
                iy = int(np.floor(py + 0.5))
                ix = int(np.floor(px + 0.5))
                if iy < 0:
                    iy = 0
                elif iy > rows - 1:
                    iy = rows - 1
                if ix < 0:
                    ix = 0
                elif ix > cols - 1:
                    ix = cols - 1
                if obstacles[iy, ix]:
                    count += 1
            out[s] = count
        return out

    BACKEND = "numba"
    ssd_scan = _ssd_scan_numba
    lasso_cd = _lasso_cd_numba
    blocked_counts = _blocked_counts_numba
else:
    BACKEND = "numpy"
    ssd_scan = _ssd_scan_numpy
    lasso_cd = _lasso_cd_numpy
    blocked_counts = _blocked_counts_numpy


def warmup():
    """Trigger JIT compilation on tiny inputs (no-op on the numpy path)."""
    vals = np.zeros((4, 4))
    ok = np.ones((2, 2), dtype=np.bool_)
    t = np.zeros((3, 3))
    tv = np.ones((3, 3), dtype=np.bool_)
    ssd_scan(vals, ok, t, tv)
    lasso_cd(np.ones((2, 2)), np.ones(2), 0.1, 2, 1e-6)
    blocked_counts(
        np.zeros((2, 2), dtype=np.bool_),
        np.zeros(1), np.zeros(1), np.ones(1), np.ones(1),
        np.array([2], dtype=np.int64),
    )
