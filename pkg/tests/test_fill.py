import numpy as np
import pytest

from conftest import make_map, make_state
from radiofill.estimators import EstimatorConfig, make_estimator
from radiofill.fill import (Patch, PatchCell, ReconstructionError, commit_patch,
                            extract_patch, reconstruct, write_fill_order)
from radiofill.grid import (CellCoord, CellStatus, ObstacleMap, Rect, Transmitter,
                            init_region_state)
from radiofill.priority import PriorityConfig
from radiofill.scenegen import SceneSpec, generate


def _tx():
    return [Transmitter(-3.0, 5.0)]


def _setup(rng, rows=20, cols=20, rect=Rect(7, 7, 6, 6)):
    vals = rng.random((rows, cols))
    m = make_map(vals)
    state = init_region_state(m, rect)
    return m, state, ObstacleMap.empty(rows, cols)


# ---------------------------------------------------------------------------
# patch extraction
# ---------------------------------------------------------------------------

def test_extract_patch_interior_all_valid():
    rng = np.random.default_rng(0)
    m, state, _ = _setup(rng, rect=Rect(0, 0, 1, 1))
    p = extract_patch(m.values, state, CellCoord(10, 10), 5)
    assert (p.validity == PatchCell.VALID).all()
    np.testing.assert_array_equal(p.values, m.values[8:13, 8:13])


def test_extract_patch_corner_clipping():
    rng = np.random.default_rng(1)
    m, state, _ = _setup(rng, rect=Rect(5, 5, 2, 2))
    p = extract_patch(m.values, state, CellCoord(0, 0), 3)
    assert int((p.validity == PatchCell.OUT_OF_GRID).sum()) == 5
    assert p.validity[0, 0] == PatchCell.OUT_OF_GRID
    assert p.validity[1, 1] == PatchCell.VALID


def test_extract_patch_validity_mirrors_status():
    rng = np.random.default_rng(2)
    for _ in range(10):
        mask = rng.random((12, 12)) < 0.3
        m = make_map(rng.random((12, 12)))
        state = make_state(m, mask)
        center = CellCoord(int(rng.integers(0, 12)), int(rng.integers(0, 12)))
        p = extract_patch(m.values, state, center, 5)
        for i in range(5):
            for j in range(5):
                r, c = center.row - 2 + i, center.col - 2 + j
                if not (0 <= r < 12 and 0 <= c < 12):
                    assert p.validity[i, j] == PatchCell.OUT_OF_GRID
                elif mask[r, c]:
                    assert p.validity[i, j] == PatchCell.HOLE
                else:
                    assert p.validity[i, j] == PatchCell.VALID
                    assert p.values[i, j] == m.values[r, c]


# ---------------------------------------------------------------------------
# patch commit
# ---------------------------------------------------------------------------

def test_commit_patch_no_holes_is_noop():
    rng = np.random.default_rng(3)
    m, state, _ = _setup(rng, rect=Rect(15, 15, 2, 2))
    values = m.values.copy()
    p = extract_patch(values, state, CellCoord(5, 5), 3)
    written = commit_patch(state, values, p, confidence=0.5)
    assert written == 0
    np.testing.assert_array_equal(values, m.values)


def test_commit_patch_counts_transitions():
    rng = np.random.default_rng(4)
    m, state, _ = _setup(rng, rect=Rect(9, 9, 2, 2))
    values = m.values.copy()
    p = extract_patch(values, state, CellCoord(9, 9), 3)
    assert p.hole_count() == 4  # 2x2 rect fully inside the 3x3 window at (9,9)
    p.values[p.validity == PatchCell.HOLE] = 0.42
    written = commit_patch(state, values, p, confidence=0.7)
    assert written == 4
    assert int((state.status == CellStatus.FILLED).sum()) == 4
    assert (state.confidence[9:11, 9:11] == 0.7).all()
    assert (values[9:11, 9:11] == 0.42).all()


def test_commit_patch_preserves_observed_bit_exact():
    rng = np.random.default_rng(5)
    m, state, _ = _setup(rng, rect=Rect(8, 8, 3, 3))
    values = m.values.copy()
    snapshot = values.copy()
    p = extract_patch(values, state, CellCoord(8, 8), 5)
    p.values[p.validity == PatchCell.HOLE] = 0.1
    commit_patch(state, values, p, confidence=0.9)
    observed = state.original_observed
    assert (values[observed] == snapshot[observed]).all()


def test_commit_patch_rejects_non_finite():
    rng = np.random.default_rng(6)
    m, state, _ = _setup(rng, rect=Rect(9, 9, 2, 2))
    values = m.values.copy()
    p = extract_patch(values, state, CellCoord(9, 9), 3)
    p.values[p.validity == PatchCell.HOLE] = np.nan
    with pytest.raises(ValueError):
        commit_patch(state, values, p, confidence=0.5)


# ---------------------------------------------------------------------------
# full loop
# ---------------------------------------------------------------------------

def _run(m, state, obstacles, method="epc", patch_size=5, **ekw):
    pcfg = PriorityConfig(patch_size=patch_size)
    ecfg = EstimatorConfig(method=method, **ekw)
    est = make_estimator(ecfg, m, state, patch_size)
    return reconstruct(m, state, obstacles, _tx(), pcfg, est)


def test_reconstruct_zero_missing_returns_input():
    rng = np.random.default_rng(7)
    vals = rng.random((10, 10))
    m = make_map(vals)
    state = make_state(m, np.zeros((10, 10), dtype=bool))
    out, report = _run(m, state, ObstacleMap.empty(10, 10))
    assert report.iterations == 0
    assert report.cells_filled == 0
    np.testing.assert_array_equal(out.values, vals)


def test_reconstruct_constant_field_stays_constant():
    m = make_map(np.full((16, 16), 0.7))
    state = init_region_state(m, Rect(5, 6, 4, 5))
    out, report = _run(m, state, ObstacleMap.empty(16, 16))
    assert (out.values == 0.7).all()
    assert report.cells_filled == 20


def test_reconstruct_fill_accounting():
    m, obstacles, tx = generate(SceneSpec(rows=20, cols=20, tx_row=-4.0, tx_col=10.0,
                                          building_layout="empty",
                                          shadow_amplitude=0.3, rng_seed=12))
    state = init_region_state(m, Rect(7, 7, 6, 6))
    missing_trace = []

    pcfg = PriorityConfig(patch_size=5)
    est = make_estimator(EstimatorConfig(method="epc"), m, state, 5)

    def tracing_estimator(target, values, st):
        missing_trace.append(st.missing_count())
        return est(target, values, st)

    out, report = reconstruct(m, state, ObstacleMap.empty(20, 20), [tx],
                              pcfg, tracing_estimator)
    missing_trace.append(state.missing_count())
    assert report.iterations <= 36
    assert report.cells_filled == 36
    assert len(report.fill_order) == report.iterations
    # missing count strictly decreases from one estimator call to the next
    deltas = np.diff(missing_trace)
    assert (deltas < 0).all()
    assert state.missing_count() == 0
    assert np.isfinite(out.values).all()


def test_reconstruct_never_rewrites_original_observed():
    m, obstacles, tx = generate(SceneSpec(rows=24, cols=24, tx_row=-5.0, tx_col=12.0,
                                          building_layout="city_blocks",
                                          shadow_amplitude=0.4, rng_seed=3))
    state = init_region_state(m, Rect(9, 9, 7, 7))
    snapshot = m.values.copy()
    observed = state.original_observed.copy()
    out, _ = _run(m, state, obstacles)
    assert (out.values[observed] == snapshot[observed]).all()
    assert (m.values == snapshot).all()  # input map untouched


def test_reconstruct_confidence_chain_bounded():
    m, obstacles, tx = generate(SceneSpec(rows=20, cols=22, tx_row=-3.0, tx_col=11.0,
                                          shadow_amplitude=0.3, rng_seed=5))
    state = init_region_state(m, Rect(6, 6, 6, 8))
    out, _ = _run(m, state, obstacles)
    filled = state.status == CellStatus.FILLED
    assert (state.confidence[filled] > 0.0).all()
    assert (state.confidence[filled] <= 1.0).all()


def test_reconstruct_estimator_failure_carries_iteration():
    rng = np.random.default_rng(8)
    m, state, obstacles = _setup(rng)

    def failing_estimator(target, values, st):
        raise ValueError("boom")

    with pytest.raises(ReconstructionError, match="iteration 1"):
        reconstruct(m, state, obstacles, _tx(), PriorityConfig(patch_size=5),
                    failing_estimator)


def test_reconstruct_rejects_no_progress_estimator():
    rng = np.random.default_rng(9)
    m, state, obstacles = _setup(rng)

    def lazy_estimator(target, values, st):
        empty = Patch(center=target.center, size=target.size,
                      values=target.values.copy(),
                      validity=np.zeros_like(target.validity))
        return empty, {}

    with pytest.raises(ReconstructionError, match="no hole cells"):
        reconstruct(m, state, obstacles, _tx(), PriorityConfig(patch_size=5),
                    lazy_estimator)


def test_fill_order_csv(tmp_path):
    rng = np.random.default_rng(10)
    m, state, obstacles = _setup(rng, rect=Rect(8, 8, 4, 4))
    out, report = _run(m, state, obstacles)
    path = tmp_path / "order.csv"
    write_fill_order(path, report)
    lines = path.read_text().strip().split("\n")
    assert lines[0] == "iteration,center_row,center_col,priority"
    assert len(lines) == report.iterations + 1
