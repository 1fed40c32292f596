import numpy as np
import pytest

from conftest import make_map, make_state
from radiofill import priority as pr
from radiofill.grid import CellCoord, CellStatus, ObstacleMap, Transmitter
from radiofill.priority import (BoundaryPoint, PriorityConfig, block_term,
                                confidence_term, data_term, extract_boundary,
                                priority, radio_term, select_patch)

EPS = 1e-3  # default term floor


def _cfg(**kw):
    return PriorityConfig(patch_size=kw.pop("patch_size", 3), **kw)


def _bp(row, col, normal):
    n = np.asarray(normal, dtype=np.float64)
    return BoundaryPoint(CellCoord(row, col), n / np.linalg.norm(n))


# ---------------------------------------------------------------------------
# boundary extraction
# ---------------------------------------------------------------------------

def test_boundary_of_center_block_is_ring():
    m = make_map(np.zeros((5, 5)))
    mask = np.zeros((5, 5), dtype=bool)
    mask[1:4, 1:4] = True
    state = make_state(m, mask)
    coords = {bp.coord for bp in extract_boundary(state)}
    ring = {(r, c) for r in range(1, 4) for c in range(1, 4) if (r, c) != (2, 2)}
    assert coords == {CellCoord(r, c) for r, c in ring}


def test_boundary_single_missing_cell():
    m = make_map(np.zeros((5, 5)))
    mask = np.zeros((5, 5), dtype=bool)
    mask[2, 3] = True
    state = make_state(m, mask)
    pts = extract_boundary(state)
    assert len(pts) == 1
    assert pts[0].coord == CellCoord(2, 3)
    assert abs(np.linalg.norm(pts[0].normal) - 1.0) < 1e-9


def test_boundary_matches_brute_force_scan():
    rng = np.random.default_rng(11)
    for _ in range(20):
        mask = rng.random((12, 12)) < 0.35
        if mask.all() or not mask.any():
            continue
        m = make_map(np.zeros((12, 12)))
        state = make_state(m, mask)
        got = {bp.coord for bp in extract_boundary(state)}
        expected = set()
        for r in range(12):
            for c in range(12):
                if not mask[r, c]:
                    continue
                for dr, dc in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                    rr, cc = r + dr, c + dc
                    if 0 <= rr < 12 and 0 <= cc < 12 and not mask[rr, cc]:
                        expected.add(CellCoord(r, c))
                        break
        assert got == expected
        for bp in extract_boundary(state):
            assert abs(np.linalg.norm(bp.normal) - 1.0) < 1e-9


def test_boundary_empty_and_all_missing():
    m = make_map(np.zeros((4, 4)))
    state = make_state(m, np.zeros((4, 4), dtype=bool))
    assert extract_boundary(state) == []
    state_all = make_state(m, np.ones((4, 4), dtype=bool))
    with pytest.raises(ValueError):
        extract_boundary(state_all)


# ---------------------------------------------------------------------------
# confidence term
# ---------------------------------------------------------------------------

def test_confidence_fully_observed():
    m = make_map(np.zeros((7, 7)))
    state = make_state(m, np.zeros((7, 7), dtype=bool))
    assert confidence_term(state, CellCoord(3, 3), 3) == 1.0


def test_confidence_fully_missing():
    m = make_map(np.zeros((7, 7)))
    state = make_state(m, np.ones((7, 7), dtype=bool))
    assert confidence_term(state, CellCoord(3, 3), 3) == 0.0


def test_confidence_mixed_patch():
    # 3x3 patch: 5 observed (C=1), 1 filled (C=0.6), 3 missing
    m = make_map(np.zeros((5, 5)))
    mask = np.zeros((5, 5), dtype=bool)
    mask[2, 2] = mask[2, 3] = mask[3, 2] = True      # 3 missing
    mask[1, 1] = True                                # will become filled
    state = make_state(m, mask)
    state.status[1, 1] = CellStatus.FILLED
    state.confidence[1, 1] = 0.6
    got = confidence_term(state, CellCoord(2, 2), 3)
    assert abs(got - (5 + 0.6) / 9) < 1e-12


def test_confidence_divisor_is_patch_area_at_edges():
    m = make_map(np.zeros((5, 5)))
    state = make_state(m, np.zeros((5, 5), dtype=bool))
    # corner patch: only 4 of 9 cells in grid, all observed
    assert abs(confidence_term(state, CellCoord(0, 0), 3) - 4 / 9) < 1e-12


def test_confidence_non_increasing_in_missing_cells():
    m = make_map(np.zeros((7, 7)))
    mask = np.zeros((7, 7), dtype=bool)
    mask[3, 3] = True
    state = make_state(m, mask)
    before = confidence_term(state, CellCoord(3, 3), 5)
    state.status[3, 4] = CellStatus.MISSING
    state.confidence[3, 4] = 0.0
    after = confidence_term(state, CellCoord(3, 3), 5)
    assert after <= before


# ---------------------------------------------------------------------------
# data term
# ---------------------------------------------------------------------------

def test_data_term_isophote_parallel_to_normal():
    cols = 9
    vals = np.tile(1.0 - np.arange(cols) / cols, (9, 1))  # gradient along -col
    m = make_map(vals)
    state = make_state(m, np.zeros((9, 9), dtype=bool))
    got = data_term(m, state, _bp(4, 4, (1.0, 0.0)), _cfg())
    assert abs(got - 1.0) < 1e-9


def test_data_term_isophote_perpendicular_to_normal():
    cols = 9
    vals = np.tile(np.arange(cols) / cols, (9, 1))
    m = make_map(vals)
    state = make_state(m, np.zeros((9, 9), dtype=bool))
    got = data_term(m, state, _bp(4, 4, (0.0, 1.0)), _cfg())
    assert got == EPS


def test_data_term_ramp_both_orientations():
    rows = cols = 12
    vals = np.tile(np.arange(cols) / cols, (rows, 1))  # U(r,c) = c/Q
    m = make_map(vals)
    state = make_state(m, np.zeros((rows, cols), dtype=bool))
    # boundary normal along +col (vertical boundary): isophote vertical -> floor
    assert data_term(m, state, _bp(6, 6, (0.0, 1.0)), _cfg()) == EPS
    # boundary normal along +row (horizontal boundary): isophote vertical -> 1
    assert abs(data_term(m, state, _bp(6, 6, (1.0, 0.0)), _cfg()) - 1.0) < 1e-9


def test_data_term_degenerate_constant_field():
    m = make_map(np.full((9, 9), 0.4))
    state = make_state(m, np.zeros((9, 9), dtype=bool))
    assert data_term(m, state, _bp(4, 4, (1.0, 0.0)), _cfg()) == EPS


# ---------------------------------------------------------------------------
# radio term
# ---------------------------------------------------------------------------

def test_radio_term_unit_distance_parallel():
    tx = Transmitter(0.0, 0.0)
    got = radio_term(tx, _bp(1, 0, (1.0, 0.0)), _cfg(beta=2.0))
    assert abs(got - 1.0) < 1e-12


def test_radio_term_distance_two_parallel():
    tx = Transmitter(0.0, 0.0)
    got = radio_term(tx, _bp(2, 0, (1.0, 0.0)), _cfg(beta=2.0))
    assert abs(got - 0.25) < 1e-12


def test_radio_term_sixty_degrees():
    # direction from tx to p at 60 degrees from the normal, d = 5, beta = 1
    p = np.array([3.0, 4.0])
    direction = np.array([0.5, np.sqrt(3) / 2])
    t = p - 5.0 * direction
    tx = Transmitter(t[0], t[1])
    got = radio_term(tx, _bp(3, 4, (1.0, 0.0)), _cfg(beta=1.0))
    assert abs(got - 0.1) < 1e-9


def test_radio_term_rejects_coincident_transmitter():
    tx = Transmitter(2.0, 3.0)
    with pytest.raises(ValueError):
        radio_term(tx, _bp(2, 3, (1.0, 0.0)), _cfg())


def test_radio_term_rotation_invariant_and_decreasing():
    cfg = _cfg(beta=1.5)
    vals = []
    for theta in (0.0, 0.4, 1.1, 2.0):
        rot = np.array([[np.cos(theta), -np.sin(theta)],
                        [np.sin(theta), np.cos(theta)]])
        direction = rot @ np.array([1.0, 0.0])
        normal = rot @ np.array([np.cos(0.3), np.sin(0.3)])
        p = np.array([40.0, 40.0])
        t = p - 3.0 * direction
        bp = BoundaryPoint(CellCoord(40, 40), normal)
        vals.append(radio_term(Transmitter(t[0], t[1]), bp, cfg))
    assert max(vals) - min(vals) < 1e-9

    tx = Transmitter(0.0, 0.0)
    descending = [radio_term(tx, _bp(d, 0, (1.0, 0.0)), cfg) for d in (1, 2, 4)]
    assert descending[0] > descending[1] > descending[2]


# ---------------------------------------------------------------------------
# block term
# ---------------------------------------------------------------------------

def test_block_term_obstacle_free():
    obstacles = ObstacleMap.empty(10, 10)
    tx = Transmitter(0.0, 0.0)
    assert block_term(obstacles, tx, CellCoord(9, 9), _cfg()) == 1.0


def test_block_term_everything_blocked():
    obstacles = ObstacleMap(np.ones((10, 10), dtype=bool))
    tx = Transmitter(0.0, 0.0)
    assert block_term(obstacles, tx, CellCoord(9, 9), _cfg()) == EPS


def test_block_term_length_ratio():
    # horizontal 10-cell segment crossing a 4-cell-wide building: 1 - 0.4
    cells = np.zeros((3, 12), dtype=bool)
    cells[:, 3:7] = True
    obstacles = ObstacleMap(cells)
    tx = Transmitter(1.0, 0.0)
    got = block_term(obstacles, tx, CellCoord(1, 10), _cfg())
    step, length = 0.25, 10.0
    assert abs(got - 0.6) <= step / length + 1e-12


def test_block_term_all_background_invariant():
    obstacles = ObstacleMap.empty(8, 8)
    rng = np.random.default_rng(3)
    for _ in range(10):
        tx = Transmitter(rng.uniform(-5, 12), rng.uniform(-5, 12))
        p = CellCoord(int(rng.integers(0, 8)), int(rng.integers(0, 8)))
        assert block_term(obstacles, tx, p, _cfg()) == 1.0


def test_block_term_clips_offgrid_transmitter():
    # tx far outside: only the in-grid part of the segment counts
    cells = np.zeros((3, 10), dtype=bool)
    obstacles = ObstacleMap(cells)
    tx = Transmitter(1.0, -100.0)
    assert block_term(obstacles, tx, CellCoord(1, 5), _cfg()) == 1.0


# ---------------------------------------------------------------------------
# combined priority
# ---------------------------------------------------------------------------

def test_priority_identity_product(monkeypatch):
    monkeypatch.setattr(pr, "confidence_term", lambda *a, **k: 1.0)
    monkeypatch.setattr(pr, "data_term", lambda *a, **k: 1.0)
    monkeypatch.setattr(pr, "block_term", lambda *a, **k: 1.0)
    monkeypatch.setattr(pr, "radio_term", lambda *a, **k: 1.0)
    m = make_map(np.zeros((5, 5)))
    state = make_state(m, np.zeros((5, 5), dtype=bool))
    got = priority(_bp(2, 2, (1, 0)), state, m, ObstacleMap.empty(5, 5),
                   [Transmitter(0, 0)], _cfg())
    assert got == 1.0


def test_priority_multi_transmitter_combination(monkeypatch):
    # C=0.5, D=0.8, (B,L) = (1,0.25) and (0.5,0.04) -> 0.5*0.8*(0.25+0.02)
    monkeypatch.setattr(pr, "confidence_term", lambda *a, **k: 0.5)
    monkeypatch.setattr(pr, "data_term", lambda *a, **k: 0.8)
    blocks = {0: 1.0, 1: 0.5}
    radios = {0: 0.25, 1: 0.04}
    monkeypatch.setattr(pr, "block_term",
                        lambda obstacles, tx, p, cfg: blocks[tx.id])
    monkeypatch.setattr(pr, "radio_term",
                        lambda tx, bp, cfg: radios[tx.id])
    m = make_map(np.zeros((5, 5)))
    state = make_state(m, np.zeros((5, 5), dtype=bool))
    txs = [Transmitter(0, 0, id=0), Transmitter(9, 9, id=1)]
    got = priority(_bp(2, 2, (1, 0)), state, m, ObstacleMap.empty(5, 5), txs, _cfg())
    assert abs(got - 0.108) < 1e-12


def test_priority_single_tx_matches_term_product():
    rng = np.random.default_rng(5)
    vals = rng.random((11, 11))
    m = make_map(vals)
    mask = np.zeros((11, 11), dtype=bool)
    mask[4:7, 4:7] = True
    state = make_state(m, mask)
    cells = np.zeros((11, 11), dtype=bool)
    cells[8:10, 2:5] = True
    obstacles = ObstacleMap(cells)
    tx = Transmitter(-2.0, 5.0)
    cfg = _cfg()
    for bp in extract_boundary(state):
        expected = (confidence_term(state, bp.coord, cfg.patch_size)
                    * data_term(m, state, bp, cfg)
                    * block_term(obstacles, tx, bp.coord, cfg)
                    * radio_term(tx, bp, cfg))
        got = priority(bp, state, m, obstacles, [tx], cfg)
        assert abs(got - expected) < 1e-9


def test_priority_texture_mode_drops_radio_term(monkeypatch):
    monkeypatch.setattr(pr, "confidence_term", lambda *a, **k: 0.5)
    monkeypatch.setattr(pr, "data_term", lambda *a, **k: 0.8)
    monkeypatch.setattr(pr, "block_term", lambda *a, **k: 0.9)

    def _explode(*a, **k):
        raise AssertionError("radio term must not be used in texture mode")

    monkeypatch.setattr(pr, "radio_term", _explode)
    m = make_map(np.zeros((5, 5)))
    state = make_state(m, np.zeros((5, 5), dtype=bool))
    got = priority(_bp(2, 2, (1, 0)), state, m, ObstacleMap.empty(5, 5),
                   [Transmitter(0, 0)], _cfg(mode="texture"))
    assert abs(got - 0.5 * 0.8 * 0.9) < 1e-12


def test_priority_rejects_empty_transmitters():
    m = make_map(np.zeros((5, 5)))
    state = make_state(m, np.zeros((5, 5), dtype=bool))
    with pytest.raises(ValueError):
        priority(_bp(2, 2, (1, 0)), state, m, ObstacleMap.empty(5, 5), [], _cfg())


def test_priority_positive_whenever_confidence_positive():
    rng = np.random.default_rng(19)
    vals = rng.random((10, 10))
    m = make_map(vals)
    mask = np.zeros((10, 10), dtype=bool)
    mask[3:8, 3:8] = True
    state = make_state(m, mask)
    tx = Transmitter(-1.0, 4.0)
    obstacles = ObstacleMap(rng.random((10, 10)) < 0.2)
    for bp in extract_boundary(state):
        val = priority(bp, state, m, obstacles, [tx], _cfg())
        assert val > 0.0


# ---------------------------------------------------------------------------
# patch selection
# ---------------------------------------------------------------------------

def _selection_fixture():
    m = make_map(np.zeros((7, 7)))
    mask = np.zeros((7, 7), dtype=bool)
    mask[2, 2] = mask[3, 4] = mask[5, 1] = True
    state = make_state(m, mask)
    return m, state, extract_boundary(state)


def test_select_patch_argmax(monkeypatch):
    m, state, boundary = _selection_fixture()
    scores = {(2, 2): 0.2, (3, 4): 0.9, (5, 1): 0.4}
    monkeypatch.setattr(pr, "priority",
                        lambda bp, *a, **k: scores[(bp.coord.row, bp.coord.col)])
    bp, val = select_patch(boundary, state, m, ObstacleMap.empty(7, 7),
                           [Transmitter(0, 0)], _cfg())
    assert bp.coord == CellCoord(3, 4)
    assert val == 0.9


def test_select_patch_tie_breaks_lexicographic(monkeypatch):
    m, state, boundary = _selection_fixture()
    monkeypatch.setattr(pr, "priority", lambda bp, *a, **k: 0.7)
    bp, _ = select_patch(boundary, state, m, ObstacleMap.empty(7, 7),
                         [Transmitter(0, 0)], _cfg())
    assert bp.coord == CellCoord(2, 2)


def test_select_patch_matches_exhaustive_argmax():
    rng = np.random.default_rng(23)
    for trial in range(8):
        vals = rng.random((12, 12))
        m = make_map(vals)
        mask = np.zeros((12, 12), dtype=bool)
        mask[rng.random((12, 12)) < 0.25] = True
        mask[0, 0] = False
        if not mask.any():
            continue
        state = make_state(m, mask)
        boundary = extract_boundary(state)
        tx = Transmitter(-3.0, 6.0)
        obstacles = ObstacleMap(rng.random((12, 12)) < 0.15)
        cfg = _cfg()
        got_bp, got_val = select_patch(boundary, state, m, obstacles, [tx], cfg)
        best = None
        for bp in boundary:
            v = priority(bp, state, m, obstacles, [tx], cfg)
            key = (-v, bp.coord.row, bp.coord.col)
            if best is None or key < best[0]:
                best = (key, bp, v)
        assert got_bp.coord == best[1].coord
        assert got_val == best[2]


def test_select_patch_invariant_under_beta_rescale_equidistant():
    # all boundary points equidistant from tx: changing beta rescales every
    # priority by the same factor, so the winner must not move
    m_vals = np.random.default_rng(4).random((11, 11))
    m = make_map(m_vals)
    mask = np.zeros((11, 11), dtype=bool)
    for r, c in ((2, 5), (8, 5), (5, 2), (5, 8)):
        mask[r, c] = True
    state = make_state(m, mask)
    boundary = extract_boundary(state)
    tx = Transmitter(5.0, 5.0)
    obstacles = ObstacleMap.empty(11, 11)
    winners = []
    for beta in (0.5, 2.0, 4.0):
        state_i = make_state(m, mask)
        bnd = extract_boundary(state_i)
        bp, _ = select_patch(bnd, state_i, m, obstacles, [tx], _cfg(beta=beta))
        winners.append(bp.coord)
    assert winners[0] == winners[1] == winners[2]
    assert len(boundary) == 4
