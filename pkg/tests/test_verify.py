import json

import pytest

from copchase.engine import GameSpec, Transcript, replay
from copchase.moves import CHIEF_RULE, FOOT_RULE, KNIGHT_RULE, chief_coverage_count
from copchase.board import Vertex
from copchase.strategies import StayCops, knight_pair_small
from copchase.verify import (
    CONFIRMED,
    DISCREPANCY,
    REFUTED,
    VerificationReport,
    coverage_grid,
    figure_label,
    format_grid,
    max_distance_change,
    protection_count_map,
    verify_cop_number,
    verify_knight_distance_bound,
    verify_plus_shape,
    verify_speedy_formula,
    verify_speedy_lower_bound,
    verify_strategy,
)


def test_refuted_needs_witness():
    with pytest.raises(ValueError):
        VerificationReport("x", {}, REFUTED)
    with pytest.raises(ValueError):
        VerificationReport("x", {}, "maybe")


def test_report_json_shape():
    r = verify_plus_shape(5)
    data = json.loads(r.dumps())
    assert set(data) == {"check", "params", "verdict", "witness", "runtime_ms"}
    assert data["witness"]["pairs"] == 625


@pytest.mark.parametrize("n", [5, 9])
@pytest.mark.parametrize("occupancy", [False, True])
def test_plus_shape(n, occupancy):
    r = verify_plus_shape(n, occupancy)
    assert r.verdict == CONFIRMED
    assert r.witness["max_coverage"] == 4


def test_plus_shape_fails_on_tiny_board():
    # on 4x4 two knights can cover the whole plus; the witness must show it
    r = verify_plus_shape(4, occupancy=True)
    assert r.verdict == REFUTED
    from copchase.moves import protected_by
    from copchase.board import translate
    from copchase.verify import PLUS

    a, b = (Vertex(*v) for v in r.witness["cops"])
    covered = protected_by(4, KNIGHT_RULE, a) | protected_by(4, KNIGHT_RULE, b) | {a, b}
    assert all(translate(4, Vertex(0, 0), o) in covered for o in PLUS)


def test_coverage_grid_structure():
    m, n = 5, 23
    grid = coverage_grid(m, n)
    # same column: 2m+2 within m (diagonals reach the robber's row), 2m+1 beyond
    assert [int(grid[d, 0]) for d in range(1, 8)] == [12, 12, 12, 12, 12, 11, 11]
    assert grid[0, 0] == -1
    # off-axis region agrees with the 3/4/6 narrative except near the diagonal start
    for a in range(1, m + 1):
        for b in range(1, m + 1):
            if a != b:
                assert grid[(-b) % n, a] == figure_label(a, b, m)
    assert grid[(-1) % n, 1] == 5 and grid[(-3) % n, 3] == 3


def test_coverage_grid_matches_direct_count():
    grid = coverage_grid(3, 15)
    for v in [(1, 2), (7, 7), (14, 0), (3, 12)]:
        assert grid[v] == chief_coverage_count(15, Vertex(*v), Vertex(0, 0), 3)


@pytest.mark.parametrize("m", [2, 3, 8])
def test_protection_count_map_reports_real_maximum(m):
    grid, r = protection_count_map(m, 4 * m + 3)
    assert r.verdict == REFUTED
    assert r.witness["max"] == 2 * m + 2
    assert r.witness["axis_counts"] == [2 * m + 1, 2 * m + 2]
    assert r.witness["off_axis_max"] < 2 * m + 2


def test_m2_has_no_six_cells():
    grid = coverage_grid(2, 11)
    off = [grid[r, c] for r in range(11) for c in range(11) if r and c]
    assert max(off) < 6


def test_figure_discrepancies_are_diagonal_only():
    _, r = protection_count_map(5, 23)
    cells = {(d["right"], d["up"]) for d in r.witness["figure_cells_disagreeing"]}
    assert cells == {(1, 1), (2, 2)}
    assert r.witness["figure_cells_agreeing"] == 23


def test_format_grid():
    text = format_grid(coverage_grid(2, 11), radius=2)
    assert text.splitlines()[2].split()[2] == "R"


def test_cop_number_reports():
    assert verify_cop_number(3, [KNIGHT_RULE], FOOT_RULE, 2, 4).verdict == CONFIRMED
    r = verify_cop_number(3, [KNIGHT_RULE], FOOT_RULE, 1, 4)
    assert r.verdict == REFUTED and r.witness["cop_number"] == 2
    lower = r.witness["per_k"][0]
    assert lower["cops_can_win"] is False and "escape" in lower
    r = verify_cop_number(12, [CHIEF_RULE], FOOT_RULE, 1, 2)
    assert r.verdict == CONFIRMED


def test_cop_number_budget_recorded():
    r = verify_cop_number(9, [KNIGHT_RULE], FOOT_RULE, 3, 4, max_states=1000)
    assert r.verdict == DISCREPANCY and r.budget_exceeded


def test_strategy_report_confirmed():
    spec = GameSpec.from_names(4, ["knight"] * 2, "foot")
    r = verify_strategy(spec, lambda: knight_pair_small(4), 20)
    assert r.verdict == CONFIRMED and r.witness["games"] == 14


def test_strategy_refutation_replays():
    spec = GameSpec.from_names(7, ["chief"], "foot")
    r = verify_strategy(spec, StayCops, 30)
    assert r.verdict == REFUTED
    tr = Transcript.from_json(r.witness["transcript"])
    assert tr.outcome.kind == "robber_survives"
    assert replay(tr).dumps() == tr.dumps()


def test_strategy_campaign_mode_is_reproducible():
    spec = GameSpec.from_names(30, ["knight"] * 3, "foot")
    from copchase.strategies import KnightFormation

    a = verify_strategy(spec, KnightFormation, 300, seeds=range(3), use_solver=False)
    b = verify_strategy(spec, KnightFormation, 300, seeds=range(3), use_solver=False)
    assert a.verdict == CONFIRMED and a.witness == b.witness
    assert a.params["evaders"] == "greedy+random"


@pytest.mark.parametrize("n", [5, 7, 9, 12])
def test_knight_distance(n):
    r = verify_knight_distance_bound(n)
    assert r.verdict == CONFIRMED


def test_distance_change_brute_force():
    # direct triple loop on a small board as a check of the vectorised version
    from copchase.board import torus_distance, vertices
    from copchase.moves import destinations

    n = 6
    best = max(
        abs(torus_distance(n, u, x) - torus_distance(n, w, x))
        for u in vertices(n)
        for w in destinations(n, KNIGHT_RULE, u)
        for x in vertices(n)
    )
    assert best == max_distance_change(n, KNIGHT_RULE)[0] == 3


def test_speedy_reports():
    assert verify_speedy_formula().verdict == CONFIRMED
    r = verify_speedy_lower_bound(2, 11)
    assert r.verdict == CONFIRMED
    assert r.witness["cops_can_win"] is False
