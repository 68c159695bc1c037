import pytest

from copchase.board import Offset, Vertex, torus_distance, translate
from copchase.engine import GameSpec, GameState, Turn, simulate
from copchase.strategies import (
    ChiefSpeedySweep,
    FixedStart,
    GreedyEvader,
    KnightFormation,
    KnightPairSmall,
    RandomSafeEvader,
    StrategyError,
    TableCops,
    TableEvader,
    chief_pin,
    chief_speedy_sweep,
    default_cop_strategy,
    knight_formation,
    knight_pair_small,
    random_safe_evader,
    speedy_cop_count,
    sweep_foot_count,
    sweep_spec,
)


def all_starts(spec, cops_factory, table, bound):
    placement = cops_factory().place(spec, None)
    out = []
    for r in range(spec.n):
        for c in range(spec.n):
            v = Vertex(r, c)
            if v not in placement:
                out.append(simulate(spec, cops_factory(), FixedStart(TableEvader(table), v), bound))
    return out


# --------------------------------------------------------------------------
# two knights, small boards


def test_knight_pair_n3_wins_within_4_plies(table_for):
    table = table_for(3, ["knight"] * 2)
    games = all_starts(table.spec, lambda: knight_pair_small(3), table, 40)
    assert len(games) == 7
    assert all(g.outcome.cops_won and g.outcome.plies <= 4 for g in games)


def test_knight_pair_n4_vertex_1_reply():
    spec = GameSpec.from_names(4, ["knight"] * 2, "foot")
    cops = KnightPairSmall()
    cops.reset(spec, None)
    start = GameState.make(spec, cops.place(spec, None), Vertex(0, 2))
    action = cops.act(spec, start)
    # up 2, left 1 for both cops
    assert sorted(action) == sorted(translate(4, v, Offset(-2, -1)) for v in start.cops)
    left = KnightPairSmall._frame(4, action)
    rel = ((0 - left.row) % 4, (2 - left.col) % 4)
    assert rel == (2, 3)  # the second starred square


def test_knight_pair_n4_every_placement(table_for):
    table = table_for(4, ["knight"] * 2)
    games = all_starts(table.spec, lambda: knight_pair_small(4), table, 40)
    assert len(games) == 14
    assert all(g.outcome.cops_won for g in games)


def test_knight_pair_preconditions():
    with pytest.raises(ValueError):
        knight_pair_small(5)
    with pytest.raises(ValueError):
        KnightPairSmall().check_spec(GameSpec.from_names(4, ["knight", "chief"], "foot"))


# --------------------------------------------------------------------------
# three knights


@pytest.mark.parametrize("n", [5, 6, 7, 8])
def test_formation_beats_optimal_evader_everywhere(n, table_for):
    table = table_for(n, ["knight"] * 3)
    games = all_starts(table.spec, lambda: knight_formation(n), table, 40 * n)
    assert all(g.outcome.cops_won for g in games), [g.outcome for g in games if not g.outcome.cops_won]


def _offsets(n, cops):
    # pairwise differences do not depend on how the cops are labelled
    return sorted(((b.row - a.row) % n, (b.col - a.col) % n) for a in cops for b in cops)


@pytest.mark.parametrize("seed", range(6))
def test_formation_rigid_and_chase_closes_distance(seed):
    n = 40
    spec = GameSpec.from_names(n, ["knight"] * 3, "foot")
    start = Vertex(20 + seed, 17 + 2 * seed)
    tr = simulate(spec, KnightFormation(), FixedStart(GreedyEvader(), start), 20 * n, seed=seed)
    assert tr.outcome.cops_won
    shape = None
    prev = GameState.make(spec, tr.cop_placement, start)
    moves = tr.moves
    rounds = 0
    for i, m in enumerate(moves):
        if m.side is not Turn.COPS:
            if m.state is not None:
                prev = m.state
            continue
        if m.phase in ("CHASE", "HERD") and m.state is not None:
            offs = _offsets(n, m.state.cops)
            shape = shape or offs
            assert offs == shape
        if m.phase == "CHASE" and i + 1 < len(moves) and moves[i + 1].state is not None:
            center = translate(n, KnightFormation().formation_origin(n, prev.cops), KnightFormation.CENTER)
            dr = min((prev.robber.row - center.row) % n, (center.row - prev.robber.row) % n)
            dc = min((prev.robber.col - center.col) % n, (center.col - prev.robber.col) % n)
            if dr + dc >= 4 and dr >= 1 and dc >= 1:
                new_center = translate(n, KnightFormation().formation_origin(n, m.state.cops), KnightFormation.CENTER)
                after = torus_distance(n, new_center, moves[i + 1].state.robber)
                assert after - (dr + dc) <= -2
                rounds += 1
    assert rounds > 0


def test_formation_large_board_greedy_campaign():
    n = 64
    spec = GameSpec.from_names(n, ["knight"] * 3, "foot")
    worst = 0
    for seed in range(200):
        import random

        rng = random.Random(seed)
        start = Vertex(rng.randrange(3, n), rng.randrange(5, n))
        tr = simulate(spec, KnightFormation(), FixedStart(GreedyEvader(), start), 10 * n, seed=seed)
        assert tr.outcome.cops_won, (seed, tr.outcome)
        worst = max(worst, tr.outcome.plies)
    assert worst <= 10 * n


def test_formation_faults_when_broken():
    spec = GameSpec.from_names(9, ["knight"] * 3, "foot")
    state = GameState.make(spec, [Vertex(0, 0), Vertex(4, 4), Vertex(7, 1)], Vertex(4, 0))
    with pytest.raises(StrategyError):
        KnightFormation().act(spec, state)


def test_formation_preconditions():
    with pytest.raises(ValueError):
        knight_formation(4)


# --------------------------------------------------------------------------
# chief against a robber on foot


@pytest.mark.parametrize("n", [3, 4, 7, 10, 16, 20])
def test_chief_pin_beats_optimal_evader_everywhere(n, table_for):
    table = table_for(n, ["chief"])
    games = all_starts(table.spec, chief_pin, table, 40 * n)
    assert all(g.outcome.cops_won and g.outcome.plies <= 8 for g in games)


def test_chief_pin_robber_in_column_is_captured_at_once():
    spec = GameSpec.from_names(10, ["chief"], "foot")
    tr = simulate(spec, chief_pin(), FixedStart(GreedyEvader(), Vertex(6, 0)), 100)
    assert tr.outcome.cops_won and tr.outcome.plies == 1


@pytest.mark.parametrize("seed", range(10))
def test_chief_pin_vs_random(seed):
    spec = GameSpec.from_names(10, ["chief"], "foot")
    assert simulate(spec, chief_pin(), random_safe_evader(), 100, seed=seed).outcome.cops_won


# --------------------------------------------------------------------------
# chief and foot cops against a speedy robber


@pytest.mark.parametrize("m,f", [(2, 1), (3, 1), (4, 2), (6, 2), (7, 3)])
def test_sweep_group_size(m, f):
    assert sweep_foot_count(m) == 2 * f


@pytest.mark.parametrize("m,count", [(2, 3), (6, 5), (7, 7)])
def test_speedy_cop_count(m, count):
    assert speedy_cop_count(m) == count


@pytest.mark.parametrize("m", [1, 0])
def test_speedy_cop_count_rejects_small(m):
    with pytest.raises(ValueError):
        speedy_cop_count(m)


def test_sweep_beats_optimal_evader_everywhere(table_for):
    table = table_for(11, ["chief", "foot", "foot"], "speedy:2")
    games = all_starts(table.spec, lambda: chief_speedy_sweep(2), table, 66)
    assert len(games) == 118
    assert all(g.outcome.cops_won for g in games)


def test_sweep_m4_greedy_campaign():
    spec = sweep_spec(4, 27)
    import random

    for seed in range(100):
        rng = random.Random(seed)
        start = Vertex(rng.randrange(1, 27), rng.randrange(27))
        tr = simulate(spec, chief_speedy_sweep(4), FixedStart(GreedyEvader(), start), 6 * 27, seed=seed)
        assert tr.outcome.cops_won, (seed, tr.outcome)


@pytest.mark.parametrize("seed", range(8))
def test_sweep_chief_mirrors_and_row_is_fixed(seed):
    m, n = 5, 17
    spec = sweep_spec(m, n)
    tr = simulate(spec, ChiefSpeedySweep(m), RandomSafeEvader(), 6 * n, seed=seed)
    assert tr.outcome.cops_won
    rows = set()
    for mv in tr.moves:
        if mv.state is None:
            continue
        if mv.side is Turn.COPS:
            assert mv.state.cops[0].col == mv.state.robber.col
            rows.add(mv.state.robber.row)
    assert len(rows) == 1


def test_sweep_preconditions():
    with pytest.raises(ValueError):
        ChiefSpeedySweep(2).check_spec(GameSpec.from_names(8, ["chief", "foot", "foot"], "speedy:2"))
    with pytest.raises(ValueError):
        ChiefSpeedySweep(2).check_spec(GameSpec.from_names(11, ["chief", "foot"], "speedy:2"))
    with pytest.raises(ValueError):
        chief_speedy_sweep(1)


# --------------------------------------------------------------------------
# evaders


@pytest.mark.parametrize("n", [5, 6, 7, 8])
def test_greedy_survives_two_knights(n, table_for):
    table = table_for(n, ["knight"] * 2)
    tr = simulate(table.spec, TableCops(table), GreedyEvader(), 10 * n)
    assert tr.outcome.kind == "robber_survives"


def test_random_evader_is_deterministic_per_seed():
    spec = GameSpec.from_names(15, ["knight"] * 3, "foot")
    a = simulate(spec, KnightFormation(), RandomSafeEvader(), 300, seed=4).dumps()
    b = simulate(spec, KnightFormation(), RandomSafeEvader(), 300, seed=4).dumps()
    c = simulate(spec, KnightFormation(), RandomSafeEvader(), 300, seed=5).dumps()
    assert a == b and a != c


def test_default_strategy_lookup():
    assert default_cop_strategy(GameSpec.from_names(4, ["knight"] * 2, "foot")) == "knight-pair"
    assert default_cop_strategy(GameSpec.from_names(9, ["knight"] * 3, "foot")) == "knight-formation"
    assert default_cop_strategy(GameSpec.from_names(9, ["chief"], "foot")) == "chief-pin"
    assert default_cop_strategy(sweep_spec(3, 11)) == "chief-sweep"
    assert default_cop_strategy(GameSpec.from_names(9, ["foot"], "foot")) is None
