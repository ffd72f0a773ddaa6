import numpy as np
import pytest

from lodegen.errors import MultipleSpawnsError
from lodegen.levels import SYMBOL_INDEX, grid_from_rows
from lodegen.playability import analyze, count_reachable_gold

from conftest import random_grid


# -- independent oracle ----------------------------------------------------
# Written straight from the movement rules, as an explicit successor relation
# plus a set-based BFS. Deliberately shares no code with the implementation.

SOLID = {"B", "b"}


def oracle_successors(rows, r, c):
    h, w = len(rows), len(rows[0])

    def at(rr, cc):
        return rows[rr][cc]

    def passable(rr, cc):
        return at(rr, cc) not in SOLID

    cur = at(r, c)
    below_solid_floor = r + 1 >= h
    below = None if below_solid_floor else at(r + 1, c)
    supported = (
        below_solid_floor
        or below in ("B", "b", "#")
        or cur in ("#", "-")
    )
    if not supported:
        return [(r + 1, c)]  # irresistible fall
    succ = []
    if c - 1 >= 0 and passable(r, c - 1):
        succ.append((r, c - 1))
    if c + 1 < w and passable(r, c + 1):
        succ.append((r, c + 1))
    if cur == "#" and r - 1 >= 0 and passable(r - 1, c):
        succ.append((r - 1, c))
    if r + 1 < h and passable(r + 1, c):
        succ.append((r + 1, c))
    return succ


def oracle_reachable(rows):
    spawns = [
        (r, c)
        for r, row in enumerate(rows)
        for c, ch in enumerate(row)
        if ch == "M"
    ]
    if len(spawns) != 1:
        return set(), spawns
    frontier = {spawns[0]}
    seen = set()
    while frontier:
        cell = frontier.pop()
        if cell in seen:
            continue
        seen.add(cell)
        for nxt in oracle_successors(rows, *cell):
            if nxt not in seen:
                frontier.add(nxt)
    return seen, spawns


def oracle_gold_reachable(rows):
    seen, _ = oracle_reachable(rows)
    return sum(1 for r, c in seen if rows[r][c] == "G")


# -- handcrafted levels ----------------------------------------------------

def test_straight_walk_to_gold():
    rows = ["M...G", "BBBBB"]
    report = analyze(grid_from_rows(rows))
    assert report.gold_reachable == 1
    assert report.playable


def test_gold_above_without_ladder_unreachable():
    rows = [".G...", ".....", "M....", "BBBBB"]
    report = analyze(grid_from_rows(rows))
    assert report.gold_total == 1
    assert report.gold_reachable == 0
    assert not report.playable


def test_ladder_allows_climbing():
    rows = [
        "...G.",
        "BB#BB",
        "..#..",
        "M.#..",
        "BBBBB",
    ]
    report = analyze(grid_from_rows(rows))
    assert report.gold_reachable == 1
    assert report.playable


def test_rope_traversal_and_drop():
    rows = [
        "M----.",
        "B....G",
        "B.BBBB",
    ]
    # walk onto the rope from the spawn ledge, drop at the end, land by gold
    report = analyze(grid_from_rows(rows))
    assert report.gold_reachable == 1


def test_fall_is_forced():
    # spawn floats: the only move is straight down, away from the side gold
    rows = [
        "M.G",
        "..B",
        "...",
        "BBB",
    ]
    report = analyze(grid_from_rows(rows))
    assert report.gold_reachable == 0
    assert report.reachable_cells[1, 0]
    assert report.reachable_cells[2, 0]
    assert not report.reachable_cells[0, 2]


def test_enemies_are_ignored():
    rows = ["M.E.G", "BBBBB"]
    report = analyze(grid_from_rows(rows))
    assert report.playable


def test_bricks_block_walking():
    rows = ["M.b.G", "BBBBB"]
    report = analyze(grid_from_rows(rows))
    assert report.gold_reachable == 0


def test_no_spawn_reports_unplayable():
    rows = ["..G", "BBB"]
    report = analyze(grid_from_rows(rows))
    assert report.spawn is None
    assert not report.playable
    assert report.gold_reachable == 0


def test_multiple_spawns_raise():
    rows = ["M.M", "BBB"]
    with pytest.raises(MultipleSpawnsError):
        analyze(grid_from_rows(rows))


def test_zero_gold_level_unplayable():
    rows = ["M..", "BBB"]
    report = analyze(grid_from_rows(rows))
    assert report.gold_total == 0
    assert not report.playable


def test_all_gold_needed_for_playable():
    rows = ["M.G.b.G", "BBBBBBB"]
    report = analyze(grid_from_rows(rows))
    assert report.gold_total == 2
    assert report.gold_reachable == 1
    assert not report.playable
    assert report.any_gold_reachable


HANDCRAFTED = [
    [
        "........",
        "..G..#..",
        "BBBB.#..",
        "M....#G.",
        "BBBBBBBB",
    ],
    [
        "-------.",
        "M......G",
        "BB.bb.BB",
        "..G.....",
        "BBBBBBBB",
    ],
    [
        "#.......",
        "#BBBB.G.",
        "#....BBB",
        "#M......",
        "BBBBBBBB",
    ],
    [
        "G......G",
        "B##..##B",
        ".#....#.",
        ".#.M..#.",
        "BBBBBBBB",
    ],
    [
        "........",
        ".G..b...",
        "bbbbb---",
        "M......G",
        "BBBBbbBB",
    ],
    [
        # ladder tops: standing on the top cell of a ladder
        "..G.....",
        "..#..G..",
        "..#.bbbb",
        "M.#.....",
        "BBBB.BBB",
    ],
    [
        # rope over a pit; dropping mid-rope is the only way down
        "M---...G",
        "B...B.bB",
        "B.G.B.bB",
        "BBBBBBBB",
    ],
    [
        # enemies everywhere; they must not block anything
        "M.E.E.EG",
        "BBBEBBBB",
        ".E....E.",
        "BBBBBBBB",
    ],
    [
        # sealed chamber: gold walled off on all sides
        "M....bGb",
        "bbbb.bbb",
        "....G...",
        "BBBBBBBB",
    ],
    [
        # long fall chain from a high perch through open shafts
        "M.......",
        "B....G..",
        "B.bbbbb.",
        "B.b...b.",
        "B...G.b.",
        "BBBBBBBB",
    ],
]


@pytest.mark.parametrize("rows", HANDCRAFTED, ids=range(len(HANDCRAFTED)))
def test_handcrafted_levels_match_oracle(rows):
    report = analyze(grid_from_rows(rows))
    seen, _ = oracle_reachable(rows)
    got = {(r, c) for r, c in np.argwhere(report.reachable_cells)}
    assert got == seen
    assert report.gold_reachable == oracle_gold_reachable(rows)


def test_random_levels_match_oracle(rng):
    agreements = 0
    for _ in range(200):
        h, w = int(rng.integers(4, 10)), int(rng.integers(4, 10))
        base = random_grid(rng, h, w, symbols="..bB#-GE")
        rows = ["".join(base.symbol_at(rr, cc) for cc in range(w)) for rr in range(h)]
        r, c = int(rng.integers(h)), int(rng.integers(w))
        rows[r] = rows[r][:c] + "M" + rows[r][c + 1 :]
        report = analyze(grid_from_rows(rows))
        seen, _ = oracle_reachable(rows)
        got = {(rr, cc) for rr, cc in np.argwhere(report.reachable_cells)}
        assert got == seen
        assert report.gold_reachable == oracle_gold_reachable(rows)
        agreements += 1
    assert agreements == 200


def test_count_reachable_gold_projections():
    assert count_reachable_gold(grid_from_rows(["M..", "BBB"])) == 0
    assert count_reachable_gold(grid_from_rows(["..G", "BBB"])) == 0  # no spawn
    assert count_reachable_gold(grid_from_rows(["M.G.G", "BBBBB"])) == 2


def test_flood_fill_linear_visits(rng):
    for _ in range(20):
        h, w = int(rng.integers(4, 12)), int(rng.integers(4, 12))
        grid = random_grid(rng, h, w, symbols=".B#-G")
        cells = grid.cells.copy()
        cells[0, 0] = SYMBOL_INDEX["M"]
        from lodegen.levels import TileGrid

        report = analyze(TileGrid(h, w, cells))
        assert report.cells_expanded <= h * w


# -- optimistic availability -----------------------------------------------

def singleton_availability(grid):
    avail = np.zeros((grid.height, grid.width, 8), dtype=bool)
    for r in range(grid.height):
        for c in range(grid.width):
            avail[r, c, grid.cells[r, c]] = True
    return avail


def test_availability_singletons_match_concrete():
    rows = [
        "........",
        "..G..#..",
        "BBBB.#..",
        "M....#G.",
        "BBBBBBBB",
    ]
    grid = grid_from_rows(rows)
    concrete = analyze(grid)
    spawn = concrete.spawn
    optimistic = analyze(None, availability=singleton_availability(grid), spawn=spawn)
    assert np.array_equal(optimistic.reachable_cells, concrete.reachable_cells)
    assert optimistic.gold_reachable == concrete.gold_reachable


def test_optimistic_monotone_under_shrinking(rng):
    """Shrinking availability sets never grows the reachable region."""
    for _ in range(20):
        h, w = 6, 8
        grid = random_grid(rng, h, w, symbols=".B#-G")
        wide = np.ones((h, w, 8), dtype=bool)
        narrow = singleton_availability(grid)
        spawn = (0, 0)
        rep_wide = analyze(None, availability=wide, spawn=spawn)
        rep_narrow = analyze(None, availability=narrow, spawn=spawn)
        assert not np.any(rep_narrow.reachable_cells & ~rep_wide.reachable_cells)
        assert rep_narrow.gold_reachable <= rep_wide.gold_reachable


def test_uncertain_cell_grants_both_interpretations():
    # below the spawn the tile may be solid or empty: both standing moves and
    # the fall must be offered
    h, w = 3, 3
    avail = np.zeros((h, w, 8), dtype=bool)
    avail[:, :, SYMBOL_INDEX["."]] = True
    avail[1, 1, SYMBOL_INDEX["B"]] = True  # under the spawn: maybe solid
    spawn = (0, 1)
    report = analyze(None, availability=avail, spawn=spawn)
    assert report.reachable_cells[0, 0]  # walk left (supported reading)
    assert report.reachable_cells[1, 1]  # fall through (empty reading)
