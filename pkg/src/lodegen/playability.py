"""Reachability analysis under simplified Lode Runner movement.

Movement model: bricks (``b``) and blocks (``B``) are solid, everything else
is passable (enemies are ignored, digging is out). A cell is supported when
the cell below is solid ground or a ladder, or the cell itself is a ladder or
rope; the row below the grid counts as solid floor. An unsupported cell has
exactly one successor: straight down. From a supported cell the player can
walk left/right, climb up a ladder, or step/climb down into any passable cell
below. A level is playable when a spawn exists, it has at least one gold, and
every gold is reachable.

When per-tile availability sets are supplied (a partially collapsed level),
all predicates become optimistic: a move exists if any still-achievable
symbol combination allows it. Shrinking the sets can only shrink the
reachable region.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import MultipleSpawnsError
from .levels import BLOCK, BRICK, LADDER, PLAYER, GOLD, ROPE, TileGrid

_SOLID = (1 << BRICK) | (1 << BLOCK)
_SUPPORT_BELOW = _SOLID | (1 << LADDER)
_HOLDABLE = (1 << LADDER) | (1 << ROPE)
_ALL = (1 << 8) - 1


@dataclass
class ReachabilityReport:
    reachable_cells: np.ndarray
    gold_total: int
    gold_reachable: int
    playable: bool
    spawn: tuple[int, int] | None
    cells_expanded: int = 0

    @property
    def any_gold_reachable(self) -> bool:
        """Relaxed verdict: spawn present and at least one gold reachable."""
        return self.spawn is not None and self.gold_reachable >= 1


def _availability_masks(grid: TileGrid | None, availability: np.ndarray | None):
    """Per-cell bitmask of achievable symbols; concrete grids are singletons."""
    if availability is not None:
        bits = np.zeros(availability.shape[:2], dtype=np.int64)
        for s in range(8):
            bits |= availability[:, :, s].astype(np.int64) << s
        return bits
    bits = np.left_shift(np.int64(1), grid.cells.astype(np.int64))
    return bits


def analyze(
    grid: TileGrid | None,
    availability: np.ndarray | None = None,
    spawn: tuple[int, int] | None = None,
) -> ReachabilityReport:
    """Flood-fill reachability from the player spawn.

    Pass a concrete grid, or an (H, W, 8) availability array plus the known
    spawn tile for mid-generation analysis. With no spawn the report comes
    back unplayable rather than raising; more than one spawn in a concrete
    grid raises MultipleSpawnsError.
    """
    bits = _availability_masks(grid, availability)
    h, w = bits.shape

    if spawn is None and grid is not None:
        spawns = np.argwhere(grid.cells == PLAYER)
        if len(spawns) > 1:
            raise MultipleSpawnsError(f"{len(spawns)} spawn tiles present")
        if len(spawns) == 1:
            spawn = (int(spawns[0][0]), int(spawns[0][1]))

    gold_possible = (bits >> GOLD) & 1
    gold_total = int(gold_possible.sum())

    reachable = np.zeros((h, w), dtype=bool)
    expanded = 0
    if spawn is not None:
        passable = (bits & ~_SOLID) != 0
        can_hold = (bits & _HOLDABLE) != 0
        below_supports = np.zeros((h, w), dtype=bool)
        below_supports[: h - 1] = (bits[1:] & _SUPPORT_BELOW) != 0
        below_supports[h - 1] = True  # below-grid is solid floor
        below_passable = np.zeros((h, w), dtype=bool)
        below_passable[: h - 1] = passable[1:]
        # a fall is possible when the cell below can be passable non-ladder
        # and this cell can be non-ladder/rope
        below_fallthrough = np.zeros((h, w), dtype=bool)
        below_fallthrough[: h - 1] = (bits[1:] & ~_SOLID & ~(1 << LADDER)) != 0
        can_be_loose = (bits & ~_HOLDABLE) != 0
        can_be_ladder = (bits & (1 << LADDER)) != 0

        queue: deque[tuple[int, int]] = deque()
        if passable[spawn]:
            reachable[spawn] = True
            queue.append(spawn)
        while queue:
            r, c = queue.popleft()
            expanded += 1
            succ = []
            supported = below_supports[r, c] or can_hold[r, c]
            unsupported = below_fallthrough[r, c] and can_be_loose[r, c]
            if unsupported:
                succ.append((r + 1, c))
            if supported:
                if c > 0 and passable[r, c - 1]:
                    succ.append((r, c - 1))
                if c + 1 < w and passable[r, c + 1]:
                    succ.append((r, c + 1))
                if can_be_ladder[r, c] and r > 0 and passable[r - 1, c]:
                    succ.append((r - 1, c))
                if below_passable[r, c]:
                    succ.append((r + 1, c))
            for nr, nc in succ:
                if 0 <= nr < h and not reachable[nr, nc]:
                    reachable[nr, nc] = True
                    queue.append((nr, nc))

    gold_reachable = int((gold_possible.astype(bool) & reachable).sum())
    playable = spawn is not None and gold_total >= 1 and gold_reachable == gold_total
    return ReachabilityReport(
        reachable_cells=reachable,
        gold_total=gold_total,
        gold_reachable=gold_reachable,
        playable=playable,
        spawn=spawn,
        cells_expanded=expanded,
    )


def count_reachable_gold(grid: TileGrid) -> int:
    """Reachable-gold projection of analyze; degenerate levels count 0."""
    try:
        return analyze(grid).gold_reachable
    except MultipleSpawnsError:
        return 0
