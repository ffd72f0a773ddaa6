"""Pattern extraction and directional adjacency learning.

Patterns are N x N tile windows anchored at their top-left cell, collected at
every anchor position of every input level (non-wrapping, no rotations or
reflections). The pattern lattice of an H x W level therefore has
(H-n+1) x (W-n+1) cells. Adjacency is learned either from observed offset-1
co-occurrences or from pure (n-1)-overlap compatibility.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import (
    EmptyAfterExclusionError,
    InputTooSmallError,
    NoPlayerPatternsError,
)
from .levels import PLAYER, SYMBOLS, TileGrid

UP, DOWN, LEFT, RIGHT = range(4)
DIRECTIONS = (UP, DOWN, LEFT, RIGHT)
DIRECTION_NAMES = ("up", "down", "left", "right")
DIRECTION_VECTORS = ((-1, 0), (1, 0), (0, -1), (0, 1))
OPPOSITE = (DOWN, UP, RIGHT, LEFT)


@dataclass(frozen=True)
class Pattern:
    """One deduplicated N x N window; ``tiles`` is an (n, n) uint8 array."""

    id: int
    n: int
    tiles: np.ndarray

    def tiles_string(self) -> str:
        return "".join(SYMBOLS[v] for v in self.tiles.flat)

    def contains_player(self) -> bool:
        return bool(np.any(self.tiles == PLAYER))

    def player_offset(self) -> tuple[int, int] | None:
        """Window offset of the player tile, or None."""
        pos = np.argwhere(self.tiles == PLAYER)
        if len(pos) == 0:
            return None
        return int(pos[0][0]), int(pos[0][1])


class PatternSet:
    """Ordered, deduplicated patterns with occurrence counts.

    Ids are dense 0..len-1 in first-seen order; they double as the action
    alphabet for selection policies.
    """

    def __init__(self, n: int, tiles: np.ndarray, frequency: np.ndarray, source_count: int):
        if tiles.ndim != 3 or tiles.shape[1:] != (n, n):
            raise ValueError("tiles must have shape (count, n, n)")
        self.n = n
        self.tiles = tiles
        self.frequency = frequency
        self.source_count = source_count
        self.tiles.setflags(write=False)
        self.frequency.setflags(write=False)
        self._index = {t.tobytes(): i for i, t in enumerate(tiles)}

    def __len__(self) -> int:
        return len(self.tiles)

    def pattern(self, pattern_id: int) -> Pattern:
        return Pattern(pattern_id, self.n, self.tiles[pattern_id])

    def __iter__(self):
        return (self.pattern(i) for i in range(len(self)))

    def id_of(self, window: np.ndarray) -> int | None:
        """Dense id of an (n, n) window, or None if not in the set."""
        return self._index.get(np.ascontiguousarray(window, dtype=np.uint8).tobytes())

    def player_pattern_ids(self) -> np.ndarray:
        return np.flatnonzero(np.any(self.tiles == PLAYER, axis=(1, 2)))


class AdjacencyRules:
    """Allowed neighbor sets per (pattern, cardinal direction).

    Stored as four (P, P) boolean matrices: ``allowed[d][p, q]`` is True when
    pattern q may sit at offset DIRECTION_VECTORS[d] from pattern p.
    Symmetric by construction: allowed[LEFT] == allowed[RIGHT].T and
    allowed[UP] == allowed[DOWN].T.
    """

    def __init__(self, matrices: list[np.ndarray]):
        self.matrices = matrices
        for m in matrices:
            m.setflags(write=False)

    @property
    def n_patterns(self) -> int:
        return self.matrices[0].shape[0]

    def allowed(self, pattern_id: int, direction: int) -> np.ndarray:
        """Sorted ids allowed next to ``pattern_id`` in ``direction``."""
        return np.flatnonzero(self.matrices[direction][pattern_id])

    def is_allowed(self, p: int, direction: int, q: int) -> bool:
        return bool(self.matrices[direction][p, q])


def _window_id_grid(ps: PatternSet, grid: TileGrid) -> np.ndarray:
    """Pattern-lattice id map of a grid; -1 where the window is not in ps."""
    n = ps.n
    lh, lw = grid.height - n + 1, grid.width - n + 1
    ids = np.full((lh, lw), -1, dtype=np.int64)
    for r in range(lh):
        for c in range(lw):
            pid = ps.id_of(grid.cells[r : r + n, c : c + n])
            if pid is not None:
                ids[r, c] = pid
    return ids


def extract_patterns(inputs: list[TileGrid], n: int = 3) -> PatternSet:
    """Collect all distinct n x n windows over all inputs with summed counts.

    Windows are taken at every anchor (r, c) with 0 <= r <= H-n and
    0 <= c <= W-n, so a single H x W input contributes (H-n+1)(W-n+1)
    occurrences in total.
    """
    if n < 2:
        raise ValueError("window size must be at least 2")
    if not inputs:
        raise ValueError("at least one input level required")
    for g in inputs:
        if g.height < n or g.width < n:
            raise InputTooSmallError(
                f"input {g.height}x{g.width} is smaller than the {n}x{n} window"
            )
    tiles: list[np.ndarray] = []
    counts: list[int] = []
    index: dict[bytes, int] = {}
    for g in inputs:
        for r in range(g.height - n + 1):
            for c in range(g.width - n + 1):
                window = np.ascontiguousarray(g.cells[r : r + n, c : c + n])
                key = window.tobytes()
                pid = index.get(key)
                if pid is None:
                    index[key] = len(tiles)
                    tiles.append(window)
                    counts.append(1)
                else:
                    counts[pid] += 1
    return PatternSet(
        n,
        np.stack(tiles),
        np.asarray(counts, dtype=np.int64),
        source_count=len(inputs),
    )


def exclude_rare(ps: PatternSet, keep_player_patterns: bool = True) -> PatternSet:
    """Drop patterns with a single occurrence; re-densify ids preserving order.

    Player-tile patterns are kept regardless of count when
    ``keep_player_patterns`` is set, since they are typically unique and are
    required to propagate the player placement.
    """
    keep = ps.frequency >= 2
    if keep_player_patterns:
        keep |= np.any(ps.tiles == PLAYER, axis=(1, 2))
    if not np.any(keep):
        raise EmptyAfterExclusionError("no patterns left after rare exclusion")
    return PatternSet(
        ps.n,
        np.ascontiguousarray(ps.tiles[keep]),
        np.ascontiguousarray(ps.frequency[keep]),
        ps.source_count,
    )


def _overlap_ok_right(ps: PatternSet, p: int, q: int) -> bool:
    n = ps.n
    return bool(np.array_equal(ps.tiles[p][:, 1:], ps.tiles[q][:, : n - 1]))


def _overlap_ok_down(ps: PatternSet, p: int, q: int) -> bool:
    n = ps.n
    return bool(np.array_equal(ps.tiles[p][1:, :], ps.tiles[q][: n - 1, :]))


def learn_adjacency(
    ps: PatternSet, inputs: list[TileGrid], mode: str = "observed"
) -> AdjacencyRules:
    """Learn per-direction allowed-neighbor sets.

    ``observed``: q is allowed right of p iff some input has p anchored at
    (r, c) and q anchored at (r, c+1); vertical likewise. ``overlap``: allowed
    iff the (n-1)-wide window overlap matches. Observed pairs always satisfy
    the overlap equality, so observed rules are a subset of overlap rules.
    Patterns excluded from ps simply contribute no pairs.
    """
    count = len(ps)
    right = np.zeros((count, count), dtype=bool)
    down = np.zeros((count, count), dtype=bool)
    if mode == "observed":
        for g in inputs:
            ids = _window_id_grid(ps, g)
            for r in range(ids.shape[0]):
                for c in range(ids.shape[1]):
                    p = ids[r, c]
                    if p < 0:
                        continue
                    if c + 1 < ids.shape[1] and ids[r, c + 1] >= 0:
                        right[p, ids[r, c + 1]] = True
                    if r + 1 < ids.shape[0] and ids[r + 1, c] >= 0:
                        down[p, ids[r + 1, c]] = True
    elif mode == "overlap":
        n = ps.n
        flat = ps.tiles.reshape(count, n * n)
        # Compare shifted columns/rows pairwise without a Python double loop.
        left_part = ps.tiles[:, :, 1:].reshape(count, -1)
        right_part = ps.tiles[:, :, : n - 1].reshape(count, -1)
        top_part = ps.tiles[:, 1:, :].reshape(count, -1)
        bottom_part = ps.tiles[:, : n - 1, :].reshape(count, -1)
        for p in range(count):
            right[p] = np.all(left_part[p] == right_part, axis=1)
            down[p] = np.all(top_part[p] == bottom_part, axis=1)
        del flat
    else:
        raise ValueError(f"unknown adjacency mode: {mode!r}")
    matrices = [None] * 4
    matrices[RIGHT] = right
    matrices[LEFT] = right.T.copy()
    matrices[DOWN] = down
    matrices[UP] = down.T.copy()
    return AdjacencyRules(matrices)


def get_player_patterns(ps: PatternSet) -> set[int]:
    """Ids of patterns whose window contains the player tile."""
    ids = ps.player_pattern_ids()
    if len(ids) == 0:
        raise NoPlayerPatternsError("pattern set has no player-tile pattern")
    return set(int(i) for i in ids)


def dump_json(ps: PatternSet, rules: AdjacencyRules) -> str:
    """Byte-stable JSON dump of patterns and rules, ordered by id then direction."""
    payload = {
        "n": ps.n,
        "patterns": [
            {
                "id": p.id,
                "tiles": p.tiles_string(),
                "freq": int(ps.frequency[p.id]),
            }
            for p in ps
        ],
        "rules": [
            {
                "p": pid,
                "dir": DIRECTION_NAMES[d],
                "allowed": [int(q) for q in rules.allowed(pid, d)],
            }
            for pid in range(len(ps))
            for d in DIRECTIONS
        ],
    }
    return json.dumps(payload, separators=(",", ":"), sort_keys=False)
