"""Collapse state over the pattern lattice.

A Wave keeps one boolean domain per lattice cell over the pattern ids.
apply_pattern collapses a cell and restores arc consistency with an AC-3
style worklist over the 4-neighbor lattice graph; an emptied domain surfaces
as ContradictionError and ends the episode (no backtracking).

The wave as constructed holds every pattern everywhere, which may not be
arc-consistent yet (edge-of-input patterns can lack neighbors in some
direction). The first propagation therefore sweeps the whole lattice once;
every later propagation is incremental from the cells that changed.
"""

from __future__ import annotations

from collections import deque

import numpy as np

from .errors import (
    AllCollapsedError,
    ContradictionError,
    InvalidPatternError,
    NoPlayerPatternsError,
    NotFullyCollapsedError,
    PlacementFailedError,
)
from .levels import PLAYER, TileGrid
from .patterns import (
    DIRECTION_VECTORS,
    DIRECTIONS,
    AdjacencyRules,
    PatternSet,
)

PLAYER_PLACEMENT_RETRIES = 20


class Wave:
    """Per-cell candidate-pattern domains over the (H-n+1) x (W-n+1) lattice."""

    def __init__(self, ps: PatternSet, rules: AdjacencyRules, level_h: int, level_w: int, seed):
        if level_h < ps.n or level_w < ps.n:
            raise ValueError("level dimensions must be at least the window size")
        self.ps = ps
        self.rules = rules
        self.level_h = level_h
        self.level_w = level_w
        self.lattice_h = level_h - ps.n + 1
        self.lattice_w = level_w - ps.n + 1
        self.domains = np.ones((self.lattice_h, self.lattice_w, len(ps)), dtype=bool)
        self.rng = np.random.default_rng(seed)
        self.spawn_tile: tuple[int, int] | None = None
        self._ac_swept = False
        self._avail_cache: np.ndarray | None = None

    # -- state queries ----------------------------------------------------

    @property
    def collapsed_count(self) -> int:
        return int(np.count_nonzero(self.domains.sum(axis=2) == 1))

    @property
    def fully_collapsed(self) -> bool:
        return bool(np.all(self.domains.sum(axis=2) == 1))

    def domain_ids(self, cell: tuple[int, int]) -> np.ndarray:
        return np.flatnonzero(self.domains[cell])

    def domain_size(self, cell: tuple[int, int]) -> int:
        return int(self.domains[cell].sum())

    def clone(self) -> "Wave":
        """Copy of the collapse state sharing the immutable rule tables.

        The clone gets an independent rng; previews that only apply patterns
        never draw from it, so cloning cannot disturb the episode stream.
        """
        w = object.__new__(Wave)
        w.ps = self.ps
        w.rules = self.rules
        w.level_h = self.level_h
        w.level_w = self.level_w
        w.lattice_h = self.lattice_h
        w.lattice_w = self.lattice_w
        w.domains = self.domains.copy()
        w.rng = np.random.default_rng()
        w.spawn_tile = self.spawn_tile
        w._ac_swept = self._ac_swept
        w._avail_cache = self._avail_cache
        return w

    # -- propagation ------------------------------------------------------

    def _propagate(self, seeds, triggering_action: int | None = None):
        """Restore arc consistency starting from the seed cells.

        Until the first sweep has happened, the worklist is primed with every
        cell so patterns with no viable neighbor in some direction get culled
        globally.
        """
        self._avail_cache = None
        queue: deque[tuple[int, int]] = deque()
        if not self._ac_swept:
            queue.extend(
                (r, c) for r in range(self.lattice_h) for c in range(self.lattice_w)
            )
            self._ac_swept = True
        queue.extend(seeds)
        queued = set(queue)
        while queue:
            u = queue.popleft()
            queued.discard(u)
            dom_u = self.domains[u]
            for d in DIRECTIONS:
                dr, dc = DIRECTION_VECTORS[d]
                v = (u[0] + dr, u[1] + dc)
                if not (0 <= v[0] < self.lattice_h and 0 <= v[1] < self.lattice_w):
                    continue
                support = self.rules.matrices[d][dom_u].any(axis=0)
                new_dom = self.domains[v] & support
                if np.array_equal(new_dom, self.domains[v]):
                    continue
                if not new_dom.any():
                    raise ContradictionError(v, triggering_action)
                self.domains[v] = new_dom
                if v not in queued:
                    queue.append(v)
                    queued.add(v)

    # -- operations -------------------------------------------------------

    def next_cell_to_collapse(self) -> tuple[int, int]:
        """Uncollapsed cell with the smallest domain; ties broken uniformly."""
        counts = self.domains.sum(axis=2)
        uncollapsed = counts > 1
        if not uncollapsed.any():
            raise AllCollapsedError("every cell is already collapsed")
        best = counts[uncollapsed].min()
        candidates = np.argwhere(uncollapsed & (counts == best))
        pick = candidates[self.rng.integers(len(candidates))]
        return int(pick[0]), int(pick[1])

    def apply_pattern(self, cell: tuple[int, int], pattern_id: int):
        """Collapse ``cell`` to ``pattern_id`` and propagate to fixpoint."""
        if not self.domains[cell][pattern_id]:
            raise InvalidPatternError(
                f"pattern {pattern_id} not in domain of cell {cell}"
            )
        changed = self.domains[cell].sum() > 1
        self.domains[cell] = False
        self.domains[cell][pattern_id] = True
        self._avail_cache = None
        self._propagate([cell] if changed else [], triggering_action=pattern_id)

    def place_player(self, retries: int = PLAYER_PLACEMENT_RETRIES):
        """Collapse one uniformly drawn cell to a uniformly drawn player pattern.

        Afterwards every pattern that would paint a second player tile is
        removed: a player pattern stays in another cell's domain only when its
        player offset projects exactly onto the placed spawn tile. Each failed
        attempt (contradiction) redraws, up to ``retries`` times.
        """
        player_ids = self.ps.player_pattern_ids()
        if len(player_ids) == 0:
            raise NoPlayerPatternsError("cannot place player: no player patterns")
        last_error: ContradictionError | None = None
        for _ in range(retries):
            cell = (
                int(self.rng.integers(self.lattice_h)),
                int(self.rng.integers(self.lattice_w)),
            )
            pattern_id = int(player_ids[self.rng.integers(len(player_ids))])
            snapshot = self.domains.copy()
            swept = self._ac_swept
            try:
                self.apply_pattern(cell, pattern_id)
                self._remove_extra_player_patterns(cell, pattern_id, player_ids)
                return
            except ContradictionError as err:
                self.domains = snapshot
                self._ac_swept = swept
                self.spawn_tile = None
                self._avail_cache = None
                last_error = err
        raise PlacementFailedError(
            f"player placement contradicted {retries} times: {last_error}"
        )

    def _remove_extra_player_patterns(self, cell, pattern_id: int, player_ids):
        off = self.ps.pattern(pattern_id).player_offset()
        spawn = (cell[0] + off[0], cell[1] + off[1])
        self.spawn_tile = spawn
        self._avail_cache = None
        changed = []
        for pid in player_ids:
            p_off = self.ps.pattern(int(pid)).player_offset()
            # the one anchor where this pattern's player lands on the spawn tile
            ok_anchor = (spawn[0] - p_off[0], spawn[1] - p_off[1])
            cells = np.argwhere(self.domains[:, :, pid])
            for r, c in cells:
                if (int(r), int(c)) == ok_anchor:
                    continue
                self.domains[r, c, pid] = False
                if not self.domains[r, c].any():
                    raise ContradictionError((int(r), int(c)), int(pid))
                changed.append((int(r), int(c)))
        self._propagate(changed)

    def random_partial_collapse(self, k: int):
        """Collapse up to ``k`` cells by plain frequency-weighted selection.

        Used only to diversify training start states. Contradictions propagate
        to the caller, which restarts the episode under a fresh seed.
        """
        freq = self.ps.frequency.astype(np.float64)
        for _ in range(k):
            if self.fully_collapsed:
                break
            cell = self.next_cell_to_collapse()
            ids = self.domain_ids(cell)
            weights = freq[ids]
            pick = self.rng.choice(len(ids), p=weights / weights.sum())
            self.apply_pattern(cell, int(ids[pick]))

    def decode_tiles(self) -> TileGrid:
        """Read the level back out of a fully collapsed wave.

        Tile (r, c) comes from the nearest anchored pattern covering it;
        overlap-consistent rules guarantee all covering patterns agree.
        """
        if not self.fully_collapsed:
            raise NotFullyCollapsedError("wave still has uncollapsed cells")
        chosen = np.argmax(self.domains, axis=2)
        cells = np.zeros((self.level_h, self.level_w), dtype=np.uint8)
        for r in range(self.level_h):
            lr = min(r, self.lattice_h - 1)
            for c in range(self.level_w):
                lc = min(c, self.lattice_w - 1)
                cells[r, c] = self.ps.tiles[chosen[lr, lc], r - lr, c - lc]
        return TileGrid(self.level_h, self.level_w, cells)

    def tile_availability(self) -> np.ndarray:
        """(level_h, level_w, 8) boolean: symbols still achievable per tile.

        The union over every covering lattice cell of the symbols its domain
        patterns put at that tile. Fully collapsed regions therefore reduce to
        singletons.
        """
        if self._avail_cache is not None:
            return self._avail_cache
        n = self.ps.n
        avail = np.zeros((self.level_h, self.level_w, 8), dtype=bool)
        # pattern_symbols[p, i, j, s]: pattern p has symbol s at offset (i, j)
        sym = self._pattern_symbols()
        flat = self.domains.reshape(-1, len(self.ps)).astype(np.int32)
        for i in range(n):
            for j in range(n):
                contrib = (flat @ sym[:, i, j, :].astype(np.int32) > 0).reshape(
                    self.lattice_h, self.lattice_w, 8
                )
                avail[i : i + self.lattice_h, j : j + self.lattice_w] |= contrib
        avail.setflags(write=False)
        self._avail_cache = avail
        return avail

    def _pattern_symbols(self) -> np.ndarray:
        cached = getattr(self.ps, "_onehot_cache", None)
        if cached is None:
            n = self.ps.n
            cached = np.zeros((len(self.ps), n, n, 8), dtype=np.uint8)
            for s in range(8):
                cached[..., s] = self.ps.tiles == s
            object.__setattr__(self.ps, "_onehot_cache", cached)
        return cached

    def dump_domains(self) -> list[list[list[int]]]:
        """Nested per-cell domain id lists, for debugging snapshots."""
        return [
            [[int(p) for p in np.flatnonzero(self.domains[r, c])] for c in range(self.lattice_w)]
            for r in range(self.lattice_h)
        ]


def new_wave(
    ps: PatternSet,
    rules: AdjacencyRules,
    level_h: int,
    level_w: int,
    seed=None,
) -> Wave:
    """Fresh wave with every pattern available in every cell."""
    return Wave(ps, rules, level_h, level_w, seed)
