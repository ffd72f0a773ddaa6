"""Diversity and batch-evaluation metrics.

Level diversity uses the KL divergence between smoothed n x n tile-pattern
distributions (epsilon added on the union support, then renormalized),
averaged over ordered pairs so the set-level score is symmetric.
"""

from __future__ import annotations

import csv
import io
import json
import math
from collections import Counter
from dataclasses import dataclass, field

from .errors import ContradictionError, GridTooSmallError, TooFewLevelsError
from .levels import TileGrid
from . import playability

DEFAULT_EPSILON = 1e-5


def window_counts(grid: TileGrid, n: int = 3) -> Counter:
    """Occurrence counts of every n x n window of a level."""
    if grid.height < n or grid.width < n:
        raise GridTooSmallError(f"grid {grid.height}x{grid.width} below {n}x{n}")
    counts: Counter = Counter()
    for r in range(grid.height - n + 1):
        for c in range(grid.width - n + 1):
            counts[grid.cells[r : r + n, c : c + n].tobytes()] += 1
    return counts


def smoothed_distributions(
    a: TileGrid, b: TileGrid, n: int = 3, epsilon: float = DEFAULT_EPSILON
):
    """Window-count distributions of two levels, epsilon-smoothed over their
    union support and renormalized. Returns (probs_a, probs_b) keyed by the
    same ordered support."""
    ca, cb = window_counts(a, n), window_counts(b, n)
    support = sorted(set(ca) | set(cb))  # fixed order keeps sums bit-stable
    na = sum(ca.values()) + epsilon * len(support)
    nb = sum(cb.values()) + epsilon * len(support)
    pa = {key: (ca.get(key, 0) + epsilon) / na for key in support}
    pb = {key: (cb.get(key, 0) + epsilon) / nb for key in support}
    return pa, pb


def tp_kldiv(a: TileGrid, b: TileGrid, n: int = 3, epsilon: float = DEFAULT_EPSILON) -> float:
    """D_KL(P_a || P_b) over epsilon-smoothed window distributions."""
    pa, pb = smoothed_distributions(a, b, n, epsilon)
    return sum(pa[key] * math.log(pa[key] / pb[key]) for key in pa)


def pairwise_diversity(levels: list[TileGrid], n: int = 3, epsilon: float = DEFAULT_EPSILON) -> float:
    """Mean tp_kldiv over all ordered pairs (i != j)."""
    if len(levels) < 2:
        raise TooFewLevelsError("pairwise diversity needs at least two levels")
    total = 0.0
    pairs = 0
    for i, x in enumerate(levels):
        for j, y in enumerate(levels):
            if i == j:
                continue
            total += tp_kldiv(x, y, n, epsilon)
            pairs += 1
    return total / pairs


@dataclass
class BatchReport:
    episodes: int
    playable_rate: float
    unplayable_rate: float
    contradiction_rate: float
    playable_any_gold_rate: float  # relaxed verdict: >= 1 gold reachable
    diversity: float | None
    collapsed_curve: list[float] = field(default_factory=list)
    available_patterns_curve: list[float] = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(
            {
                "episodes": self.episodes,
                "playable_rate": self.playable_rate,
                "unplayable_rate": self.unplayable_rate,
                "contradiction_rate": self.contradiction_rate,
                "playable_any_gold_rate": self.playable_any_gold_rate,
                "diversity": self.diversity,
                "collapsed_curve": self.collapsed_curve,
                "available_patterns_curve": self.available_patterns_curve,
            },
            separators=(",", ":"),
        )


def _mean_curve(series: list[list[float]]) -> list[float]:
    if not series:
        return []
    length = max(len(s) for s in series)
    out = []
    for i in range(length):
        vals = [s[i] for s in series if len(s) > i]
        out.append(sum(vals) / len(vals))
    return out


def batch_evaluate(episodes, n: int = 3, epsilon: float = DEFAULT_EPSILON) -> BatchReport:
    """Aggregate (outcome, trace) pairs from episode rollouts.

    An outcome is either a completed TileGrid or the ContradictionError that
    killed the episode. Diversity is the mean pairwise divergence over the
    playable levels only; None when fewer than two exist.
    """
    if not episodes:
        raise ValueError("at least one episode required")
    playable_levels: list[TileGrid] = []
    counts = {"playable": 0, "unplayable": 0, "contradiction": 0}
    any_gold = 0
    collapsed_series = []
    popcount_series = []
    for outcome, trace in episodes:
        collapsed_series.append([t.collapsed_count for t in trace])
        popcount_series.append([t.mask_popcount for t in trace])
        if isinstance(outcome, ContradictionError):
            counts["contradiction"] += 1
            continue
        report = playability.analyze(outcome)
        if report.playable:
            counts["playable"] += 1
            playable_levels.append(outcome)
        else:
            counts["unplayable"] += 1
        if report.any_gold_reachable:
            any_gold += 1
    total = len(episodes)
    diversity = None
    if len(playable_levels) >= 2:
        diversity = pairwise_diversity(playable_levels, n, epsilon)
    return BatchReport(
        episodes=total,
        playable_rate=counts["playable"] / total,
        unplayable_rate=counts["unplayable"] / total,
        contradiction_rate=counts["contradiction"] / total,
        playable_any_gold_rate=any_gold / total,
        diversity=diversity,
        collapsed_curve=_mean_curve(collapsed_series),
        available_patterns_curve=_mean_curve(popcount_series),
    )


CSV_COLUMNS = ("config_id", "seed", "playable", "unplayable", "contradiction", "diversity")


def report_csv_row(config_id: str, seed: int, report: BatchReport | None) -> dict:
    """One grid-cell result row; empty metric fields flag a failed cell."""
    if report is None:
        return {
            "config_id": config_id,
            "seed": seed,
            "playable": "",
            "unplayable": "",
            "contradiction": "",
            "diversity": "",
        }
    return {
        "config_id": config_id,
        "seed": seed,
        "playable": f"{report.playable_rate:.4f}",
        "unplayable": f"{report.unplayable_rate:.4f}",
        "contradiction": f"{report.contradiction_rate:.4f}",
        "diversity": "" if report.diversity is None else f"{report.diversity:.6f}",
    }


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()
