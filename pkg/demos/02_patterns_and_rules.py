"""Extract window patterns and adjacency rules from the bundled corpus and
show what rare-pattern exclusion does to the action alphabet."""

from lodegen import exclude_rare, extract_patterns, learn_adjacency, parse_level
from lodegen import data
from lodegen.patterns import DIRECTION_NAMES, DIRECTIONS

grids = [
    parse_level((data.levels_dir() / name).read_text())
    for name in ("level_1.txt", "level_2.txt", "level_3.txt")
]

ps = extract_patterns(grids, n=3)
print(f"{len(ps)} distinct 3x3 patterns over {ps.source_count} input levels")
print(f"total window occurrences: {int(ps.frequency.sum())}")

rare = [p for p in ps if ps.frequency[p.id] == 1]
print(f"{len(rare)} patterns occur exactly once")

trimmed = exclude_rare(ps, keep_player_patterns=True)
print(f"after rare exclusion (player patterns protected): {len(trimmed)} patterns")

rules = learn_adjacency(trimmed, grids, mode="observed")
pattern = trimmed.pattern(0)
print(f"\nneighbors of pattern 0 ({pattern.tiles_string()!r}):")
for d in DIRECTIONS:
    allowed = rules.allowed(0, d)
    print(f"  {DIRECTION_NAMES[d]:>5}: {len(allowed)} allowed")
