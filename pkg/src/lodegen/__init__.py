"""Constraint-learned level generation for Lode-Runner-style tile grids.

The package learns N x N tile patterns and their directional adjacency from
example levels, then generates new levels by collapsing a constraint wave one
pattern at a time, with the pattern choice delegated to a pluggable policy
(frequency-weighted random, greedy one-step lookahead, or an ES-trained
linear scorer). Reachability analysis under simplified Lode Runner movement
supplies the reward and the playability verdicts.
"""

from .errors import (
    ContradictionError,
    LodegenError,
)
from .levels import SYMBOLS, TileGrid, grid_from_rows, parse_level, render_level
from .patterns import (
    AdjacencyRules,
    Pattern,
    PatternSet,
    exclude_rare,
    extract_patterns,
    get_player_patterns,
    learn_adjacency,
)
from .playability import ReachabilityReport, analyze, count_reachable_gold
from .wave import Wave, new_wave
from .env import Env, EnvConfig, episode_rollout, load_config, parse_config
from .policies import (
    ESConfig,
    LinearPolicy,
    LinearPolicyParams,
    es_train,
    frequency_random_policy,
    greedy_lookahead_policy,
)
from .metrics import batch_evaluate, pairwise_diversity, tp_kldiv

__all__ = [
    "AdjacencyRules",
    "ContradictionError",
    "Env",
    "EnvConfig",
    "ESConfig",
    "LinearPolicy",
    "LinearPolicyParams",
    "LodegenError",
    "Pattern",
    "PatternSet",
    "ReachabilityReport",
    "SYMBOLS",
    "TileGrid",
    "Wave",
    "analyze",
    "batch_evaluate",
    "count_reachable_gold",
    "es_train",
    "exclude_rare",
    "extract_patterns",
    "frequency_random_policy",
    "get_player_patterns",
    "greedy_lookahead_policy",
    "grid_from_rows",
    "learn_adjacency",
    "new_wave",
    "pairwise_diversity",
    "parse_level",
    "parse_config",
    "load_config",
    "render_level",
    "tp_kldiv",
]

__version__ = "0.1.0"
