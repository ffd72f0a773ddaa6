"""Head-to-head: one-step greedy lookahead against the frequency-random
baseline on a small batch of seeds."""

from lodegen import (
    ContradictionError,
    Env,
    EnvConfig,
    analyze,
    episode_rollout,
    frequency_random_policy,
    greedy_lookahead_policy,
    parse_level,
)
from lodegen import data
from lodegen.errors import PlacementFailedError

grids = [parse_level((data.levels_dir() / "level_1.txt").read_text())]
env = Env(EnvConfig(level_height=11, level_width=16, seed=0), input_grids=grids)

def playable_rate(policy, n=25):
    playable = total = 0
    for seed in range(n):
        try:
            outcome, _ = episode_rollout(policy, env, seed)
        except PlacementFailedError:
            continue
        total += 1
        if not isinstance(outcome, ContradictionError) and analyze(outcome).playable:
            playable += 1
    return playable, total

for name, policy in [
    ("frequency-random", frequency_random_policy(env.patterns)),
    ("greedy lookahead", greedy_lookahead_policy(env)),
]:
    playable, total = playable_rate(policy)
    print(f"{name:>17}: {playable}/{total} playable")
