"""Train the linear selection policy with mirrored-sampling ES at a small
level size, then evaluate the learned weights at a bigger one."""

from lodegen import (
    ContradictionError,
    ESConfig,
    Env,
    EnvConfig,
    LinearPolicy,
    analyze,
    episode_rollout,
    es_train,
    parse_level,
)
from lodegen import data
from lodegen.errors import PlacementFailedError

grids = [parse_level((data.levels_dir() / "level_1.txt").read_text())]

train_env = Env(EnvConfig(level_height=8, level_width=11, seed=0), input_grids=grids)
es = ESConfig(population=16, sigma=0.2, alpha=0.1, generations=12, episodes_per_eval=6, seed=0)
print(f"training: population {es.population}, {es.generations} generations")
params, curve = es_train(train_env, es)
for row in curve:
    print(
        f"  gen {row['generation']}: population mean {row['mean_return']:+.3f}, "
        f"max {row['max_return']:+.3f}"
    )

eval_env = Env(EnvConfig(level_height=11, level_width=16, seed=0), input_grids=grids)
policy = LinearPolicy(params, eval_env.patterns)
playable = total = 0
for seed in range(20):
    try:
        outcome, _ = episode_rollout(policy, eval_env, seed)
    except PlacementFailedError:
        continue
    total += 1
    if not isinstance(outcome, ContradictionError) and analyze(outcome).playable:
        playable += 1
print(f"\ntrained policy at 16x11: {playable}/{total} playable")
