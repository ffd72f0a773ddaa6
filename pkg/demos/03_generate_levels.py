"""Generate a few 16x11 levels with the frequency-weighted random policy and
check their playability."""

from lodegen import (
    ContradictionError,
    Env,
    EnvConfig,
    analyze,
    episode_rollout,
    frequency_random_policy,
    parse_level,
    render_level,
)
from lodegen import data

grids = [parse_level((data.levels_dir() / "level_1.txt").read_text())]
env = Env(EnvConfig(level_height=11, level_width=16, seed=0), input_grids=grids)
policy = frequency_random_policy(env.patterns)

for seed in range(4):
    outcome, trace = episode_rollout(policy, env, seed)
    if isinstance(outcome, ContradictionError):
        print(f"seed {seed}: contradiction after {len(trace)} steps\n")
        continue
    report = analyze(outcome)
    verdict = "playable" if report.playable else "unplayable"
    print(
        f"seed {seed}: {len(trace)} steps, gold {report.gold_reachable}/{report.gold_total}, {verdict}"
    )
    print(render_level(outcome, "text").decode())
