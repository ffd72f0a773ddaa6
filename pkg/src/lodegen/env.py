"""Step-wise generation environment: observations, masks, rewards, episodes.

Each episode collapses one pattern per step at the currently most constrained
lattice cell. The observation is the per-tile symbol availability, translated
so the target cell's top-left tile sits at the center of a double-sized,
zero-padded tensor; the player symbol folds into the empty channel. Rewards
follow the change in optimistically-reachable gold, with a completion bonus
for finishing a playable level and a large penalty for a contradiction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields as dataclass_fields
from pathlib import Path

import numpy as np

from . import playability
from .errors import (
    AllCollapsedError,
    ConfigError,
    ContradictionError,
    EpisodeFinishedError,
    MaskedActionError,
    RetryBudgetExceededError,
)
from .levels import EMPTY, PLAYER, TileGrid, parse_level
from .patterns import AdjacencyRules, PatternSet, exclude_rare, extract_patterns, learn_adjacency
from .wave import Wave, new_wave

OBS_CHANNELS = 7  # alphabet minus the player channel
EPISODE_RESTART_BUDGET = 20


@dataclass
class EnvConfig:
    """Everything that pins down one experiment configuration."""

    inputs: tuple[str, ...] = ()
    n: int = 3
    exclude_rare: bool = False
    keep_player_patterns: bool = True
    random_collapse: bool = False
    random_collapse_max_fraction: float = 0.10
    adjacency_mode: str = "observed"
    w_gold: float = 1.0
    completion_bonus: float = 10.0
    contradiction_penalty: float = -20.0
    level_height: int = 22
    level_width: int = 32
    seed: int = 0

    def validate(self):
        for name in ("w_gold", "completion_bonus", "contradiction_penalty"):
            if not np.isfinite(getattr(self, name)):
                raise ConfigError(f"{name} must be finite")
        if not 0.0 <= self.random_collapse_max_fraction <= 1.0:
            raise ConfigError("random_collapse_max_fraction must be in [0, 1]")
        if self.adjacency_mode not in ("observed", "overlap"):
            raise ConfigError(f"unknown adjacency_mode: {self.adjacency_mode!r}")
        if self.n < 2:
            raise ConfigError("n must be at least 2")
        if self.level_height < self.n or self.level_width < self.n:
            raise ConfigError("level dimensions must be at least the window size")
        return self


_BOOL_KEYS = {"exclude_rare", "keep_player_patterns", "random_collapse"}
_INT_KEYS = {"n", "level_height", "level_width", "seed"}
_FLOAT_KEYS = {
    "random_collapse_max_fraction",
    "w_gold",
    "completion_bonus",
    "contradiction_penalty",
}


def parse_config(text: str, base_dir: str | Path | None = None) -> EnvConfig:
    """Parse a plain-text ``key = value`` config; unknown keys are rejected.

    Relative input paths resolve against ``base_dir`` when given.
    """
    known = {f.name for f in dataclass_fields(EnvConfig)}
    cfg = EnvConfig()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in known:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            if key == "inputs":
                paths = tuple(p.strip() for p in value.split(",") if p.strip())
                if base_dir is not None:
                    paths = tuple(
                        str((Path(base_dir) / p)) if not Path(p).is_absolute() else p
                        for p in paths
                    )
                setattr(cfg, key, paths)
            elif key in _BOOL_KEYS:
                if value.lower() not in ("true", "false", "on", "off", "1", "0"):
                    raise ValueError(value)
                setattr(cfg, key, value.lower() in ("true", "on", "1"))
            elif key in _INT_KEYS:
                setattr(cfg, key, int(value))
            elif key in _FLOAT_KEYS:
                setattr(cfg, key, float(value))
            else:
                setattr(cfg, key, value)
        except ValueError as err:
            raise ConfigError(f"line {lineno}: bad value for {key}: {err}") from err
    return cfg.validate()


def load_config(path: str | Path) -> EnvConfig:
    p = Path(path)
    return parse_config(p.read_text(encoding="utf-8"), base_dir=p.parent)


def availability_to_channels(avail: np.ndarray) -> np.ndarray:
    """(H, W, 8) availability -> (H, W, 7) observation channels (M -> empty)."""
    ch = avail[:, :, :OBS_CHANNELS].copy()
    ch[:, :, EMPTY] |= avail[:, :, PLAYER]
    return ch


def build_observation(avail: np.ndarray, target_tile: tuple[int, int]) -> np.ndarray:
    """Zero-padded (2H, 2W, 7) tensor with ``target_tile`` placed at (H, W)."""
    h, w = avail.shape[:2]
    tr, tc = target_tile
    obs = np.zeros((2 * h, 2 * w, OBS_CHANNELS), dtype=bool)
    obs[h - tr : 2 * h - tr, w - tc : 2 * w - tc] = availability_to_channels(avail)
    return obs


@dataclass
class StepResult:
    observation: np.ndarray
    mask: np.ndarray
    reward: float
    done: bool
    info: dict


@dataclass
class TraceStep:
    step: int
    location: tuple[int, int]
    mask_popcount: int
    action: int
    reward: float
    collapsed_count: int


EpisodeTrace = list


def trace_to_jsonl(trace: list[TraceStep]) -> str:
    lines = []
    for t in trace:
        lines.append(
            json.dumps(
                {
                    "step": t.step,
                    "loc": [t.location[0], t.location[1]],
                    "mask_popcount": t.mask_popcount,
                    "action": t.action,
                    "reward": t.reward,
                    "collapsed_count": t.collapsed_count,
                },
                separators=(",", ":"),
            )
        )
    return "\n".join(lines) + ("\n" if lines else "")


def trace_from_jsonl(text: str) -> list[TraceStep]:
    trace = []
    for line in text.splitlines():
        if not line.strip():
            continue
        d = json.loads(line)
        trace.append(
            TraceStep(
                step=d["step"],
                location=(d["loc"][0], d["loc"][1]),
                mask_popcount=d["mask_popcount"],
                action=d["action"],
                reward=d["reward"],
                collapsed_count=d["collapsed_count"],
            )
        )
    return trace


class Env:
    """One episode driver; corpus artifacts are built once and reused."""

    def __init__(self, config: EnvConfig, input_grids: list[TileGrid] | None = None):
        config.validate()
        self.config = config
        if input_grids is None:
            input_grids = [
                parse_level(Path(p).read_text(encoding="utf-8")) for p in config.inputs
            ]
        if not input_grids:
            raise ConfigError("no input levels")
        for i, g in enumerate(input_grids):
            if g.count("M") != 1:
                raise ConfigError(
                    f"input level {i} has {g.count('M')} spawn tiles, expected exactly 1"
                )
        self.input_grids = input_grids
        ps = extract_patterns(input_grids, config.n)
        if config.exclude_rare:
            ps = exclude_rare(ps, keep_player_patterns=config.keep_player_patterns)
        self.patterns: PatternSet = ps
        self.rules: AdjacencyRules = learn_adjacency(ps, input_grids, config.adjacency_mode)
        self.wave: Wave | None = None
        self.target: tuple[int, int] | None = None
        self._done = True
        self._gold_reachable = 0

    @property
    def n_actions(self) -> int:
        return len(self.patterns)

    @property
    def done(self) -> bool:
        return self._done

    def _optimistic_gold(self, wave: Wave) -> int:
        report = playability.analyze(
            None, availability=wave.tile_availability(), spawn=wave.spawn_tile
        )
        return report.gold_reachable

    def reset(self, seed: int | None = None):
        """Start a fresh episode; returns (observation, mask, location).

        A contradiction during the optional random pre-collapse restarts the
        whole episode under a derived seed, up to EPISODE_RESTART_BUDGET times.
        """
        if seed is None:
            seed = self.config.seed
        cfg = self.config
        for attempt in range(EPISODE_RESTART_BUDGET):
            wave = new_wave(
                self.patterns,
                self.rules,
                cfg.level_height,
                cfg.level_width,
                seed=np.random.SeedSequence((seed, attempt)),
            )
            try:
                wave.place_player()
                if cfg.random_collapse:
                    cells = wave.lattice_h * wave.lattice_w
                    k_max = int(np.ceil(cfg.random_collapse_max_fraction * cells))
                    k = int(wave.rng.integers(0, k_max + 1))
                    uncollapsed = cells - wave.collapsed_count
                    wave.random_partial_collapse(min(k, uncollapsed))
            except ContradictionError:
                continue
            self.wave = wave
            self._gold_reachable = self._optimistic_gold(wave)
            self._done = wave.fully_collapsed
            self.target = None if self._done else wave.next_cell_to_collapse()
            obs = build_observation(
                wave.tile_availability(), self.target if self.target else (0, 0)
            )
            mask = self.current_mask()
            return obs, mask, self.target
        raise RetryBudgetExceededError(
            f"episode setup contradicted {EPISODE_RESTART_BUDGET} times"
        )

    def current_mask(self) -> np.ndarray:
        if self.target is None:
            return np.zeros(self.n_actions, dtype=bool)
        return self.wave.domains[self.target].copy()

    def info(self, contradiction: bool = False) -> dict:
        return {
            "collapsed_count": self.wave.collapsed_count if self.wave else 0,
            "gold_reachable": self._gold_reachable,
            "contradiction": contradiction,
        }

    def _terminal_reward(self, wave: Wave, gold_after: int) -> float:
        reward = self.config.w_gold * (gold_after - self._gold_reachable)
        grid = wave.decode_tiles()
        if playability.analyze(grid).playable:
            reward += self.config.completion_bonus
        return reward

    def preview_reward(self, action: int) -> float:
        """Step reward this action would earn, computed on a cloned wave."""
        if self._done or self.target is None:
            raise EpisodeFinishedError("no live episode")
        if not self.wave.domains[self.target][action]:
            raise MaskedActionError(f"action {action} is masked out")
        trial = self.wave.clone()
        try:
            trial.apply_pattern(self.target, action)
        except ContradictionError:
            return self.config.contradiction_penalty
        gold_after = self._optimistic_gold(trial)
        if trial.fully_collapsed:
            return self._terminal_reward(trial, gold_after)
        return self.config.w_gold * (gold_after - self._gold_reachable)

    def step(self, action: int) -> StepResult:
        """Collapse the target cell to ``action`` and advance the episode."""
        if self._done:
            raise EpisodeFinishedError("episode already terminated")
        action = int(action)
        if not 0 <= action < self.n_actions or not self.wave.domains[self.target][action]:
            raise MaskedActionError(f"action {action} is masked out at {self.target}")
        prev_avail = self.wave.tile_availability()
        applied_at = self.target
        try:
            self.wave.apply_pattern(self.target, action)
        except ContradictionError:
            self._done = True
            self.target = None
            obs = build_observation(prev_avail, applied_at)
            return StepResult(
                observation=obs,
                mask=np.zeros(self.n_actions, dtype=bool),
                reward=self.config.contradiction_penalty,
                done=True,
                info=self.info(contradiction=True),
            )
        avail = self.wave.tile_availability()
        gold_after = playability.analyze(
            None, availability=avail, spawn=self.wave.spawn_tile
        ).gold_reachable
        if self.wave.fully_collapsed:
            reward = self._terminal_reward(self.wave, gold_after)
            self._gold_reachable = gold_after
            self._done = True
            self.target = None
            return StepResult(
                observation=build_observation(avail, applied_at),
                mask=np.zeros(self.n_actions, dtype=bool),
                reward=reward,
                done=True,
                info=self.info(),
            )
        reward = self.config.w_gold * (gold_after - self._gold_reachable)
        self._gold_reachable = gold_after
        self.target = self.wave.next_cell_to_collapse()
        return StepResult(
            observation=build_observation(avail, self.target),
            mask=self.current_mask(),
            reward=reward,
            done=False,
            info=self.info(),
        )


def episode_rollout(policy, env: Env, seed: int):
    """Drive one episode to termination.

    Returns (outcome, trace): outcome is the decoded TileGrid on success or
    the ContradictionError that ended the episode. The policy is reseeded
    deterministically from the episode seed when it supports reseed().
    """
    if hasattr(policy, "reseed"):
        policy.reseed(np.random.SeedSequence((seed, 0x9E3779B9)))
    obs, mask, loc = env.reset(seed)
    trace: list[TraceStep] = []
    step_idx = 0
    outcome = None
    while not env.done:
        action = int(policy(obs, mask, loc))
        result = env.step(action)
        trace.append(
            TraceStep(
                step=step_idx,
                location=loc,
                mask_popcount=int(mask.sum()),
                action=action,
                reward=result.reward,
                collapsed_count=result.info["collapsed_count"],
            )
        )
        step_idx += 1
        if result.done:
            if result.info["contradiction"]:
                outcome = ContradictionError(loc, action)
            else:
                outcome = env.wave.decode_tiles()
            break
        obs, mask, loc = result.observation, result.mask, env.target
    if outcome is None:
        # episode was fully determined at reset (degenerate corpus)
        outcome = env.wave.decode_tiles()
    return outcome, trace
