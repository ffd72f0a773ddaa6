"""Tile-selection policies and the evolution-strategies trainer.

A policy is a callable ``(observation, mask, location) -> action id`` whose
result always has its mask bit set. Sampling policies expose ``reseed`` so a
rollout can bind them to the episode seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .env import Env, OBS_CHANNELS, episode_rollout
from .errors import (
    DivergedParamsError,
    MaskedActionError,
    PlacementFailedError,
    RetryBudgetExceededError,
)
from .patterns import PatternSet

PARAMS_FORMAT_VERSION = 1


class FrequencyRandomPolicy:
    """Vanilla selection: a mask-valid pattern drawn proportionally to its
    corpus frequency. This is the control every learned policy is compared
    against."""

    def __init__(self, ps: PatternSet, seed=None):
        self._weights = ps.frequency.astype(np.float64)
        self.rng = np.random.default_rng(seed)

    def reseed(self, seed):
        self.rng = np.random.default_rng(seed)

    def __call__(self, observation, mask, location) -> int:
        ids = np.flatnonzero(mask)
        if len(ids) == 0:
            raise MaskedActionError("empty action mask")
        w = self._weights[ids]
        return int(ids[self.rng.choice(len(ids), p=w / w.sum())])


class GreedyLookaheadPolicy:
    """Picks the mask-valid action with the best one-step reward, simulated
    on a cloned wave; ties resolve to the lowest pattern id."""

    def __init__(self, env: Env, depth: int = 1):
        if depth != 1:
            raise ValueError("only depth-1 lookahead is implemented")
        self.env = env

    def __call__(self, observation, mask, location) -> int:
        ids = np.flatnonzero(mask)
        if len(ids) == 0:
            raise MaskedActionError("empty action mask")
        scores = np.array([self.env.preview_reward(int(a)) for a in ids])
        return int(ids[int(np.argmax(scores))])


def frequency_random_policy(ps: PatternSet, seed=None) -> FrequencyRandomPolicy:
    return FrequencyRandomPolicy(ps, seed)


def greedy_lookahead_policy(env: Env, depth: int = 1) -> GreedyLookaheadPolicy:
    return GreedyLookaheadPolicy(env, depth)


@dataclass
class LinearPolicyParams:
    """Weights for the linear scorer.

    The feature vector concatenates the (2k+1) x (2k+1) x 7 observation patch
    around the target with the candidate pattern's n^2 x 7 one-hot content, so
    theta has (2k+1)^2 * 7 + n^2 * 7 entries.
    """

    k: int
    n: int
    t: int
    theta: np.ndarray

    @property
    def patch_dim(self) -> int:
        return (2 * self.k + 1) ** 2 * self.t

    @property
    def content_dim(self) -> int:
        return self.n * self.n * self.t

    @classmethod
    def zeros(cls, n: int, k: int = 4, t: int = OBS_CHANNELS) -> "LinearPolicyParams":
        dim = (2 * k + 1) ** 2 * t + n * n * t
        return cls(k=k, n=n, t=t, theta=np.zeros(dim))

    def save(self, path: str | Path):
        payload = {
            "format_version": PARAMS_FORMAT_VERSION,
            "k": self.k,
            "n": self.n,
            "t": self.t,
            "theta": [float(x) for x in self.theta],
        }
        Path(path).write_text(json.dumps(payload), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "LinearPolicyParams":
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        if payload.get("format_version") != PARAMS_FORMAT_VERSION:
            raise ValueError(f"unsupported params format: {payload.get('format_version')}")
        return cls(
            k=payload["k"],
            n=payload["n"],
            t=payload["t"],
            theta=np.asarray(payload["theta"], dtype=np.float64),
        )


def _pattern_content_features(ps: PatternSet, t: int) -> np.ndarray:
    """(P, n*n*t) one-hot pattern content with the player symbol folded into
    the empty channel, matching the observation encoding."""
    cached = getattr(ps, "_content_features", None)
    if cached is not None:
        return cached
    count, n = len(ps), ps.n
    onehot = np.zeros((count, n, n, 8), dtype=np.float64)
    for s in range(8):
        onehot[..., s] = ps.tiles == s
    chans = onehot[..., :t].copy()
    chans[..., 0] += onehot[..., 7]
    feats = chans.reshape(count, n * n * t)
    feats.setflags(write=False)
    object.__setattr__(ps, "_content_features", feats)
    return feats


def extract_patch(observation: np.ndarray, k: int) -> np.ndarray:
    """Flattened (2k+1)^2 x channels patch around the observation center."""
    h, w = observation.shape[0] // 2, observation.shape[1] // 2
    patch = observation[h - k : h + k + 1, w - k : w + k + 1, :]
    if patch.shape[:2] != (2 * k + 1, 2 * k + 1):
        padded = np.zeros((2 * k + 1, 2 * k + 1, observation.shape[2]), dtype=bool)
        rs, cs = max(0, k - h), max(0, k - w)
        padded[rs : rs + patch.shape[0], cs : cs + patch.shape[1]] = patch
        patch = padded
    return patch.astype(np.float64).ravel()


def linear_policy_act(
    params: LinearPolicyParams,
    ps: PatternSet,
    observation: np.ndarray,
    mask: np.ndarray,
    location,
) -> int:
    """Argmax of theta . phi(patch, pattern) over mask-valid actions; ties go
    to the lowest pattern id."""
    ids = np.flatnonzero(mask)
    if len(ids) == 0:
        raise MaskedActionError("empty action mask")
    theta_patch = params.theta[: params.patch_dim]
    theta_content = params.theta[params.patch_dim :]
    base = float(extract_patch(observation, params.k) @ theta_patch)
    content = _pattern_content_features(ps, params.t)
    scores = content[ids] @ theta_content + base
    return int(ids[int(np.argmax(scores))])


class LinearPolicy:
    def __init__(self, params: LinearPolicyParams, ps: PatternSet):
        if params.n != ps.n:
            raise ValueError("params window size does not match pattern set")
        self.params = params
        self.ps = ps

    def __call__(self, observation, mask, location) -> int:
        return linear_policy_act(self.params, self.ps, observation, mask, location)


class RemotePolicy:
    """Defers each decision to an external controller.

    ``transport`` is any callable mapping one request dict to one response
    dict; the request carries the observation shape/data, mask, and location,
    and the response must contain an integer ``action``.
    """

    def __init__(self, transport):
        self.transport = transport

    def __call__(self, observation, mask, location) -> int:
        request = {
            "query": "act",
            "obs": {
                "shape": list(observation.shape),
                "data": [int(v) for v in observation.ravel()],
            },
            "mask": [int(v) for v in mask],
            "loc": [int(location[0]), int(location[1])],
        }
        reply = self.transport(request)
        action = int(reply["action"])
        if not mask[action]:
            raise MaskedActionError(f"remote controller chose masked action {action}")
        return action


@dataclass
class ESConfig:
    population: int = 32
    sigma: float = 0.1
    alpha: float = 0.02
    generations: int = 10
    episodes_per_eval: int = 8
    seed: int = 0

    def validate(self):
        if self.population <= 0 or self.population % 2 != 0:
            raise ValueError("population must be positive and even")
        if self.sigma < 0 or self.alpha <= 0 or self.generations < 0:
            raise ValueError("sigma must be >= 0; alpha and generations positive")
        if self.episodes_per_eval <= 0:
            raise ValueError("episodes_per_eval must be positive")
        return self


def _episode_seed(*parts: int) -> int:
    return int(np.random.SeedSequence(tuple(parts)).generate_state(1)[0])


def evaluate_params(
    params: LinearPolicyParams, env: Env, episodes: int, seed_parts: tuple
) -> float:
    """Mean episode return of a linear policy over deterministic seeds.

    Episode seeds whose setup fails before the first decision (player
    placement exhausted its draws) say nothing about the policy, so they are
    resampled from a derived seed stream.
    """
    policy = LinearPolicy(params, env.patterns)
    total = 0.0
    for e in range(episodes):
        for attempt in range(10):
            try:
                _, trace = episode_rollout(
                    policy, env, _episode_seed(*seed_parts, e, attempt)
                )
            except (PlacementFailedError, RetryBudgetExceededError):
                continue
            total += sum(t.reward for t in trace)
            break
        else:
            raise PlacementFailedError(
                f"all setup attempts failed for evaluation episode {seed_parts + (e,)}"
            )
    return total / episodes


def es_train(env: Env, es: ESConfig):
    """Mirrored-sampling evolution strategies over the linear policy weights.

    Every evaluation (all members, both mirror signs, every generation) runs
    the same fixed batch of episode seeds, so return differences reflect the
    parameters rather than environment luck. Returns (best_params, curve)
    where curve rows carry the population mean and max return per generation
    plus the post-update evaluation of theta.
    """
    es.validate()
    params = LinearPolicyParams.zeros(env.patterns.n)
    dim = len(params.theta)
    rng = np.random.default_rng(np.random.SeedSequence((es.seed, 0xE5)))
    half = es.population // 2
    theta = params.theta.copy()
    eval_seeds = (es.seed, 0xC0FFEE)
    curve = []
    best_theta = theta.copy()
    best_return = -np.inf
    for gen in range(es.generations):
        eps = rng.standard_normal((half, dim))
        returns = np.zeros((half, 2))
        for i in range(half):
            for s, sign in enumerate((1.0, -1.0)):
                trial = LinearPolicyParams(
                    params.k, params.n, params.t, theta + sign * es.sigma * eps[i]
                )
                returns[i, s] = evaluate_params(
                    trial, env, es.episodes_per_eval, eval_seeds
                )
        if es.sigma > 0:
            grad = (returns[:, 0] - returns[:, 1]) @ eps / (es.population * es.sigma)
            theta = theta + es.alpha * grad
        if not np.all(np.isfinite(theta)):
            raise DivergedParamsError(f"non-finite parameters at generation {gen}")
        current = LinearPolicyParams(params.k, params.n, params.t, theta.copy())
        theta_return = evaluate_params(current, env, es.episodes_per_eval, eval_seeds)
        if theta_return > best_return:
            best_return = theta_return
            best_theta = theta.copy()
        curve.append(
            {
                "generation": gen,
                "mean_return": float(returns.mean()),
                "max_return": float(returns.max()),
                "theta_return": float(theta_return),
            }
        )
    best = LinearPolicyParams(params.k, params.n, params.t, best_theta)
    return best, curve
