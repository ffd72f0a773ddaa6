"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line. Heavy batches are shared between the directional checks."""

import itertools
import json
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from lodegen import data as bundled
from lodegen.env import Env, EnvConfig, episode_rollout
from lodegen.errors import (
    ContradictionError,
    PlacementFailedError,
    RetryBudgetExceededError,
)
from lodegen.grid_runner import load_manifest
from lodegen.levels import grid_from_rows, parse_level
from lodegen.metrics import pairwise_diversity, tp_kldiv
from lodegen.patterns import DOWN, RIGHT, extract_patterns, learn_adjacency
from lodegen.playability import analyze
from lodegen.policies import (
    ESConfig,
    LinearPolicy,
    es_train,
    frequency_random_policy,
    greedy_lookahead_policy,
)
from lodegen.wave import new_wave

from conftest import random_grid
from test_playability import oracle_gold_reachable, oracle_reachable, HANDCRAFTED
from test_wave import arc_consistent, assignments_surviving

ES_SETTINGS = dict(population=16, sigma=0.2, alpha=0.1, generations=12, episodes_per_eval=6)


def _load_set(name):
    return [parse_level(Path(p).read_text()) for p in load_manifest(bundled.manifest_path(name))]


def _report(name, ok, detail=""):
    line = f"ACCEPTANCE {name}: {'PASS' if ok else 'FAIL'}"
    if detail:
        line += f"  ({detail})"
    print(line, flush=True)
    return ok


# -- criterion 1: constraint engine ------------------------------------------

def test_constraint_engine_correctness():
    rng = np.random.default_rng(0xACCE)
    t0 = time.time()
    instances = 0
    exact_checked = 0
    while instances < 500:
        line_case = instances % 2 == 0
        if line_case:
            level_h, level_w = 3, int(rng.integers(5, 8))   # 1 x k lattice
        else:
            level_h = int(rng.integers(4, 7))                # up to 4 x 4 lattice
            level_w = int(rng.integers(4, 7))
        corpus = random_grid(rng, int(rng.integers(4, 7)), int(rng.integers(4, 7)), symbols=".B")
        ps = extract_patterns([corpus], 3)
        if len(ps) > 8:
            continue
        rules = learn_adjacency(ps, [corpus], "observed")
        wave = new_wave(ps, rules, level_h, level_w, seed=instances)
        contradicted = False
        for _ in range(int(rng.integers(1, 3))):
            cells = np.argwhere(wave.domains.sum(axis=2) > 1)
            if len(cells) == 0:
                break
            cell = tuple(cells[rng.integers(len(cells))])
            ids = np.flatnonzero(wave.domains[cell])
            try:
                wave.apply_pattern(cell, int(ids[rng.integers(len(ids))]))
            except ContradictionError:
                contradicted = True
                break
        instances += 1
        if contradicted:
            continue
        assert arc_consistent(wave), f"arc consistency violated on instance {instances}"
        if line_case:
            domains = wave.dump_domains()
            survivors = assignments_surviving(
                domains, rules.matrices[RIGHT], rules.matrices[DOWN]
            )
            for c in range(wave.lattice_w):
                assert set(domains[0][c]) == survivors[0][c], (
                    f"1xk exactness violated on instance {instances}"
                )
            exact_checked += 1
    elapsed = time.time() - t0
    ok = elapsed < 60 and instances >= 500
    assert _report(
        "constraint-engine",
        ok,
        f"{instances} instances, {exact_checked} exact line checks, {elapsed:.1f}s",
    )


# -- criterion 2: local similarity --------------------------------------------

@pytest.mark.parametrize("input_set", ["si", "mi"])
def test_local_similarity(input_set):
    grids = _load_set(input_set)
    ps = extract_patterns(grids, 3)
    env = Env(
        EnvConfig(level_height=11, level_width=16, seed=0),
        input_grids=grids,
    )
    policy = frequency_random_policy(env.patterns, seed=1)
    t0 = time.time()
    completed = 0
    seed = 0
    while completed < 100:
        seed += 1
        assert seed < 2000, "too many attempts to complete 100 generations"
        try:
            outcome, _ = episode_rollout(policy, env, seed)
        except (PlacementFailedError, RetryBudgetExceededError):
            continue
        if isinstance(outcome, ContradictionError):
            continue
        assert outcome.count("M") == 1
        for r in range(outcome.height - 2):
            for c in range(outcome.width - 2):
                assert ps.id_of(outcome.cells[r : r + 3, c : c + 3]) is not None, (
                    f"window at ({r},{c}) not in pattern set (seed {seed})"
                )
        completed += 1
    elapsed = time.time() - t0
    ok = elapsed < 600
    assert _report(
        f"local-similarity[{input_set.upper()}]",
        ok,
        f"100 complete generations, {elapsed:.1f}s",
    )


# -- criterion 3: playability oracle ------------------------------------------

def test_playability_oracle_equivalence():
    rng = np.random.default_rng(0xFEED)
    agree = 0
    cases = []
    for rows in HANDCRAFTED:
        cases.append(rows)
    while len(cases) < 210:
        h, w = int(rng.integers(4, 10)), int(rng.integers(4, 12))
        base = random_grid(rng, h, w, symbols="..bB#-GE")
        rows = ["".join(base.symbol_at(r, c) for c in range(w)) for r in range(h)]
        r, c = int(rng.integers(h)), int(rng.integers(w))
        rows[r] = rows[r][:c] + "M" + rows[r][c + 1 :]
        cases.append(rows)
    for rows in cases:
        grid = grid_from_rows(rows)
        report = analyze(grid)
        seen, _ = oracle_reachable(rows)
        got = {(r, c) for r, c in np.argwhere(report.reachable_cells)}
        assert got == seen
        assert report.gold_reachable == oracle_gold_reachable(rows)
        agree += 1
    assert _report("playability-oracle", agree == len(cases), f"{agree}/{len(cases)} agree")


# -- criterion 4: metric identities --------------------------------------------

def test_metric_identities():
    rng = np.random.default_rng(0xD1CE)
    grid = random_grid(rng, 6, 6)
    assert tp_kldiv(grid, grid) == 0.0
    for _ in range(1000):
        a = random_grid(rng, 4, 5, symbols=".bB")
        b = random_grid(rng, 4, 5, symbols=".bB")
        assert tp_kldiv(a, b) >= 0.0
    import math

    eps = 1e-5
    x = grid_from_rows(["BBBB"] * 4)
    y = grid_from_rows(["...."] * 4)
    p1 = (4 + eps) / (4 + 2 * eps)
    p2 = eps / (4 + 2 * eps)
    expected = (p1 - p2) * math.log(p1 / p2)
    assert abs(tp_kldiv(x, y, epsilon=eps) - expected) <= 1e-9
    assert _report("metric-identities", True, "identity, 1000 pairs, closed form 1e-9")


# -- criterion 5: directional trends -------------------------------------------

_BATCH_CACHE = {}
_ENV_CACHE = {}


def _eval_env(input_set, exclude_rare):
    key = (input_set, exclude_rare)
    if key not in _ENV_CACHE:
        _ENV_CACHE[key] = Env(
            EnvConfig(
                level_height=11, level_width=16, exclude_rare=exclude_rare, seed=0
            ),
            input_grids=_load_set(input_set),
        )
    return _ENV_CACHE[key]


def _batch(input_set, policy_kind, exclude_rare, seed, count=100):
    """(playable_rate, diversity, episodes) for one policy/config/seed."""
    key = (input_set, policy_kind, exclude_rare, seed)
    if key in _BATCH_CACHE:
        return _BATCH_CACHE[key]
    env = _eval_env(input_set, exclude_rare)
    if policy_kind == "random":
        policy = frequency_random_policy(env.patterns)
    elif policy_kind == "greedy":
        policy = greedy_lookahead_policy(env)
    elif policy_kind == "es":
        train_env = Env(
            EnvConfig(
                level_height=8, level_width=11, exclude_rare=exclude_rare, seed=0
            ),
            input_grids=_load_set(input_set),
        )
        params, _ = es_train(train_env, ESConfig(seed=seed, **ES_SETTINGS))
        policy = LinearPolicy(params, env.patterns)
    else:
        raise ValueError(policy_kind)
    playable_levels = []
    total = 0
    for e in range(count):
        episode_seed = int(np.random.SeedSequence((seed, 0xBA7C4, e)).generate_state(1)[0])
        try:
            outcome, _ = episode_rollout(policy, env, episode_seed)
        except (PlacementFailedError, RetryBudgetExceededError):
            continue
        total += 1
        if not isinstance(outcome, ContradictionError) and analyze(outcome).playable:
            playable_levels.append(outcome)
    rate = len(playable_levels) / max(total, 1)
    diversity = (
        pairwise_diversity(playable_levels) if len(playable_levels) >= 2 else None
    )
    _BATCH_CACHE[key] = (rate, diversity, total)
    return _BATCH_CACHE[key]


SEEDS = (101, 202, 303, 404, 505)


def test_directional_reward_driven_selection_beats_random():
    t0 = time.time()
    greedy_wins = 0
    es_wins = 0
    for seed in SEEDS:
        r_random, _, _ = _batch("si", "random", False, seed)
        r_greedy, _, _ = _batch("si", "greedy", False, seed)
        r_es, _, _ = _batch("si", "es", False, seed)
        greedy_wins += r_greedy >= r_random
        es_wins += r_es >= r_random
        print(
            f"  seed {seed}: greedy={r_greedy:.2f} es={r_es:.2f} random={r_random:.2f}",
            flush=True,
        )
    ok = greedy_wins >= 4 and es_wins >= 4
    assert _report(
        "trend-policy-vs-random",
        ok,
        f"greedy wins {greedy_wins}/5, es wins {es_wins}/5, {time.time()-t0:.0f}s",
    )


@pytest.mark.parametrize("input_set", ["si", "mi"])
def test_directional_rare_exclusion_reduces_diversity(input_set):
    t0 = time.time()
    wins = 0
    for seed in SEEDS:
        _, d_with, _ = _batch(input_set, "greedy", False, seed)
        _, d_without, _ = _batch(input_set, "greedy", True, seed)
        ok = d_with is not None and d_without is not None and d_with - d_without >= 0
        wins += ok
        print(f"  seed {seed}: with-rare={d_with} without-rare={d_without}", flush=True)
    ok = wins >= 4
    assert _report(
        f"trend-rare-exclusion[{input_set.upper()}]",
        ok,
        f"diversity decreased in {wins}/5 seeds, {time.time()-t0:.0f}s",
    )


# -- criterion 6: ES learning signal -------------------------------------------

def test_es_learning_signal():
    grids = _load_set("si")
    env = Env(EnvConfig(level_height=8, level_width=11, seed=0), input_grids=grids)
    t0 = time.time()
    wins = 0
    for seed in range(5):
        start = time.time()
        _, curve = es_train(env, ESConfig(seed=seed, **ES_SETTINGS))
        run_time = time.time() - start
        assert run_time < 1800, f"run exceeded 30 minutes ({run_time:.0f}s)"
        improved = curve[-1]["mean_return"] > curve[0]["mean_return"]
        wins += improved
        print(
            f"  seed {seed}: gen0={curve[0]['mean_return']:.3f} "
            f"final={curve[-1]['mean_return']:.3f} improved={improved}",
            flush=True,
        )
    ok = wins >= 4
    assert _report("es-learning-signal", ok, f"improved in {wins}/5 runs, {time.time()-t0:.0f}s")


# -- criterion 7: CLI determinism ------------------------------------------------

def _cli(args):
    return subprocess.run(
        [sys.executable, "-m", "lodegen", *args], capture_output=True, text=True, timeout=600
    )


def test_cli_determinism(tmp_path):
    conf = tmp_path / "env.conf"
    conf.write_text(
        f"inputs = {bundled.levels_dir() / 'level_1.txt'}\n"
        "level_height = 11\nlevel_width = 16\nseed = 13\n",
        encoding="utf-8",
    )
    grid_conf = tmp_path / "grid.conf"
    grid_conf.write_text(
        f"si_manifest = {bundled.manifest_path('si')}\n"
        f"mi_manifest = {bundled.manifest_path('mi')}\n"
        f"div_mi_manifest = {bundled.manifest_path('div_mi')}\n"
        "models_per_config = 1\neval_levels_per_model = 2\n"
        "level_height = 8\nlevel_width = 11\n"
        "train_level_height = 8\ntrain_level_width = 11\n"
        "es_population = 2\nes_generations = 1\nes_episodes_per_eval = 1\n"
        "master_seed = 3\nworkers = 2\n",
        encoding="utf-8",
    )
    checks = []
    # extract
    a, b = tmp_path / "e1.json", tmp_path / "e2.json"
    assert _cli(["extract", "--manifest", "si", "--out", str(a)]).returncode == 0
    assert _cli(["extract", "--manifest", "si", "--out", str(b)]).returncode == 0
    checks.append(a.read_bytes() == b.read_bytes())
    # generate
    g1, g2 = tmp_path / "g1", tmp_path / "g2"
    for g in (g1, g2):
        assert (
            _cli(
                ["generate", "--config", str(conf), "--count", "3", "--seed", "21", "--out", str(g)]
            ).returncode
            == 0
        )
    names = sorted(p.name for p in g1.iterdir())
    checks.append(names == sorted(p.name for p in g2.iterdir()))
    checks.append(all((g1 / n).read_bytes() == (g2 / n).read_bytes() for n in names))
    # run-grid
    r1, r2 = tmp_path / "r1", tmp_path / "r2"
    for r in (r1, r2):
        assert _cli(["run-grid", "--grid", str(grid_conf), "--out", str(r)]).returncode == 0
    checks.append((r1 / "results.csv").read_bytes() == (r2 / "results.csv").read_bytes())
    checks.append((r1 / "details.json").read_bytes() == (r2 / "details.json").read_bytes())
    ok = all(checks)
    assert _report("cli-determinism", ok, f"{sum(checks)}/{len(checks)} byte-identical checks")
