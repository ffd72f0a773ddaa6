"""Ablation grid: input set x rare-pattern exclusion x random-collapse start.

Every cell trains fresh policy weights (with the cell's random-collapse flag
active during training only) and then evaluates them on freshly generated
levels with random collapse off, mirroring how the start-state option is a
training-time feature. Results land in one CSV row per (cell, model seed);
cells that blow their step budget or fail outright are flagged with empty
metric fields and the cause is recorded alongside.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields as dataclass_fields
from pathlib import Path

import numpy as np

from .env import Env, EnvConfig, episode_rollout
from .errors import (
    ConfigError,
    ContradictionError,
    LodegenError,
    PlacementFailedError,
    RetryBudgetExceededError,
)
from .levels import parse_level
from .metrics import BatchReport, batch_evaluate, report_csv_row, rows_to_csv
from .policies import ESConfig, LinearPolicy, es_train

INPUT_SET_ORDER = ("SI", "MI", "div-MI")


@dataclass
class GridConfig:
    si_manifest: str = ""
    mi_manifest: str = ""
    div_mi_manifest: str = ""
    models_per_config: int = 2
    eval_levels_per_model: int = 100
    level_height: int = 11
    level_width: int = 16
    train_level_height: int = 8
    train_level_width: int = 11
    n: int = 3
    adjacency_mode: str = "observed"
    es_population: int = 16
    es_sigma: float = 0.2
    es_alpha: float = 0.1
    es_generations: int = 12
    es_episodes_per_eval: int = 6
    master_seed: int = 0
    step_budget: int = 2_000_000
    workers: int = 2

    def validate(self):
        for name in ("si_manifest", "mi_manifest", "div_mi_manifest"):
            if not getattr(self, name):
                raise ConfigError(f"{name} is required")
        if self.models_per_config < 1 or self.eval_levels_per_model < 0:
            raise ConfigError("models_per_config and eval_levels_per_model must be positive")
        return self


_GRID_INT_KEYS = {
    "models_per_config",
    "eval_levels_per_model",
    "level_height",
    "level_width",
    "train_level_height",
    "train_level_width",
    "n",
    "es_population",
    "es_generations",
    "es_episodes_per_eval",
    "master_seed",
    "step_budget",
    "workers",
}
_GRID_FLOAT_KEYS = {"es_sigma", "es_alpha"}


def parse_grid_config(text: str, base_dir: str | Path | None = None) -> GridConfig:
    known = {f.name for f in dataclass_fields(GridConfig)}
    cfg = GridConfig()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in known:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            if key in _GRID_INT_KEYS:
                setattr(cfg, key, int(value))
            elif key in _GRID_FLOAT_KEYS:
                setattr(cfg, key, float(value))
            elif key.endswith("_manifest"):
                path = Path(value)
                if base_dir is not None and not path.is_absolute():
                    path = Path(base_dir) / path
                setattr(cfg, key, str(path))
            else:
                setattr(cfg, key, value)
        except ValueError as err:
            raise ConfigError(f"line {lineno}: bad value for {key}: {err}") from err
    return cfg.validate()


def load_manifest(path: str | Path) -> list[str]:
    """A manifest lists one level file per line, relative to its own folder."""
    p = Path(path)
    out = []
    for line in p.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        entry = Path(line)
        out.append(str(entry if entry.is_absolute() else p.parent / entry))
    if not out:
        raise ConfigError(f"manifest {path} lists no levels")
    return out


def grid_cells(cfg: GridConfig) -> list[dict]:
    """The 12 cells: input set x exclude_rare x random_collapse."""
    manifests = {
        "SI": cfg.si_manifest,
        "MI": cfg.mi_manifest,
        "div-MI": cfg.div_mi_manifest,
    }
    cells = []
    for input_set in INPUT_SET_ORDER:
        for exclude_rare in (False, True):
            for random_collapse in (False, True):
                label = input_set
                if exclude_rare:
                    label += "+RR"
                if random_collapse:
                    label += "+RC"
                cells.append(
                    {
                        "label": label,
                        "manifest": manifests[input_set],
                        "exclude_rare": exclude_rare,
                        "random_collapse": random_collapse,
                    }
                )
    return cells


def _cell_seed(master: int, cell_index: int, model_index: int) -> int:
    return int(np.random.SeedSequence((master, cell_index, model_index)).generate_state(1)[0])


def run_cell_model(cfg_dict: dict, cell: dict, cell_index: int, model_index: int) -> dict:
    """Train one model for one cell and evaluate it; returns a result record."""
    cfg = GridConfig(**cfg_dict)
    seed = _cell_seed(cfg.master_seed, cell_index, model_index)
    grids = [parse_level(Path(p).read_text(encoding="utf-8")) for p in load_manifest(cell["manifest"])]
    base = dict(
        n=cfg.n,
        adjacency_mode=cfg.adjacency_mode,
        exclude_rare=cell["exclude_rare"],
        seed=seed,
    )
    steps_used = 0
    try:
        train_env = Env(
            EnvConfig(
                level_height=cfg.train_level_height,
                level_width=cfg.train_level_width,
                random_collapse=cell["random_collapse"],
                **base,
            ),
            input_grids=grids,
        )
        es = ESConfig(
            population=cfg.es_population,
            sigma=cfg.es_sigma,
            alpha=cfg.es_alpha,
            generations=cfg.es_generations,
            episodes_per_eval=cfg.es_episodes_per_eval,
            seed=seed,
        )
        # upper bound on training env steps: every episode collapses at most
        # one lattice cell per step
        lattice_cells = (cfg.train_level_height - cfg.n + 1) * (
            cfg.train_level_width - cfg.n + 1
        )
        training_bound = (
            es.generations * (es.population + 1) * es.episodes_per_eval * lattice_cells
        )
        if training_bound > cfg.step_budget:
            raise RetryBudgetExceededError(
                f"training alone may need {training_bound} steps,"
                f" over the {cfg.step_budget} budget"
            )
        steps_used = training_bound
        params, curve = es_train(train_env, es)
        # random collapse is a training-time feature; evaluation starts clean
        eval_env = Env(
            EnvConfig(
                level_height=cfg.level_height,
                level_width=cfg.level_width,
                random_collapse=False,
                **base,
            ),
            input_grids=grids,
        )
        policy = LinearPolicy(params, eval_env.patterns)
        episodes = []
        for e in range(cfg.eval_levels_per_model):
            if steps_used > cfg.step_budget:
                raise RetryBudgetExceededError(
                    f"step budget {cfg.step_budget} exceeded after {len(episodes)} episodes"
                )
            try:
                outcome, trace = episode_rollout(
                    policy, eval_env, _cell_seed(seed, 0xEAA, e)
                )
            except (PlacementFailedError, RetryBudgetExceededError):
                continue
            steps_used += len(trace)
            episodes.append((outcome, trace))
        report = batch_evaluate(episodes, n=cfg.n) if episodes else None
        return {
            "label": cell["label"],
            "model_index": model_index,
            "seed": seed,
            "report": None if report is None else json.loads(report.to_json()),
            "curve": curve,
            "error": None,
        }
    except LodegenError as err:
        return {
            "label": cell["label"],
            "model_index": model_index,
            "seed": seed,
            "report": None,
            "curve": None,
            "error": f"{type(err).__name__}: {err}",
        }


def run_grid(cfg: GridConfig, out_dir: str | Path) -> Path:
    """Run the full grid; writes results.csv plus per-model detail JSON.

    Returns the path of the CSV. Cell failures are tolerated: their rows keep
    empty metric fields and the cause lands in failures.json.
    """
    cfg.validate()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cells = grid_cells(cfg)
    jobs = [
        (cell, ci, mi)
        for ci, cell in enumerate(cells)
        for mi in range(cfg.models_per_config)
    ]
    cfg_dict = {f.name: getattr(cfg, f.name) for f in dataclass_fields(GridConfig)}
    results = []
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            futures = [
                pool.submit(run_cell_model, cfg_dict, cell, ci, mi)
                for cell, ci, mi in jobs
            ]
            results = [f.result() for f in futures]
    else:
        results = [run_cell_model(cfg_dict, cell, ci, mi) for cell, ci, mi in jobs]

    rows, failures, details = [], [], {}
    curves_out = []
    for record in results:
        key = f"{record['label']}__model{record['model_index']}"
        details[key] = record
        if record["report"] is not None:
            curves_out.append(
                json.dumps(
                    {
                        "cell": record["label"],
                        "model": record["model_index"],
                        "collapsed": record["report"]["collapsed_curve"],
                        "available_patterns": record["report"]["available_patterns_curve"],
                        "training_mean_return": [g["mean_return"] for g in record["curve"]],
                    },
                    separators=(",", ":"),
                )
            )
        report = None
        if record["report"] is not None:
            rep = record["report"]
            report = BatchReport(
                episodes=rep["episodes"],
                playable_rate=rep["playable_rate"],
                unplayable_rate=rep["unplayable_rate"],
                contradiction_rate=rep["contradiction_rate"],
                playable_any_gold_rate=rep["playable_any_gold_rate"],
                diversity=rep["diversity"],
                collapsed_curve=rep["collapsed_curve"],
                available_patterns_curve=rep["available_patterns_curve"],
            )
        if record["error"] is not None:
            failures.append({"cell": record["label"], "model": record["model_index"], "cause": record["error"]})
        rows.append(report_csv_row(record["label"], record["seed"], report))
    csv_path = out / "results.csv"
    csv_path.write_text(rows_to_csv(rows), encoding="utf-8")
    (out / "curves.jsonl").write_text(
        "".join(line + "\n" for line in curves_out), encoding="utf-8"
    )
    (out / "details.json").write_text(
        json.dumps(details, indent=2, sort_keys=True), encoding="utf-8"
    )
    (out / "failures.json").write_text(
        json.dumps(failures, indent=2, sort_keys=True), encoding="utf-8"
    )
    return csv_path
