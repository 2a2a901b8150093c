"""Experiment orchestration and persistence.

A run is the unit of parallel work: workers share nothing, every run's
stream is derived from (master_seed, global run index), and results are
merged by a canonical (policy, run_id) sort, so output files are identical
for any worker count. Floats are written with 17 significant digits so the
CSVs round-trip exactly.
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import metrics
from .core import BanditInstance, derive_run_seed, run_once
from .policies import PolicyConfig
from .theory import predicted_regexp

__all__ = [
    "ExperimentConfig",
    "parse_config_file",
    "resolve_workers",
    "run_experiment",
    "analyze_experiment",
    "SCHEMA_VERSION",
    "RUNS_HEADER",
    "EPISODES_HEADER",
    "BLOCKS_HEADER",
    "CURVE_HEADER",
    "TRACE_HEADER",
    "ANALYSIS_HEADER",
]

SCHEMA_VERSION = 1
RUNS_HEADER = ["run_id", "policy", "seed", "N2_final", "max_window_regret", "longest_subopt_run"]
EPISODES_HEADER = ["policy", "run_id", "tau", "window_suboptimal_count"]
BLOCKS_HEADER = ["policy", "run_id", "start", "length"]
CURVE_HEADER = ["policy", "t", "estimate", "n_samples"]
TRACE_HEADER = ["round", "action", "reward"]
ANALYSIS_HEADER = [
    "policy",
    "t",
    "estimate",
    "n_samples",
    "predicted",
    "rel_deviation",
    "mean_max_window_regret",
    "se_max_window_regret",
    "ordering_ok",
]

WORKERS_ENV_VAR = "SLIDEREGRET_WORKERS"


def _fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


@dataclass(frozen=True)
class ExperimentConfig:
    means: tuple[float, ...]
    policies: tuple[PolicyConfig, ...]
    horizon: int
    runs: int
    master_seed: int = 0
    episode_window: int = 100  # T: regret window after an episode
    estimator_window: int = 128  # W: |tau - t| < W pooling radius
    t_min: int | None = None  # sliding-regret start; default horizon // 2
    curve_step: int | None = None  # default max(1, W // 4)
    n_trace: int = 2
    workers: int | str = "auto"
    output_dir: str | None = None

    def __post_init__(self):
        instance = BanditInstance(means=self.means)  # validates means
        if instance.k != 2:
            raise ValueError("experiments are defined for two-arm instances")
        if not self.policies:
            raise ValueError("need at least one policy")
        kinds = [p.kind for p in self.policies]
        if len(set(kinds)) != len(kinds):
            raise ValueError("policy kinds must be unique within one experiment")
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        if self.estimator_window < 1:
            raise ValueError("estimator window W must be >= 1")
        if self.episode_window < 1:
            raise ValueError("episode window T must be >= 1")
        if self.horizon < self.episode_window + self.resolved_t_min:
            raise ValueError("need horizon >= T + t_min")
        if self.n_trace < 0:
            raise ValueError("n_trace must be >= 0")

    @property
    def instance(self) -> BanditInstance:
        return BanditInstance(means=self.means)

    @property
    def resolved_t_min(self) -> int:
        return self.horizon // 2 if self.t_min is None else self.t_min

    @property
    def resolved_curve_step(self) -> int:
        if self.curve_step is not None:
            return self.curve_step
        return max(1, self.estimator_window // 4)


_CONFIG_KEYS = {
    "means",
    "policies",
    "horizon",
    "runs",
    "master_seed",
    "T",
    "W",
    "t_min",
    "curve_step",
    "n_trace",
    "workers",
    "output_dir",
    "ucbv_c",
    "klucb_tolerance",
    "klucb_max_iters",
}


def parse_config_file(path: str | Path, overrides: dict | None = None) -> ExperimentConfig:
    """Flat `key = value` config file; override values win over file values."""
    raw: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _CONFIG_KEYS:
            raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
        raw[key] = value
    if overrides:
        raw.update({k: str(v) for k, v in overrides.items() if v is not None})
    return _config_from_strings(raw)


def _config_from_strings(raw: dict[str, str]) -> ExperimentConfig:
    for required in ("means", "policies", "horizon", "runs"):
        if required not in raw:
            raise ValueError(f"missing required config key {required!r}")
    means = tuple(float(x) for x in raw["means"].split(","))
    policy_kwargs = {}
    if "ucbv_c" in raw:
        policy_kwargs["ucbv_c"] = float(raw["ucbv_c"])
    if "klucb_tolerance" in raw:
        policy_kwargs["klucb_tolerance"] = float(raw["klucb_tolerance"])
    if "klucb_max_iters" in raw:
        policy_kwargs["klucb_max_iters"] = int(raw["klucb_max_iters"])
    policies = tuple(
        PolicyConfig(kind=kind.strip(), **policy_kwargs) for kind in raw["policies"].split(",")
    )
    workers: int | str = raw.get("workers", "auto")
    if workers != "auto":
        workers = int(workers)
    kwargs = dict(
        means=means,
        policies=policies,
        horizon=int(raw["horizon"]),
        runs=int(raw["runs"]),
        master_seed=int(raw.get("master_seed", "0")),
        episode_window=int(raw.get("T", "100")),
        estimator_window=int(raw.get("W", "128")),
        n_trace=int(raw.get("n_trace", "2")),
        workers=workers,
        output_dir=raw.get("output_dir"),
    )
    if "t_min" in raw:
        kwargs["t_min"] = int(raw["t_min"])
    if "curve_step" in raw:
        kwargs["curve_step"] = int(raw["curve_step"])
    return ExperimentConfig(**kwargs)


def resolve_workers(config_workers: int | str) -> int:
    env = os.environ.get(WORKERS_ENV_VAR)
    if env:
        return max(1, int(env))
    if config_workers == "auto":
        return max(1, os.cpu_count() or 1)
    return max(1, int(config_workers))


# ---------------------------------------------------------------------------
# Per-run task


def _run_task(args):
    (means, kind, ucbv_c, klucb_tol, klucb_iters, horizon, seed, t_window, t_min, run_id, trace) = args
    instance = BanditInstance(means=means)
    policy = PolicyConfig(
        kind=kind, ucbv_c=ucbv_c, klucb_tolerance=klucb_tol, klucb_max_iters=klucb_iters
    )
    log = run_once(instance, policy, horizon, seed)
    samples = metrics.episode_samples(log, instance, t_window, run_id=run_id)
    _, mwr = metrics.max_window_regret(log, instance, t_window, t_min)
    lengths = metrics.suboptimal_run_lengths(log, instance.optimal_arm, t_min)
    taus = metrics.detect_episodes(log, instance.optimal_arm)
    block_lengths_all = metrics.suboptimal_run_lengths(log, instance.optimal_arm, 1)
    result = {
        "policy": kind,
        "run_id": run_id,
        "seed": seed,
        "n2_final": int(log.subopt_prefix[-1]),
        "max_window_regret": float(mwr),
        "longest_subopt_run": max(lengths) if lengths else 0,
        "episodes": [(s.tau, s.window_suboptimal_count) for s in samples],
        "blocks": list(zip((int(t) for t in taus), block_lengths_all)),
        "trace": None,
    }
    if trace:
        result["trace"] = (log.actions.tolist(), log.rewards.tolist())
    return result


def _task_args(config: ExperimentConfig):
    tasks = []
    for p_idx, policy in enumerate(config.policies):
        for run_id in range(config.runs):
            global_index = p_idx * config.runs + run_id
            seed = derive_run_seed(config.master_seed, global_index)
            tasks.append(
                (
                    config.means,
                    policy.kind,
                    policy.ucbv_c,
                    policy.klucb_tolerance,
                    policy.klucb_max_iters,
                    config.horizon,
                    seed,
                    config.episode_window,
                    config.resolved_t_min,
                    run_id,
                    run_id < config.n_trace,
                )
            )
    return tasks


def run_experiment(
    config: ExperimentConfig, output_dir: str | Path | None = None, workers: int | None = None
) -> Path:
    """Execute runs x policies, reduce per run, and write the output files."""
    if output_dir is None:
        output_dir = config.output_dir
    if output_dir is None:
        raise ValueError("no output directory configured")
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    n_workers = resolve_workers(config.workers) if workers is None else max(1, workers)
    tasks = _task_args(config)
    if n_workers == 1 or len(tasks) == 1:
        results = [_run_task(t) for t in tasks]
    else:
        chunk = max(1, len(tasks) // (n_workers * 8))
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(_run_task, tasks, chunksize=chunk))
    order = {p.kind: i for i, p in enumerate(config.policies)}
    results.sort(key=lambda r: (order[r["policy"]], r["run_id"]))
    _write_outputs(config, out, results)
    return out


def _write_outputs(config: ExperimentConfig, out: Path, results: list[dict]) -> None:
    instance = config.instance
    gap = instance.gap

    manifest = {
        "schema_version": SCHEMA_VERSION,
        "means": list(config.means),
        "policies": [
            {
                "kind": p.kind,
                "ucbv_c": p.ucbv_c,
                "klucb_tolerance": p.klucb_tolerance,
                "klucb_max_iters": p.klucb_max_iters,
            }
            for p in config.policies
        ],
        "horizon": config.horizon,
        "runs": config.runs,
        "master_seed": config.master_seed,
        "T": config.episode_window,
        "W": config.estimator_window,
        "t_min": config.resolved_t_min,
        "curve_step": config.resolved_curve_step,
        "n_trace": config.n_trace,
        "gap": gap,
        "optimal_arm": instance.optimal_arm,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")

    with (out / "runs.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RUNS_HEADER)
        for r in results:
            writer.writerow(
                [
                    r["run_id"],
                    r["policy"],
                    r["seed"],
                    r["n2_final"],
                    _fmt(r["max_window_regret"]),
                    r["longest_subopt_run"],
                ]
            )

    with (out / "episodes.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(EPISODES_HEADER)
        for r in results:
            for tau, count in r["episodes"]:
                writer.writerow([r["policy"], r["run_id"], tau, count])

    with (out / "blocks.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(BLOCKS_HEADER)
        for r in results:
            for start, length in r["blocks"]:
                writer.writerow([r["policy"], r["run_id"], start, length])

    with (out / "regexp_curve.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CURVE_HEADER)
        for policy in config.policies:
            samples = [
                metrics.EpisodeSample(
                    tau=tau, window_suboptimal_count=c, window_regret=gap * c, run_id=r["run_id"]
                )
                for r in results
                if r["policy"] == policy.kind
                for tau, c in r["episodes"]
            ]
            curve = metrics.build_regexp_curve(
                samples,
                config.horizon,
                config.episode_window,
                config.estimator_window,
                config.resolved_curve_step,
            )
            for t, est, n in curve.points:
                writer.writerow([policy.kind, t, "" if est is None else _fmt(est), n])

    for r in results:
        if r["trace"] is None:
            continue
        actions, rewards = r["trace"]
        with (out / f"trace_{r['policy']}_{r['run_id']}.csv").open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(TRACE_HEADER)
            for i, (a, rew) in enumerate(zip(actions, rewards), start=1):
                writer.writerow([i, a, rew])


# ---------------------------------------------------------------------------
# Analysis


def _read_csv(path: Path) -> list[dict]:
    with path.open(newline="") as fh:
        return list(csv.DictReader(fh))


def analyze_experiment(input_dir: str | Path, t_eval: list[int]) -> dict:
    """Recompute windowed estimates at requested rounds and compare them with
    the closed-form prediction and with the across-run sliding-regret proxy.

    Returns {"rows": [...], "written": path}; also writes analysis.csv next
    to the inputs.
    """
    src = Path(input_dir)
    manifest_path = src / "manifest.json"
    episodes_path = src / "episodes.csv"
    blocks_path = src / "blocks.csv"
    runs_path = src / "runs.csv"
    for p in (manifest_path, episodes_path, blocks_path, runs_path):
        if not p.exists():
            raise FileNotFoundError(f"missing simulate output: {p}")
    manifest = json.loads(manifest_path.read_text())
    gap = manifest["gap"]
    horizon = manifest["horizon"]
    t_window = manifest["T"]
    w = manifest["W"]
    runs = manifest["runs"]
    instance = BanditInstance(means=tuple(manifest["means"]))

    episodes = _read_csv(episodes_path)
    blocks = _read_csv(blocks_path)
    run_rows = _read_csv(runs_path)

    samples_by_policy: dict[str, list[metrics.EpisodeSample]] = {}
    for row in episodes:
        count = int(row["window_suboptimal_count"])
        samples_by_policy.setdefault(row["policy"], []).append(
            metrics.EpisodeSample(
                tau=int(row["tau"]),
                window_suboptimal_count=count,
                window_regret=gap * count,
                run_id=int(row["run_id"]),
            )
        )
    positions_by_run: dict[tuple[str, int], list[int]] = {}
    for row in blocks:
        key = (row["policy"], int(row["run_id"]))
        start, length = int(row["start"]), int(row["length"])
        positions_by_run.setdefault(key, []).extend(range(start, start + length))

    rows = []
    summaries = {}
    for policy_spec in manifest["policies"]:
        kind = policy_spec["kind"]
        predicted = predicted_regexp(
            kind,
            instance,
            t_window,
            c=policy_spec.get("ucbv_c"),
            reference_t=float(horizon),
        )
        samples = samples_by_policy.get(kind, [])
        summaries[kind] = _policy_summary(kind, run_rows, blocks, manifest, predicted)
        for t in t_eval:
            feasible = 1 <= t <= horizon - t_window
            est, n = metrics.regexp_estimate(samples, t, w) if feasible else (None, 0)
            mean_mwr = se_mwr = None
            ordering_ok = None
            if feasible:
                values = []
                for run_id in range(runs):
                    pos = np.asarray(
                        positions_by_run.get((kind, run_id), []), dtype=np.int64
                    )
                    values.append(
                        metrics.max_window_regret_from_positions(
                            pos, horizon, gap, t_window, t
                        )
                    )
                arr = np.asarray(values)
                mean_mwr = float(arr.mean())
                se_mwr = float(arr.std(ddof=1) / math.sqrt(len(arr))) if len(arr) > 1 else 0.0
                if est is not None:
                    ordering_ok = est <= mean_mwr + 2.0 * se_mwr
            rows.append(
                {
                    "policy": kind,
                    "t": t,
                    "estimate": est,
                    "n_samples": n,
                    "predicted": predicted,
                    "rel_deviation": None if est is None else (est - predicted) / predicted,
                    "mean_max_window_regret": mean_mwr,
                    "se_max_window_regret": se_mwr,
                    "ordering_ok": ordering_ok,
                }
            )

    out_path = src / "analysis.csv"
    with out_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(ANALYSIS_HEADER)
        for row in rows:
            writer.writerow(
                [
                    row["policy"],
                    row["t"],
                    "" if row["estimate"] is None else _fmt(row["estimate"]),
                    row["n_samples"],
                    _fmt(row["predicted"]),
                    "" if row["rel_deviation"] is None else _fmt(row["rel_deviation"]),
                    "" if row["mean_max_window_regret"] is None else _fmt(row["mean_max_window_regret"]),
                    "" if row["se_max_window_regret"] is None else _fmt(row["se_max_window_regret"]),
                    "" if row["ordering_ok"] is None else str(row["ordering_ok"]).lower(),
                ]
            )
    return {"rows": rows, "summaries": summaries, "written": out_path}


def _policy_summary(kind, run_rows, blocks, manifest, predicted) -> dict:
    """Across-run summary: sliding-regret proxy, visit counts, block lengths."""
    mwr = np.array(
        [float(r["max_window_regret"]) for r in run_rows if r["policy"] == kind]
    )
    n2 = np.array([int(r["N2_final"]) for r in run_rows if r["policy"] == kind])
    lengths = np.array(
        [
            int(r["length"])
            for r in blocks
            if r["policy"] == kind and int(r["start"]) >= manifest["t_min"]
        ]
    )
    hist: dict[str, int] = {}
    if lengths.size:
        edges = [1, 2, 3, 5, 10, 20, 50, 10**9]
        for lo, hi in zip(edges[:-1], edges[1:]):
            label = f"{lo}" if hi == lo + 1 else (f"{lo}-{hi - 1}" if hi < 10**9 else f">={lo}")
            hist[label] = int(((lengths >= lo) & (lengths < hi)).sum())
    return {
        "runs": int(mwr.size),
        "max_window_regret_mean": float(mwr.mean()) if mwr.size else None,
        "max_window_regret_max": float(mwr.max()) if mwr.size else None,
        "n2_final_median": float(np.median(n2)) if n2.size else None,
        "n2_final_q10": float(np.quantile(n2, 0.1)) if n2.size else None,
        "n2_final_q90": float(np.quantile(n2, 0.9)) if n2.size else None,
        "block_length_histogram": hist,
        "predicted_regexp": predicted,
    }
