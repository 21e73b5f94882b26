"""Experiment runner: multi-trial execution, CSV and manifest emission,
and cross-configuration summaries.

Trial i derives everything from master_seed + i, so any trial can be
re-run in isolation and a sweep is byte-identical to the union of its
single-config runs. Trials may run on a process pool; output order is
fixed by trial index, so worker count never changes the bytes written.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .config import ExperimentConfig
from .coevolution import RunResult, TrialData, build_ring, run_canonical, run_lipi
from .metrics import CSV_HEADER, MetricsRow
from .problem import generate_centroids, generate_dataset
from .schedules import SCHEDULE_KINDS
from .seeding import TAG_CELL, TAG_CENTROIDS, TAG_HELDOUT, TAG_INIT, TAG_TEST, TAG_TRAIN, subseed


@dataclass(frozen=True)
class ExperimentArtifacts:
    csv_path: Path
    summary_path: Path
    manifest_path: Path
    prune_log_path: Path
    rows: list[MetricsRow]


def make_trial_data(config: ExperimentConfig, trial: int) -> TrialData:
    """Generate the trial's corpora from seeds derived off master_seed + trial."""
    trial_seed = config.master_seed + trial
    centroids = generate_centroids(config.k, config.n, subseed(trial_seed, TAG_CENTROIDS))
    train = generate_dataset(centroids, config.per, config.q, subseed(trial_seed, TAG_TRAIN), split="train")
    test = generate_dataset(centroids, config.per, config.q, subseed(trial_seed, TAG_TEST), split="test")
    per_heldout = math.ceil(config.heldout_samples / config.k)
    heldout = generate_dataset(
        centroids, per_heldout, config.q, subseed(trial_seed, TAG_HELDOUT), split="test"
    ).as_float()[: config.heldout_samples]
    return TrialData(train=train, test=test, heldout=heldout)


def run_trial(config: ExperimentConfig, trial: int) -> RunResult:
    """One complete trial; a pure function of (config, trial)."""
    trial_seed = config.master_seed + trial
    data = make_trial_data(config, trial)
    params = config.coev_params(seed=trial_seed)
    if config.trainer == "lipi":
        ring = build_ring(
            config.cells, config.radius, config.arch(), seed=trial_seed,
            learning_rate=config.learning_rate,
        )
        return run_lipi(data, ring, params, trial=trial)
    return run_canonical(data, config.arch(), params, trial=trial)


def _seed_manifest(config: ExperimentConfig) -> dict:
    trials = []
    for trial in range(config.trials):
        ts = config.master_seed + trial
        cell_count = config.cells if config.trainer == "lipi" else 1
        trials.append(
            {
                "trial": trial,
                "trial_seed": ts,
                "centroid_seed": subseed(ts, TAG_CENTROIDS),
                "train_seed": subseed(ts, TAG_TRAIN),
                "test_seed": subseed(ts, TAG_TEST),
                "heldout_seed": subseed(ts, TAG_HELDOUT),
                "cell_init_seeds": [subseed(ts, TAG_INIT, k) for k in range(cell_count)],
                "cell_stream_ids": [[ts, TAG_CELL, k] for k in range(cell_count)],
            }
        )
    return {"config": config.as_dict(), "master_seed": config.master_seed, "trials": trials}


def representative_rows(rows: list[MetricsRow]) -> dict[tuple[int, int], MetricsRow]:
    """Per (trial, epoch), the row of the cell with the lowest train loss.

    Mirrors how the coevolutionary trainer picks its returned model; for
    canonical runs there is only one row per epoch. Ties go to the lowest
    cell index (rows arrive in cell order).
    """
    best: dict[tuple[int, int], MetricsRow] = {}
    for row in rows:
        key = (row.trial, row.epoch)
        cur = best.get(key)
        if cur is None or row.train_loss < cur.train_loss:
            best[key] = row
    return best


def _iqr(values: np.ndarray) -> float:
    return float(np.percentile(values, 75) - np.percentile(values, 25))


def write_outputs(config: ExperimentConfig, results: list[RunResult], out_prefix: Path) -> ExperimentArtifacts:
    out_prefix.parent.mkdir(parents=True, exist_ok=True)
    rows = [row for res in results for row in res.rows]

    csv_path = out_prefix.with_suffix(".csv")
    with open(csv_path, "w") as fh:
        fh.write(CSV_HEADER + "\n")
        for row in rows:
            fh.write(row.to_csv() + "\n")

    prune_log_path = out_prefix.with_suffix(".prune.log")
    with open(prune_log_path, "w") as fh:
        fh.write("# trial epoch cell operator layer zeroed\n")
        for res in results:
            for ev in res.prune_events:
                fh.write(ev.to_line() + "\n")

    manifest_path = out_prefix.with_suffix(".manifest.json")
    manifest_path.write_text(json.dumps(_seed_manifest(config), indent=2) + "\n")

    # Per-epoch aggregate over the representative (best-cell) series.
    reps = representative_rows(rows)
    summary_path = out_prefix.with_suffix(".summary.csv")
    with open(summary_path, "w") as fh:
        fh.write(
            "epoch,train_mean,train_median,train_iqr,test_mean,test_median,test_iqr,"
            "preserved_total_median,preserved_encoder_median,preserved_decoder_median\n"
        )
        for epoch in range(1, config.epochs + 1):
            per_trial = [reps[(t, epoch)] for t in range(config.trials) if (t, epoch) in reps]
            if not per_trial:
                continue
            tr = np.array([r.train_loss for r in per_trial])
            te = np.array([r.test_loss for r in per_trial])
            fh.write(
                f"{epoch},{float(tr.mean())!r},{float(np.median(tr))!r},{_iqr(tr)!r},"
                f"{float(te.mean())!r},{float(np.median(te))!r},{_iqr(te)!r},"
                f"{float(np.median([r.preserved_total for r in per_trial]))!r},"
                f"{float(np.median([r.preserved_encoder for r in per_trial]))!r},"
                f"{float(np.median([r.preserved_decoder for r in per_trial]))!r}\n"
            )
    return ExperimentArtifacts(
        csv_path=csv_path,
        summary_path=summary_path,
        manifest_path=manifest_path,
        prune_log_path=prune_log_path,
        rows=rows,
    )


def run_experiment(config: ExperimentConfig, out_prefix: str | Path, workers: int = 1) -> ExperimentArtifacts:
    """Run all trials (optionally on a process pool) and write all artifacts."""
    config.validate()
    out_prefix = Path(out_prefix)
    if workers > 1 and config.trials > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_trial, [config] * config.trials, range(config.trials)))
    else:
        results = [run_trial(config, t) for t in range(config.trials)]
    return write_outputs(config, results, out_prefix)


def load_rows(csv_path: str | Path) -> list[MetricsRow]:
    """Read a metrics CSV; raises with the offending line number on bad input."""
    lines = Path(csv_path).read_text().splitlines()
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError(f"{csv_path}:1: bad or missing metrics header")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            rows.append(MetricsRow.from_csv(line))
        except ValueError as exc:
            raise ValueError(f"{csv_path}:{lineno}: {exc}") from exc
    return rows


def pearson_train_test(rows: list[MetricsRow], trial: int) -> float | None:
    """Pearson r between the per-epoch train and test losses of one trial.

    None (reported as NA) when either series is constant.
    """
    reps = representative_rows([r for r in rows if r.trial == trial])
    series = sorted(reps.values(), key=lambda r: r.epoch)
    if len(series) < 2:
        return None
    train = np.array([r.train_loss for r in series])
    test = np.array([r.test_loss for r in series])
    if train.std() == 0.0 or test.std() == 0.0:
        return None
    return float(np.corrcoef(train, test)[0, 1])


@dataclass(frozen=True)
class ConfigSummary:
    name: str
    trials: int
    final_epoch: int
    final_test_loss_median: float
    final_train_loss_median: float
    preserved_total_median: float
    preserved_encoder_median: float
    preserved_decoder_median: float
    pearson_median: float | None

    def pearson_str(self) -> str:
        return "NA" if self.pearson_median is None else f"{self.pearson_median:.4f}"


def summarize(csv_paths: list[str | Path]) -> list[ConfigSummary]:
    """Final-epoch medians plus train/test coupling for each metrics CSV."""
    if not csv_paths:
        raise ValueError("summarize needs at least one CSV path")
    out = []
    for path in csv_paths:
        rows = load_rows(path)
        if not rows:
            raise ValueError(f"{path}: no metrics rows")
        final_epoch = max(r.epoch for r in rows)
        trials = sorted({r.trial for r in rows})
        reps = representative_rows(rows)
        finals = [reps[(t, final_epoch)] for t in trials if (t, final_epoch) in reps]
        pearsons = [pearson_train_test(rows, t) for t in trials]
        defined = [p for p in pearsons if p is not None]
        out.append(
            ConfigSummary(
                name=Path(path).stem,
                trials=len(trials),
                final_epoch=final_epoch,
                final_test_loss_median=float(np.median([r.test_loss for r in finals])),
                final_train_loss_median=float(np.median([r.train_loss for r in finals])),
                preserved_total_median=float(np.median([r.preserved_total for r in finals])),
                preserved_encoder_median=float(np.median([r.preserved_encoder for r in finals])),
                preserved_decoder_median=float(np.median([r.preserved_decoder for r in finals])),
                pearson_median=float(np.median(defined)) if defined else None,
            )
        )
    return out


def sweep_configs(base: ExperimentConfig) -> list[tuple[str, ExperimentConfig]]:
    """The operator x schedule grid: unpruned control plus 3 operators x 6 schedules."""
    configs: list[tuple[str, ExperimentConfig]] = [
        (f"{base.trainer}_none", replace(base, pruner="none"))
    ]
    for op in ("random", "variance", "conjunctive"):
        for sched in SCHEDULE_KINDS:
            configs.append((f"{base.trainer}_{op}_{sched}", replace(base, pruner=op, schedule=sched)))
    return configs


def run_sweep(base: ExperimentConfig, out_dir: str | Path, workers: int = 1) -> list[ExperimentArtifacts]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    artifacts = []
    for name, cfg in sweep_configs(base):
        artifacts.append(run_experiment(cfg, out_dir / name, workers=workers))
    return artifacts
