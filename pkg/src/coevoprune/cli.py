"""Command-line interface: generate, train, sweep, report.

Exit codes: 0 success, 2 configuration error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import PROFILES, ConfigError, ExperimentConfig, parse_config_text
from .harness import (
    load_rows,
    make_trial_data,
    representative_rows,
    run_experiment,
    run_sweep,
    summarize,
)
from .problem import save_dataset


def _resolve_config(args) -> ExperimentConfig:
    """--profile picks the base; a --config file overrides it key by key."""
    if args.config is None and args.profile is None:
        raise ConfigError("need --config FILE or --profile NAME")
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        text = (f"profile = {args.profile}\n" if args.profile else "") + path.read_text()
        return parse_config_text(text, source=str(path))
    return PROFILES[args.profile].validate()


def cmd_generate(args) -> int:
    cfg = ExperimentConfig(
        n=args.n, k=args.k, per=args.per, q=args.q, master_seed=args.seed,
        heldout_samples=1,
    ).validate()
    data = make_trial_data(cfg, trial=0)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_dataset(data.train, out / "train.txt")
    save_dataset(data.test, out / "test.txt")
    print(f"wrote {out / 'train.txt'} and {out / 'test.txt'} "
          f"({data.train.m} samples each, n={data.train.n}, q={data.train.q})")
    return 0


def cmd_train(args) -> int:
    cfg = _resolve_config(args)
    artifacts = run_experiment(cfg, args.out, workers=args.workers)
    print(f"wrote {artifacts.csv_path} ({len(artifacts.rows)} rows), "
          f"{artifacts.summary_path}, {artifacts.manifest_path}")
    return 0


def cmd_sweep(args) -> int:
    cfg = _resolve_config(args)
    artifacts = run_sweep(cfg, args.out, workers=args.workers)
    print(f"wrote {len(artifacts)} configurations under {args.out}")
    return 0


def _collect_csvs(args) -> list[Path]:
    paths = [Path(p) for p in args.csv]
    if args.dir:
        paths.extend(
            p for p in sorted(Path(args.dir).glob("*.csv")) if not p.name.endswith(".summary.csv")
        )
    if not paths:
        raise ConfigError("report needs CSV paths or --dir")
    missing = [p for p in paths if not p.exists()]
    if missing:
        raise FileNotFoundError(f"no such file: {missing[0]}")
    return paths


def _write_plot(csv_path: Path, plot_dir: Path) -> Path:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    import numpy as np

    rows = load_rows(csv_path)
    reps = representative_rows(rows)
    epochs = sorted({r.epoch for r in rows})
    medians = [
        float(np.median([row.test_loss for (t, e), row in reps.items() if e == epoch]))
        for epoch in epochs
    ]
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.plot(epochs, medians)
    ax.set_xlabel("epoch")
    ax.set_ylabel("median test loss")
    ax.set_title(csv_path.stem)
    fig.tight_layout()
    out = plot_dir / (csv_path.stem + ".svg")
    fig.savefig(out)
    plt.close(fig)
    return out


def cmd_report(args) -> int:
    paths = _collect_csvs(args)
    summaries = summarize(paths)
    summaries.sort(key=lambda s: (s.name.split("_")[0], s.final_test_loss_median))
    header = f"{'config':<38} {'trials':>6} {'test_loss':>12} {'preserved%':>10} {'enc%':>7} {'dec%':>7} {'pearson':>8}"
    print(header)
    print("-" * len(header))
    best_seen: set[str] = set()
    for s in summaries:
        trainer = s.name.split("_")[0]
        marks = []
        if trainer not in best_seen:
            marks.append("best")
            best_seen.add(trainer)
        if trainer == "canonical" and s.name.endswith("_population"):
            marks.append("degenerate: equals fixed")
        mark = ("  <- " + "; ".join(marks)) if marks else ""
        print(
            f"{s.name:<38} {s.trials:>6} {s.final_test_loss_median:>12.6f} "
            f"{s.preserved_total_median:>10.2f} {s.preserved_encoder_median:>7.2f} "
            f"{s.preserved_decoder_median:>7.2f} {s.pearson_str():>8}{mark}"
        )
    if args.plots:
        plot_dir = Path(args.plots)
        plot_dir.mkdir(parents=True, exist_ok=True)
        for p in paths:
            _write_plot(p, plot_dir)
        print(f"wrote {len(paths)} plots under {plot_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coevoprune",
        description="Coevolutionary autoencoder training with pruning on the binary clustering benchmark",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write train/test dataset files")
    g.add_argument("--n", type=int, default=128)
    g.add_argument("--k", type=int, default=6)
    g.add_argument("--per", type=int, default=10)
    g.add_argument("--q", type=float, default=0.05)
    g.add_argument("--seed", type=int, default=1)
    g.add_argument("--out", required=True, help="output directory")
    g.set_defaults(func=cmd_generate)

    def config_source(p):
        p.add_argument("--config", help="flat key=value config file")
        p.add_argument("--profile", choices=sorted(PROFILES), help="named base profile")
        p.add_argument("--workers", type=int, default=1, help="parallel trial workers")

    t = sub.add_parser("train", help="run one configuration")
    config_source(t)
    t.add_argument("--out", default="run", help="output path prefix")
    t.set_defaults(func=cmd_train)

    s = sub.add_parser("sweep", help="run the operator x schedule grid")
    config_source(s)
    s.add_argument("--out", default="sweep", help="output directory")
    s.set_defaults(func=cmd_sweep)

    r = sub.add_parser("report", help="summarize metrics CSVs")
    r.add_argument("csv", nargs="*", help="metrics CSV paths")
    r.add_argument("--dir", help="directory of metrics CSVs (e.g. a sweep output)")
    r.add_argument("--plots", help="write per-config SVG loss curves to this directory")
    r.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
