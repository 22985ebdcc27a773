"""Command line entry point: ``driftlab {gen,run,report,sweep}``.

Exit codes: 0 on success, 1 on runtime errors, 2 on configuration errors.
"""

from __future__ import annotations

import argparse
import logging
import sys
import warnings
from collections import Counter
from pathlib import Path

from driftlab.config import ConfigError, load_config, parse_config
from driftlab.experiment import (
    build_report,
    load_dataset,
    report_csv,
    report_markdown,
    run_experiment,
    run_sweep,
)
from driftlab.generators import write_traces
from driftlab.records import write_stream

logger = logging.getLogger("driftlab")


def parse_seeds(text: str) -> list:
    """``"0-9"``, ``"1,4,7"`` or a mix such as ``"0-2,10"``."""
    seeds = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            lo, hi = part.split("-", 1)
            seeds.extend(range(int(lo), int(hi) + 1))
        else:
            seeds.append(int(part))
    if not seeds or min(seeds) < 0:
        raise argparse.ArgumentTypeError(f"invalid seed list {text!r}")
    return sorted(set(seeds))


def _gen_config(args):
    if args.config:
        return load_config(args.config)
    if args.traces:
        params = {"n_traces": args.n_traces, "anomaly_ratio": args.anomaly_ratio}
        return parse_config({"dataset": {"traces": params}, "learner": "iforest",
                             "seed": args.seed})
    params = {"n_records": args.n_records, "class_ratio": args.class_ratio,
              "noise": args.noise, "drift_at": args.drift_at or []}
    return parse_config({"dataset": {"generator": params}, "seed": args.seed})


def cmd_gen(args) -> int:
    cfg = _gen_config(args)
    if "path" in cfg.dataset:
        raise ConfigError("gen needs a generator or traces dataset, not a path")
    data, _ = load_dataset(cfg)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    if cfg.is_traces:
        write_traces(data, out)
        counts = Counter(t.label for t in data)
        noun = "traces"
    else:
        write_stream(data, out, args.format)
        counts = Counter(r.true_label for r in data)
        noun = "records"
    detail = ", ".join(f"{label} {n}" for label, n in sorted(counts.items()))
    print(f"wrote {len(data)} {noun} ({detail}) to {out}")
    return 0


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    out_dir = args.output_dir or cfg.output_dir
    summary = run_experiment(cfg, out_dir)
    if "runs" in summary:
        for delay, s in summary["runs"].items():
            print(f"delay {delay}: final F1 {s['final']['f1']:.4f}, AUT(F1) {_num(s['aut_f1'])}")
    elif "f1_by_proportion" in summary:
        for p, f1 in summary["f1_by_proportion"].items():
            print(f"proportion {p}: F1 {f1:.4f}")
    else:
        print(f"final F1 {summary['final']['f1']:.4f}, AUT(F1) {_num(summary['aut_f1'])}")
    print(f"artifacts in {out_dir}")
    return 0


def _num(value):
    return "n/a" if value is None else f"{value:.4f}"


def cmd_report(args) -> int:
    rows = build_report(args.run_dirs)
    markdown = report_markdown(rows)
    if args.out:
        prefix = Path(args.out)
        prefix.parent.mkdir(parents=True, exist_ok=True)
        prefix.with_suffix(".md").write_text(markdown, encoding="utf-8")
        prefix.with_suffix(".csv").write_text(report_csv(rows), encoding="utf-8")
    print(markdown, end="")
    return 0


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    merged = run_sweep(cfg, args.seeds, workers=args.workers,
                       output_dir=args.output_dir or cfg.output_dir)
    print(f"ran seeds {merged['seeds']}; medians written to "
          f"{Path(args.output_dir or cfg.output_dir) / 'sweep.json'}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="driftlab", description="Drift-aware stream learning experiments.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a synthetic dataset")
    gen.add_argument("--config", help="experiment config whose dataset section is used")
    gen.add_argument("--out", required=True, help="output file")
    gen.add_argument("--format", choices=["jsonl", "csv"], default="jsonl",
                     help="stream file format (traces are always JSONL)")
    gen.add_argument("--traces", action="store_true", help="generate system-call traces")
    gen.add_argument("--n-records", type=int, default=20_000)
    gen.add_argument("--class-ratio", type=float, default=0.18)
    gen.add_argument("--noise", type=float, default=0.0)
    gen.add_argument("--drift-at", type=int, action="append", metavar="DAY",
                     help="day of a vocabulary swap; repeat for several")
    gen.add_argument("--n-traces", type=int, default=200)
    gen.add_argument("--anomaly-ratio", type=float, default=0.2)
    gen.add_argument("--seed", type=int, default=0)
    gen.set_defaults(func=cmd_gen)

    run = sub.add_parser("run", help="run one configured experiment")
    run.add_argument("--config", required=True)
    run.add_argument("--output-dir", help="overrides output_dir from the config")
    run.set_defaults(func=cmd_run)

    report = sub.add_parser("report", help="compare finished runs")
    report.add_argument("run_dirs", nargs="+", help="directories holding summary.json")
    report.add_argument("--out", help="write PREFIX.md and PREFIX.csv")
    report.set_defaults(func=cmd_report)

    sweep = sub.add_parser("sweep", help="run a config over several seeds")
    sweep.add_argument("--config", required=True)
    sweep.add_argument("--seeds", type=parse_seeds, default=parse_seeds("0-9"),
                       help='e.g. "0-9" or "1,3,5" (default 0-9)')
    sweep.add_argument("--workers", type=int, default=None,
                       help="worker processes (default: CPU count)")
    sweep.add_argument("--output-dir", help="overrides output_dir from the config")
    sweep.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    # library warnings (e.g. a split inside a same-day group) as one log line
    warnings.showwarning = lambda message, *_args, **_kw: logger.warning("%s", message)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"driftlab: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - reported as a runtime failure
        if args.verbose:
            logger.exception("run failed")
        print(f"driftlab: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
