"""Command line entry point: ``premtail fit | diagnose | synth``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from .numerics import SeededRng
from .report import (
    DataError,
    RunConfig,
    analyze_company,
    company_stream,
    diagnostic_series,
    emit_plot_files,
    load_csv,
    render_tables,
)
from .synth import DEFAULT_SEED, write_synthetic_csv

log = logging.getLogger("premtail")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _threshold(text: str):
    if text == "auto":
        return "auto"
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'auto' or a number, got {text!r}") from None
    if not value > 0:
        raise argparse.ArgumentTypeError("threshold must be positive")
    return value


def _probability(text: str) -> float:
    value = float(text)
    if not 0 < value < 1:
        raise argparse.ArgumentTypeError("alpha must lie strictly between 0 and 1")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("expected a positive integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="premtail", description="Heavy-tail fitting of premium series.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    common = _Parser(add_help=False)
    common.add_argument("--input", required=True, type=Path, help="CSV with company,period,premium")
    common.add_argument("--out-dir", type=Path, default=Path("premtail-out"))
    common.add_argument("--company", action="append", help="only analyze this company (repeatable)")
    common.add_argument("--seed", type=int, default=42)
    common.add_argument("-v", "--verbose", action="store_true")

    fit = sub.add_parser("fit", parents=[common], help="fit all families and write the tables")
    fit.add_argument("--alpha", type=_probability, default=0.05)
    fit.add_argument("--bootstrap-reps", type=_positive_int, default=1000)
    fit.add_argument("--p-method", choices=["bootstrap", "asymptotic"], default="bootstrap")
    fit.add_argument("--threshold", type=_threshold, default="auto")
    fit.add_argument("--blocks", type=int, default=10)
    fit.add_argument("--block-assignment", choices=["contiguous", "random"], default="contiguous")
    fit.add_argument("--method", choices=["pot", "block-maxima"], default="pot")
    fit.add_argument("--format", choices=["csv", "json"], default="csv")
    fit.add_argument("--emit-plots", action="store_true")

    sub.add_parser("diagnose", parents=[common], help="write model-free diagnostic plot data")

    synth = sub.add_parser("synth", help="regenerate the synthetic premium dataset")
    synth.add_argument("--out", type=Path, required=True)
    synth.add_argument("--seed", type=int, default=DEFAULT_SEED)
    return parser


def _select(dataset, names: Optional[List[str]]):
    if not names:
        return dataset.companies
    missing = [n for n in names if n not in dataset.companies]
    if missing:
        raise DataError(f"unknown company: {', '.join(missing)}")
    return {n: dataset.companies[n] for n in names}


def _cmd_fit(args) -> int:
    config = RunConfig(
        alpha=args.alpha,
        bootstrap_reps=args.bootstrap_reps,
        seed=args.seed,
        threshold=args.threshold,
        block_count=args.blocks,
        block_assignment=args.block_assignment,
        method=args.method,
        p_method=args.p_method,
        out_dir=str(args.out_dir),
        emit_plots=args.emit_plots,
    )
    dataset = load_csv(args.input)
    companies = _select(dataset, args.company)
    root = SeededRng(config.seed)
    reports = []
    for name, sample in companies.items():
        log.info("analyzing %s (%d observations)", name, len(sample))
        try:
            report = analyze_company(sample, config, root.spawn(company_stream(name)))
        except ValueError as exc:
            raise DataError(str(exc)) from None
        reports.append(report)
        if config.emit_plots:
            emit_plot_files(name, diagnostic_series(sample, report, config), args.out_dir)
    for path in render_tables(reports, args.out_dir, args.format):
        print(path)
    meta = {
        "source": dataset.source_path,
        "config": {k: v for k, v in config.__dict__.items() if k != "out_dir"},
        "data_warnings": dataset.warnings,
        "companies": {
            r.company: {
                "threshold": r.gpd_row.threshold,
                "n_exceed": r.gpd_row.n_used,
                "warnings": r.warnings,
            }
            for r in reports
        },
    }
    (args.out_dir / "run_metadata.json").write_text(json.dumps(meta, indent=2) + "\n",
                                                    encoding="utf-8")
    return EXIT_OK


def _cmd_diagnose(args) -> int:
    dataset = load_csv(args.input)
    for name, sample in _select(dataset, args.company).items():
        for path in emit_plot_files(name, diagnostic_series(sample), args.out_dir):
            print(path)
    return EXIT_OK


def _cmd_synth(args) -> int:
    print(write_synthetic_csv(args.out, args.seed))
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(message)s")
    handlers = {"fit": _cmd_fit, "diagnose": _cmd_diagnose, "synth": _cmd_synth}
    try:
        return handlers[args.command](args)
    except (DataError, FileNotFoundError) as exc:
        print(f"premtail: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"premtail: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
