"""Batch command line: ingest, test, simulate, rng-selftest, report.

Every command is deterministic given the input bytes, the configuration,
and the master seed; no wall clock or OS entropy enters the outputs.
Exit codes: 0 success, 1 usage or configuration problem, 2 data format
problem, 3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from pathlib import Path

from marketrng.chi2 import chi2_critical  # noqa: F401  (warm import for workers)
from marketrng.config import ConfigError, RunConfig
from marketrng.pipeline import (
    ExperimentStream,
    FormatError,
    adjust_price,
    build_stream,
    compute_return_series,
    clean_panel,
    monthly_column_sums,
    parse_prices,
)
from marketrng.report import (
    default_kde_grid,
    emit_tables,
    kde_curve,
    read_report_json,
    recurrence_matrix,
    summarize_stream,
    write_kde,
    write_recurrence,
    write_report_json,
)
from marketrng.rng import SyntheticSpec, rng_selftest, shape_synthetic
from marketrng.serial import psi_profile

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # noqa: D102 - argparse hook
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="marketrng", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="JSON config file; flags override its values")
        p.add_argument("--input", dest="input_path", help="input price CSV")
        p.add_argument("--frequency", choices=("monthly", "daily"))
        p.add_argument(
            "--stream",
            dest="stream_kinds",
            help="comma-separated subset of firm,year",
        )
        p.add_argument("--max-nu", dest="max_nu", type=int)
        p.add_argument("--alpha", type=float)
        p.add_argument("--trim", dest="trim_fractions", help="comma-separated trim fractions")
        p.add_argument("--boundary-mode", dest="boundary_mode", choices=("ignore", "respect"))
        p.add_argument("--seed", dest="master_seed", type=int)
        p.add_argument("--jobs", type=int)
        p.add_argument("--out", dest="output_dir")

    for name in ("ingest", "test", "simulate"):
        add_common(sub.add_parser(name))
    sub.add_parser("rng-selftest")
    report = sub.add_parser("report")
    report.add_argument("--report", dest="report_path", required=True)
    report.add_argument("--format", dest="table_format", choices=("csv", "markdown"), default="csv")
    report.add_argument("--out", dest="output_dir")
    return parser


def _config_from_args(args) -> RunConfig:
    config = RunConfig.from_file(args.config) if args.config else RunConfig()
    overrides = {
        "input_path": args.input_path,
        "frequency": args.frequency,
        "max_nu": args.max_nu,
        "alpha": args.alpha,
        "boundary_mode": args.boundary_mode,
        "master_seed": args.master_seed,
        "jobs": args.jobs,
        "output_dir": args.output_dir,
    }
    if args.stream_kinds:
        overrides["stream_kinds"] = tuple(s.strip() for s in args.stream_kinds.split(","))
    if args.trim_fractions:
        overrides["trim_fractions"] = tuple(float(p) for p in args.trim_fractions.split(","))
    return config.with_overrides(**overrides)


def _read_panel(config: RunConfig):
    if not config.input_path:
        raise ConfigError("an input CSV is required (--input or config input_path)")
    try:
        with open(config.input_path, "r", encoding="utf-8", newline="") as handle:
            parsed = parse_prices(handle)
    except OSError as exc:
        raise FormatError(f"cannot read input: {exc}") from exc
    return parsed


def _write_audit(path: Path, rows) -> None:
    lines = ["id,reason,detail"]
    for row in rows:
        detail = str(row.get("detail", "")).replace(",", ";")
        lines.append(f"{row['id']},{row['reason']},{detail}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def cmd_ingest(config: RunConfig) -> int:
    parsed = _read_panel(config)
    kept, dropped = clean_panel(parsed.records, config.frequency, config.gap_scope)
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    lines = ["id,date,close,adjfactor,retfactor"]
    for instrument in sorted(kept):
        for rec in kept[instrument]:
            lines.append(
                f"{rec.instrument_id},{rec.date.isoformat()},"
                f"{rec.close_unadjusted!r},{rec.adj_factor!r},{rec.ret_factor!r}"
            )
    (out / "cleaned.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    audit_rows = [
        {"id": f"line:{rej.line}", "reason": "reject", "detail": rej.reason}
        for rej in parsed.rejects
    ] + dropped
    _write_audit(out / "audit.csv", audit_rows)

    print(
        f"kept {len(kept)} instrument(s), dropped {len(dropped)}, "
        f"rejected {len(parsed.rejects)} row(s)"
    )
    if not kept:
        print("no instruments survived cleaning", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


def _profiles_for(stream: ExperimentStream, config: RunConfig):
    respect = config.boundary_mode == "respect"
    usable = [s for s in stream.sequences if len(s) >= config.max_nu]
    skipped = [s.source_id for s in stream.sequences if len(s) < config.max_nu]
    worker = partial(psi_profile, max_nu=config.max_nu, respect_boundaries=respect)
    jobs = config.resolved_jobs()
    if jobs > 1 and len(usable) > 1:
        chunk = max(1, len(usable) // (jobs * 4))
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            profiles = list(pool.map(worker, usable, chunksize=chunk))
    else:
        profiles = [worker(seq) for seq in usable]
    return usable, profiles, skipped


def _summarize_and_write(stream, config: RunConfig, out_dir: Path, extra_config: dict | None = None) -> int:
    usable, profiles, skipped = _profiles_for(stream, config)
    if not profiles:
        print("no sequence is long enough to profile", file=sys.stderr)
        return EXIT_DATA
    report = summarize_stream(
        profiles,
        alpha=config.alpha,
        trim_fractions=config.trim_fractions,
        sequence_ids=[s.source_id for s in usable],
        kind=stream.kind,
        trim_mode=config.trim_mode,
    )
    report.extras["skipped_sequences"] = skipped
    report.extras["audit"] = stream.audit
    echo = config.echo_dict()
    if extra_config:
        echo.update(extra_config)
    write_report_json(report, out_dir / "report.json", config=echo)
    emit_tables(report, out_dir, fmt="csv")
    return EXIT_OK


def cmd_test(config: RunConfig) -> int:
    parsed = _read_panel(config)
    kept, dropped = clean_panel(parsed.records, config.frequency, config.gap_scope)
    if not kept:
        print("no instruments survived cleaning", file=sys.stderr)
        return EXIT_DATA
    series = {
        instrument: compute_return_series(records, config.frequency)
        for instrument, records in kept.items()
    }
    out = Path(config.output_dir)
    kind_map = {"firm": "firm_separated", "year": "year_separated"}
    for short in config.stream_kinds:
        kind = kind_map[short]
        stream = build_stream(series, kind)
        stream_dir = out / kind
        status = _summarize_and_write(stream, config, stream_dir)
        if status != EXIT_OK:
            return status
        _emit_figures(stream, series, kept, config, stream_dir)
        print(f"{kind}: {len(stream.sequences)} sequence(s) -> {stream_dir}")
    _write_audit(out / "audit.csv", dropped)
    return EXIT_OK


def _emit_figures(stream, series, kept, config: RunConfig, out_dir: Path) -> None:
    figures = out_dir / "figures"
    if stream.kind == "firm_separated":
        ids = list(config.recurrence_ids) or sorted(series)[:2]
        for instrument in ids:
            if instrument not in series:
                continue
            if config.recurrence_source == "prices":
                values = [adjust_price(r) for r in kept[instrument]]
            else:
                values = series[instrument].returns
            matrix = recurrence_matrix(values, axis_label=config.recurrence_source)
            write_recurrence(matrix, figures / f"recurrence_{instrument}")
    else:
        months = 12 if config.frequency == "monthly" else 252
        for seq in stream.sequences:
            try:
                sums = monthly_column_sums(seq, months)
            except ValueError:
                continue
            total_bits = sums.rows_included * months
            try:
                grid = default_kde_grid(sums.values, length=total_bits)
                density = kde_curve(sums.values, grid, length=total_bits)
            except ValueError:
                continue
            write_kde(grid, density, figures / f"kde_{seq.source_id}.csv")


def cmd_simulate(config: RunConfig) -> int:
    spec_dict = dict(config.synthetic) if config.synthetic else {}
    kind = spec_dict.get("kind", "firm_like")
    generator = spec_dict.get("generator", "pcg64")
    burn_in = int(spec_dict.get("burn_in", 100))
    lengths = config.synthetic_lengths()
    spec = SyntheticSpec(kind=kind, lengths=tuple(lengths))
    stream = shape_synthetic(
        spec, generator=generator, master_seed=config.master_seed, burn_in=burn_in
    )
    out = Path(config.output_dir) / stream.kind
    status = _summarize_and_write(
        stream,
        config,
        out,
        extra_config={
            "synthetic_resolved": {
                "kind": kind,
                "generator": generator,
                "count": spec.count,
                "burn_in": burn_in,
                "master_seed": config.master_seed,
            }
        },
    )
    if status == EXIT_OK:
        print(f"simulated {spec.count} sequence(s) with {generator} -> {out}")
    return status


def cmd_rng_selftest() -> int:
    try:
        result = rng_selftest()
    except FileNotFoundError as exc:
        print(f"reference vector fixture missing: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    print(result.message)
    if not result.ok:
        print(f"first mismatching output index: {result.first_mismatch}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


def cmd_report(args) -> int:
    report, _config = read_report_json(args.report_path)
    out_dir = Path(args.output_dir) if args.output_dir else Path(args.report_path).parent
    paths = emit_tables(report, out_dir, fmt=args.table_format)
    for path in paths:
        print(path)
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "rng-selftest":
            return cmd_rng_selftest()
        if args.command == "report":
            return cmd_report(args)
        config = _config_from_args(args)
        if args.command == "ingest":
            return cmd_ingest(config)
        if args.command == "test":
            return cmd_test(config)
        if args.command == "simulate":
            return cmd_simulate(config)
        raise AssertionError(f"unhandled command {args.command}")
    except (_UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FormatError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # invariant violations and unexpected states
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
