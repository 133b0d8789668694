"""Command-line front end.

    dysfair score   --manifest m.jsonl [--out metrics.jsonl]
    dysfair audit   --manifest m.jsonl --dimension severity [--output-format md|csv|json]
    dysfair compare --results results.json --base model1 --other model3 [--convention old|new]
    dysfair report  --report audit.json [--insights PATH] [--plot-data PATH]

Exit codes: 0 ok, 1 data error, 2 usage error, 3 bias gate tripped
(any flagged cell; disable with --no-gate).
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

from .downstream import ChangeConvention, UnknownConditionError, compare_conditions, load_result_tables, render_comparison
from .fairness import BaselineMissingError, Thresholds, audit, get_metric
from .manifest import ManifestError, read_manifest, validate_records
from .report import emit_plot_data, render_fairness_table, render_key_insights, report_from_json
from .textmetrics import NormalizationPolicy, UndefinedRateError, score_utterance

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

EXIT_OK, EXIT_DATA, EXIT_USAGE, EXIT_GATE = 0, 1, 2, 3

DEFAULTS = {
    "format": None,
    "dimension": "severity",
    "baseline": "healthy",
    "metrics": "delta_wer,delta_cer,simo,autopcp",
    "group_order": None,
    "di_good": 0.80,
    "pd_flag": 0.22,
    "output_format": "md",
    "convention": "old",
    "empty_ref": "error",
    "strict": False,
    "no_gate": False,
    "no_lowercase": False,
    "keep_punctuation": False,
    "keep_whitespace": False,
}
REQUIRED = {
    "score": ("manifest",),
    "audit": ("manifest",),
    "compare": ("results", "base", "other"),
    "report": ("report",),
}
_FORMATS = {"md": "markdown", "csv": "csv", "json": "json"}


class DataError(Exception):
    pass


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="TOML file whose keys mirror the flags; flags win")
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--strict", action="store_true", default=None, help="treat warnings as errors")


def _add_manifest(p: argparse.ArgumentParser) -> None:
    p.add_argument("--manifest", help="JSONL or CSV manifest")
    p.add_argument("--format", choices=["jsonl", "csv"], help="manifest format (default: by extension)")
    p.add_argument("--no-lowercase", action="store_true", default=None)
    p.add_argument("--keep-punctuation", action="store_true", default=None)
    p.add_argument("--keep-whitespace", action="store_true", default=None)
    p.add_argument("--empty-ref", choices=["error", "hyp_len"], help="rate for empty references with insertions")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dysfair", description="Fairness audit for dysarthric speech cloning.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("score", help="per-utterance WER/CER/delta/SIM-o/AutoPCP as JSONL")
    _add_common(p)
    _add_manifest(p)

    p = sub.add_parser("audit", help="PD/DI fairness table for one grouping dimension")
    _add_common(p)
    _add_manifest(p)
    p.add_argument("--dimension", help="grouping dimension (default: severity)")
    p.add_argument("--baseline", help="baseline group label (default: healthy)")
    p.add_argument("--metrics", help="comma-separated metrics; extensions as name:delta or name:ratio")
    p.add_argument("--group-order", help="comma-separated group label order")
    p.add_argument("--di-good", type=float, help="DI at or above this is Good (default 0.80)")
    p.add_argument("--pd-flag", type=float, help="PD at or above this is flagged (default 0.22)")
    p.add_argument("--output-format", choices=list(_FORMATS))
    p.add_argument("--insights", help="also write the key-insights table here")
    p.add_argument("--plot-data", help="also write long-format group means CSV here")
    p.add_argument("--no-gate", action="store_true", default=None, help="exit 0 even when cells are flagged")

    p = sub.add_parser("compare", help="relative change between downstream training conditions")
    _add_common(p)
    p.add_argument("--results", help="result-table JSON")
    p.add_argument("--base", help="reference condition, e.g. model1")
    p.add_argument("--other", help="compared condition, e.g. model3")
    p.add_argument("--convention", choices=["old", "new"], help="old: (new-old)/old; new: (old-new)/new")
    p.add_argument("--output-format", choices=list(_FORMATS))

    p = sub.add_parser("report", help="re-render a JSON audit report")
    _add_common(p)
    p.add_argument("--report", help="audit report JSON written by 'audit --output-format json'")
    p.add_argument("--output-format", choices=list(_FORMATS))
    p.add_argument("--insights", help="also write the key-insights table here")
    p.add_argument("--plot-data", help="also write long-format group means CSV here")
    return parser


def resolve_config(args: argparse.Namespace, parser: argparse.ArgumentParser) -> argparse.Namespace:
    """Fill unset flags from --config, then from DEFAULTS; check required flags."""
    file_values = {}
    if args.config:
        try:
            with open(args.config, "rb") as fh:
                file_values = {k.replace("-", "_"): v for k, v in tomllib.load(fh).items()}
        except (OSError, tomllib.TOMLDecodeError) as exc:
            parser.error(f"cannot read config {args.config}: {exc}")
    for key, value in vars(args).items():
        if value is None:
            if key in file_values:
                value = file_values[key]
                if isinstance(value, list):
                    value = ",".join(str(v) for v in value)
            else:
                value = DEFAULTS.get(key)
            setattr(args, key, value)
    missing = [f"--{name.replace('_', '-')}" for name in REQUIRED[args.command] if not getattr(args, name)]
    if missing:
        parser.error(f"{args.command} requires {', '.join(missing)}")
    return args


def _write(text: str, path: str | None) -> None:
    if path:
        Path(path).write_text(text, encoding="utf-8", newline="")
    else:
        sys.stdout.write(text)


def _policy(args) -> NormalizationPolicy:
    return NormalizationPolicy(
        lowercase=not args.no_lowercase,
        strip_punctuation=not args.keep_punctuation,
        collapse_whitespace=not args.keep_whitespace,
    )


def _load_records(args):
    try:
        records = read_manifest(args.manifest, args.format)
    except ManifestError as exc:
        raise DataError("\n".join(f"{args.manifest}:{loc}: {msg}" for loc, msg in exc.errors)) from exc
    except OSError as exc:
        raise DataError(f"cannot read manifest: {exc}") from exc
    report = validate_records(records)
    for loc, msg in report.warnings:
        print(f"warning: {loc}: {msg}", file=sys.stderr)
    if report.errors:
        raise DataError("\n".join(f"error: {loc}: {msg}" for loc, msg in report.errors))
    if args.strict and report.warnings:
        raise DataError("warnings treated as errors (--strict)")
    return records


def _flush_warnings(caught, strict: bool) -> None:
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    if strict and caught:
        raise DataError("warnings treated as errors (--strict)")


def cmd_score(args) -> int:
    records = _load_records(args)
    policy = _policy(args)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        scored = [score_utterance(r, policy, args.empty_ref) for r in records]
    _flush_warnings(caught, args.strict)
    scored.sort(key=lambda m: m.utt_id)
    _write("".join(json.dumps(m.as_dict(), sort_keys=True) + "\n" for m in scored), args.out)
    return EXIT_OK


def _side_outputs(report, args) -> None:
    if args.insights:
        Path(args.insights).write_text(render_key_insights(report), encoding="utf-8")
    if args.plot_data:
        Path(args.plot_data).write_text(emit_plot_data(report.stats), encoding="utf-8", newline="")


def cmd_audit(args) -> int:
    records = _load_records(args)
    try:
        metrics = [get_metric(m) for m in str(args.metrics).split(",") if m.strip()]
        thresholds = Thresholds(di_good=float(args.di_good), pd_flag=float(args.pd_flag), baseline_label=args.baseline)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    order = [x.strip() for x in args.group_order.split(",")] if args.group_order else None
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        result = audit(records, args.dimension, metrics, thresholds, _policy(args), order, args.empty_ref)
    _flush_warnings(caught, args.strict)
    _write(render_fairness_table(result, _FORMATS[args.output_format]), args.out)
    _side_outputs(result, args)
    if result.flagged and not args.no_gate:
        cells = ", ".join(f"{r.metric.name}/{r.group.label}" for r in result.flagged)
        print(f"bias gate: flagged cells {cells}", file=sys.stderr)
        return EXIT_GATE
    return EXIT_OK


def cmd_compare(args) -> int:
    try:
        tables = load_result_tables(Path(args.results).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise DataError(f"cannot load results: {exc}") from exc
    convention = ChangeConvention.parse(args.convention)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        if args.output_format == "md":
            text = render_comparison(tables, args.base, args.other, convention)
        else:
            rows = [
                {"task": t.task, "category": cat, "base": t.cells[args.base][cat],
                 "other": t.cells[args.other][cat], "change_percent": change,
                 "convention": f"relative_to_{convention.value}"}
                for t in tables
                for cat, change in compare_conditions(t, args.base, args.other, convention).items()
            ]
            text = _rows_out(rows, args.output_format)
    _flush_warnings(caught, args.strict)
    _write(text, args.out)
    return EXIT_OK


def _rows_out(rows: list[dict], fmt: str) -> str:
    if fmt == "json":
        return json.dumps(rows, indent=2, sort_keys=True) + "\n"
    lines = ["task,category,base,other,change_percent,convention"]
    lines += [f"{r['task']},{r['category']},{r['base']!r},{r['other']!r},{r['change_percent']!r},{r['convention']}" for r in rows]
    return "\r\n".join(lines) + "\r\n"


def cmd_report(args) -> int:
    try:
        report = report_from_json(Path(args.report).read_text(encoding="utf-8"))
    except (OSError, ValueError, KeyError) as exc:
        raise DataError(f"cannot load report: {exc}") from exc
    _write(render_fairness_table(report, _FORMATS[args.output_format]), args.out)
    _side_outputs(report, args)
    return EXIT_OK


COMMANDS = {"score": cmd_score, "audit": cmd_audit, "compare": cmd_compare, "report": cmd_report}


def main(argv=None) -> int:
    parser = build_parser()
    args = resolve_config(parser.parse_args(argv), parser)
    try:
        return COMMANDS[args.command](args)
    except (DataError, BaselineMissingError, UnknownConditionError, UndefinedRateError, ZeroDivisionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
