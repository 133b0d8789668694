"""Deterministic rendering of audit results: fairness tables, key insights, plot data."""

from __future__ import annotations

import csv
import io
import json
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal

from .fairness import POOR, AuditReport, FairnessRow, GroupStats, MetricKind, Thresholds, classify
from .manifest import GroupKey

__all__ = [
    "ACTIONS_VERSION",
    "DEFAULT_ACTIONS",
    "AuditReport",
    "InsightRow",
    "emit_plot_data",
    "format_fixed",
    "key_insights",
    "render_fairness_table",
    "render_key_insights",
    "report_from_json",
    "report_to_dict",
]

METRIC_LABELS = {"delta_wer": "ΔWER", "delta_cer": "ΔCER", "simo": "SIM-o", "autopcp": "AutoPCP"}

ACTIONS_VERSION = 1
# (metric name, level) -> recommended action; "*" matches any metric
DEFAULT_ACTIONS: dict[tuple[str, str], str] = {
    ("delta_wer", "Poor"): "Intelligibility-aware speech data augmentation",
    ("delta_cer", "Poor"): "Adapt ASR models to represent severity",
    ("*", "Good"): "Minimal intervention",
    ("*", "Poor"): "Fairness-aware mitigation",
}
NO_MAJOR_IMPACT = "No major impact"
TIE_TOLERANCE = 0.005


def metric_label(metric: MetricKind) -> str:
    return METRIC_LABELS.get(metric.name, metric.name)


def format_fixed(x: float, places: int = 2) -> str:
    """Round half-up on the shortest decimal repr, e.g. 0.025 -> '0.03'."""
    q = Decimal(repr(float(x))).quantize(Decimal(1).scaleb(-places), rounding=ROUND_HALF_UP)
    if q == 0:
        q = abs(q)
    return str(q)


def _thresholds(report: AuditReport) -> Thresholds:
    return Thresholds(**report.config["thresholds"]) if "thresholds" in report.config else Thresholds()


def _cells(row: FairnessRow, t: Thresholds) -> tuple[str, str, bool, bool]:
    """Formatted PD and DI plus whether each one is individually highlighted."""
    if row.di is None:
        pd_text = "n/a" if row.pd is None else format_fixed(row.pd)
        return pd_text, "n/a", row.flagged, row.flagged
    pd_hi = row.pd is not None and row.flagged and row.pd >= t.pd_flag - 1e-9
    di_hi = row.flagged and row.level == POOR
    return format_fixed(row.pd), format_fixed(row.di), pd_hi, di_hi


# ---------------------------------------------------------------------------
# JSON form


def report_to_dict(report: AuditReport) -> dict:
    return {
        "dimension": report.dimension,
        "baseline": report.baseline.label,
        "rows": [
            {
                "group": r.group.label,
                "metric": r.metric.name,
                "polarity": r.metric.polarity,
                "pd": r.pd,
                "di": r.di,
                "level": r.level,
                "flagged": r.flagged,
                "count": r.count,
                "note": r.note,
            }
            for r in report.rows
        ],
        "stats": [
            {
                "group": s.group.label,
                "metric": s.metric.name,
                "polarity": s.metric.polarity,
                "mean": s.mean,
                "count": s.count,
            }
            for s in report.stats
        ],
        "config": report.config,
        "provenance": report.provenance,
        "unlabeled": report.unlabeled,
    }


def report_from_json(text: str) -> AuditReport:
    data = json.loads(text)
    dim = data["dimension"]
    rows = [
        FairnessRow(
            GroupKey(dim, r["group"]),
            MetricKind(r["metric"], r["polarity"]),
            r["pd"],
            r["di"],
            r["level"],
            r["flagged"],
            r["count"],
            r.get("note", ""),
        )
        for r in data["rows"]
    ]
    stats = [
        GroupStats(GroupKey(dim, s["group"]), MetricKind(s["metric"], s["polarity"]), s["mean"], s["count"])
        for s in data["stats"]
    ]
    return AuditReport(
        dim, GroupKey(dim, data["baseline"]), rows, stats,
        data.get("config", {}), data.get("provenance", {}), data.get("unlabeled", 0),
    )


def _render_json(report: AuditReport) -> str:
    return json.dumps(report_to_dict(report), sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


# ---------------------------------------------------------------------------
# tables


def _grid(report: AuditReport) -> dict[tuple[GroupKey, MetricKind], FairnessRow]:
    return {(r.group, r.metric): r for r in report.rows}


def _render_markdown(report: AuditReport) -> str:
    t = _thresholds(report)
    grid = _grid(report)
    metrics = report.metrics
    header = [report.dimension]
    for m in metrics:
        header += [f"{metric_label(m)} PD", f"{metric_label(m)} DI"]
    lines = [
        f"Fairness across {report.dimension} (baseline: {report.baseline.label}; "
        f"DI < {format_fixed(t.di_good)} or PD >= {format_fixed(t.pd_flag)} in bold)",
        "",
        "| " + " | ".join(header) + " |",
        "|---" + "|---:" * (2 * len(metrics)) + "|",
    ]
    for g in report.groups:
        cells = [g.label]
        for m in metrics:
            row = grid.get((g, m))
            if row is None:
                cells += ["", ""]
                continue
            pd_text, di_text, pd_hi, di_hi = _cells(row, t)
            cells.append(f"**{pd_text}**" if pd_hi else pd_text)
            cells.append(f"**{di_text}**" if di_hi else di_text)
        lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def _render_csv(report: AuditReport) -> str:
    t = _thresholds(report)
    grid = _grid(report)
    metrics = report.metrics
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    header = ["group"]
    for m in metrics:
        header += [f"{m.name}_pd", f"{m.name}_di", f"{m.name}_level", f"{m.name}_flagged", f"{m.name}_n"]
    writer.writerow(header)
    for g in report.groups:
        out = [g.label]
        for m in metrics:
            row = grid.get((g, m))
            if row is None:
                out += ["", "", "", "", ""]
                continue
            pd_text, di_text, _, _ = _cells(row, t)
            out += [pd_text, di_text, row.level or "n/a", "true" if row.flagged else "false", str(row.count)]
        writer.writerow(out)
    return buf.getvalue()


def render_fairness_table(report: AuditReport, format: str = "markdown") -> str:
    """Render PD/DI per group and metric.

    Markdown and CSV round half-up to two decimals; JSON keeps full
    precision with sorted keys. Output depends only on ``report``.
    """
    if format in ("markdown", "md"):
        return _render_markdown(report)
    if format == "csv":
        return _render_csv(report)
    if format == "json":
        return _render_json(report)
    raise ValueError(f"unknown table format {format!r}")


# ---------------------------------------------------------------------------
# key insights


@dataclass(frozen=True)
class InsightRow:
    metric: MetricKind
    most_affected: tuple[str, ...]
    min_di: float
    level: str
    action: str


def _action(actions: Mapping[tuple[str, str], str], metric: MetricKind, level: str) -> str:
    return actions.get((metric.name, level)) or actions.get(("*", level), "")


def key_insights(report: AuditReport, actions: Mapping[tuple[str, str], str] | None = None) -> list[InsightRow]:
    """Per metric, the group(s) with the lowest DI and the matching action.

    Groups within 0.005 of the minimum are reported together. Metrics
    without any defined non-baseline DI are skipped.
    """
    table = dict(DEFAULT_ACTIONS)
    table.update(actions or {})
    t = _thresholds(report)
    out = []
    for metric in report.metrics:
        rows = [r for r in report.rows if r.metric == metric and r.group != report.baseline and r.di is not None]
        if not rows:
            continue
        min_di = min(r.di for r in rows)
        affected = tuple(r.group.label for r in rows if r.di <= min_di + TIE_TOLERANCE)
        level, _ = classify(None, min_di, t)
        out.append(InsightRow(metric, affected, min_di, level, _action(table, metric, level)))
    return out


def _join_labels(labels: Sequence[str]) -> str:
    if len(labels) == 1:
        return labels[0]
    return ", ".join(labels[:-1]) + " and " + labels[-1]


def render_key_insights(report: AuditReport, actions: Mapping[tuple[str, str], str] | None = None) -> str:
    t = _thresholds(report)
    lines = [
        f"Key insights by minimum DI across {report.dimension} (baseline: {report.baseline.label})",
        "",
        f"| Metric | Most affected {report.dimension} | DI | Fairness level | Recommended action |",
        "|---|---|---:|---|---|",
    ]
    for ins in key_insights(report, actions):
        if ins.min_di >= t.di_good - 1e-9:
            affected = NO_MAJOR_IMPACT
        else:
            affected = _join_labels(ins.most_affected)
        lines.append(
            f"| {metric_label(ins.metric)} | {affected} | {format_fixed(ins.min_di)} | {ins.level} | {ins.action} |"
        )
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# plot data


def emit_plot_data(stats: Sequence[GroupStats]) -> str:
    """Long-format CSV of group means, one line per (metric, group)."""
    metric_rank: dict[MetricKind, int] = {}
    group_rank: dict[GroupKey, int] = {}
    for s in stats:
        metric_rank.setdefault(s.metric, len(metric_rank))
        group_rank.setdefault(s.group, len(group_rank))
    ordered = sorted(stats, key=lambda s: (metric_rank[s.metric], group_rank[s.group]))

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(["dimension", "group", "metric", "mean", "count"])
    for s in ordered:
        writer.writerow([s.group.dimension, s.group.label, s.metric.name, "" if s.mean is None else repr(s.mean), s.count])
    return buf.getvalue()
