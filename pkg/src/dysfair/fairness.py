"""Group aggregation, Parity Difference, Disparate Impact and fairness levels.

For each objective measure and each group the audit compares the group mean
with the mean of a baseline group (``healthy`` by default):

* PD is the absolute difference of the raw means.
* DI for ratio-type measures (SIM-o, AutoPCP) is ``mean_group / mean_baseline``.
* DI for delta-type measures (dWER, dCER) is computed on softmax-normalized
  means as ``(1 / sm_group) / (1 / sm_baseline)``. The softmax partition
  function cancels, so this equals ``exp(mean_baseline - mean_group)``.
"""

from __future__ import annotations

import hashlib
import json
import math
from collections.abc import Mapping, Sequence
from dataclasses import asdict, dataclass, field

from . import __version__
from .manifest import GroupKey, UtteranceRecord, partition_by_group, record_to_dict
from .textmetrics import NormalizationPolicy, UtteranceMetrics, score_utterance

__all__ = [
    "AUTOPCP",
    "DEFAULT_METRICS",
    "DELTA_CER",
    "DELTA_WER",
    "SIMO",
    "AuditReport",
    "BaselineMissingError",
    "FairnessRow",
    "GroupStats",
    "MetricKind",
    "NoDataError",
    "Thresholds",
    "UndefinedDIError",
    "audit",
    "classify",
    "disparate_impact",
    "get_metric",
    "group_mean",
    "parity_difference",
    "softmax_normalize",
]

GOOD, POOR = "Good", "Poor"
# slack for threshold comparisons on values built from float subtraction
_THRESHOLD_EPS = 1e-9


@dataclass(frozen=True)
class MetricKind:
    name: str
    polarity: str  # "delta": higher mean = more bias; "ratio": higher = better preservation

    def __post_init__(self) -> None:
        if self.polarity not in ("delta", "ratio"):
            raise ValueError(f"polarity must be 'delta' or 'ratio', got {self.polarity!r}")


DELTA_WER = MetricKind("delta_wer", "delta")
DELTA_CER = MetricKind("delta_cer", "delta")
SIMO = MetricKind("simo", "ratio")
AUTOPCP = MetricKind("autopcp", "ratio")
DEFAULT_METRICS = (DELTA_WER, DELTA_CER, SIMO, AUTOPCP)
_BUILTIN = {m.name: m for m in DEFAULT_METRICS}


def get_metric(spec: str) -> MetricKind:
    """Look up a metric by name; ``name:polarity`` declares an extension metric.

    Extension metrics are read from the record's metadata under ``name``.
    """
    name, _, polarity = spec.strip().partition(":")
    if name in _BUILTIN:
        metric = _BUILTIN[name]
        if polarity and polarity != metric.polarity:
            raise ValueError(f"{name} has fixed polarity {metric.polarity!r}")
        return metric
    if not polarity:
        raise ValueError(f"unknown metric {name!r}; extension metrics need name:polarity")
    return MetricKind(name, polarity)


class NoDataError(ValueError):
    def __init__(self, group=None, metric=None):
        self.group, self.metric = group, metric
        where = " ".join(str(x) for x in (group, metric and metric.name) if x)
        super().__init__(f"no data to average{' for ' + where if where else ''}")


class UndefinedDIError(ZeroDivisionError):
    pass


class BaselineMissingError(ValueError):
    def __init__(self, dimension: str, label: str):
        self.dimension, self.label = dimension, label
        super().__init__(f"baseline group {label!r} not found under dimension {dimension!r}")


@dataclass(frozen=True)
class Thresholds:
    di_good: float = 0.80
    pd_flag: float = 0.22
    baseline_label: str = "healthy"

    def __post_init__(self) -> None:
        if not 0 < self.di_good <= 1:
            raise ValueError("di_good must lie in (0, 1]")
        if self.pd_flag < 0:
            raise ValueError("pd_flag must be >= 0")
        if not self.baseline_label:
            raise ValueError("baseline_label must be nonempty")


@dataclass(frozen=True)
class GroupStats:
    group: GroupKey
    metric: MetricKind
    mean: float | None
    count: int


@dataclass(frozen=True)
class FairnessRow:
    group: GroupKey
    metric: MetricKind
    pd: float | None
    di: float | None
    level: str | None
    flagged: bool
    count: int = 0
    note: str = ""


@dataclass
class AuditReport:
    dimension: str
    baseline: GroupKey
    rows: list[FairnessRow]
    stats: list[GroupStats]
    config: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)
    unlabeled: int = 0

    @property
    def groups(self) -> list[GroupKey]:
        seen: dict[GroupKey, None] = {}
        for row in self.rows:
            seen.setdefault(row.group)
        return list(seen)

    @property
    def metrics(self) -> list[MetricKind]:
        seen: dict[MetricKind, None] = {}
        for row in self.rows:
            seen.setdefault(row.metric)
        return list(seen)

    @property
    def flagged(self) -> list[FairnessRow]:
        return [row for row in self.rows if row.flagged]

    def row(self, metric: str, label: str) -> FairnessRow:
        for r in self.rows:
            if r.metric.name == metric and r.group.label == label:
                return r
        raise KeyError((metric, label))


# ---------------------------------------------------------------------------
# the metric algebra


def group_mean(values, group: GroupKey | None = None, metric: MetricKind | None = None) -> float:
    """Arithmetic mean of the present (non-None) values.

    Uses an exactly rounded sum, so any permutation of the input gives the
    same bits.
    """
    present = [float(v) for v in values if v is not None]
    if not present:
        raise NoDataError(group, metric)
    return math.fsum(present) / len(present)


def parity_difference(baseline_mean: float, group_mean: float) -> float:
    return abs(baseline_mean - group_mean)


def softmax_normalize(means: Mapping) -> dict:
    """Softmax over group means, keyed and ordered like the input."""
    if not means:
        raise ValueError("softmax needs at least one group")
    top = max(means.values())
    exps = {k: math.exp(v - top) for k, v in means.items()}
    total = math.fsum(exps.values())
    return {k: e / total for k, e in exps.items()}


def disparate_impact(metric: MetricKind, means: Mapping[GroupKey, float], baseline: GroupKey) -> dict:
    if baseline not in means:
        raise KeyError(f"baseline {baseline} missing from group means")
    if metric.polarity == "delta":
        sm = softmax_normalize(means)
        out = {g: (1.0 / sm[g]) / (1.0 / sm[baseline]) for g in means}
    else:
        base = means[baseline]
        if base == 0:
            raise UndefinedDIError(f"DI undefined for {metric.name}: baseline mean is 0")
        out = {g: m / base for g, m in means.items()}
    out[baseline] = 1.0
    return out


def classify(pd: float | None, di: float | None, thresholds: Thresholds | None = None) -> tuple[str | None, bool]:
    """Fairness level and bias flag for one cell; an undefined DI is flagged."""
    t = thresholds or Thresholds()
    if di is None:
        return None, True
    good = di >= t.di_good - _THRESHOLD_EPS
    flagged = not good or (pd is not None and pd >= t.pd_flag - _THRESHOLD_EPS)
    return (GOOD if good else POOR), flagged


# ---------------------------------------------------------------------------
# end-to-end audit


def _metric_value(metric: MetricKind, scores: UtteranceMetrics, record: UtteranceRecord) -> float | None:
    if hasattr(scores, metric.name):
        return getattr(scores, metric.name)
    value = record.metadata.get(metric.name)
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValueError(f"{record.utt_id}: metadata {metric.name!r} is not numeric")
    return float(value)


def input_digest(records: Sequence[UtteranceRecord]) -> str:
    """SHA-256 over the records in utt_id order; independent of input order."""
    h = hashlib.sha256()
    for rec in sorted(records, key=lambda r: r.utt_id):
        h.update(json.dumps(record_to_dict(rec), sort_keys=True, ensure_ascii=False).encode())
        h.update(b"\n")
    return h.hexdigest()


def _metric_rows(metric, buckets, values, baseline, thresholds):
    stats, rows = [], []
    means: dict[GroupKey, float] = {}
    for group in buckets:
        vals = values[group]
        mean = group_mean(vals, group, metric) if vals else None
        stats.append(GroupStats(group, metric, mean, len(vals)))
        if mean is not None:
            means[group] = mean

    counts = {s.group: s.count for s in stats}
    if baseline not in means:
        for group in buckets:
            rows.append(FairnessRow(group, metric, None, None, None, False, counts[group], "no baseline data"))
        return stats, rows

    try:
        di = disparate_impact(metric, means, baseline)
        note = ""
    except UndefinedDIError:
        di, note = {baseline: 1.0}, "baseline mean is 0"

    for group in buckets:
        if group == baseline:
            rows.append(FairnessRow(group, metric, 0.0, 1.0, GOOD, False, counts[group]))
        elif group not in means:
            rows.append(FairnessRow(group, metric, None, None, None, False, 0, "no data"))
        else:
            pd = parity_difference(means[baseline], means[group])
            value = di.get(group)
            level, flagged = classify(pd, value, thresholds)
            rows.append(FairnessRow(group, metric, pd, value, level, flagged, counts[group], note if value is None else ""))
    return stats, rows


def audit(
    records: Sequence[UtteranceRecord],
    dimension: str,
    metrics: Sequence[MetricKind] = DEFAULT_METRICS,
    thresholds: Thresholds | None = None,
    policy: NormalizationPolicy | None = None,
    order: Sequence[str] | None = None,
    empty_ref: str = "error",
    scores: Mapping[str, UtteranceMetrics] | None = None,
) -> AuditReport:
    """Score, group and evaluate PD/DI for every (metric, group) cell.

    ``scores`` may supply precomputed per-utterance metrics keyed by utt_id;
    missing entries are scored here. Raises :class:`BaselineMissingError`
    when the baseline label does not occur under ``dimension``.
    """
    thresholds = thresholds or Thresholds()
    policy = policy or NormalizationPolicy()
    buckets, unlabeled = partition_by_group(records, dimension, order)
    baseline = GroupKey(dimension, thresholds.baseline_label)
    if baseline not in buckets:
        raise BaselineMissingError(dimension, thresholds.baseline_label)

    scored = dict(scores or {})
    for recs in buckets.values():
        for rec in recs:
            if rec.utt_id not in scored:
                scored[rec.utt_id] = score_utterance(rec, policy, empty_ref)

    all_stats, all_rows = [], []
    for metric in metrics:
        values = {}
        for group, recs in buckets.items():
            values[group] = [
                v
                for rec in recs
                if (v := _metric_value(metric, scored[rec.utt_id], rec)) is not None
            ]
        stats, rows = _metric_rows(metric, buckets, values, baseline, thresholds)
        all_stats.extend(stats)
        all_rows.extend(rows)

    config = {
        "dimension": dimension,
        "group_order": list(order) if order is not None else None,
        "metrics": [asdict(m) for m in metrics],
        "thresholds": asdict(thresholds),
        "policy": asdict(policy),
        "empty_ref": empty_ref,
    }
    provenance = {"tool": "dysfair", "version": __version__, "input_digest": input_digest(records)}
    return AuditReport(dimension, baseline, all_rows, all_stats, config, provenance, len(unlabeled))
