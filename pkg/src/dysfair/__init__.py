"""Fairness auditing for zero-shot dysarthric speech cloning outputs."""

__version__ = "0.1.0"

from .manifest import (  # noqa: E402
    GroupKey,
    ManifestError,
    UtteranceRecord,
    ValidationReport,
    parse_manifest,
    partition_by_group,
    read_manifest,
    validate_records,
)
from .textmetrics import (  # noqa: E402
    AlignmentCounts,
    NormalizationPolicy,
    UtteranceMetrics,
    align,
    delta_metric,
    error_rate,
    normalize_and_tokenize,
    score_utterance,
)
from .simmetrics import cosine_similarity, resolve_autopcp, resolve_simo  # noqa: E402
from .fairness import (  # noqa: E402
    DEFAULT_METRICS,
    AuditReport,
    FairnessRow,
    GroupStats,
    MetricKind,
    Thresholds,
    audit,
    classify,
    disparate_impact,
    group_mean,
    parity_difference,
    softmax_normalize,
)
