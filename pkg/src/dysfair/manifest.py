"""Evaluation manifests: parsing, validation and group partitioning.

A manifest lists one utterance per JSONL line (or CSV row) together with the
artifacts produced by external models for it: ASR hypotheses for the audio
prompt and for the generated audio, speaker embeddings, precomputed SIM-o and
AutoPCP scores, and the group labels (severity, gender, speaker, ...) used
by the fairness audit.
"""

from __future__ import annotations

import csv
import io
import json
import math
import unicodedata
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from typing import Any, BinaryIO

__all__ = [
    "DEFAULT_SEVERITY_ORDER",
    "GroupKey",
    "ManifestError",
    "UtteranceRecord",
    "ValidationReport",
    "dump_jsonl",
    "parse_manifest",
    "partition_by_group",
    "read_manifest",
    "record_to_dict",
    "validate_records",
]

DEFAULT_SEVERITY_ORDER = ("healthy", "low", "mid", "high")

KNOWN_FIELDS = (
    "utt_id",
    "speaker_id",
    "groups",
    "ref_text",
    "hyp_prompt_text",
    "hyp_generated_text",
    "embedding_prompt",
    "embedding_generated",
    "simo_precomputed",
    "autopcp",
)
_TEXT_FIELDS = ("ref_text", "hyp_prompt_text", "hyp_generated_text")
_VECTOR_FIELDS = ("embedding_prompt", "embedding_generated")
_SCORE_FIELDS = ("simo_precomputed", "autopcp")
GROUP_PREFIX = "group."


def nfc(text: str) -> str:
    return unicodedata.normalize("NFC", text)


class ManifestError(ValueError):
    """Raised when a manifest cannot be decoded into records.

    ``errors`` holds ``(location, message)`` pairs where location is a line
    number or an utterance id.
    """

    def __init__(self, errors: Sequence[tuple[int | str, str]]):
        self.errors = list(errors)
        super().__init__("; ".join(f"{loc}: {msg}" for loc, msg in self.errors))


@dataclass(frozen=True)
class GroupKey:
    """A group label under one grouping dimension, e.g. ``severity=mid``."""

    dimension: str
    label: str

    def __post_init__(self) -> None:
        if not self.dimension or not self.label:
            raise ValueError("group dimension and label must be nonempty")
        object.__setattr__(self, "dimension", nfc(self.dimension))
        object.__setattr__(self, "label", nfc(self.label))

    def __str__(self) -> str:
        return f"{self.dimension}={self.label}"


@dataclass(frozen=True)
class UtteranceRecord:
    utt_id: str
    speaker_id: str = ""
    groups: Mapping[str, str] = field(default_factory=dict)
    ref_text: str = ""
    hyp_prompt_text: str | None = None
    hyp_generated_text: str | None = None
    embedding_prompt: tuple[float, ...] | None = None
    embedding_generated: tuple[float, ...] | None = None
    simo_precomputed: float | None = None
    autopcp: float | None = None
    metadata: Mapping[str, Any] = field(default_factory=dict)

    def label(self, dimension: str) -> str | None:
        """Group label under ``dimension``; ``speaker`` falls back to speaker_id."""
        value = self.groups.get(dimension)
        if value is None and dimension == "speaker" and self.speaker_id:
            return self.speaker_id
        return value

    @property
    def has_hypotheses(self) -> bool:
        return self.hyp_prompt_text is not None or self.hyp_generated_text is not None

    @property
    def has_embeddings(self) -> bool:
        return self.embedding_prompt is not None or self.embedding_generated is not None


@dataclass
class ValidationReport:
    record_count: int = 0
    errors: list[tuple[int | str, str]] = field(default_factory=list)
    warnings: list[tuple[int | str, str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    def merge(self, other: ValidationReport) -> None:
        self.errors.extend(other.errors)
        self.warnings.extend(other.warnings)


# ---------------------------------------------------------------------------
# decoding


def _normalize_meta(value: Any) -> Any:
    if isinstance(value, str):
        return nfc(value)
    if isinstance(value, list):
        return [_normalize_meta(v) for v in value]
    if isinstance(value, dict):
        return {nfc(str(k)): _normalize_meta(v) for k, v in value.items()}
    return value


def _as_float(value: Any, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValueError(f"{name} must be a number, got {type(value).__name__}")
    x = float(value)
    if not math.isfinite(x):
        raise ValueError(f"{name} must be finite")
    return x


def _as_vector(value: Any, name: str) -> tuple[float, ...]:
    if not isinstance(value, list):
        raise ValueError(f"{name} must be a list of numbers")
    return tuple(_as_float(v, name) for v in value)


def _record_from_mapping(obj: Mapping[str, Any]) -> UtteranceRecord:
    if "utt_id" not in obj:
        raise ValueError("missing utt_id")
    kwargs: dict[str, Any] = {}
    for name in ("utt_id", "speaker_id", *_TEXT_FIELDS):
        value = obj.get(name)
        if value is None:
            continue
        if not isinstance(value, str):
            raise ValueError(f"{name} must be a string")
        kwargs[name] = nfc(value)

    groups = obj.get("groups")
    if groups is not None:
        if not isinstance(groups, dict):
            raise ValueError("groups must be an object")
        decoded = {}
        for dim, label in groups.items():
            if not isinstance(label, str):
                raise ValueError(f"group label for {dim!r} must be a string")
            decoded[nfc(dim)] = nfc(label)
        kwargs["groups"] = decoded

    for name in _VECTOR_FIELDS:
        if obj.get(name) is not None:
            kwargs[name] = _as_vector(obj[name], name)
    for name in _SCORE_FIELDS:
        if obj.get(name) is not None:
            kwargs[name] = _as_float(obj[name], name)

    extra = {k: v for k, v in obj.items() if k not in KNOWN_FIELDS}
    kwargs["metadata"] = _normalize_meta(extra)
    return UtteranceRecord(**kwargs)


def _parse_jsonl(text: str) -> tuple[list[UtteranceRecord], list[int]]:
    records, lines, errors = [], [], []
    # JSON lines end at "\n" only; str.splitlines would also break on U+2028 etc.
    for lineno, line in enumerate(text.split("\n"), start=1):
        line = line.removesuffix("\r")
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            if not isinstance(obj, dict):
                raise ValueError("line is not a JSON object")
            records.append(_record_from_mapping(obj))
            lines.append(lineno)
        except ValueError as exc:  # json.JSONDecodeError is a ValueError
            errors.append((lineno, f"malformed line: {exc}"))
    if errors:
        raise ManifestError(errors)
    return records, lines


def _csv_cell(name: str, cell: str) -> Any:
    if name in _VECTOR_FIELDS:
        return [float(x) for x in cell.split(";") if x.strip()]
    if name in _SCORE_FIELDS:
        return float(cell)
    return cell


def _parse_csv(text: str) -> tuple[list[UtteranceRecord], list[int]]:
    reader = csv.reader(io.StringIO(text, newline=""))
    try:
        header = next(reader)
    except StopIteration:
        return [], []
    header = [nfc(h.strip()) for h in header]
    if "utt_id" not in header:
        raise ManifestError([(1, "CSV header lacks utt_id column")])

    records, lines, errors = [], [], []
    for row in reader:
        lineno = reader.line_num
        if not any(cell.strip() for cell in row):
            continue
        if len(row) != len(header):
            errors.append((lineno, f"expected {len(header)} cells, got {len(row)}"))
            continue
        obj: dict[str, Any] = {}
        groups: dict[str, str] = {}
        try:
            for name, cell in zip(header, row):
                if name.startswith(GROUP_PREFIX):
                    if cell != "":
                        groups[name[len(GROUP_PREFIX):]] = cell
                elif cell != "":
                    obj[name] = _csv_cell(name, cell)
            if groups:
                obj["groups"] = groups
            records.append(_record_from_mapping(obj))
            lines.append(lineno)
        except ValueError as exc:
            errors.append((lineno, f"malformed row: {exc}"))
    if errors:
        raise ManifestError(errors)
    return records, lines


def parse_manifest(source: bytes | BinaryIO, format: str = "jsonl") -> list[UtteranceRecord]:
    """Decode a manifest into records, preserving input order.

    ``source`` is raw bytes or a binary stream and must be UTF-8. Unknown
    fields end up in ``record.metadata``. Raises :class:`ManifestError` for
    undecodable lines (with their line number) and for duplicate utt_ids.
    """
    raw = source if isinstance(source, (bytes, bytearray)) else source.read()
    try:
        text = bytes(raw).decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        raise ManifestError([(0, f"manifest is not valid UTF-8: {exc}")]) from exc

    if format == "jsonl":
        records, lines = _parse_jsonl(text)
    elif format == "csv":
        records, lines = _parse_csv(text)
    else:
        raise ValueError(f"unknown manifest format {format!r}")

    seen: dict[str, int] = {}
    duplicates = []
    for rec, lineno in zip(records, lines):
        if rec.utt_id in seen:
            duplicates.append(
                (lineno, f"duplicate utt_id {rec.utt_id!r} (first seen on line {seen[rec.utt_id]})")
            )
        else:
            seen[rec.utt_id] = lineno
    if duplicates:
        raise ManifestError(duplicates)
    return records


def read_manifest(path, format: str | None = None) -> list[UtteranceRecord]:
    """Read a manifest file; the format defaults to the file extension."""
    path = str(path)
    if format is None:
        format = "csv" if path.lower().endswith(".csv") else "jsonl"
    with open(path, "rb") as fh:
        return parse_manifest(fh, format)


# ---------------------------------------------------------------------------
# encoding


def record_to_dict(record: UtteranceRecord) -> dict[str, Any]:
    out: dict[str, Any] = dict(record.metadata)
    out["utt_id"] = record.utt_id
    out["speaker_id"] = record.speaker_id
    out["groups"] = dict(record.groups)
    out["ref_text"] = record.ref_text
    for name in ("hyp_prompt_text", "hyp_generated_text", *_SCORE_FIELDS):
        value = getattr(record, name)
        if value is not None:
            out[name] = value
    for name in _VECTOR_FIELDS:
        value = getattr(record, name)
        if value is not None:
            out[name] = list(value)
    return out


def dump_jsonl(records: Iterable[UtteranceRecord]) -> str:
    return "".join(
        json.dumps(record_to_dict(r), ensure_ascii=False, sort_keys=True) + "\n" for r in records
    )


# ---------------------------------------------------------------------------
# validation


def validate_records(records: Sequence[UtteranceRecord]) -> ValidationReport:
    report = ValidationReport(record_count=len(records))
    if not records:
        report.warnings.append(("manifest", "no records"))
        return report

    seen: set[str] = set()
    for rec in records:
        uid = rec.utt_id
        if not uid:
            report.errors.append((uid, "utt_id is empty"))
        elif uid in seen:
            report.errors.append((uid, f"duplicate utt_id {uid!r}"))
        seen.add(uid)

        for dim, label in rec.groups.items():
            if not dim or not label:
                report.errors.append((uid, f"empty group label for dimension {dim!r}"))

        a, b = rec.embedding_prompt, rec.embedding_generated
        if (a is None) != (b is None):
            report.errors.append((uid, "only one of embedding_prompt/embedding_generated given"))
        elif a is not None and b is not None:
            if len(a) != len(b):
                report.errors.append((uid, f"embedding length mismatch ({len(a)} vs {len(b)})"))
            elif len(a) == 0:
                report.errors.append((uid, "embeddings are empty"))

        if rec.simo_precomputed is not None and not -1.0 <= rec.simo_precomputed <= 1.0:
            report.errors.append((uid, f"SIM-o outside [-1,1]: {rec.simo_precomputed}"))
        if rec.autopcp is not None and rec.autopcp < 0:
            report.errors.append((uid, f"AutoPCP negative: {rec.autopcp}"))

        scorable = (
            (rec.hyp_prompt_text is not None and rec.hyp_generated_text is not None)
            or (a is not None and b is not None)
            or rec.simo_precomputed is not None
            or rec.autopcp is not None
        )
        if not scorable:
            report.warnings.append((uid, "record has no scorable inputs"))
        elif rec.has_hypotheses and not rec.ref_text.strip():
            report.warnings.append((uid, "hypotheses given but ref_text is empty"))
    return report


# ---------------------------------------------------------------------------
# grouping


def _ordered_labels(labels: Iterable[str], order: Sequence[str] | None) -> list[str]:
    labels = set(labels)
    if not order:
        return sorted(labels)
    rank = {nfc(label): i for i, label in enumerate(order)}
    known = sorted((label for label in labels if label in rank), key=rank.__getitem__)
    return known + sorted(label for label in labels if label not in rank)


def partition_by_group(
    records: Sequence[UtteranceRecord],
    dimension: str,
    order: Sequence[str] | None = None,
) -> tuple[dict[GroupKey, list[UtteranceRecord]], list[UtteranceRecord]]:
    """Split records into buckets by their label under ``dimension``.

    Returns ``(buckets, unlabeled)``. Buckets follow ``order`` (labels not
    listed there go last, lexicographically); without an explicit order the
    severity dimension uses healthy, low, mid, high and every other
    dimension is lexicographic. Records lacking the dimension are returned
    in ``unlabeled`` and take no part in fairness computations.
    """
    if not dimension:
        raise ValueError("dimension must be nonempty")
    dimension = nfc(dimension)
    if order is None and dimension == "severity":
        order = DEFAULT_SEVERITY_ORDER

    by_label: dict[str, list[UtteranceRecord]] = {}
    unlabeled = []
    for rec in records:
        label = rec.label(dimension)
        if label:
            by_label.setdefault(label, []).append(rec)
        else:
            unlabeled.append(rec)
    buckets = {GroupKey(dimension, label): by_label[label] for label in _ordered_labels(by_label, order)}
    return buckets, unlabeled
