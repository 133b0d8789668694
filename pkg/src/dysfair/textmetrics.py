"""Intelligibility metrics: WER/CER via Levenshtein alignment, and their deltas."""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass

import numpy as np

from .manifest import UtteranceRecord
from .simmetrics import resolve_autopcp, resolve_simo

__all__ = [
    "AlignmentCounts",
    "NormalizationPolicy",
    "UndefinedRateError",
    "UtteranceMetrics",
    "align",
    "character_error_rate",
    "delta_metric",
    "error_rate",
    "normalize_and_tokenize",
    "score_utterance",
    "word_error_rate",
]

# apostrophes survive only between two word characters ("don't", "o'clock")
_APOSTROPHES = "'’"
_INNER_APOSTROPHE = re.compile(rf"(?<=\w)[{_APOSTROPHES}](?=\w)")


class UndefinedRateError(ValueError):
    """Error rate requested for an empty reference with a nonempty hypothesis."""


@dataclass(frozen=True)
class NormalizationPolicy:
    lowercase: bool = True
    strip_punctuation: bool = True
    collapse_whitespace: bool = True

    def apply(self, text: str) -> str:
        text = unicodedata.normalize("NFC", text)
        if self.lowercase:
            text = unicodedata.normalize("NFC", text.lower())
        if self.strip_punctuation:
            text = _strip_punctuation(text)
        if self.collapse_whitespace:
            text = " ".join(text.split())
        return unicodedata.normalize("NFC", text)


def _strip_punctuation(text: str) -> str:
    keep = {m.start() for m in _INNER_APOSTROPHE.finditer(text)}
    return "".join(
        ch
        for i, ch in enumerate(text)
        if i in keep or not unicodedata.category(ch).startswith("P")
    )


def normalize_and_tokenize(raw: str, policy: NormalizationPolicy | None = None, level: str = "word") -> list[str]:
    """Apply ``policy`` and split into word tokens or character tokens.

    Character tokens keep spaces, so CER also counts word-boundary errors.
    """
    text = (policy or NormalizationPolicy()).apply(raw)
    if level == "word":
        return text.split()
    if level == "char":
        return list(text)
    raise ValueError(f"unknown tokenization level {level!r}")


@dataclass(frozen=True)
class AlignmentCounts:
    substitutions: int = 0
    deletions: int = 0
    insertions: int = 0
    correct: int = 0
    ref_len: int = 0

    @property
    def errors(self) -> int:
        return self.substitutions + self.deletions + self.insertions

    @property
    def hyp_len(self) -> int:
        return self.substitutions + self.insertions + self.correct


def align(ref: list, hyp: list) -> AlignmentCounts:
    """Minimum-edit alignment of two token lists with unit costs.

    Among optimal alignments the backtrace prefers the diagonal (match or
    substitution), then deletion, then insertion, so counts are reproducible.
    """
    n, m = len(ref), len(hyp)
    if ref == hyp:
        return AlignmentCounts(correct=n, ref_len=n)
    vocab: dict = {}
    ref_ids = [vocab.setdefault(t, len(vocab)) for t in ref]
    hyp_ids = [vocab.setdefault(t, len(vocab)) for t in hyp]
    hyp_arr = np.array(hyp_ids, dtype=np.int32)

    # cost[i, j]: edit distance between ref[:i] and hyp[:j]
    cost = np.empty((n + 1, m + 1), dtype=np.int32)
    cost[0] = np.arange(m + 1)
    cost[:, 0] = np.arange(n + 1)
    cols = np.arange(m + 1, dtype=np.int32)
    shifted = np.empty(m + 1, dtype=np.int32)
    for i in range(1, n + 1):
        prev, row = cost[i - 1], cost[i]
        np.minimum(prev[:-1] + (hyp_arr != ref_ids[i - 1]), prev[1:] + 1, out=row[1:])
        # insertions chain left to right: row[j] = min_k (row[k] + j - k)
        np.subtract(row, cols, out=shifted)
        np.minimum.accumulate(shifted, out=shifted)
        np.add(shifted, cols, out=row)

    sub = dele = ins = cor = 0
    i, j = n, m
    while i > 0 or j > 0:
        here = cost.item(i, j)
        if i > 0 and j > 0 and here == cost.item(i - 1, j - 1) + (ref_ids[i - 1] != hyp_ids[j - 1]):
            if ref_ids[i - 1] == hyp_ids[j - 1]:
                cor += 1
            else:
                sub += 1
            i, j = i - 1, j - 1
        elif i > 0 and here == cost.item(i - 1, j) + 1:
            dele += 1
            i -= 1
        else:
            ins += 1
            j -= 1
    return AlignmentCounts(sub, dele, ins, cor, n)


def error_rate(counts: AlignmentCounts, empty_ref: str = "error") -> float:
    """(S + D + I) / N. May exceed 1.

    An empty reference against an empty hypothesis scores 0. An empty
    reference with insertions raises :class:`UndefinedRateError`, unless
    ``empty_ref="hyp_len"`` which divides by the hypothesis length instead.
    """
    if counts.ref_len > 0:
        return counts.errors / counts.ref_len
    if counts.errors == 0:
        return 0.0
    if empty_ref == "hyp_len":
        return counts.errors / counts.hyp_len
    if empty_ref != "error":
        raise ValueError(f"unknown empty_ref policy {empty_ref!r}")
    raise UndefinedRateError(f"error rate undefined: empty reference, {counts.insertions} insertions")


def word_error_rate(ref: str, hyp: str, policy: NormalizationPolicy | None = None, empty_ref: str = "error") -> float:
    return error_rate(
        align(normalize_and_tokenize(ref, policy, "word"), normalize_and_tokenize(hyp, policy, "word")),
        empty_ref,
    )


def character_error_rate(ref: str, hyp: str, policy: NormalizationPolicy | None = None, empty_ref: str = "error") -> float:
    return error_rate(
        align(normalize_and_tokenize(ref, policy, "char"), normalize_and_tokenize(hyp, policy, "char")),
        empty_ref,
    )


def delta_metric(prompt_rate: float, generated_rate: float) -> float:
    """Prompt error rate minus generated error rate.

    Positive values mean the clone is easier to recognise than the
    dysarthric prompt it was conditioned on.
    """
    return prompt_rate - generated_rate


@dataclass(frozen=True)
class UtteranceMetrics:
    """Per-utterance scores; ``None`` marks a value whose inputs are absent."""

    utt_id: str
    wer_prompt: float | None = None
    wer_generated: float | None = None
    cer_prompt: float | None = None
    cer_generated: float | None = None
    delta_wer: float | None = None
    delta_cer: float | None = None
    simo: float | None = None
    autopcp: float | None = None

    def as_dict(self) -> dict:
        return {
            "utt_id": self.utt_id,
            "wer_prompt": self.wer_prompt,
            "wer_generated": self.wer_generated,
            "cer_prompt": self.cer_prompt,
            "cer_generated": self.cer_generated,
            "delta_wer": self.delta_wer,
            "delta_cer": self.delta_cer,
            "simo": self.simo,
            "autopcp": self.autopcp,
        }


def score_utterance(
    record: UtteranceRecord,
    policy: NormalizationPolicy | None = None,
    empty_ref: str = "error",
) -> UtteranceMetrics:
    policy = policy or NormalizationPolicy()
    rates: dict[str, float | None] = {}
    for which, hyp in (("prompt", record.hyp_prompt_text), ("generated", record.hyp_generated_text)):
        if hyp is None:
            rates[f"wer_{which}"] = rates[f"cer_{which}"] = None
        else:
            rates[f"wer_{which}"] = word_error_rate(record.ref_text, hyp, policy, empty_ref)
            rates[f"cer_{which}"] = character_error_rate(record.ref_text, hyp, policy, empty_ref)

    def delta(kind: str) -> float | None:
        p, g = rates[f"{kind}_prompt"], rates[f"{kind}_generated"]
        return None if p is None or g is None else delta_metric(p, g)

    return UtteranceMetrics(
        utt_id=record.utt_id,
        delta_wer=delta("wer"),
        delta_cer=delta("cer"),
        simo=resolve_simo(record),
        autopcp=resolve_autopcp(record),
        **rates,
    )
