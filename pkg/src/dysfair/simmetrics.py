"""Speaker similarity (SIM-o) and AutoPCP prosody scores."""

from __future__ import annotations

import warnings

import numpy as np

from .manifest import UtteranceRecord

__all__ = [
    "SimilarityError",
    "SimoConflictWarning",
    "cosine_similarity",
    "resolve_autopcp",
    "resolve_simo",
]

SIMO_CONFLICT_TOL = 1e-6


class SimilarityError(ValueError):
    pass


class SimoConflictWarning(UserWarning):
    """Precomputed SIM-o disagrees with the cosine of the stored embeddings."""


def cosine_similarity(a, b) -> float:
    """Cosine of the angle between two vectors, clamped to [-1, 1]."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 1 or b.ndim != 1:
        raise SimilarityError("embeddings must be 1-D vectors")
    if a.shape != b.shape:
        raise SimilarityError(f"embedding length mismatch ({a.size} vs {b.size})")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise SimilarityError("similarity undefined for a zero-norm embedding")
    return float(np.clip(np.dot(a / na, b / nb), -1.0, 1.0))


def resolve_simo(record: UtteranceRecord) -> float | None:
    """SIM-o for a record.

    A precomputed score takes precedence; otherwise the embedding pair is
    used. When both exist and disagree by more than 1e-6 a
    :class:`SimoConflictWarning` is emitted and the precomputed value kept.
    """
    have_pair = record.embedding_prompt is not None and record.embedding_generated is not None
    if record.simo_precomputed is None:
        if not have_pair:
            return None
        return cosine_similarity(record.embedding_prompt, record.embedding_generated)

    if have_pair:
        computed = cosine_similarity(record.embedding_prompt, record.embedding_generated)
        if abs(computed - record.simo_precomputed) > SIMO_CONFLICT_TOL:
            warnings.warn(
                SimoConflictWarning(
                    f"{record.utt_id}: precomputed SIM-o {record.simo_precomputed} "
                    f"differs from embedding cosine {computed:.6f}; using precomputed"
                ),
                stacklevel=2,
            )
    return record.simo_precomputed


def resolve_autopcp(record: UtteranceRecord) -> float | None:
    # native comparator scale, never rescaled
    if record.autopcp is None:
        return None
    if record.autopcp < 0:
        raise ValueError(f"{record.utt_id}: AutoPCP score must be >= 0, got {record.autopcp}")
    return record.autopcp
