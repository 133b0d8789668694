import json

import pytest

from dysfair.manifest import UtteranceRecord, dump_jsonl

# 100 words, 1000 characters including the 99 separating spaces. Letters
# never include "q", so every "q" written into a hypothesis costs exactly one
# edit at character level and marks its word as one word error.
_WORDS = ["abcdefghi"[i % 9 :] + "abcdefghi"[: i % 9] for i in range(100)]
_WORDS[0] = _WORDS[0] + "j"
REF_TEXT = " ".join(_WORDS)
assert len(REF_TEXT) == 1000 and len(_WORDS) == 100


def corrupt(n_words: int, n_chars: int) -> str:
    """Hypothesis with ``n_words`` words wrong and ``n_chars`` characters wrong in total."""
    assert n_words <= n_chars <= 9 * n_words
    words = list(_WORDS)
    left = n_chars
    for i in range(n_words):
        per_word = min(9, left - (n_words - i - 1))
        words[i] = "q" * per_word + words[i][per_word:]
        left -= per_word
    assert left == 0
    return " ".join(words)


# group -> list of (words wrong, chars wrong) on the prompt hypothesis; the
# generated hypothesis is always exact, so dWER = words/100, dCER = chars/1000
SEVERITY_ERRORS = {
    "healthy": [(10, 50), (10, 50)],
    "low": [(12, 60), (13, 60)],
    "mid": [(51, 270)],
    "high": [(62, 330), (62, 330)],
}
SEVERITY_SIMO = {"healthy": 0.60, "low": 0.546, "mid": 0.486, "high": 0.51}
SEVERITY_AUTOPCP = {"healthy": 0.70, "low": 0.693, "mid": 0.609, "high": 0.63}
GENDER = {"healthy": "female", "low": "male", "mid": "female", "high": "male"}


def graded_records() -> list[UtteranceRecord]:
    records = []
    for sev, errors in SEVERITY_ERRORS.items():
        for k, (n_words, n_chars) in enumerate(errors):
            records.append(
                UtteranceRecord(
                    utt_id=f"{sev}-{k}",
                    speaker_id=f"{sev.upper()}{k}",
                    groups={"severity": sev, "gender": GENDER[sev]},
                    ref_text=REF_TEXT,
                    hyp_prompt_text=corrupt(n_words, n_chars),
                    hyp_generated_text=REF_TEXT,
                    simo_precomputed=SEVERITY_SIMO[sev],
                    autopcp=SEVERITY_AUTOPCP[sev],
                )
            )
    return records


def unbiased_records() -> list[UtteranceRecord]:
    return [
        UtteranceRecord(
            utt_id=f"{sev}-{k}",
            speaker_id=f"S{k}",
            groups={"severity": sev},
            ref_text="the cat sat on the mat",
            hyp_prompt_text="the cat sat on the mat",
            hyp_generated_text="the cat sat on the mat",
            simo_precomputed=0.7,
            autopcp=3.0,
        )
        for sev in ("healthy", "low", "mid", "high")
        for k in range(2)
    ]


@pytest.fixture
def graded():
    return graded_records()


@pytest.fixture
def graded_manifest(tmp_path):
    path = tmp_path / "graded.jsonl"
    path.write_text(dump_jsonl(graded_records()), encoding="utf-8")
    return path


@pytest.fixture
def unbiased_manifest(tmp_path):
    path = tmp_path / "unbiased.jsonl"
    path.write_text(dump_jsonl(unbiased_records()), encoding="utf-8")
    return path


RESULT_TABLES = [
    {"task": "asr_wer", "cells": {
        "model1": {"low": 53.00, "mid": 89.07, "high": 87.53},
        "model2": {"low": 76.69, "mid": 94.11, "high": 96.62},
        "model3": {"low": 36.66, "mid": 94.19, "high": 94.23},
    }},
    {"task": "detection_accuracy", "cells": {
        "model1": {"overall": 62.50},
        "model2": {"overall": 48.75},
        "model3": {"overall": 73.75},
    }},
]


@pytest.fixture
def results_path(tmp_path):
    path = tmp_path / "results.json"
    path.write_text(json.dumps(RESULT_TABLES), encoding="utf-8")
    return path


# acceptance criteria report one PASS/FAIL line each at the end of the run
ACCEPTANCE: dict[int, tuple[str, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        status, text = ACCEPTANCE[n]
        terminalreporter.write_line(f"[{status}] criterion {n}: {text}")
