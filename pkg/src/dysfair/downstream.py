"""Relative changes between training conditions of downstream tasks.

Result tables hold percentages (ASR WER per severity, detection accuracy)
for each training condition. Two conventions for a relative change exist
and both are needed in practice:

* ``old``: ``(new - old) / old * 100``, change measured against the old value.
* ``new``: ``(old - new) / new * 100``, reduction measured against the new value.
"""

from __future__ import annotations

import json
import warnings
from collections.abc import Mapping
from dataclasses import dataclass
from enum import Enum

from .report import format_fixed

__all__ = [
    "ChangeConvention",
    "TaskResultTable",
    "UnknownConditionError",
    "compare_conditions",
    "load_result_tables",
    "relative_change",
    "render_comparison",
]


class ChangeConvention(str, Enum):
    RELATIVE_TO_OLD = "old"
    RELATIVE_TO_NEW = "new"

    @classmethod
    def parse(cls, value: ChangeConvention | str) -> ChangeConvention:
        if isinstance(value, cls):
            return value
        aliases = {"old": cls.RELATIVE_TO_OLD, "relative_to_old": cls.RELATIVE_TO_OLD,
                   "new": cls.RELATIVE_TO_NEW, "relative_to_new": cls.RELATIVE_TO_NEW}
        try:
            return aliases[value]
        except KeyError:
            raise ValueError(f"unknown change convention {value!r}") from None

    @property
    def formula(self) -> str:
        if self is ChangeConvention.RELATIVE_TO_OLD:
            return "(new - old) / old x 100"
        return "(old - new) / new x 100"


class UnknownConditionError(KeyError):
    def __str__(self) -> str:
        return str(self.args[0])


class MissingCategoryWarning(UserWarning):
    pass


@dataclass(frozen=True)
class TaskResultTable:
    task: str
    cells: Mapping[str, Mapping[str, float]]

    def __post_init__(self) -> None:
        for cond, row in self.cells.items():
            for cat, value in row.items():
                if isinstance(value, bool) or not isinstance(value, (int, float)):
                    raise ValueError(f"{self.task}: {cond}/{cat} is not a number")
                if value < 0:
                    raise ValueError(f"{self.task}: {cond}/{cat} is negative ({value})")

    @property
    def conditions(self) -> list[str]:
        return list(self.cells)

    @property
    def categories(self) -> list[str]:
        seen: dict[str, None] = {}
        for row in self.cells.values():
            for cat in row:
                seen.setdefault(cat)
        return list(seen)


def load_result_tables(text: str) -> list[TaskResultTable]:
    """Parse ``{"task": ..., "cells": {condition: {category: percent}}}``.

    A JSON list of such objects, or ``{"tables": [...]}``, is also accepted.
    """
    data = json.loads(text)
    if isinstance(data, dict) and "tables" in data:
        data = data["tables"]
    if isinstance(data, dict):
        data = [data]
    if not isinstance(data, list):
        raise ValueError("result tables must be an object or a list of objects")
    tables = []
    for obj in data:
        if not isinstance(obj, dict) or not isinstance(obj.get("cells"), dict):
            raise ValueError("each result table needs a 'cells' object")
        cells = {str(c): {str(k): v for k, v in row.items()} for c, row in obj["cells"].items()}
        tables.append(TaskResultTable(str(obj.get("task", "")), cells))
    return tables


def relative_change(old: float, new: float, convention: ChangeConvention | str = ChangeConvention.RELATIVE_TO_OLD) -> float:
    convention = ChangeConvention.parse(convention)
    if convention is ChangeConvention.RELATIVE_TO_OLD:
        if old == 0:
            raise ZeroDivisionError("relative change undefined: old value is 0")
        return (new - old) / old * 100.0
    if new == 0:
        raise ZeroDivisionError("relative change undefined: new value is 0")
    return (old - new) / new * 100.0


def compare_conditions(
    table: TaskResultTable,
    base: str,
    other: str,
    convention: ChangeConvention | str = ChangeConvention.RELATIVE_TO_OLD,
) -> dict[str, float]:
    """Per-category relative change from condition ``base`` to ``other``."""
    for cond in (base, other):
        if cond not in table.cells:
            raise UnknownConditionError(
                f"unknown condition {cond!r} in task {table.task!r}; known: {', '.join(table.conditions)}"
            )
    old_row, new_row = table.cells[base], table.cells[other]
    out = {}
    for cat in table.categories:
        if cat not in old_row or cat not in new_row:
            warnings.warn(MissingCategoryWarning(f"{table.task}: category {cat!r} missing, skipped"), stacklevel=2)
            continue
        out[cat] = relative_change(old_row[cat], new_row[cat], convention)
    return out


def render_comparison(
    tables: list[TaskResultTable],
    base: str,
    other: str,
    convention: ChangeConvention | str = ChangeConvention.RELATIVE_TO_OLD,
) -> str:
    """Markdown table of relative changes, labelled with the convention used."""
    convention = ChangeConvention.parse(convention)
    lines = [
        f"Relative change {base} -> {other}, convention relative_to_{convention.value}: {convention.formula}",
        "",
        "| task | category | base | other | change (%) |",
        "|---|---|---:|---:|---:|",
    ]
    for table in tables:
        changes = compare_conditions(table, base, other, convention)
        for cat, change in changes.items():
            sign = "+" if change > 0 else ""
            lines.append(
                f"| {table.task} | {cat} | {format_fixed(table.cells[base][cat])} | "
                f"{format_fixed(table.cells[other][cat])} | {sign}{format_fixed(change)} |"
            )
    return "\n".join(lines) + "\n"
