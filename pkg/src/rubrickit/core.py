"""Rubric data model, scoring arithmetic, validation, and the interchange format.

All types are immutable values; operations are pure functions. The overall
score is kept as an exact rational (``fractions.Fraction``) and rounded to one
decimal place only for display.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Any, Iterable, Mapping, Sequence

from .errors import RubricParseError, ScoringError

MIN_SCALE = 3
MAX_SCALE = 6
WEIGHT_TOTAL = 100

# Parse tolerance: documents may carry more levels than MAX_SCALE so that
# validate_rubric can report SCALE_RANGE instead of the parser rejecting them.
_PARSE_SCALE_CAP = 12


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LevelDescriptor:
    """One (criterion, score level) cell: requirement text plus evaluation state.

    ``checked``/``reason`` are carried even on unevaluated rubrics (false/empty)
    so drafts and evaluated snapshots share one shape.
    """

    text: str
    checked: bool = False
    reason: str = ""


@dataclass(frozen=True)
class Criterion:
    """A weighted dimension with one descriptor per score level (1..L ascending)."""

    name: str
    weight: int
    levels: tuple[LevelDescriptor, ...]

    @property
    def scale(self) -> int:
        return len(self.levels)

    def level(self, n: int) -> LevelDescriptor:
        if not 1 <= n <= len(self.levels):
            raise ScoringError(f"level {n} out of range 1..{len(self.levels)}")
        return self.levels[n - 1]

    def checked_level(self) -> int | None:
        """Index (1-based) of the checked descriptor, or None if unevaluated."""
        checked = [i + 1 for i, d in enumerate(self.levels) if d.checked]
        return checked[0] if len(checked) == 1 else None


@dataclass(frozen=True)
class Rubric:
    name: str
    task_description: str
    scale: int
    criteria: tuple[Criterion, ...]

    def criterion(self, name: str) -> Criterion:
        for c in self.criteria:
            if c.name == name:
                return c
        raise KeyError(name)

    def criterion_names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.criteria)

    def weights(self) -> tuple[int, ...]:
        return tuple(c.weight for c in self.criteria)


@dataclass(frozen=True)
class CriterionEvaluation:
    """Judged outcome for one criterion: the selected level and all reasons.

    ``reasons[i]`` explains level ``i+1``: a "why" for the selected level and a
    "why not" for every other level.
    """

    name: str
    selected: int
    reasons: tuple[str, ...]

    @property
    def scale(self) -> int:
        return len(self.reasons)

    def reason_for(self, level: int) -> str:
        if not 1 <= level <= len(self.reasons):
            raise ScoringError(f"level {level} out of range 1..{len(self.reasons)}")
        return self.reasons[level - 1]


@dataclass(frozen=True)
class Evaluation:
    """A full judging pass of one artifact against one rubric."""

    rubric_name: str
    rubric_hash: str
    scale: int
    criteria: tuple[CriterionEvaluation, ...]
    overall: Fraction
    created_at: str
    transcript_ids: tuple[int, ...] = ()

    def criterion(self, name: str) -> CriterionEvaluation:
        for c in self.criteria:
            if c.name == name:
                return c
        raise KeyError(name)

    def selected_levels(self) -> tuple[int, ...]:
        return tuple(c.selected for c in self.criteria)

    def content_equal(self, other: "Evaluation") -> bool:
        """Equality ignoring provenance (timestamp, transcript ids)."""
        return (
            self.rubric_name == other.rubric_name
            and self.rubric_hash == other.rubric_hash
            and self.scale == other.scale
            and self.criteria == other.criteria
            and self.overall == other.overall
        )


@dataclass(frozen=True)
class Violation:
    """A single validation finding. Violations are data, not failures."""

    code: str
    message: str
    path: str = "$"


# ---------------------------------------------------------------------------
# Scoring
# ---------------------------------------------------------------------------


def overall_score(weights: Sequence[int], levels: Sequence[int], scale: int) -> Fraction:
    """Weighted sum of criterion levels, normalized by the scale.

    Returns the exact rational (Σ w_k·s_k) / L, which lies in [100/L, 100]
    whenever the weights sum to 100 and every level is within 1..L.
    """
    if len(weights) != len(levels):
        raise ScoringError(
            f"got {len(weights)} weights but {len(levels)} levels"
        )
    if not weights:
        raise ScoringError("at least one criterion is required")
    if not isinstance(scale, int) or not MIN_SCALE <= scale <= MAX_SCALE:
        raise ScoringError(f"scale must be an integer in {MIN_SCALE}..{MAX_SCALE}, got {scale!r}")
    for i, w in enumerate(weights):
        if not isinstance(w, int) or isinstance(w, bool) or not 0 < w <= WEIGHT_TOTAL:
            raise ScoringError(f"criterion {i}: weight must be an integer in 1..100, got {w!r}")
    total = sum(weights)
    if total != WEIGHT_TOTAL:
        raise ScoringError(f"weights must sum to {WEIGHT_TOTAL}, got {total}")
    for i, s in enumerate(levels):
        if not isinstance(s, int) or isinstance(s, bool) or not 1 <= s <= scale:
            raise ScoringError(f"criterion {i}: level must be an integer in 1..{scale}, got {s!r}")
    return Fraction(sum(w * s for w, s in zip(weights, levels)), scale)


def render_score(score: Fraction | int | float) -> str:
    """One-decimal display form, round half up (display only; storage is exact)."""
    tenths = (Fraction(score) * 10 + Fraction(1, 2)).__floor__()
    whole, frac = divmod(tenths, 10)
    return f"{whole}.{frac}"


def score_band(score: Fraction | int | float) -> str:
    """Label band for UI colors. A declared convention, not a scoring rule."""
    value = Fraction(score)
    if value >= 85:
        return "Excellent"
    if value >= 70:
        return "Good work"
    if value >= 40:
        return "Needs work"
    return "Poor"


def evaluation_overall(rubric: Rubric, selected_levels: Sequence[int]) -> Fraction:
    return overall_score(rubric.weights(), selected_levels, rubric.scale)


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


def validate_rubric(rubric: Rubric) -> list[Violation]:
    """Collect every violation; an empty report means the rubric is valid."""
    report: list[Violation] = []
    if not isinstance(rubric.scale, int) or not MIN_SCALE <= rubric.scale <= MAX_SCALE:
        report.append(
            Violation(
                "SCALE_RANGE",
                f"scale must be in {MIN_SCALE}..{MAX_SCALE}, got {rubric.scale}",
                "scale",
            )
        )
    if not rubric.criteria:
        report.append(Violation("NO_CRITERIA", "rubric has no criteria", "criteria"))

    seen: dict[str, int] = {}
    for i, criterion in enumerate(rubric.criteria):
        path = f"criteria[{i}]"
        if not criterion.name.strip():
            report.append(Violation("EMPTY_NAME", "criterion name is empty", f"{path}.name"))
        key = criterion.name.strip().lower()
        if key in seen:
            report.append(
                Violation(
                    "DUPLICATE_NAME",
                    f"criterion name {criterion.name!r} duplicates criteria[{seen[key]}]",
                    f"{path}.name",
                )
            )
        else:
            seen[key] = i
        if not isinstance(criterion.weight, int) or not 0 < criterion.weight <= WEIGHT_TOTAL:
            report.append(
                Violation(
                    "WEIGHT_RANGE",
                    f"weight must be an integer in 1..100, got {criterion.weight!r}",
                    f"{path}.percentage",
                )
            )
        if len(criterion.levels) != rubric.scale:
            report.append(
                Violation(
                    "MISSING_LEVEL",
                    f"criterion has {len(criterion.levels)} levels, rubric scale is {rubric.scale}",
                    f"{path}.criteria",
                )
            )
        for n, descriptor in enumerate(criterion.levels, start=1):
            if not descriptor.text.strip():
                report.append(
                    Violation(
                        "EMPTY_DESCRIPTOR",
                        f"descriptor text for score_{n} is empty",
                        f"{path}.criteria.score_{n}.text",
                    )
                )

    total = sum(c.weight for c in rubric.criteria)
    if rubric.criteria and total != WEIGHT_TOTAL:
        report.append(
            Violation(
                "WEIGHT_SUM",
                f"criterion weights sum to {total}, expected {WEIGHT_TOTAL}",
                "criteria",
            )
        )
    return report


# ---------------------------------------------------------------------------
# Interchange format
# ---------------------------------------------------------------------------


def _no_duplicate_keys(pairs: list[tuple[str, Any]]) -> dict:
    out: dict[str, Any] = {}
    for key, value in pairs:
        if key in out:
            raise RubricParseError(f"duplicate key {key!r}")
        out[key] = value
    return out


def _require(mapping: Mapping[str, Any], key: str, path: str) -> Any:
    if key not in mapping:
        raise RubricParseError(f"missing required key {key!r}", f"{path}.{key}")
    return mapping[key]


def _as_weight(value: Any, path: str) -> int:
    if isinstance(value, bool):
        raise RubricParseError(f"percentage must be an integer, got {value!r}", path)
    if isinstance(value, int):
        return value
    if isinstance(value, float) and value.is_integer():
        return int(value)
    raise RubricParseError(f"percentage must be an integer percent, got {value!r}", path)


def _score_key_index(key: str, path: str) -> int:
    prefix, _, suffix = key.partition("_")
    if prefix != "score" or not suffix.isdigit():
        raise RubricParseError(f"unexpected key {key!r}, expected score_N", path)
    return int(suffix)


def _descriptor_from_dict(cell: Any, path: str) -> LevelDescriptor:
    if not isinstance(cell, Mapping):
        raise RubricParseError("score level must be an object", path)
    text = _require(cell, "text", path)
    if not isinstance(text, str):
        raise RubricParseError("text must be a string", f"{path}.text")
    checked = cell.get("checked", False)
    if not isinstance(checked, bool):
        raise RubricParseError("checked must be a boolean", f"{path}.checked")
    reason = cell.get("reason", "")
    if not isinstance(reason, str):
        raise RubricParseError("reason must be a string", f"{path}.reason")
    return LevelDescriptor(text=text, checked=checked, reason=reason)


def criterion_from_dict(entry: Mapping[str, Any], path: str = "$") -> Criterion:
    if not isinstance(entry, Mapping):
        raise RubricParseError("criterion must be an object", path)
    name = _require(entry, "criteria_name", path)
    if not isinstance(name, str):
        raise RubricParseError("criteria_name must be a string", f"{path}.criteria_name")
    weight = _as_weight(_require(entry, "percentage", path), f"{path}.percentage")
    cells = _require(entry, "criteria", path)
    # Appendix-style documents wrap the score map in a single-element array.
    if isinstance(cells, list):
        if len(cells) != 1:
            raise RubricParseError(
                f"criteria must hold exactly one score map, got {len(cells)}", f"{path}.criteria"
            )
        cells = cells[0]
    if not isinstance(cells, Mapping):
        raise RubricParseError("criteria must be an object of score_N entries", f"{path}.criteria")

    by_index: dict[int, LevelDescriptor] = {}
    for key, cell in cells.items():
        n = _score_key_index(key, f"{path}.criteria.{key}")
        if n < 1 or n > _PARSE_SCALE_CAP:
            raise RubricParseError(f"score index {n} out of range", f"{path}.criteria.{key}")
        by_index[n] = _descriptor_from_dict(cell, f"{path}.criteria.{key}")
    if not by_index:
        raise RubricParseError("criterion has no score levels", f"{path}.criteria")
    top = max(by_index)
    missing = [n for n in range(1, top + 1) if n not in by_index]
    if missing:
        raise RubricParseError(
            f"missing required key 'score_{missing[0]}'", f"{path}.criteria.score_{missing[0]}"
        )
    return Criterion(name=name, weight=weight, levels=tuple(by_index[n] for n in range(1, top + 1)))


def rubric_from_dict(doc: Mapping[str, Any]) -> Rubric:
    if not isinstance(doc, Mapping):
        raise RubricParseError("document root must be an object")
    entries = _require(doc, "rubric", "$")
    if not isinstance(entries, list):
        raise RubricParseError("rubric must be an array", "$.rubric")
    name = doc.get("name", "")
    if not isinstance(name, str):
        raise RubricParseError("name must be a string", "$.name")
    task = doc.get("task_description", "")
    if not isinstance(task, str):
        raise RubricParseError("task_description must be a string", "$.task_description")

    criteria = tuple(
        criterion_from_dict(entry, f"rubric[{i}]") for i, entry in enumerate(entries)
    )
    if not criteria:
        raise RubricParseError("rubric array is empty", "$.rubric")
    scale = criteria[0].scale
    for i, criterion in enumerate(criteria[1:], start=1):
        if criterion.scale != scale:
            raise RubricParseError(
                f"criterion has {criterion.scale} levels but rubric[0] has {scale}",
                f"rubric[{i}].criteria",
            )
    return Rubric(name=name, task_description=task, scale=scale, criteria=criteria)


def parse_rubric(document: str) -> Rubric:
    try:
        doc = json.loads(document, object_pairs_hook=_no_duplicate_keys)
    except RubricParseError:
        raise
    except json.JSONDecodeError as exc:
        raise RubricParseError(f"malformed document: {exc.msg}", f"$ (line {exc.lineno})") from exc
    return rubric_from_dict(doc)


def criterion_to_dict(criterion: Criterion) -> dict[str, Any]:
    cells = {
        f"score_{n}": {
            "text": descriptor.text,
            "checked": descriptor.checked,
            "reason": descriptor.reason,
        }
        # Canonical write order: score keys descending, score_L first.
        for n, descriptor in sorted(
            enumerate(criterion.levels, start=1), key=lambda item: -item[0]
        )
    }
    return {
        "criteria_name": criterion.name,
        "percentage": criterion.weight,
        "criteria": [cells],
    }


def rubric_to_dict(rubric: Rubric) -> dict[str, Any]:
    doc: dict[str, Any] = {}
    if rubric.name:
        doc["name"] = rubric.name
    if rubric.task_description:
        doc["task_description"] = rubric.task_description
    doc["rubric"] = [criterion_to_dict(c) for c in rubric.criteria]
    return doc


def serialize_rubric(rubric: Rubric, indent: int | None = 2) -> str:
    return json.dumps(rubric_to_dict(rubric), indent=indent, ensure_ascii=False)


# ---------------------------------------------------------------------------
# Hashing and evaluated snapshots
# ---------------------------------------------------------------------------


def text_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def rubric_hash(rubric: Rubric) -> str:
    """Content hash over the canonical serialization (checked/reason included)."""
    return text_hash(serialize_rubric(rubric))


def strip_evaluation_state(rubric: Rubric) -> Rubric:
    """Reset all checked flags and reasons, keeping structure and texts."""
    return replace(
        rubric,
        criteria=tuple(
            replace(
                c,
                levels=tuple(replace(d, checked=False, reason="") for d in c.levels),
            )
            for c in rubric.criteria
        ),
    )


def evaluated_rubric(rubric: Rubric, evaluation: Evaluation) -> Rubric:
    """Snapshot the rubric with an evaluation's checked flags and reasons merged in."""
    by_name = {c.name: c for c in evaluation.criteria}
    criteria = []
    for criterion in rubric.criteria:
        judged = by_name.get(criterion.name)
        if judged is None:
            criteria.append(criterion)
            continue
        levels = tuple(
            replace(d, checked=(n == judged.selected), reason=judged.reason_for(n))
            for n, d in enumerate(criterion.levels, start=1)
        )
        criteria.append(replace(criterion, levels=levels))
    return replace(rubric, criteria=tuple(criteria))


# ---------------------------------------------------------------------------
# Evaluation serialization (storage / API payloads)
# ---------------------------------------------------------------------------


def evaluation_to_dict(evaluation: Evaluation) -> dict[str, Any]:
    return {
        "rubric_name": evaluation.rubric_name,
        "rubric_hash": evaluation.rubric_hash,
        "scale": evaluation.scale,
        "criteria": [
            {
                "name": c.name,
                "selected": c.selected,
                "reasons": {f"score_{n}": r for n, r in enumerate(c.reasons, start=1)},
            }
            for c in evaluation.criteria
        ],
        "overall": {
            "numerator": evaluation.overall.numerator,
            "denominator": evaluation.overall.denominator,
            "display": render_score(evaluation.overall),
            "band": score_band(evaluation.overall),
        },
        "created_at": evaluation.created_at,
        "transcript_ids": list(evaluation.transcript_ids),
    }


def evaluation_from_dict(doc: Mapping[str, Any]) -> Evaluation:
    criteria = []
    for entry in doc["criteria"]:
        reasons = entry["reasons"]
        ordered = tuple(reasons[f"score_{n}"] for n in range(1, len(reasons) + 1))
        criteria.append(
            CriterionEvaluation(name=entry["name"], selected=entry["selected"], reasons=ordered)
        )
    overall = Fraction(doc["overall"]["numerator"], doc["overall"]["denominator"])
    return Evaluation(
        rubric_name=doc["rubric_name"],
        rubric_hash=doc["rubric_hash"],
        scale=doc["scale"],
        criteria=tuple(criteria),
        overall=overall,
        created_at=doc["created_at"],
        transcript_ids=tuple(doc.get("transcript_ids", ())),
    )
