"""Rubric authoring assists (recommend, generate/refine, enhance) and the
recursive qualification + comprehensive-revision loop against the meta-rubric.

No operation here mutates its input rubric; everything returns fresh values so
callers can keep prior versions for one-click revert.
"""

from __future__ import annotations

import enum
from typing import Any, Mapping

from . import prompts
from .builtin_rubrics import builtin_meta_rubric
from .core import (
    Criterion,
    Evaluation,
    LevelDescriptor,
    Rubric,
    Violation,
    criterion_from_dict,
    rubric_from_dict,
    serialize_rubric,
    validate_rubric,
)
from .errors import (
    DuplicateCriterionError,
    PreconditionError,
    StructureDriftError,
    StructuredOutputError,
)
from .evaluator import evaluate
from .feedback import RevisionGoal, validate_goal
from .judge import JudgeClient, JudgeConfig, default_config

# A goal against the meta-rubric has the same shape as a writing goal.
RubricRevisionGoal = RevisionGoal


class RefineKind(str, enum.Enum):
    GENERATE = "Generate"
    IMPROVE = "Improve"
    SHORTEN = "Shorten"
    ELABORATE = "Elaborate"
    BULLET_POINT = "Bullet-point"
    RETRY = "Retry"


def _criterion_cells_validator(scale: int, require_bullets: bool = False):
    def validate(parsed: Any) -> list[Violation]:
        if not isinstance(parsed, Mapping):
            return [Violation("PARSE_ERROR", "response is not a JSON object")]
        problems: list[Violation] = []
        for n in range(1, scale + 1):
            key = f"score_{n}"
            cell = parsed.get(key)
            if not isinstance(cell, Mapping) or not isinstance(cell.get("text"), str):
                problems.append(Violation("MISSING_LEVEL", f"missing level {key} with text", key))
                continue
            text = cell["text"]
            if not text.strip():
                problems.append(Violation("EMPTY_TEXT", f"empty text at {key}", key))
            elif require_bullets and ("•" not in text or "\n" not in text):
                problems.append(
                    Violation(
                        "BAD_MARKUP",
                        f"{key} must use '• ' bullets separated by line breaks",
                        key,
                    )
                )
        return problems

    return validate


def recommend_criterion(
    client: JudgeClient,
    rubric: Rubric,
    task_description: str,
    config: JudgeConfig | None = None,
) -> Criterion:
    """Suggest one new criterion distinct from the rubric's existing ones.

    The returned criterion carries weight 0; the rubric stays invalid until
    the user rebalances weights (no silent auto-rebalancing).
    """
    if not task_description.strip():
        raise PreconditionError("task description must be non-empty")
    config = config or default_config(prompts.OP_RECOMMEND_CRITERION)
    existing = {name.strip().lower() for name in rubric.criterion_names()}
    bundle = prompts.recommend_criterion_prompt(
        task_description, rubric.criterion_names(), rubric.scale
    )
    cells_ok = _criterion_cells_validator(rubric.scale)

    def validator(parsed: Any) -> list[Violation]:
        if not isinstance(parsed, Mapping):
            return [Violation("PARSE_ERROR", "response is not a JSON object")]
        problems: list[Violation] = []
        name = parsed.get("name")
        if not isinstance(name, str) or not name.strip():
            problems.append(Violation("EMPTY_NAME", "criterion name missing", "name"))
        elif name.strip().lower() in existing:
            problems.append(
                Violation(
                    "DUPLICATE_CRITERION",
                    f"name {name!r} collides with an existing criterion; pick a different one",
                    "name",
                )
            )
        cells = parsed.get("criteria")
        problems.extend(cells_ok(cells if isinstance(cells, Mapping) else None))
        return problems

    try:
        parsed, _ = client.complete_structured(
            bundle.user, config, validator, op=bundle.op, system=bundle.system
        )
    except StructuredOutputError as exc:
        if "DUPLICATE_CRITERION" in exc.last_codes:
            raise DuplicateCriterionError(str(exc)) from exc
        raise
    levels = tuple(
        LevelDescriptor(text=parsed["criteria"][f"score_{n}"]["text"])
        for n in range(1, rubric.scale + 1)
    )
    return Criterion(name=parsed["name"], weight=0, levels=levels)


def refine_criterion(
    client: JudgeClient,
    criterion: Criterion,
    kind: RefineKind,
    task_description: str,
    scale: int,
    config: JudgeConfig | None = None,
) -> Criterion:
    """Rewrite every level text of one criterion (same name, new texts)."""
    if scale != criterion.scale:
        raise PreconditionError(
            f"scale {scale} does not match criterion's {criterion.scale} levels"
        )
    config = config or default_config(prompts.OP_REFINE_CRITERION)
    bundle = prompts.refine_criterion_prompt(criterion, kind.value, task_description, scale)
    validator = _criterion_cells_validator(scale, require_bullets=kind is RefineKind.BULLET_POINT)
    parsed, _ = client.complete_structured(
        bundle.user, config, validator, op=bundle.op, system=bundle.system
    )
    levels = tuple(
        LevelDescriptor(text=parsed[f"score_{n}"]["text"]) for n in range(1, scale + 1)
    )
    return Criterion(name=criterion.name, weight=criterion.weight, levels=levels)


def refine_descriptor(
    client: JudgeClient,
    criterion: Criterion,
    level: int,
    kind: RefineKind,
    config: JudgeConfig | None = None,
) -> LevelDescriptor:
    """Rewrite a single level's text; all other cells stay untouched."""
    if not 1 <= level <= criterion.scale:
        raise PreconditionError(f"level {level} out of range 1..{criterion.scale}")
    config = config or default_config(prompts.OP_REFINE_DESCRIPTOR)
    bundle = prompts.refine_descriptor_prompt(criterion, level, kind.value)
    key = f"score_{level}"

    def validator(parsed: Any) -> list[Violation]:
        if not isinstance(parsed, Mapping):
            return [Violation("PARSE_ERROR", "response is not a JSON object")]
        unexpected = [k for k in parsed if k.startswith("score_") and k != key]
        if unexpected:
            return [
                Violation(
                    "WRONG_LEVEL",
                    f"response addressed {unexpected[0]} but only {key} may change",
                )
            ]
        cell = parsed.get(key)
        if not isinstance(cell, Mapping) or not isinstance(cell.get("text"), str):
            return [Violation("MISSING_LEVEL", f"missing level {key} with text", key)]
        if not cell["text"].strip():
            return [Violation("EMPTY_TEXT", f"empty text at {key}", key)]
        return []

    parsed, _ = client.complete_structured(
        bundle.user, config, validator, op=bundle.op, system=bundle.system
    )
    original = criterion.level(level)
    return LevelDescriptor(
        text=parsed[key]["text"], checked=original.checked, reason=original.reason
    )


_DESCRIPTION_LABELS = ("Task Objective", "Context", "Requirements")


def enhance_task_description(
    client: JudgeClient, raw: str, config: JudgeConfig | None = None
) -> str:
    """Expand a brief task note into a labeled, newline-separated description."""
    if not raw.strip():
        raise PreconditionError("task description must be non-empty")
    config = config or default_config(prompts.OP_ENHANCE_DESCRIPTION)
    bundle = prompts.enhance_description_prompt(raw)

    def validator(parsed: Any) -> list[Violation]:
        if not isinstance(parsed, Mapping):
            return [Violation("PARSE_ERROR", "response is not a JSON object")]
        task = parsed.get("task")
        if not isinstance(task, str) or not task.strip():
            return [Violation("EMPTY_TEXT", "task must be a non-empty string", "task")]
        missing = [label for label in _DESCRIPTION_LABELS if label not in task]
        if missing:
            return [
                Violation(
                    "MISSING_SECTION",
                    f"structured description must contain the labels {missing}",
                    "task",
                )
            ]
        if "\n" not in task:
            return [Violation("MISSING_SECTION", "sections must be newline-separated", "task")]
        return []

    parsed, _ = client.complete_structured(
        bundle.user, config, validator, op=bundle.op, system=bundle.system
    )
    return parsed["task"]


def qualify_rubric(
    client: JudgeClient, rubric: Rubric, config: JudgeConfig | None = None
) -> Evaluation:
    """Judge the rubric itself against the built-in meta-rubric.

    This is literal reuse of evaluate(): the serialized rubric becomes the
    artifact and the meta-rubric the judging rubric, so the recursion shares
    one code path with writing evaluation.
    """
    report = validate_rubric(rubric)
    if report:
        raise PreconditionError(
            "rubric is invalid: " + "; ".join(f"{v.code} at {v.path}" for v in report)
        )
    return evaluate(client, serialize_rubric(rubric), builtin_meta_rubric(), config)


def howto_rubric(
    client: JudgeClient,
    rubric: Rubric,
    goal: RubricRevisionGoal,
    config: JudgeConfig | None = None,
) -> Rubric:
    """Comprehensive whole-rubric revision toward a meta-rubric target level.

    The revision must preserve criterion names, weights, and score keys
    exactly; anything else is STRUCTURE_DRIFT. The result replaces the rubric
    wholesale (no tracked changes; retain the prior version to revert).
    """
    meta = builtin_meta_rubric()
    validate_goal(goal, meta)
    expected_names = rubric.criterion_names()
    expected_weights = rubric.weights()
    config = config or default_config(prompts.OP_HOWTO_RUBRIC)
    bundle = prompts.howto_rubric_prompt(
        rubric, goal.criterion, goal.current, goal.target, goal.rationale
    )

    def validator(parsed: Any) -> list[Violation]:
        entries = parsed.get("rubric") if isinstance(parsed, Mapping) else parsed
        if not isinstance(entries, list):
            return [Violation("PARSE_ERROR", "response must be a rubric array")]
        problems: list[Violation] = []
        try:
            criteria = [
                criterion_from_dict(entry, f"rubric[{i}]") for i, entry in enumerate(entries)
            ]
        except Exception as exc:
            return [Violation("PARSE_ERROR", f"rubric array does not parse: {exc}")]
        names = tuple(c.name for c in criteria)
        weights = tuple(c.weight for c in criteria)
        if names != expected_names:
            problems.append(
                Violation(
                    "STRUCTURE_DRIFT",
                    f"criterion names changed: expected {list(expected_names)}, got {list(names)}",
                )
            )
        if weights != expected_weights:
            problems.append(
                Violation(
                    "STRUCTURE_DRIFT",
                    f"weights changed: expected {list(expected_weights)}, got {list(weights)}",
                )
            )
        for i, criterion in enumerate(criteria):
            if criterion.scale != rubric.scale:
                problems.append(
                    Violation(
                        "STRUCTURE_DRIFT",
                        f"rubric[{i}] has {criterion.scale} score keys, expected {rubric.scale}",
                    )
                )
            for n in range(1, criterion.scale + 1):
                if not criterion.level(n).text.strip():
                    problems.append(
                        Violation("EMPTY_TEXT", f"rubric[{i}].score_{n} text is empty")
                    )
        return problems

    try:
        parsed, _ = client.complete_structured(
            bundle.user, config, validator, op=bundle.op, system=bundle.system
        )
    except StructuredOutputError as exc:
        if "STRUCTURE_DRIFT" in exc.last_codes:
            raise StructureDriftError(str(exc)) from exc
        raise
    entries = parsed.get("rubric") if isinstance(parsed, Mapping) else parsed
    revised = rubric_from_dict(
        {"name": rubric.name, "task_description": rubric.task_description, "rubric": entries}
    )
    # Revision suggestions arrive unevaluated regardless of what the model echoed.
    from .core import strip_evaluation_state

    revised = strip_evaluation_state(revised)
    remaining = validate_rubric(revised)
    if remaining:
        raise StructureDriftError(
            "revised rubric fails validation: "
            + "; ".join(f"{v.code} at {v.path}" for v in remaining)
        )
    return revised
