"""Rubric-based judging orchestration: per-criterion evaluation prompts,
aggregation into an overall score, repeated-run statistics, and the two
baseline holistic judges.
"""

from __future__ import annotations

import math
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from fractions import Fraction
from typing import Any, Mapping

from . import prompts
from .core import (
    Criterion,
    CriterionEvaluation,
    Evaluation,
    Rubric,
    Violation,
    evaluation_overall,
    rubric_hash,
    validate_rubric,
)
from .errors import EvaluationError, PreconditionError, StructuredOutputError
from .judge import JudgeClient, JudgeConfig, default_config

_BULLET = re.compile(r"^\s*(?:[-*•])\s+\S", re.MULTILINE)


def _utcnow() -> str:
    return datetime.now(timezone.utc).isoformat()


# ---------------------------------------------------------------------------
# Response validation
# ---------------------------------------------------------------------------


def _level_cells(parsed: Any) -> Mapping[str, Any] | None:
    """Locate the score_N map, tolerating the nested criterion envelope."""
    if not isinstance(parsed, Mapping):
        return None
    if any(k.startswith("score_") for k in parsed):
        return parsed
    cells = parsed.get("criteria")
    if isinstance(cells, list) and len(cells) == 1:
        cells = cells[0]
    if isinstance(cells, Mapping):
        return cells
    return None


def criterion_response_validator(scale: int) -> "callable":
    """Validator for per-criterion judge output.

    Enforces: all L score keys present (MISSING_LEVEL), exactly one checked
    (MULTI_CHECKED / NONE_CHECKED), every reason non-empty (EMPTY_REASON) and
    in overall-then-bullets markup (BAD_MARKUP).
    """

    def validate(parsed: Any) -> list[Violation]:
        cells = _level_cells(parsed)
        if cells is None:
            return [Violation("PARSE_ERROR", "response is not a criterion object with score_N keys")]
        problems: list[Violation] = []
        checked: list[int] = []
        for n in range(1, scale + 1):
            key = f"score_{n}"
            cell = cells.get(key)
            if not isinstance(cell, Mapping):
                problems.append(Violation("MISSING_LEVEL", f"missing level {key}", key))
                continue
            if cell.get("checked") is True:
                checked.append(n)
            reason = cell.get("reason")
            if not isinstance(reason, str) or not reason.strip():
                problems.append(Violation("EMPTY_REASON", f"empty reason at {key}", key))
            elif not _BULLET.search(reason):
                problems.append(
                    Violation(
                        "BAD_MARKUP",
                        f"reason at {key} must follow an overall-then-bullets shape "
                        "(include at least one '- ' bullet line)",
                        key,
                    )
                )
        if len(checked) > 1:
            problems.append(
                Violation(
                    "MULTI_CHECKED",
                    f"levels {checked} are all checked; exactly one score can be true",
                )
            )
        elif not checked and not any(p.code == "MISSING_LEVEL" for p in problems):
            problems.append(Violation("NONE_CHECKED", "no level has checked=true"))
        return problems

    return validate


def holistic_validator(parsed: Any) -> list[Violation]:
    """Validator for {"score": 0..100 int, "comment": str} responses."""
    if not isinstance(parsed, Mapping):
        return [Violation("PARSE_ERROR", "response is not a JSON object")]
    problems: list[Violation] = []
    score = parsed.get("score")
    if not isinstance(score, int) or isinstance(score, bool) or not 0 <= score <= 100:
        problems.append(
            Violation("SCORE_RANGE", f"score must be an integer in 0..100, got {score!r}", "score")
        )
    comment = parsed.get("comment")
    if not isinstance(comment, str) or not comment.strip():
        problems.append(Violation("EMPTY_COMMENT", "comment must be a non-empty string", "comment"))
    return problems


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def evaluate_criterion(
    client: JudgeClient,
    artifact: str,
    criterion: Criterion,
    task_description: str,
    config: JudgeConfig | None = None,
) -> tuple[CriterionEvaluation, tuple[int, ...]]:
    """Judge one criterion. Returns the evaluation and the transcript ids used."""
    if not artifact.strip():
        raise PreconditionError("artifact must be non-empty")
    for n, descriptor in enumerate(criterion.levels, start=1):
        if not descriptor.text.strip():
            raise PreconditionError(
                f"criterion {criterion.name!r} has an empty descriptor at score_{n}"
            )
    config = config or default_config(prompts.OP_EVALUATE_CRITERION)
    bundle = prompts.criterion_evaluation_prompt(artifact, criterion, task_description)
    try:
        parsed, entries = client.complete_structured(
            bundle.user,
            config,
            criterion_response_validator(criterion.scale),
            op=bundle.op,
            system=bundle.system,
        )
    except StructuredOutputError as exc:
        raise EvaluationError(
            f"criterion {criterion.name!r} failed: {exc}", criterion.name, cause=exc
        ) from exc
    cells = _level_cells(parsed)
    selected = next(
        n for n in range(1, criterion.scale + 1) if cells[f"score_{n}"].get("checked") is True
    )
    reasons = tuple(cells[f"score_{n}"]["reason"] for n in range(1, criterion.scale + 1))
    result = CriterionEvaluation(name=criterion.name, selected=selected, reasons=reasons)
    return result, tuple(e.id for e in entries)


def evaluate(
    client: JudgeClient,
    artifact: str,
    rubric: Rubric,
    config: JudgeConfig | None = None,
) -> Evaluation:
    """Judge every criterion (concurrently) and aggregate the overall score.

    The same operation serves writing-vs-rubric and rubric-vs-meta-rubric
    judging; callers on the qualification path pass the serialized rubric as
    the artifact.
    """
    report = validate_rubric(rubric)
    if report:
        raise PreconditionError(
            "rubric is invalid: " + "; ".join(f"{v.code} at {v.path}" for v in report)
        )
    if not artifact.strip():
        raise PreconditionError("artifact must be non-empty")
    config = config or default_config(prompts.OP_EVALUATE_CRITERION)

    def run_one(criterion: Criterion):
        return evaluate_criterion(client, artifact, criterion, rubric.task_description, config)

    failures: list[EvaluationError] = []
    results: list[tuple[CriterionEvaluation, tuple[int, ...]] | None] = [None] * len(rubric.criteria)
    with ThreadPoolExecutor(max_workers=max(1, len(rubric.criteria))) as pool:
        futures = [pool.submit(run_one, c) for c in rubric.criteria]
        for i, future in enumerate(futures):
            try:
                results[i] = future.result()
            except EvaluationError as exc:
                failures.append(exc)
    if failures:
        raise EvaluationError(
            "evaluation failed for: "
            + "; ".join(f"{f.criterion} ({f.cause})" for f in failures),
            failures[0].criterion,
            cause=failures[0],
        )

    criteria = tuple(r[0] for r in results)
    # Sorted so the value is independent of thread completion order.
    transcript_ids = tuple(sorted(i for r in results for i in r[1]))
    overall = evaluation_overall(rubric, [c.selected for c in criteria])
    return Evaluation(
        rubric_name=rubric.name,
        rubric_hash=rubric_hash(rubric),
        scale=rubric.scale,
        criteria=criteria,
        overall=overall,
        created_at=_utcnow(),
        transcript_ids=transcript_ids,
    )


@dataclass(frozen=True)
class DimensionStats:
    mean: Fraction
    sd: float | None


@dataclass(frozen=True)
class RepeatedEvaluation:
    """n independent evaluations plus per-dimension mean and sample SD."""

    runs: tuple[Evaluation, ...]
    criterion_stats: tuple[tuple[str, DimensionStats], ...]
    overall_stats: DimensionStats

    @property
    def n(self) -> int:
        return len(self.runs)


def _stats(values: list[Fraction]) -> DimensionStats:
    n = len(values)
    mean = sum(values, Fraction(0)) / n
    if n < 2:
        return DimensionStats(mean=mean, sd=None)
    variance = sum((float(v - mean)) ** 2 for v in values) / (n - 1)
    return DimensionStats(mean=mean, sd=math.sqrt(variance))


def compute_run_stats(runs: list[Evaluation]) -> tuple[tuple, DimensionStats]:
    names = [c.name for c in runs[0].criteria]
    criterion_stats = tuple(
        (
            name,
            _stats([Fraction(run.criteria[i].selected) for run in runs]),
        )
        for i, name in enumerate(names)
    )
    overall_stats = _stats([run.overall for run in runs])
    return criterion_stats, overall_stats


def evaluate_repeated(
    client: JudgeClient,
    artifact: str,
    rubric: Rubric,
    config: JudgeConfig,
) -> RepeatedEvaluation:
    """Run ``config.runs`` independent evaluations and summarize them.

    Runs execute sequentially so scripted response sequences are consumed in
    run order; criteria within each run still fan out concurrently. SD is the
    sample (n-1) standard deviation, absent when n = 1.
    """
    runs: list[Evaluation] = []
    for index in range(config.runs):
        try:
            runs.append(evaluate(client, artifact, rubric, config))
        except EvaluationError as exc:
            raise EvaluationError(
                f"run {index} failed: {exc}", exc.criterion, cause=exc
            ) from exc
    criterion_stats, overall_stats = compute_run_stats(runs)
    return RepeatedEvaluation(
        runs=tuple(runs), criterion_stats=criterion_stats, overall_stats=overall_stats
    )


@dataclass(frozen=True)
class HolisticResult:
    score: int
    comment: str
    transcript_ids: tuple[int, ...] = ()


def holistic_evaluate_writing(
    client: JudgeClient, artifact: str, config: JudgeConfig | None = None
) -> HolisticResult:
    """Baseline judge: one 0-100 score plus a short comment, no rubric scaffold."""
    if not artifact.strip():
        raise PreconditionError("artifact must be non-empty")
    config = config or default_config(prompts.OP_HOLISTIC_WRITING)
    bundle = prompts.holistic_writing_prompt(artifact)
    parsed, entries = client.complete_structured(
        bundle.user, config, holistic_validator, op=bundle.op, system=bundle.system
    )
    return HolisticResult(
        score=parsed["score"], comment=parsed["comment"], transcript_ids=tuple(e.id for e in entries)
    )


def holistic_evaluate_rubric(
    client: JudgeClient,
    rubric: Rubric,
    task_description: str,
    config: JudgeConfig | None = None,
) -> HolisticResult:
    """Baseline judge for rubrics, with the meta standards embedded in the system prompt."""
    from .builtin_rubrics import builtin_meta_rubric
    from .core import serialize_rubric

    report = validate_rubric(rubric)
    if report:
        raise PreconditionError(
            "rubric is invalid: " + "; ".join(f"{v.code} at {v.path}" for v in report)
        )
    config = config or default_config(prompts.OP_HOLISTIC_RUBRIC)
    bundle = prompts.holistic_rubric_prompt(
        serialize_rubric(rubric), task_description, builtin_meta_rubric()
    )
    parsed, entries = client.complete_structured(
        bundle.user, config, holistic_validator, op=bundle.op, system=bundle.system
    )
    return HolisticResult(
        score=parsed["score"], comment=parsed["comment"], transcript_ids=tuple(e.id for e in entries)
    )
