"""Helpers for authoring scripted-judge response tables.

A script maps operation kind -> {prompt hash -> response}. These builders
compute the prompt hashes with the same template functions the engine uses,
so a test (or the offline demo) can declare outcomes like "Clarity scores 3"
without hand-computing hashes.
"""

from __future__ import annotations

import json
from typing import Any, Mapping, Sequence

from . import prompts
from .core import Criterion, Rubric, rubric_to_dict, serialize_rubric
from .judge import prompt_hash


def merge_scripts(*scripts: Mapping[str, Mapping[str, Any]]) -> dict[str, dict[str, Any]]:
    merged: dict[str, dict[str, Any]] = {}
    for script in scripts:
        for op, table in script.items():
            merged.setdefault(op, {}).update(table)
    return merged


def default_reason(criterion: str, level: int, selected: int) -> str:
    if level == selected:
        return (
            f"Overall, the submission fits score_{level} on {criterion}.\n"
            f"- The work meets the score_{level} requirements.\n"
            f"- Neighboring levels fit less well."
        )
    return (
        f"Overall, the submission does not fit score_{level} on {criterion}.\n"
        f"- The score_{level} requirements are not matched.\n"
        f"- score_{selected} describes the work better."
    )


def criterion_response(
    criterion: Criterion,
    selected: int,
    reasons: Mapping[int, str] | None = None,
) -> str:
    """Canonical judge output for one criterion with the given checked level."""
    reasons = dict(reasons or {})
    cells = {
        f"score_{n}": {
            "text": criterion.level(n).text,
            "checked": n == selected,
            "reason": reasons.get(n, default_reason(criterion.name, n, selected)),
        }
        for n in range(criterion.scale, 0, -1)
    }
    return json.dumps(
        {"criteria_name": criterion.name, "criteria": [cells]}, ensure_ascii=False
    )


def evaluation_script(
    artifact: str,
    rubric: Rubric,
    levels: Sequence[int] | Mapping[str, int],
    reasons: Mapping[str, Mapping[int, str]] | None = None,
) -> dict[str, dict[str, Any]]:
    """Script every per-criterion call of evaluate(artifact, rubric).

    ``levels`` is either one level per criterion in rubric order or a map
    criterion name -> level. A level may also be a list of levels, producing a
    response sequence consumed across repeated runs.
    """
    if isinstance(levels, Mapping):
        by_name = dict(levels)
    else:
        by_name = {c.name: levels[i] for i, c in enumerate(rubric.criteria)}
    table: dict[str, Any] = {}
    for criterion in rubric.criteria:
        if criterion.name not in by_name:
            continue
        bundle = prompts.criterion_evaluation_prompt(
            artifact, criterion, rubric.task_description
        )
        level = by_name[criterion.name]
        per_criterion_reasons = (reasons or {}).get(criterion.name)
        if isinstance(level, (list, tuple)):
            response: Any = [
                criterion_response(criterion, lv, per_criterion_reasons) for lv in level
            ]
        else:
            response = criterion_response(criterion, level, per_criterion_reasons)
        table[prompt_hash(bundle.user, bundle.system)] = response
    return {prompts.OP_EVALUATE_CRITERION: table}


def qualification_script(
    rubric: Rubric,
    levels: Sequence[int] | Mapping[str, int],
    meta: Rubric | None = None,
) -> dict[str, dict[str, Any]]:
    """Script the meta-rubric judging of ``rubric`` (serialized as the artifact)."""
    if meta is None:
        from .builtin_rubrics import builtin_meta_rubric

        meta = builtin_meta_rubric()
    return evaluation_script(serialize_rubric(rubric), meta, levels)


def howto_writing_script(
    writing: str,
    rubric: Rubric,
    criterion: str,
    current: int,
    target: int,
    rationale: str,
    revised: str,
    sentence_reasons: Sequence[tuple[str, str]] = (),
) -> dict[str, dict[str, Any]]:
    bundle = prompts.howto_writing_prompt(writing, rubric, criterion, current, target, rationale)
    response = json.dumps(
        {
            "revised_writing": revised,
            "reason": [{"sentence": s, "reason": r} for s, r in sentence_reasons],
        },
        ensure_ascii=False,
    )
    return {bundle.op: {prompt_hash(bundle.user, bundle.system): response}}


def howto_rubric_script(
    rubric: Rubric,
    meta_criterion: str,
    current: int,
    target: int,
    rationale: str,
    revised: Rubric,
) -> dict[str, dict[str, Any]]:
    bundle = prompts.howto_rubric_prompt(rubric, meta_criterion, current, target, rationale)
    response = json.dumps(rubric_to_dict(revised)["rubric"], ensure_ascii=False)
    return {bundle.op: {prompt_hash(bundle.user, bundle.system): response}}


def instruct_revision_script(
    artifact: str, instruction: str, revised: str
) -> dict[str, dict[str, Any]]:
    bundle = prompts.instruct_revision_prompt(artifact, instruction)
    response = json.dumps({"revised": revised}, ensure_ascii=False)
    return {bundle.op: {prompt_hash(bundle.user, bundle.system): response}}
