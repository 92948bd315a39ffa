"""Prompt templates for every judge-backed operation.

Each builder returns a PromptBundle carrying the operation kind (which binds
the temperature and keys scripted responses), the user message, and an
optional system message. Dynamic content is embedded verbatim inside tagged
blocks so the templates stay auditable in transcripts.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

from .core import Criterion, Rubric, criterion_to_dict, rubric_to_dict

# Operation kinds. One judge call per operation; the temperature is bound
# per operation, not globally.
OP_EVALUATE_CRITERION = "evaluate_criterion"
OP_HOWTO_WRITING = "howto_writing"
OP_HOWTO_RUBRIC = "howto_rubric"
OP_HOLISTIC_WRITING = "holistic_writing"
OP_HOLISTIC_RUBRIC = "holistic_rubric"
OP_INSTRUCT_REVISION = "instruct_revision"
OP_ENHANCE_DESCRIPTION = "enhance_description"
OP_REFINE_DESCRIPTOR = "refine_descriptor"
OP_REFINE_CRITERION = "refine_criterion"
OP_RECOMMEND_CRITERION = "recommend_criterion"

TEMPERATURES: dict[str, float] = {
    OP_EVALUATE_CRITERION: 0.0,
    OP_HOWTO_WRITING: 0.0,
    OP_HOWTO_RUBRIC: 0.0,
    OP_HOLISTIC_WRITING: 0.0,
    OP_HOLISTIC_RUBRIC: 0.0,
    OP_INSTRUCT_REVISION: 0.2,
    OP_ENHANCE_DESCRIPTION: 0.2,
    OP_REFINE_DESCRIPTOR: 0.4,
    OP_REFINE_CRITERION: 0.6,
    OP_RECOMMEND_CRITERION: 0.8,
}


@dataclass(frozen=True)
class PromptBundle:
    op: str
    user: str
    system: str | None = None


def _json(value) -> str:
    return json.dumps(value, indent=2, ensure_ascii=False)


def _block(tag: str, body: str) -> str:
    return f"<{tag}>\n{body}\n</{tag}>"


def _score_range(scale: int) -> str:
    return f"score_{scale} to score_1"


# ---------------------------------------------------------------------------
# Per-criterion evaluation (unified template; also used for rubric qualification
# by passing the serialized rubric as the artifact)
# ---------------------------------------------------------------------------


def criterion_evaluation_prompt(
    artifact: str, criterion: Criterion, task_description: str
) -> PromptBundle:
    scale = criterion.scale
    example = {
        "criteria_name": criterion.name,
        "criteria": [
            {
                f"score_{n}": {
                    "text": "<level requirement>",
                    "checked": n == scale,
                    "reason": "<markdown reason>",
                }
                for n in range(scale, 0, -1)
            }
        ],
    }
    role = (
        f"You are an expert in evaluating submissions in the dimension of {criterion.name}. "
        "You must judge the <submission> strictly against the <criteria> and give a detailed "
        "reason for every score level. Return a single JSON object."
    )
    instructions = f"""You have to do the following 7 steps:
1. Read the <criteria>. It has a score scale from {_score_range(scale)}; each score carries a text field stating the requirements for that score. Higher scores mean better performance on this dimension.
2. Rigorously match the <submission> against the text of {_score_range(scale)} and set "checked": true on the single score that fits best. Exactly one score may have "checked": true.
3. Take a moderate stance: recognize strengths, avoid harsh penalties for minor slips, and weigh overall fit with the criteria.
4. For the score with "checked": true, write a detailed "why" explanation with concrete examples in its "reason" field, stating why this score was selected over the others.
5. For every score with "checked": false, write a detailed "why not" explanation with concrete examples in its "reason" field, stating what the submission did not meet.
6. Use an overall-then-supporting structure in every "reason": one or two opening sentences, then bullet lines ("- ") with specific evidence. Write the reason as Markdown with line breaks, not as a JSON list.
7. Format your response as a single JSON object shaped like the <output format example>. Do not include any other text outside the JSON."""
    user = "\n\n".join(
        [
            _block("role, task", role),
            _block("task description", task_description),
            _block("submission", artifact),
            _block("criteria", _json(criterion_to_dict(criterion))),
            _block("instructions", instructions),
            _block("output format example (in json format)", _json(example)),
        ]
    )
    return PromptBundle(op=OP_EVALUATE_CRITERION, user=user)


# ---------------------------------------------------------------------------
# Counterfactual revision of writing
# ---------------------------------------------------------------------------


def howto_writing_prompt(
    writing: str, rubric: Rubric, criterion: str, current: int, target: int, rationale: str
) -> PromptBundle:
    role = (
        "As an expert revision assistant, you will revise the <draft> so that it reaches a "
        "specific score on the rubric below. Work as a precise, logical revision tool: the "
        "revision may raise or lower the draft relative to the rubric, but you must make the "
        "fewest changes possible."
    )
    principle = (
        "Your primary directive is minimal modification. Make the fewest changes that achieve "
        "the target score. For each candidate change ask: is this modification strictly "
        "necessary to meet the target score's criteria? If the original text already meets a "
        "criterion, leave it unchanged."
    )
    goal = (
        f"Criterion: {criterion}\n"
        f"Current score: score_{current}\n"
        f"Target score: score_{target}\n"
        f"Rationale for the gap:\n{rationale}\n\n"
        f"Full rubric:\n{_json(rubric_to_dict(rubric))}"
    )
    instructions = """1. Analyze the rubric. Focus on the specific language that separates the current score from the target score on the named criterion.
2. Revise the draft, strictly following the rubric and the minimal-modification principle. Prefer small adjustments and preserve the original style and voice.
3. For each modified sentence, add a justification object with keys "sentence" (the exact revised sentence, verbatim from your revised text) and "reason" (tying the change to the rubric's language).
4. Return a single JSON object in the <output format example>. Do not include any text outside the JSON."""
    example = {
        "revised_writing": "<the full revised draft>",
        "reason": [{"sentence": "<revised sentence>", "reason": "<why it changed>"}],
    }
    user = "\n\n".join(
        [
            _block("role, task", role),
            _block("core principle: minimal modification", principle),
            _block("draft", writing),
            _block("rubric, current score, target score and rationale", goal),
            _block("instructions", instructions),
            _block("output format example", _json(example)),
        ]
    )
    return PromptBundle(op=OP_HOWTO_WRITING, user=user)


# ---------------------------------------------------------------------------
# Counterfactual comprehensive revision of a rubric
# ---------------------------------------------------------------------------


def howto_rubric_prompt(
    rubric: Rubric, meta_criterion: str, current: int, target: int, rationale: str
) -> PromptBundle:
    role = (
        "You are an expert rubric designer. Comprehensively revise the <user rubric> based on "
        "the meta-level evaluation feedback so it reaches a higher quality standard. You "
        "receive the rubric, its current and target performance on one meta dimension, and the "
        "rationale for the gap. Improve the entire rubric systematically to close that gap."
    )
    feedback = (
        f"Meta dimension: {meta_criterion}\n"
        f"Current score: score_{current}\n"
        f"Target score: score_{target}\n"
        f"Rationale for the gap:\n{rationale}"
    )
    principles = """1. Comprehensive enhancement: address all identified weaknesses across the whole rubric, not just single score levels.
2. Systematic improvement: keep all score levels within each criterion a coherent progression.
3. Scalable design: adapt to however many score levels the rubric has (3 to 6).
4. Quality standards: aim at the target score by closing the specific gaps in the feedback.
5. Consistency: keep language, structure, and expectations consistent across all dimensions and levels."""
    instructions = """1. Study the feedback: what the current score reflects, what the target score requires, and which aspects fall short.
2. Decide which parts of the rubric need revision.
3. Revise descriptor texts across all score levels for clear, logical progressions, distinct criteria, and precise professional language.
4. Preserve the rubric's structure exactly: the same dimension names, the same percentage weightings, the same score level keys (score_1, score_2, ...), and "checked": false on every level.
5. Return the complete revised rubric as a JSON array with exactly the same structure as the <user rubric>."""
    user = "\n\n".join(
        [
            _block("role, task", role),
            _block("user rubric", _json(rubric_to_dict(rubric)["rubric"])),
            _block("meta evaluation feedback", feedback),
            _block("revision principles", principles),
            _block("instructions", instructions),
            _block(
                "output format",
                "A JSON array mirroring the <user rubric>: per criterion an object with "
                "criteria_name, percentage, and criteria (score_N objects carrying text, "
                "checked, reason). Keep every name, percentage, and score key unchanged; "
                "revise only the texts.",
            ),
        ]
    )
    return PromptBundle(op=OP_HOWTO_RUBRIC, user=user)


# ---------------------------------------------------------------------------
# Baseline holistic judges
# ---------------------------------------------------------------------------

_HOLISTIC_OUTPUT = (
    'Return ONLY a JSON object in this exact format:\n'
    '{\n  "score": <whole number from 0-100>,\n  "comment": "<a concise paragraph of 2-3 sentences>"\n}'
)


def holistic_writing_prompt(writing: str) -> PromptBundle:
    role = (
        "You are an expert writing evaluator with extensive experience assessing academic and "
        "professional writing by English-as-a-second-language learners. Provide a comprehensive "
        "yet concise holistic assessment of the given writing using the ESL Composition Profile."
    )
    methodology = """Follow a systematic approach:
1. Content analysis: understand the writing's purpose and substance.
2. Evaluate against the profile's four dimensions: Content, Organization, Vocabulary, Language Use.
3. Mentally rate each dimension on a 4-point scale (4 excellent ... 1 needs improvement).
4. Combine the dimensional ratings into a single holistic 0-100 score, weighing each dimension's importance for this kind of writing.
5. Identify the single greatest strength and the one or two most critical areas to improve; synthesize a 2-3 sentence feedback paragraph that names the relevant dimensions."""
    system = "\n\n".join(
        [
            _block("role, task", role),
            _block("evaluation methodology", methodology),
            _block("output format", _HOLISTIC_OUTPUT),
        ]
    )
    user = "\n\n".join(
        [
            _block("writing", writing),
            "Please evaluate this writing following the systematic methodology described above.",
        ]
    )
    return PromptBundle(op=OP_HOLISTIC_WRITING, user=user, system=system)


def holistic_rubric_prompt(rubric_document: str, task_description: str, meta: Rubric) -> PromptBundle:
    role = (
        "You are an expert in rubric design and assessment. Provide a comprehensive holistic "
        "assessment of the given rubric against the established meta-level standards below."
    )
    standards = "\n".join(
        f"{i}. {c.name} ({c.weight}%): "
        + " ".join(
            f"Score {n} ({c.level(n).text})" for n in range(c.scale, 0, -1)
        )
        for i, c in enumerate(meta.criteria, start=1)
    )
    methodology = """Follow a systematic approach:
1. Analyze the rubric's dimensions, scoring scale, descriptor texts, and weighting.
2. Assess it against each meta dimension listed in <meta standards>.
3. Mentally rate each meta dimension on a 4-point scale (4 excellent ... 1 needs improvement).
4. Combine the ratings into a single holistic 0-100 score, weighing each meta dimension's importance for rubric effectiveness.
5. Identify the single greatest strength and the one or two most critical areas to improve; synthesize a 2-3 sentence feedback paragraph that names the relevant meta dimensions."""
    system = "\n\n".join(
        [
            _block("role, task", role),
            _block("evaluation methodology", methodology),
            _block("meta standards", standards),
            _block("output format", _HOLISTIC_OUTPUT),
        ]
    )
    user = "\n\n".join(
        [
            _block("task description", task_description),
            _block("rubric to evaluate", rubric_document),
            "Please evaluate this rubric following the systematic methodology described above.",
        ]
    )
    return PromptBundle(op=OP_HOLISTIC_RUBRIC, user=user, system=system)


# ---------------------------------------------------------------------------
# Baseline instruction-based revision
# ---------------------------------------------------------------------------


def instruct_revision_prompt(artifact: str, instruction: str) -> PromptBundle:
    role = (
        "You are an expert assistant. Revise the <artifact> according to the <instruction>, "
        "making precise modifications that fulfill the request while preserving the artifact's "
        "overall quality and style."
    )
    instructions = """1. Analyze the <instruction> to understand exactly what modifications are requested.
2. Revise the <artifact>, keeping its structure and flow, preserving style and meaning unless asked otherwise, staying grammatical, and making ONLY the changes the request needs.
3. Return the revised artifact as a JSON object: {"revised": "<the full revised artifact>"}. No other text."""
    user = "\n\n".join(
        [
            _block("role, task", role),
            _block("artifact", artifact),
            _block("instruction", instruction),
            _block("instructions", instructions),
            _block("output format", '{"revised": "<the full revised artifact>"}'),
        ]
    )
    return PromptBundle(op=OP_INSTRUCT_REVISION, user=user)


# ---------------------------------------------------------------------------
# Rubric design assists
# ---------------------------------------------------------------------------


def recommend_criterion_prompt(
    task_description: str, existing: Sequence[str], scale: int
) -> PromptBundle:
    role = (
        "You are a knowledgeable, professional tutor who is proficient at writing criteria for "
        "rubrics for writing tasks."
    )
    task = (
        f"Create one criterion for a rubric for this writing task: {task_description}. "
        f"The rubric has {scale} score levels, from {_score_range(scale)}. Higher scores "
        "reflect stricter requirements and better performance."
    )
    existing_names = ", ".join(existing) if existing else "(none yet)"
    instructions = f"""[Step 1] Understand the writing task. The rubric already has these dimensions: {existing_names}. The criterion you create must be different from all of them.
[Step 2] Write the criterion: a name plus a description for every score level.
[Step 2.1] The name is a single word or short phrase.
[Step 2.2] Each level description is one concise, clear string.
[Step 3] Return a JSON object containing the criterion."""
    example = {
        "name": "<criterion name>",
        "criteria": {f"score_{n}": {"text": "<description>"} for n in range(scale, 0, -1)},
    }
    user = "\n\n".join(
        [
            _block("role", role),
            _block("task", task),
            _block("instructions", instructions),
            _block("output format", _json(example)),
        ]
    )
    return PromptBundle(op=OP_RECOMMEND_CRITERION, user=user)


_REFINE_KIND_NOTE = """Note: the operation can be one of:
- 'Generate': create the descriptions from scratch.
- 'Improve': enhance clarity, detail, and overall quality.
- 'Shorten': make the descriptions more concise while retaining meaning.
- 'Elaborate': add more detail and depth.
- 'Bullet-point': format each description as a single string of bullet points separated by line breaks (e.g., '• First point\\n• Second point').
- 'Retry': rewrite using a different approach."""


def refine_criterion_prompt(
    criterion: Criterion, kind: str, task_description: str, scale: int
) -> PromptBundle:
    role = (
        "You are a knowledgeable, professional tutor who is proficient at building and "
        "improving criteria for rubrics for writing tasks."
    )
    task = (
        f"Given the possibly incomplete criterion in <criterion>, {kind} this criterion across "
        f"all score levels for the {criterion.name} dimension of a rubric for the writing "
        f"task: {task_description}. The criterion has {scale} score levels, from "
        f"{_score_range(scale)}. Higher scores reflect stricter requirements and better "
        "performance. Answer in the shape of <output format>."
    )
    instructions = f"""[Step 1] Understand the {criterion.name} dimension and the current <criterion> content.
[Step 2] {kind} the {criterion.name} descriptions for every level from 'score_{scale}' to 'score_1', keeping a consistent, logical progression where higher scores mean better quality.
[Step 3] Return only a JSON object with the updated texts for all score levels, no extra text, preserving the original text's case.

{_REFINE_KIND_NOTE}"""
    cells = {
        f"score_{n}": {"text": criterion.level(n).text, "checked": False}
        for n in range(scale, 0, -1)
    }
    example = {f"score_{n}": {"text": "<description>", "checked": False} for n in range(scale, 0, -1)}
    user = "\n\n".join(
        [
            _block("role", role),
            _block("task", task),
            _block("criterion", _json(cells)),
            _block("instructions", instructions),
            _block("output format", _json(example)),
        ]
    )
    return PromptBundle(op=OP_REFINE_CRITERION, user=user)


def refine_descriptor_prompt(criterion: Criterion, level: int, kind: str) -> PromptBundle:
    scale = criterion.scale
    role = (
        f"You are a knowledgeable, professional rubric writing tutor; you need to {kind} the "
        "description of one score level of a criterion."
    )
    task = (
        f"You are tasked with applying '{kind}' to the description of the criterion called "
        f"{criterion.name}. The description to revise is the text field of the score_{level} "
        f"object shown in <criterion>. The criterion has {scale} score levels, from "
        f"{_score_range(scale)}; higher scores reflect stricter requirements and better "
        "performance. Other score levels may be empty or filled in; leave them alone."
    )
    instructions = f"""[Step 1] Understand the {criterion.name} dimension and the current <criterion> content.
[Step 2] {kind} only the score_{level} description, keeping it consistent with the progression of the other levels.
[Step 3] Return only a JSON object holding the single updated level, no extra text, preserving the original text's case.

{_REFINE_KIND_NOTE}"""
    cells = {
        f"score_{n}": {"text": criterion.level(n).text, "checked": False}
        for n in range(scale, 0, -1)
    }
    example = {f"score_{level}": {"text": "<revised description>", "checked": False}}
    user = "\n\n".join(
        [
            _block("role", role),
            _block("task", task),
            _block("criterion", _json(cells)),
            _block("instructions", instructions),
            _block("output format", _json(example)),
        ]
    )
    return PromptBundle(op=OP_REFINE_DESCRIPTOR, user=user)


def enhance_description_prompt(raw: str) -> PromptBundle:
    role = (
        "You are a professional rubric writing tutor, skilled at analyzing and concisely "
        "elaborating writing task descriptions for rubric creation."
    )
    task = (
        "Elaborate the writing task in <user input> into a concise, structured description "
        "with newline-separated bullet points organized by thematic sections, preserving the "
        "original intent."
    )
    instructions = """1. Analyze the task: identify the task type (essay, report, ...), purpose (persuade, inform, ...), and any missing details (audience, scope); fill gaps with minimal, reasonable assumptions.
2. Elaborate concisely, one short sentence per section (max 20 words each), separated by newlines:
   - Task Objective: the main goal in one sentence.
   - Topic (only if the task names one): the main topic in one sentence.
   - Context: the task's setting or purpose in one sentence.
   - Requirements: length or format requirements (e.g., 100 words).
3. Return a JSON object with the elaborated description as one string in the "task" field, using the section labels above. No text outside the JSON."""
    user = "\n\n".join(
        [
            _block("role", role),
            _block("task", task),
            _block("user input", raw),
            _block("instructions", instructions),
            _block("output format", '{"task": "<elaborated description as a single string with line breaks>"}'),
        ]
    )
    return PromptBundle(op=OP_ENHANCE_DESCRIPTION, user=user)
