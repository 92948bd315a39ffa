"""Interactive feedback over evaluations: Why / Why-Not lookup, counterfactual
revision of writing, change extraction into accept/reject cards, change
application, and the baseline free-instruction revision.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from difflib import SequenceMatcher
from typing import Any, Mapping, Sequence

from . import prompts
from .core import Evaluation, Rubric, Violation, text_hash, validate_rubric
from .errors import (
    IsCheckedError,
    LevelRangeError,
    NameNotFoundError,
    NotEvaluatedError,
    PreconditionError,
    StaleChangesetError,
    SuggestionIncoherentError,
    StructuredOutputError,
)
from .judge import JudgeClient, JudgeConfig, default_config

UNEXPLAINED = "(unexplained edit)"
USER_INSTRUCTION_RATIONALE = "(user instruction)"
DEFAULT_MERGE_GAP = 2


# ---------------------------------------------------------------------------
# Why / Why-Not lookups (pure; no judge calls)
# ---------------------------------------------------------------------------


def _reasons_for(source: Evaluation | Rubric, criterion_name: str) -> tuple[int, tuple[str, ...]]:
    """(checked level, reasons per level) for a criterion of an evaluation or
    an evaluated rubric snapshot."""
    if isinstance(source, Evaluation):
        for c in source.criteria:
            if c.name == criterion_name:
                return c.selected, c.reasons
        raise NameNotFoundError(f"criterion {criterion_name!r} not found")
    for c in source.criteria:
        if c.name == criterion_name:
            checked = c.checked_level()
            if checked is None:
                raise NotEvaluatedError(f"criterion {criterion_name!r} has not been evaluated")
            return checked, tuple(d.reason for d in c.levels)
    raise NameNotFoundError(f"criterion {criterion_name!r} not found")


def why(source: Evaluation | Rubric, criterion_name: str) -> str:
    """Reason text of the checked level."""
    checked, reasons = _reasons_for(source, criterion_name)
    return reasons[checked - 1]


def why_not(source: Evaluation | Rubric, criterion_name: str, level: int) -> str:
    """Reason text of an unchecked level."""
    checked, reasons = _reasons_for(source, criterion_name)
    if not 1 <= level <= len(reasons):
        raise LevelRangeError(f"level {level} out of range 1..{len(reasons)}")
    if level == checked:
        raise IsCheckedError(
            f"level {level} is the checked level of {criterion_name!r}; ask why instead"
        )
    return reasons[level - 1]


# ---------------------------------------------------------------------------
# Revision goals and suggestions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RevisionGoal:
    """Move one criterion from its current level to a target level."""

    criterion: str
    current: int
    target: int
    rationale: str = ""

    def __post_init__(self):
        if self.target == self.current:
            raise PreconditionError("target level must differ from current level")


def validate_goal(goal: RevisionGoal, rubric: Rubric) -> None:
    names = rubric.criterion_names()
    if goal.criterion not in names:
        raise NameNotFoundError(f"criterion {goal.criterion!r} not in rubric")
    for label, level in (("current", goal.current), ("target", goal.target)):
        if not 1 <= level <= rubric.scale:
            raise LevelRangeError(f"{label} level {level} out of range 1..{rubric.scale}")


@dataclass(frozen=True)
class RevisionSuggestion:
    revised_text: str
    rationales: tuple[tuple[str, str], ...]
    criterion: str = ""
    current: int = 0
    target: int = 0
    transcript_ids: tuple[int, ...] = ()


def suggestion_validator(parsed: Any) -> list[Violation]:
    """{"revised_writing": str, "reason": [{"sentence","reason"}...]} with every
    cited sentence verbatim in the revised text."""
    if not isinstance(parsed, Mapping):
        return [Violation("PARSE_ERROR", "response is not a JSON object")]
    problems: list[Violation] = []
    revised = parsed.get("revised_writing")
    if not isinstance(revised, str) or not revised.strip():
        problems.append(
            Violation("EMPTY_REVISION", "revised_writing must be a non-empty string")
        )
        return problems
    rationale = parsed.get("reason", [])
    if not isinstance(rationale, list):
        return problems + [Violation("BAD_RATIONALE", "reason must be a list")]
    for i, item in enumerate(rationale):
        if (
            not isinstance(item, Mapping)
            or not isinstance(item.get("sentence"), str)
            or not isinstance(item.get("reason"), str)
        ):
            problems.append(
                Violation("BAD_RATIONALE", f"reason[{i}] must carry sentence and reason strings")
            )
            continue
        if item["sentence"] not in revised:
            problems.append(
                Violation(
                    "SUGGESTION_INCOHERENT",
                    f"reason[{i}].sentence does not occur verbatim in revised_writing",
                )
            )
    return problems


def howto_writing(
    client: JudgeClient,
    writing: str,
    rubric: Rubric,
    goal: RevisionGoal,
    config: JudgeConfig | None = None,
) -> RevisionSuggestion:
    """Counterfactual revision moving one criterion to the goal's target level.

    The target may be lower than the current level; minimal modification is
    instructed either way.
    """
    if not writing.strip():
        raise PreconditionError("writing must be non-empty")
    validate_goal(goal, rubric)
    config = config or default_config(prompts.OP_HOWTO_WRITING)
    bundle = prompts.howto_writing_prompt(
        writing, rubric, goal.criterion, goal.current, goal.target, goal.rationale
    )
    try:
        parsed, entries = client.complete_structured(
            bundle.user, config, suggestion_validator, op=bundle.op, system=bundle.system
        )
    except StructuredOutputError as exc:
        if any(code == "SUGGESTION_INCOHERENT" for code in exc.last_codes):
            raise SuggestionIncoherentError(str(exc)) from exc
        raise
    return RevisionSuggestion(
        revised_text=parsed["revised_writing"],
        rationales=tuple((r["sentence"], r["reason"]) for r in parsed.get("reason", [])),
        criterion=goal.criterion,
        current=goal.current,
        target=goal.target,
        transcript_ids=tuple(e.id for e in entries),
    )


# ---------------------------------------------------------------------------
# Change tracking
# ---------------------------------------------------------------------------

PENDING = "pending"
ACCEPTED = "accepted"
REJECTED = "rejected"


@dataclass
class ChangeCard:
    """One reviewable edit: replace base[offset:offset+length] with ``replacement``."""

    offset: int
    length: int
    replacement: str
    rationale: str = UNEXPLAINED
    status: str = PENDING


@dataclass(frozen=True)
class ChangeSet:
    base_hash: str
    cards: tuple[ChangeCard, ...]

    def __post_init__(self):
        prev_end = 0
        for i, card in enumerate(self.cards):
            if card.offset < 0 or card.length < 0:
                raise PreconditionError(f"card {i} has a negative span")
            if i and card.offset < prev_end:
                raise PreconditionError(f"card {i} overlaps card {i - 1}")
            prev_end = card.offset + card.length

    def with_all(self, status: str) -> "ChangeSet":
        return ChangeSet(
            base_hash=self.base_hash,
            cards=tuple(
                ChangeCard(c.offset, c.length, c.replacement, c.rationale, status)
                for c in self.cards
            ),
        )


_TOKEN = re.compile(r"\s+|\S+")


def _tokenize(text: str) -> tuple[list[str], list[int]]:
    """Tokens covering the whole text plus each token's start offset."""
    tokens: list[str] = []
    offsets: list[int] = []
    for m in _TOKEN.finditer(text):
        tokens.append(m.group(0))
        offsets.append(m.start())
    offsets.append(len(text))
    return tokens, offsets


def _word_count(tokens: Sequence[str]) -> int:
    return sum(1 for t in tokens if t.strip())


def diff_changes(
    base: str,
    revised: str,
    rationales: Sequence[tuple[str, str]] = (),
    merge_gap: int = DEFAULT_MERGE_GAP,
) -> ChangeSet:
    """Word-level minimal diff turned into non-overlapping change cards.

    Edits separated by at most ``merge_gap`` unchanged words collapse into one
    card. Replacement text is cut from ``revised`` by character range, so
    applying every card reproduces ``revised`` byte-exactly.
    """
    a_tokens, a_offsets = _tokenize(base)
    b_tokens, b_offsets = _tokenize(revised)
    matcher = SequenceMatcher(a=a_tokens, b=b_tokens, autojunk=False)
    edits = [
        (a_lo, a_hi, b_lo, b_hi)
        for tag, a_lo, a_hi, b_lo, b_hi in matcher.get_opcodes()
        if tag != "equal"
    ]

    merged: list[list[int]] = []
    for edit in edits:
        if merged:
            prev = merged[-1]
            gap_tokens = a_tokens[prev[1] : edit[0]]
            if _word_count(gap_tokens) <= merge_gap:
                prev[1], prev[3] = edit[1], edit[3]
                continue
        merged.append(list(edit))

    cards = []
    for a_lo, a_hi, b_lo, b_hi in merged:
        start = a_offsets[a_lo]
        end = a_offsets[a_hi]
        replacement = revised[b_offsets[b_lo] : b_offsets[b_hi]]
        rationale = _match_rationale(revised, b_offsets[b_lo], b_offsets[b_hi], rationales)
        cards.append(
            ChangeCard(offset=start, length=end - start, replacement=replacement, rationale=rationale)
        )
    return ChangeSet(base_hash=text_hash(base), cards=tuple(cards))


def _match_rationale(
    revised: str, span_start: int, span_end: int, rationales: Sequence[tuple[str, str]]
) -> str:
    for sentence, reason in rationales:
        at = revised.find(sentence)
        if at == -1:
            continue
        if at < span_end and span_start < at + len(sentence):
            return reason
    return UNEXPLAINED


def extract_changes(
    base: str, suggestion: RevisionSuggestion, merge_gap: int = DEFAULT_MERGE_GAP
) -> ChangeSet:
    """Decompose a revision suggestion into reviewable cards against ``base``."""
    return diff_changes(base, suggestion.revised_text, suggestion.rationales, merge_gap)


def apply_changes(base: str, changeset: ChangeSet) -> str:
    """Splice accepted replacements into the base text; pending counts as rejected."""
    if text_hash(base) != changeset.base_hash:
        raise StaleChangesetError("changeset was built from a different base text")
    pieces: list[str] = []
    cursor = 0
    for card in changeset.cards:
        pieces.append(base[cursor : card.offset])
        if card.status == ACCEPTED:
            pieces.append(card.replacement)
        else:
            pieces.append(base[card.offset : card.offset + card.length])
        cursor = card.offset + card.length
    pieces.append(base[cursor:])
    return "".join(pieces)


# ---------------------------------------------------------------------------
# Baseline instruction revision
# ---------------------------------------------------------------------------


def instruct_revision_validator(parsed: Any) -> list[Violation]:
    if not isinstance(parsed, Mapping):
        return [Violation("PARSE_ERROR", "response is not a JSON object")]
    revised = parsed.get("revised")
    if not isinstance(revised, str):
        return [Violation("EMPTY_REVISION", "revised must be a string")]
    return []


def instruct_revision(
    client: JudgeClient,
    artifact: str,
    instruction: str,
    config: JudgeConfig | None = None,
) -> tuple[str, ChangeSet]:
    """Free-form revision per a user instruction, returned with its change set."""
    if not instruction.strip():
        raise PreconditionError("instruction must be non-empty")
    config = config or default_config(prompts.OP_INSTRUCT_REVISION)
    bundle = prompts.instruct_revision_prompt(artifact, instruction)
    parsed, _ = client.complete_structured(
        bundle.user, config, instruct_revision_validator, op=bundle.op, system=bundle.system
    )
    revised = parsed["revised"]
    changeset = diff_changes(artifact, revised)
    for card in changeset.cards:
        card.rationale = USER_INSTRUCTION_RATIONALE
    return revised, changeset
