"""The two built-in rubrics: the ESL Composition Profile (four-criterion essay
rubric) and the meta-rubric used to judge rubrics themselves."""

from __future__ import annotations

from .core import Criterion, LevelDescriptor, Rubric


def _criterion(name: str, weight: int, texts_desc: list[str]) -> Criterion:
    # texts_desc runs from the top score down; levels are stored ascending.
    return Criterion(
        name=name,
        weight=weight,
        levels=tuple(LevelDescriptor(text=t) for t in reversed(texts_desc)),
    )


def builtin_esl_rubric() -> Rubric:
    """Four-criterion ESL essay rubric on a 1..4 scale (Mechanics excluded)."""
    return Rubric(
        name="ESL Composition Profile",
        task_description=(
            "Assess an essay written by an English-as-a-second-language student "
            "for overall writing quality."
        ),
        scale=4,
        criteria=(
            _criterion(
                "Content",
                30,
                [
                    "knowledgeable; substantive; thorough development of thesis; "
                    "relevant to assigned topic",
                    "some knowledge of subject; adequate range; limited development of "
                    "thesis; mostly relevant to topic but lacks details",
                    "limited knowledge of subject; little substance; inadequate "
                    "development of topic",
                    "does not show knowledge of subject; nonsubstantive; not pertinent; "
                    "or not enough to be evaluated",
                ],
            ),
            _criterion(
                "Organization",
                20,
                [
                    "fluent expression; ideas clearly stated/supported; succinct; "
                    "well-organized; logical sequencing; cohesive",
                    "somewhat choppy; loosely organized but main ideas stand out; "
                    "limited support; logical but incomplete sequencing",
                    "non-fluent; ideas confused or disconnected; lacks logical "
                    "sequencing and development",
                    "does not communicate; no organization; or not enough to be evaluated",
                ],
            ),
            _criterion(
                "Vocabulary",
                20,
                [
                    "sophisticated range; effective word/idiom choice and usage; "
                    "word form mastery; appropriate register",
                    "adequate range; occasional errors of word/idiom form, choice, or "
                    "usage but meaning not obscured",
                    "limited range; frequent errors of word/idiom form, choice, or "
                    "usage; meaning confused or obscured",
                    "essentially translation; little knowledge of English vocabulary, "
                    "idioms, or word forms; or not enough to be evaluated",
                ],
            ),
            _criterion(
                "Language Use",
                30,
                [
                    "effective complex constructions; few errors of agreement, tense, "
                    "number, word order/function, articles, pronouns, or prepositions",
                    "effective but simple constructions; minor problems in complex "
                    "constructions; several errors of agreement, tense, number, word "
                    "order/function, articles, pronouns, or prepositions but meaning "
                    "seldom obscured",
                    "major problems in simple or complex constructions; frequent errors "
                    "of negation, agreement, tense, number, word order/function, "
                    "articles, pronouns, or prepositions and/or fragments, run-ons, "
                    "deletions; meaning confused or obscured",
                    "virtually no mastery of sentence construction rules; dominated by "
                    "errors; does not communicate; or not enough to be evaluated",
                ],
            ),
        ),
    )


def builtin_meta_rubric() -> Rubric:
    """The rubric applied to rubrics: alignment, level distinction, language."""
    return Rubric(
        name="Rubric of Rubrics",
        task_description=(
            "Assess the quality of an evaluation rubric: whether its criteria, "
            "level progression, and descriptor language support consistent, "
            "evidence-based scoring of the intended task."
        ),
        scale=4,
        criteria=(
            _criterion(
                "Criteria Alignment",
                30,
                [
                    "All criteria measure essential learning outcomes. Each is defined "
                    "so precisely that a single piece of evidence can only be scored "
                    "under one criterion.",
                    "Most criteria measure essential learning outcomes. Criteria are "
                    "defined clearly enough that evidence largely fits under a single "
                    "criterion, with minimal ambiguity.",
                    "Some criteria measure essential learning outcomes. Definitions are "
                    "general, causing evidence to frequently fit under multiple criteria.",
                    "Few or no criteria measure essential learning outcomes. Definitions "
                    "are vague, causing criteria to be redundant and overlapping.",
                ],
            ),
            _criterion(
                "Level Distinction",
                40,
                [
                    "The scale creates a clear, logical progression of quality. All "
                    "levels are defined with enough detail to be clearly distinguished "
                    "from their neighbors.",
                    "The scale shows a logical progression of quality. Most levels are "
                    "clearly distinguished from their neighbors, though some may require "
                    "minor interpretation.",
                    "The progression of quality is sometimes illogical or unclear. It is "
                    "difficult to distinguish between some adjacent levels.",
                    "The progression is illogical or arbitrary. Levels are not distinct, "
                    "making differentiation of performance impossible.",
                ],
            ),
            _criterion(
                "Descriptive Language",
                30,
                [
                    "Language describes precise, specific, observable evidence. All "
                    "descriptions for a criterion follow a parallel grammatical "
                    "structure across levels.",
                    "Language is mostly descriptive and objective, but may include some "
                    "minor, undefined subjective terms. Most descriptions follow a "
                    "parallel structure.",
                    "Language mixes descriptive and subjective/evaluative terms, "
                    "providing limited observable evidence. Parallel structure is "
                    "inconsistent.",
                    "Language is primarily subjective and evaluative, offering no "
                    "observable evidence. There is no parallel structure.",
                ],
            ),
        ),
    )
