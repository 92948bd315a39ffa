"""Rubric-based LLM judging with explained scores, reviewable counterfactual
revisions, recursive rubric qualification, and reliability metrics."""

from .builtin_rubrics import builtin_esl_rubric, builtin_meta_rubric
from .core import (
    Criterion,
    CriterionEvaluation,
    Evaluation,
    LevelDescriptor,
    Rubric,
    Violation,
    evaluated_rubric,
    overall_score,
    parse_rubric,
    render_score,
    rubric_hash,
    score_band,
    serialize_rubric,
    text_hash,
    validate_rubric,
)
from .evaluator import (
    HolisticResult,
    RepeatedEvaluation,
    evaluate,
    evaluate_criterion,
    evaluate_repeated,
    holistic_evaluate_rubric,
    holistic_evaluate_writing,
)
from .feedback import (
    ChangeCard,
    ChangeSet,
    RevisionGoal,
    RevisionSuggestion,
    apply_changes,
    extract_changes,
    howto_writing,
    instruct_revision,
    why,
    why_not,
)
from .judge import (
    HttpBackend,
    JudgeClient,
    JudgeConfig,
    ScriptedBackend,
    client_from_env,
    default_config,
    prompt_hash,
    scripted_client,
)
from .metrics import (
    RatingMatrix,
    ReliabilityReport,
    average_runs_then_bin,
    krippendorff_alpha,
    qwk,
    rating_matrix,
    rating_matrix_from_csv,
    within_item_sd,
)
from .studio import (
    RefineKind,
    RubricRevisionGoal,
    enhance_task_description,
    howto_rubric,
    qualify_rubric,
    recommend_criterion,
    refine_criterion,
    refine_descriptor,
)

__version__ = "0.1.0"

__all__ = [
    "builtin_esl_rubric",
    "builtin_meta_rubric",
    "Criterion",
    "CriterionEvaluation",
    "Evaluation",
    "LevelDescriptor",
    "Rubric",
    "Violation",
    "evaluated_rubric",
    "overall_score",
    "parse_rubric",
    "render_score",
    "rubric_hash",
    "score_band",
    "serialize_rubric",
    "text_hash",
    "validate_rubric",
    "HolisticResult",
    "RepeatedEvaluation",
    "evaluate",
    "evaluate_criterion",
    "evaluate_repeated",
    "holistic_evaluate_rubric",
    "holistic_evaluate_writing",
    "ChangeCard",
    "ChangeSet",
    "RevisionGoal",
    "RevisionSuggestion",
    "apply_changes",
    "extract_changes",
    "howto_writing",
    "instruct_revision",
    "why",
    "why_not",
    "HttpBackend",
    "JudgeClient",
    "JudgeConfig",
    "ScriptedBackend",
    "client_from_env",
    "default_config",
    "prompt_hash",
    "scripted_client",
    "RatingMatrix",
    "ReliabilityReport",
    "average_runs_then_bin",
    "krippendorff_alpha",
    "qwk",
    "rating_matrix",
    "rating_matrix_from_csv",
    "within_item_sd",
    "RefineKind",
    "RubricRevisionGoal",
    "enhance_task_description",
    "howto_rubric",
    "qualify_rubric",
    "recommend_criterion",
    "refine_criterion",
    "refine_descriptor",
]
