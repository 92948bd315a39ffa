"""Exception types shared across the engine.

Every error carries a stable machine-readable ``code`` so callers (CLI,
HTTP layer, tests) can branch without parsing messages.
"""

from __future__ import annotations


class EngineError(Exception):
    """Base class for all engine errors."""

    code = "ENGINE_ERROR"

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.details = details


class PreconditionError(EngineError):
    """An operation was called with inputs that violate its contract."""

    code = "PRECONDITION"


class ScoringError(EngineError):
    """Invalid inputs to the score aggregation formula."""

    code = "SCORING"


class RubricParseError(EngineError):
    """Interchange document could not be turned into a rubric."""

    code = "PARSE"

    def __init__(self, message: str, path: str = "$"):
        super().__init__(f"{message} (at {path})")
        self.path = path


class NameNotFoundError(EngineError):
    code = "NAME_NOT_FOUND"


class NotEvaluatedError(EngineError):
    code = "NOT_EVALUATED"


class IsCheckedError(EngineError):
    code = "IS_CHECKED"


class LevelRangeError(EngineError):
    code = "LEVEL_RANGE"


class TransportError(EngineError):
    """Network failure or timeout while talking to the judge backend."""

    code = "TRANSPORT"


class ProviderError(EngineError):
    """The judge backend answered with an error status."""

    code = "PROVIDER"

    def __init__(self, message: str, status: int, payload: str = ""):
        super().__init__(message, status=status)
        self.status = status
        self.payload = payload


class ScriptMissError(EngineError):
    """The scripted judge has no entry for this (operation, prompt hash)."""

    code = "SCRIPT_MISS"


class StructuredOutputError(EngineError):
    """All attempts at obtaining a valid structured response failed.

    ``attempts`` holds one (raw_text, problems) record per attempt; the
    problems of the final attempt determine the dominant error codes.
    """

    code = "STRUCTURED_OUTPUT"

    def __init__(self, message: str, attempts):
        super().__init__(message)
        self.attempts = list(attempts)

    @property
    def last_problems(self):
        return self.attempts[-1][1] if self.attempts else []

    @property
    def last_codes(self):
        return [p.code for p in self.last_problems]


class EvaluationError(EngineError):
    """A criterion evaluation failed after retries."""

    code = "EVALUATION"

    def __init__(self, message: str, criterion: str, cause: Exception | None = None):
        super().__init__(message, criterion=criterion)
        self.criterion = criterion
        self.cause = cause


class SuggestionIncoherentError(EngineError):
    """A revision suggestion cited sentences absent from its revised text."""

    code = "SUGGESTION_INCOHERENT"


class StaleChangesetError(EngineError):
    """The changeset was built from a different base text."""

    code = "STALE_CHANGESET"


class DuplicateCriterionError(EngineError):
    code = "DUPLICATE_CRITERION"


class StructureDriftError(EngineError):
    """A whole-rubric revision changed names, weights, or score keys."""

    code = "STRUCTURE_DRIFT"


class DegenerateAgreementError(EngineError):
    """Agreement is undefined: expected disagreement is zero."""

    code = "DEGENERATE_AGREEMENT"


class NotFoundError(EngineError):
    code = "NOT_FOUND"


class IntegrityError(EngineError):
    """Stored document content does not match its recorded hash."""

    code = "INTEGRITY"


class ConflictError(EngineError):
    """A session mutation raced another writer."""

    code = "CONFLICT"
