"""Exception hierarchy for the clonesift engine.

Every error raised by the library derives from :class:`CloneSiftError`, so the
CLI can catch one type and translate it into an exit code.
"""


class CloneSiftError(Exception):
    """Base class for all clonesift errors."""


# --- corpus ---------------------------------------------------------------

class UnsupportedLanguage(CloneSiftError):
    """Extraction requested for a language the heuristic does not handle."""


class MalformedInput(CloneSiftError):
    """Source text could not be scanned past a structural fault.

    Extraction never raises this directly; it is used as a diagnostic
    category when brace matching fails beyond recovery.
    """


class FormatViolation(CloneSiftError):
    """A persisted file does not conform to its interchange format."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DuplicateId(CloneSiftError):
    """Two function units share an id within one manifest."""


# --- embed ----------------------------------------------------------------

class ZeroVector(CloneSiftError):
    """An embedding came out as the zero vector (e.g. text with no trigrams)."""


class DimensionMismatch(CloneSiftError):
    """A vector's length disagrees with the declared dimension."""


class TransportFailure(CloneSiftError):
    """The remote embedding endpoint stayed unreachable after retries."""


class ServiceError(CloneSiftError):
    """The remote embedding service reported an application-level error."""


# --- search ---------------------------------------------------------------

class TooFewVectors(CloneSiftError):
    """An index needs at least two vectors."""


class UnknownUnit(CloneSiftError):
    """A query referenced a unit id that is not in the index."""


class ModelMismatch(CloneSiftError):
    """Query vectors and index vectors come from different models."""


class ParamsMismatch(CloneSiftError):
    """Two candidate lists are not comparable (different search parameters)."""


# --- fusion ---------------------------------------------------------------

class EmptyList(CloneSiftError):
    """A normalization that needs scores got an empty candidate list."""


class TooFewLists(CloneSiftError):
    """Fusion needs at least two candidate lists."""


# --- evaluation -----------------------------------------------------------

class EmptyGroundTruth(CloneSiftError):
    """Recall is undefined against an empty ground-truth set."""


class UntypedPairs(CloneSiftError):
    """Typed recall requires every ground-truth pair to carry a clone type."""


class EmptyLabels(CloneSiftError):
    """Precision is undefined over an empty judgment list."""


class MissingRank(CloneSiftError):
    """A model is missing a rank for one of the datasets."""


# --- statistics -----------------------------------------------------------

class ZeroVariance(CloneSiftError):
    """A feature column has no spread and cannot be standardized."""


class RankDeficient(CloneSiftError):
    """The regression design matrix is not full rank."""


class TooFewSamples(CloneSiftError):
    """Not enough observations for the requested test."""


class DegenerateSample(CloneSiftError):
    """The sample has no variance, so the test statistic is undefined."""


class TooFewNonzero(CloneSiftError):
    """Too few nonzero differences remain for the signed-rank test."""
