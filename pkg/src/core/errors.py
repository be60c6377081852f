"""
Errors: the exception hierarchy shared by every wreathcat module.

Each error carries a short machine-readable ``code`` and the exit code the
command line reports for it.
"""


class WreathcatError(Exception):
    """Base exception for all expected failures."""
    exit_code = 1

    def __init__(self, message, code=""):
        super().__init__(message)
        self.message = message
        self.code = code or type(self).__name__

    def to_document(self) -> dict:
        return {"error": self.code, "message": self.message}


class InputError(WreathcatError):
    """Malformed or out-of-range input."""
    exit_code = 2


class ParseError(InputError):
    """A file, flag or text form could not be parsed."""


class SizeLimitError(InputError):
    """An enumeration would exceed the configured point limit."""


class ArityError(InputError):
    """Rows or tensor powers do not match."""


class FaithfulnessError(InputError):
    """A state weight is not strictly positive."""


class StateError(InputError):
    """The weights do not sum to one and normalization was not requested."""


class UnknownLabelError(InputError):
    """A label is not an irreducible of the ring."""


class UnknownRingError(InputError):
    """No built-in ring has the requested name."""


class RingDataError(InputError):
    """A user-supplied ring is missing data for a requested product."""


class HypothesisViolation(WreathcatError):
    """A theorem-based computation was asked for outside its hypotheses."""
    exit_code = 3

    def __init__(self, hypothesis, message=""):
        super().__init__(message or f"hypothesis violated: {hypothesis}", code="hypothesis")
        self.hypothesis = hypothesis

    def to_document(self) -> dict:
        doc = super().to_document()
        doc["hypothesis"] = self.hypothesis
        return doc


class NormalityError(HypothesisViolation):
    """Spectral projections were requested for a non-normal d."""

    def __init__(self, message="d is not normal"):
        super().__init__("d normal", message)


class OracleDivergence(WreathcatError):
    """The partition count and the fusion-rule count of a Hom space disagree."""
    exit_code = 4

    def __init__(self, message, partitions=None, fusion=None):
        super().__init__(message, code="oracle-divergence")
        self.partitions = partitions
        self.fusion = fusion


class ToleranceBreach(WreathcatError):
    """A numerical identity exceeded the configured tolerance."""
    exit_code = 5

    def __init__(self, message, deviation=None):
        super().__init__(message, code="tolerance")
        self.deviation = deviation
