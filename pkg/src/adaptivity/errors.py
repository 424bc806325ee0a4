"""Typed domain errors.

Every error carries a stable ``code`` (its class name) so the service and
the CLI can report it without string matching.
"""


class AdaptivityError(Exception):
    """Base class for all domain errors raised by the engine."""

    @property
    def code(self) -> str:
        return type(self).__name__


class MalformedDocument(AdaptivityError):
    pass


class DuplicateFeatureId(AdaptivityError):
    pass


class UnknownFeatureInEdge(AdaptivityError):
    pass


class CycleDetected(AdaptivityError):
    def __init__(self, cycle):
        self.cycle = list(cycle)
        super().__init__("cycle: " + " -> ".join(self.cycle))


class UnknownFeature(AdaptivityError):
    pass


class UnknownGraph(AdaptivityError):
    pass


class UnknownStudent(AdaptivityError):
    pass


class InvalidAgeLevel(AdaptivityError):
    pass


class DuplicateModel(AdaptivityError):
    pass


class UnknownFeatureReference(AdaptivityError):
    def __init__(self, entry_id: str, feature_id: str):
        self.entry_id = entry_id
        self.feature_id = feature_id
        super().__init__(f"entry {entry_id!r} references unknown feature {feature_id!r}")


class DuplicateEntryId(AdaptivityError):
    pass


class EmptySession(AdaptivityError):
    pass


class FeatureNotOpen(AdaptivityError):
    pass


class NoPlayableFeature(AdaptivityError):
    pass


class NoContentForFeature(AdaptivityError):
    pass


class InvalidConfig(AdaptivityError):
    pass


class InvalidShapeParameters(AdaptivityError):
    pass


class FixtureError(AdaptivityError):
    pass


class CorruptLog(AdaptivityError):
    def __init__(self, line_no: int, reason: str):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {reason}")
