"""Exception hierarchy shared by every fedbench module.

Every error a caller is expected to handle gets its own class; anything
raised for a plain bad argument stays a ValueError.
"""

from __future__ import annotations


class FedError(Exception):
    """Base class for all toolkit errors."""


# --- manifest / record errors -------------------------------------------------

class MissingFile(FedError):
    pass


class WriteFailure(FedError):
    pass


class MalformedRecord(FedError):
    def __init__(self, line_number: int, reason: str):
        super().__init__(f"line {line_number}: {reason}")
        self.line_number = line_number
        self.reason = reason


class InvariantViolation(FedError):
    def __init__(self, record_id: str, reason: str):
        super().__init__(f"{record_id}: {reason}")
        self.record_id = record_id
        self.reason = reason


class SameEmotion(FedError):
    pass


class MissingImage(FedError):
    pass


# --- backend errors -----------------------------------------------------------

class NoFaceFound(FedError):
    pass


class BackendUnavailable(FedError):
    pass


class ShapeMismatch(FedError):
    pass


class JudgeParseFailure(FedError):
    pass


class ClassifierParseFailure(FedError):
    pass


class EditorFailure(FedError):
    pass


class CacheCorruption(FedError):
    pass


# --- metric errors ------------------------------------------------------------

class EmptyBackground(FedError):
    pass


class DegenerateGroundTruth(FedError):
    pass


# --- pipeline errors ----------------------------------------------------------

class MixedGranularity(FedError):
    pass


class EmptyGroup(FedError):
    pass


# --- human study errors -------------------------------------------------------

class InsufficientResults(FedError):
    pass


class WrongVoteCount(FedError):
    pass


class DuplicateAnnotator(FedError):
    pass


class NonFiniteValue(FedError):
    pass


class MissingConsensus(FedError):
    pass


class UnknownVariant(FedError):
    pass


# --- annotation service errors ------------------------------------------------

class UnknownAnnotator(FedError):
    pass


class DuplicateVote(FedError):
    pass


class TaskClosed(FedError):
    pass


class PendingTasks(FedError):
    pass


class UnknownTask(FedError):
    pass


# --- configuration / CLI errors -----------------------------------------------

class ConfigError(FedError):
    pass


class WorkflowError(FedError):
    pass
