"""Human-task and vote records shared by the pipeline, the annotation
service, and the study analysis."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import InvariantViolation
from .records import (
    SCHEMA_VERSION,
    EmotionLabel,
    ImageRef,
    register_kind,
)

VERIFICATION = "verification"
PAIRWISE = "pairwise"

VERIFICATION_CHOICES = ("candidate_1", "candidate_2", "reject_both")
PAIRWISE_CHOICES = ("left", "right")

VOTES_PER_TASK = 3


def _require(condition: bool, record_id: str, reason: str) -> None:
    if not condition:
        raise InvariantViolation(record_id, reason)


@dataclass(frozen=True)
class VerificationTask:
    """Ask three reviewers which retained candidate (if any) becomes the
    ground truth for one (source, target emotion) pair."""

    task_id: str
    source_id: str
    source: ImageRef
    src_emotion: EmotionLabel
    trg_emotion: EmotionLabel
    candidates: tuple[ImageRef, ...]
    reference_caption: str

    def validate(self) -> None:
        _require(bool(self.task_id), "<task>", "task_id is empty")
        _require(bool(self.source_id), self.task_id, "source_id is empty")
        self.source.validate()
        _require(
            1 <= len(self.candidates) <= 2,
            self.task_id,
            f"task must carry 1-2 candidates, has {len(self.candidates)}",
        )
        for candidate in self.candidates:
            candidate.validate()
        _require(
            self.src_emotion != self.trg_emotion,
            self.task_id,
            "src_emotion equals trg_emotion",
        )
        _require(bool(self.reference_caption.strip()), self.task_id, "caption is empty")

    def to_record(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "task_id": self.task_id,
            "source_id": self.source_id,
            "source": self.source.to_record(),
            "src_emotion": self.src_emotion.value,
            "trg_emotion": self.trg_emotion.value,
            "candidates": [c.to_record() for c in self.candidates],
            "reference_caption": self.reference_caption,
        }

    @classmethod
    def from_record(cls, obj: dict) -> "VerificationTask":
        return cls(
            task_id=str(obj["task_id"]),
            source_id=str(obj["source_id"]),
            source=ImageRef.from_record(obj["source"]),
            src_emotion=EmotionLabel.parse(obj["src_emotion"]),
            trg_emotion=EmotionLabel.parse(obj["trg_emotion"]),
            candidates=tuple(ImageRef.from_record(c) for c in obj["candidates"]),
            reference_caption=str(obj["reference_caption"]),
        )


@dataclass(frozen=True)
class VoteRecord:
    """One annotator decision on one task; the vote log is append-only."""

    task_id: str
    annotator_id: str
    kind: str  # verification | pairwise
    choice: str
    perspective: str | None
    timestamp: str

    def validate(self) -> None:
        _require(bool(self.task_id), "<vote>", "task_id is empty")
        _require(bool(self.annotator_id), self.task_id, "annotator_id is empty")
        if self.kind == VERIFICATION:
            _require(
                self.choice in VERIFICATION_CHOICES,
                self.task_id,
                f"verification choice must be one of {VERIFICATION_CHOICES}",
            )
            _require(self.perspective is None, self.task_id,
                     "verification votes carry no perspective")
        elif self.kind == PAIRWISE:
            _require(
                self.choice in PAIRWISE_CHOICES,
                self.task_id,
                f"pairwise choice must be one of {PAIRWISE_CHOICES} (forced choice)",
            )
            _require(bool(self.perspective), self.task_id, "pairwise votes need a perspective")
        else:
            raise InvariantViolation(self.task_id, f"unknown task kind {self.kind!r}")
        _require(bool(self.timestamp), self.task_id, "timestamp is empty")

    def to_record(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "task_id": self.task_id,
            "annotator_id": self.annotator_id,
            "kind": self.kind,
            "choice": self.choice,
            "perspective": self.perspective,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_record(cls, obj: dict) -> "VoteRecord":
        return cls(
            task_id=str(obj["task_id"]),
            annotator_id=str(obj["annotator_id"]),
            kind=str(obj["kind"]),
            choice=str(obj["choice"]),
            perspective=None if obj.get("perspective") is None else str(obj["perspective"]),
            timestamp=str(obj["timestamp"]),
        )


register_kind("verification_tasks", VerificationTask)
register_kind("votes", VoteRecord)
