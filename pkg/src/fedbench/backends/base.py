"""Backend contracts: the value types every external model must speak.

A backend is anything that satisfies one of the protocols below. The rest
of the toolkit never imports a concrete model; it sees embeddings, face
regions, verdicts, labels, and images. Concrete adapters (and the mock
suite) live elsewhere.
"""

from __future__ import annotations

import re
import threading
from dataclasses import dataclass
from typing import Protocol, Sequence, runtime_checkable

import numpy as np

from ..errors import InvariantViolation, JudgeParseFailure

UNIT_NORM_TOL = 1e-6

BACKEND_KINDS = ("embedder", "localizer", "perceptual", "judge", "classifier", "editor")


@dataclass(frozen=True)
class BackendId:
    """Stable identity of one backend configuration; part of cache keys."""

    kind: str
    name: str
    version: str

    def __post_init__(self):
        if self.kind not in BACKEND_KINDS:
            raise InvariantViolation(self.name, f"unknown backend kind {self.kind!r}")

    def key(self) -> str:
        return f"{self.kind}/{self.name}@{self.version}"


@dataclass(frozen=True)
class FaceEmbedding:
    """Unit-norm identity feature vector."""

    vector: tuple[float, ...]

    def validate(self) -> None:
        norm = float(np.linalg.norm(self.vector))
        if abs(norm - 1.0) > UNIT_NORM_TOL:
            raise InvariantViolation("<embedding>", f"vector norm {norm} is not 1")

    @classmethod
    def from_array(cls, vector: np.ndarray) -> "FaceEmbedding":
        arr = np.asarray(vector, dtype=np.float64)
        norm = float(np.linalg.norm(arr))
        if norm == 0.0:
            raise InvariantViolation("<embedding>", "zero vector cannot be normalized")
        return cls(vector=tuple((arr / norm).tolist()))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.vector, dtype=np.float64)


@dataclass(frozen=True)
class FaceRegion:
    """Face bounding box plus a per-pixel face mask (mask==1 is face).

    The background set is the mask complement; both sides must be
    non-empty so background metrics are always defined.
    """

    bbox: tuple[int, int, int, int]  # x, y, w, h
    mask: np.ndarray  # bool, shape (H, W)

    def __post_init__(self):
        mask = np.asarray(self.mask, dtype=bool)
        object.__setattr__(self, "mask", mask)
        height, width = mask.shape
        x, y, w, h = self.bbox
        if w < 1 or h < 1 or x < 0 or y < 0 or x + w > width or y + h > height:
            raise InvariantViolation("<face-region>", f"bbox {self.bbox} outside {width}x{height}")
        face_count = int(mask.sum())
        if face_count < 1:
            raise InvariantViolation("<face-region>", "mask has no face pixel")
        if face_count >= mask.size:
            raise InvariantViolation("<face-region>", "mask has no background pixel")

    def background_mask(self) -> np.ndarray:
        return ~self.mask

    def crop(self, image: np.ndarray) -> np.ndarray:
        x, y, w, h = self.bbox
        return image[y : y + h, x : x + w]


@dataclass(frozen=True)
class JudgeVerdict:
    """Vision-judge answer: an integer score on the 0-10 scale plus its text."""

    score: int
    rationale: str
    raw_response: str

    def validate(self) -> None:
        if not isinstance(self.score, int) or not 0 <= self.score <= 10:
            raise InvariantViolation("<verdict>", f"score {self.score!r} outside 0..10")


# --- contracts -------------------------------------------------------------------


@runtime_checkable
class FaceEmbedder(Protocol):
    backend_id: BackendId

    def embed_face(self, image: np.ndarray) -> FaceEmbedding: ...


@runtime_checkable
class FaceLocalizer(Protocol):
    backend_id: BackendId

    def locate_face(self, image: np.ndarray) -> FaceRegion: ...


@runtime_checkable
class PerceptualMetric(Protocol):
    backend_id: BackendId

    def perceptual_distance(self, image_a: np.ndarray, image_b: np.ndarray) -> float: ...


@runtime_checkable
class VisionJudge(Protocol):
    """Raw text-completion side of a vision judge; parsing happens upstream."""

    backend_id: BackendId

    def complete(self, prompt: str, images: Sequence[np.ndarray]) -> str: ...


@runtime_checkable
class ExpressionClassifier(Protocol):
    """Returns a label string; ``granularities`` declares what it can answer."""

    backend_id: BackendId
    granularities: frozenset[str]

    def classify(self, image: np.ndarray, granularity: str) -> str: ...


@runtime_checkable
class ImageEditor(Protocol):
    backend_id: BackendId

    def edit_image(self, image: np.ndarray, instruction: str) -> np.ndarray: ...


# --- judge response parsing -------------------------------------------------------

_SCORE_MARKER = re.compile(r"SCORE\s*[:=]\s*(\d+)", re.IGNORECASE)
_SLASH_TEN = re.compile(r"(\d+)\s*/\s*10\b")
_LEADING_INT = re.compile(r"^\s*(\d+)\b")


def parse_judge_response(text: str) -> int:
    """Extract the judge's 0-10 integer score from free text.

    Markers are tried in precedence order: an explicit ``SCORE:`` line,
    an ``x/10`` fraction, then a bare integer at the start of the reply.
    A marker only counts when its integer lies in 0..10.
    """
    for pattern in (_SCORE_MARKER, _SLASH_TEN, _LEADING_INT):
        for match in pattern.finditer(text or ""):
            value = int(match.group(1))
            if 0 <= value <= 10:
                return value
    raise JudgeParseFailure(f"no 0-10 score found in {text!r:.200}")


class RateLimiter:
    """Bounds concurrent in-flight calls to one backend."""

    def __init__(self, max_concurrent: int = 8):
        if max_concurrent < 1:
            raise ValueError("max_concurrent must be >= 1")
        self._semaphore = threading.BoundedSemaphore(max_concurrent)

    def __enter__(self):
        self._semaphore.acquire()
        return self

    def __exit__(self, *exc_info):
        self._semaphore.release()
        return False


def centered_face_box(width: int, height: int) -> tuple[int, int, int, int]:
    """The mock convention for where a face sits: centered box, 25% of area."""
    box_w = max(1, width // 2)
    box_h = max(1, height // 2)
    return ((width - box_w) // 2, (height - box_h) // 2, box_w, box_h)
