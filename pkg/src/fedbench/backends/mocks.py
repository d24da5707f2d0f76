"""Deterministic mock backends for fully offline runs and tests.

Every mock is a pure function of its inputs plus a fixed seed, and counts
its own invocations so cache tests can assert how often it actually ran.
"""

from __future__ import annotations

import hashlib
from typing import Callable, Mapping, Sequence

import numpy as np

from ..errors import ClassifierParseFailure, EditorFailure, NoFaceFound, ShapeMismatch
from ..images import array_hash
from .base import (
    BackendId,
    FaceEmbedding,
    FaceRegion,
    centered_face_box,
)

EMBED_DIM = 64


def _image_digest(image: np.ndarray, salt: str = "") -> bytes:
    arr = np.ascontiguousarray(np.asarray(image, dtype=np.uint8))
    digest = hashlib.sha256()
    digest.update(salt.encode("utf-8"))
    digest.update(repr(arr.shape).encode("ascii"))
    digest.update(arr.tobytes())
    return digest.digest()


class CallCounter:
    """Mixin tracking how many times the underlying model was invoked."""

    def __init__(self):
        self.calls = 0

    def _count(self) -> None:
        self.calls += 1


class HashEmbedder(CallCounter):
    """Unit vector drawn from an RNG seeded by the image bytes.

    Identical bytes give identical embeddings; distinct bytes give
    near-orthogonal ones. ``min_side`` > 0 makes the mock strict about
    face size, for exercising NoFaceFound paths.
    """

    def __init__(self, seed: int = 0, min_side: int = 0):
        super().__init__()
        self.seed = seed
        self.min_side = min_side
        self.backend_id = BackendId("embedder", "hash", f"seed{seed}")

    def embed_face(self, image: np.ndarray) -> FaceEmbedding:
        self._count()
        arr = np.asarray(image)
        if self.min_side and min(arr.shape[0], arr.shape[1]) < self.min_side:
            raise NoFaceFound(
                f"image {arr.shape[1]}x{arr.shape[0]} below minimum side {self.min_side}"
            )
        digest = _image_digest(arr, salt=f"embed:{self.seed}")
        rng = np.random.default_rng(np.frombuffer(digest, dtype=np.uint64))
        return FaceEmbedding.from_array(rng.standard_normal(EMBED_DIM))


class CenterBoxLocalizer(CallCounter):
    """Face region defined as the centered box covering 25% of image area."""

    def __init__(self, min_side: int = 4):
        super().__init__()
        self.min_side = min_side
        self.backend_id = BackendId("localizer", "centered-box", "1")

    def locate_face(self, image: np.ndarray) -> FaceRegion:
        self._count()
        arr = np.asarray(image)
        height, width = arr.shape[0], arr.shape[1]
        if min(height, width) < self.min_side:
            raise NoFaceFound(f"image {width}x{height} below minimum side {self.min_side}")
        x, y, w, h = centered_face_box(width, height)
        mask = np.zeros((height, width), dtype=bool)
        mask[y : y + h, x : x + w] = True
        return FaceRegion(bbox=(x, y, w, h), mask=mask)


class MeanAbsDiff(CallCounter):
    """Perceptual stand-in: mean absolute pixel difference scaled to [0, 1]."""

    def __init__(self):
        super().__init__()
        self.backend_id = BackendId("perceptual", "mean-abs-diff", "1")

    def perceptual_distance(self, image_a: np.ndarray, image_b: np.ndarray) -> float:
        self._count()
        a = np.asarray(image_a, dtype=np.float64)
        b = np.asarray(image_b, dtype=np.float64)
        if a.shape != b.shape:
            raise ShapeMismatch(f"{a.shape} vs {b.shape}")
        return float(np.mean(np.abs(a - b)) / 255.0)


JudgeScript = str | Sequence[str] | Callable[[str, Sequence[np.ndarray]], str]


class ScriptedJudge(CallCounter):
    """Judge whose replies are scripted: a constant, a sequence consumed in
    call order, or a callable of (prompt, images).

    Keep one script per cache directory, or set a distinct ``version``:
    the cache cannot tell two same-version scripted judges apart.
    """

    def __init__(self, script: JudgeScript = "SCORE: 7", version: str = "1"):
        super().__init__()
        self.script = script
        self._queue = list(script) if isinstance(script, (list, tuple)) else None
        self.backend_id = BackendId("judge", "scripted", version)

    def complete(self, prompt: str, images: Sequence[np.ndarray]) -> str:
        self._count()
        if callable(self.script):
            return self.script(prompt, images)
        if self._queue is not None:
            if not self._queue:
                raise RuntimeError("scripted judge ran out of replies")
            return self._queue.pop(0)
        return str(self.script)


def task_scripted_judge(
    scores: Mapping[str, int] | None = None,
    texts: Mapping[str, str] | None = None,
    default: str = "SCORE: 7",
    version: str = "1",
) -> "ScriptedJudge":
    """Judge scripted per prompt template, keyed by template name.

    ``scores`` maps e.g. "perceptual_quality" -> 9; ``texts`` supplies full
    replies for non-scored templates like "dense_instruction".
    """
    from ..prompts import identify_task

    score_table = dict(scores or {})
    text_table = dict(texts or {})

    def script(prompt: str, images) -> str:
        task = identify_task(prompt)
        if task in text_table:
            return text_table[task]
        if task in score_table:
            return f"SCORE: {score_table[task]}"
        return default

    return ScriptedJudge(script, version=version)


ClassifierScript = str | Mapping[str, str] | Callable[[np.ndarray, str], str]


class ScriptedClassifier(CallCounter):
    """Classifier answering from a script: a constant label, a mapping from
    image content hash to label, or a callable of (image, granularity).

    ``granularities`` declares what the underlying model can answer; a
    fine-only classifier is coarse-mapped by the suite, not here.
    """

    def __init__(
        self,
        script: ClassifierScript,
        granularities: Sequence[str] = ("fine", "coarse"),
        name: str = "scripted",
        version: str = "1",
    ):
        super().__init__()
        self.script = script
        self.granularities = frozenset(granularities)
        self.backend_id = BackendId("classifier", name, version)

    def classify(self, image: np.ndarray, granularity: str) -> str:
        self._count()
        if granularity not in self.granularities:
            raise ValueError(f"classifier {self.backend_id.name} cannot answer {granularity!r}")
        if callable(self.script):
            return self.script(image, granularity)
        if isinstance(self.script, Mapping):
            key = array_hash(image)
            if key not in self.script:
                raise ClassifierParseFailure(f"no scripted answer for image {key[:12]}..")
            return self.script[key]
        return str(self.script)


def hash_classifier(name: str, labels: Sequence[str], granularities=("fine", "coarse")):
    """Classifier that picks a deterministic pseudo-random label per image.

    Useful as a stand-in ensemble member when no scripted table applies.
    """

    def script(image: np.ndarray, granularity: str) -> str:
        digest = _image_digest(image, salt=f"classify:{name}:{granularity}")
        return labels[int.from_bytes(digest[:4], "big") % len(labels)]

    return ScriptedClassifier(script, granularities=granularities, name=name)


class IdentityEditor(CallCounter):
    """Editor that returns the input unchanged: the canonical lazy editor."""

    def __init__(self):
        super().__init__()
        self.backend_id = BackendId("editor", "identity", "1")

    def edit_image(self, image: np.ndarray, instruction: str) -> np.ndarray:
        self._count()
        if not instruction.strip():
            raise EditorFailure("empty instruction")
        return np.array(image, dtype=np.uint8, copy=True)


class PatchEditor(CallCounter):
    """Editor that recolors the centered face box with a color derived from
    the instruction hash; pixels outside the box are untouched.

    Distinct instructions therefore produce distinct, reproducible outputs,
    which is what pipeline tests need from a fake editor.
    """

    def __init__(self):
        super().__init__()
        self.backend_id = BackendId("editor", "patch", "1")

    @staticmethod
    def patch_color(instruction: str) -> tuple[int, int, int]:
        digest = hashlib.sha256(instruction.encode("utf-8")).digest()
        return digest[0], digest[1], digest[2]

    def edit_image(self, image: np.ndarray, instruction: str) -> np.ndarray:
        self._count()
        if not instruction.strip():
            raise EditorFailure("empty instruction")
        out = np.array(image, dtype=np.uint8, copy=True)
        height, width = out.shape[0], out.shape[1]
        x, y, w, h = centered_face_box(width, height)
        out[y : y + h, x : x + w] = self.patch_color(instruction)
        return out
