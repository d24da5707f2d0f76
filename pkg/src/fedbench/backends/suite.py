"""The backend façade the rest of the toolkit talks to.

A BackendSuite bundles one backend per role (plus an ordered classifier
ensemble) and layers the cross-cutting policies on top: every call is
routed through the content-addressed cache, remote-style calls are rate
limited, and judge calls are retried with exponential backoff. Callers
therefore get reproducible, warm-rerunnable behavior regardless of which
concrete backends are plugged in.
"""

from __future__ import annotations

import base64
import hashlib
import json
import time
from typing import Callable, Sequence

import numpy as np

from ..errors import (
    BackendUnavailable,
    ClassifierParseFailure,
    EditorFailure,
    JudgeParseFailure,
)
from ..images import array_hash, decode_png, encode_png
from ..records import CoarseLabel, EmotionLabel, coarse_map
from .base import (
    BACKEND_KINDS,
    FaceEmbedding,
    FaceRegion,
    JudgeVerdict,
    RateLimiter,
    parse_judge_response,
)
from .cache import CallCache, NullCache

FINE = "fine"
COARSE = "coarse"


def _text_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _encode_region(region: FaceRegion) -> bytes:
    packed = np.packbits(region.mask.astype(np.uint8))
    obj = {
        "bbox": list(region.bbox),
        "shape": list(region.mask.shape),
        "mask": base64.b64encode(packed.tobytes()).decode("ascii"),
    }
    return json.dumps(obj, separators=(",", ":")).encode("utf-8")


def _decode_region(payload: bytes) -> FaceRegion:
    obj = json.loads(payload)
    height, width = obj["shape"]
    packed = np.frombuffer(base64.b64decode(obj["mask"]), dtype=np.uint8)
    mask = np.unpackbits(packed, count=height * width).reshape(height, width).astype(bool)
    return FaceRegion(bbox=tuple(obj["bbox"]), mask=mask)


class ClassifierHandle:
    """One ensemble member, seen through the suite's cache and parsing."""

    def __init__(self, suite: "BackendSuite", backend):
        self._suite = suite
        self.backend = backend

    @property
    def backend_id(self):
        return self.backend.backend_id

    def classify_expression(self, image: np.ndarray, granularity: str = FINE):
        return self._suite._classify(self.backend, image, granularity)


class BackendSuite:
    """Cached, rate-limited, retrying façade over one backend per role."""

    def __init__(
        self,
        *,
        embedder,
        localizer,
        perceptual,
        judge,
        classifiers: Sequence = (),
        editor=None,
        cache: CallCache | None = None,
        max_attempts: int = 3,
        backoff_base: float = 1.0,
        sleep: Callable[[float], None] = time.sleep,
        max_concurrent: int = 8,
    ):
        self.embedder = embedder
        self.localizer = localizer
        self.perceptual = perceptual
        self.judge_backend = judge
        self.editor = editor
        self.cache = cache if cache is not None else NullCache()
        self.max_attempts = max_attempts
        self.backoff_base = backoff_base
        self.sleep = sleep
        self._limiters = {kind: RateLimiter(max_concurrent) for kind in BACKEND_KINDS}
        self.classifiers = tuple(ClassifierHandle(self, c) for c in classifiers)

    # --- identity ---------------------------------------------------------------

    def embed_face(self, image: np.ndarray) -> FaceEmbedding:
        backend = self.embedder

        def compute() -> bytes:
            with self._limiters["embedder"]:
                embedding = backend.embed_face(image)
            embedding.validate()
            return json.dumps(
                {"vector": list(embedding.vector)}, separators=(",", ":")
            ).encode("utf-8")

        payload = self.cache.get_or_compute(
            backend.backend_id, "embed_face", [array_hash(image)], compute
        )
        embedding = FaceEmbedding(vector=tuple(json.loads(payload)["vector"]))
        embedding.validate()
        return embedding

    # --- face localization --------------------------------------------------------

    def locate_face(self, image: np.ndarray) -> FaceRegion:
        backend = self.localizer

        def compute() -> bytes:
            with self._limiters["localizer"]:
                region = backend.locate_face(image)
            return _encode_region(region)

        payload = self.cache.get_or_compute(
            backend.backend_id, "locate_face", [array_hash(image)], compute
        )
        return _decode_region(payload)

    # --- perceptual distance --------------------------------------------------------

    def perceptual_distance(self, image_a: np.ndarray, image_b: np.ndarray) -> float:
        backend = self.perceptual

        def compute() -> bytes:
            with self._limiters["perceptual"]:
                distance = float(backend.perceptual_distance(image_a, image_b))
            return json.dumps({"distance": distance}).encode("utf-8")

        payload = self.cache.get_or_compute(
            backend.backend_id,
            "perceptual_distance",
            [array_hash(image_a), array_hash(image_b)],
            compute,
        )
        return float(json.loads(payload)["distance"])

    # --- vision judge ---------------------------------------------------------------

    def _complete(self, prompt: str, images: Sequence[np.ndarray], refresh: bool) -> str:
        backend = self.judge_backend

        def compute() -> bytes:
            with self._limiters["judge"]:
                reply = backend.complete(prompt, list(images))
            return str(reply).encode("utf-8")

        payload = self.cache.get_or_compute(
            backend.backend_id,
            "judge",
            [array_hash(image) for image in images],
            compute,
            prompt_hash=_text_hash(prompt),
            refresh=refresh,
        )
        return payload.decode("utf-8")

    def complete(self, prompt: str, images: Sequence[np.ndarray]) -> str:
        """Raw judge reply, retried on transient backend failure."""
        self._check_judge_args(prompt, images)
        last: Exception | None = None
        for attempt in range(self.max_attempts):
            try:
                return self._complete(prompt, images, refresh=False)
            except BackendUnavailable as exc:
                last = exc
                if attempt + 1 < self.max_attempts:
                    self.sleep(self.backoff_base * (2**attempt))
        assert last is not None
        raise last

    def judge(self, prompt: str, images: Sequence[np.ndarray]) -> JudgeVerdict:
        """Scored judge call. Parse failures also trigger a retry, bypassing
        the cache so a garbage reply is not replayed."""
        self._check_judge_args(prompt, images)
        last: Exception | None = None
        for attempt in range(self.max_attempts):
            try:
                raw = self._complete(prompt, images, refresh=attempt > 0)
                score = parse_judge_response(raw)
                verdict = JudgeVerdict(score=score, rationale=raw.strip(), raw_response=raw)
                verdict.validate()
                return verdict
            except (BackendUnavailable, JudgeParseFailure) as exc:
                last = exc
                if attempt + 1 < self.max_attempts:
                    self.sleep(self.backoff_base * (2**attempt))
        assert last is not None
        raise last

    @staticmethod
    def _check_judge_args(prompt: str, images: Sequence[np.ndarray]) -> None:
        if not prompt or not prompt.strip():
            raise ValueError("judge prompt must be non-empty")
        if not 1 <= len(images) <= 3:
            raise ValueError(f"judge takes 1-3 images, got {len(images)}")

    # --- expression classification -----------------------------------------------------

    def _classify(self, backend, image: np.ndarray, granularity: str):
        if granularity not in (FINE, COARSE):
            raise ValueError(f"unknown granularity {granularity!r}")
        ask = granularity
        if granularity == COARSE and COARSE not in backend.granularities:
            ask = FINE  # fine-only model: classify fine, then map

        def compute() -> bytes:
            with self._limiters["classifier"]:
                label = backend.classify(image, ask)
            return json.dumps({"label": str(label)}).encode("utf-8")

        payload = self.cache.get_or_compute(
            backend.backend_id,
            "classify",
            [array_hash(image)],
            compute,
            prompt_hash=f"granularity:{ask}",
        )
        text = json.loads(payload)["label"].strip().lower().strip(".!?,\"' ")
        try:
            if ask == FINE:
                fine = EmotionLabel.parse(text)
                return coarse_map(fine) if granularity == COARSE else fine
            return CoarseLabel.parse(text)
        except ValueError:
            raise ClassifierParseFailure(
                f"{backend.backend_id.key()} answered {text!r} for {ask} classification"
            ) from None

    def classify_expression(self, image: np.ndarray, granularity: str = FINE, member: int = 0):
        if not self.classifiers:
            raise BackendUnavailable("no classifier configured")
        return self.classifiers[member].classify_expression(image, granularity)

    # --- editing ----------------------------------------------------------------------

    def edit_image(self, image: np.ndarray, instruction: str) -> np.ndarray:
        if self.editor is None:
            raise EditorFailure("no editor configured")
        if not instruction or not instruction.strip():
            raise EditorFailure("empty instruction")
        backend = self.editor

        def compute() -> bytes:
            with self._limiters["editor"]:
                edited = backend.edit_image(image, instruction)
            edited = np.asarray(edited, dtype=np.uint8)
            if edited.shape != np.asarray(image).shape:
                raise EditorFailure(
                    f"editor changed dimensions {np.asarray(image).shape} -> {edited.shape}"
                )
            return encode_png(edited)

        payload = self.cache.get_or_compute(
            backend.backend_id,
            "edit_image",
            [array_hash(image)],
            compute,
            prompt_hash=_text_hash(instruction),
        )
        return decode_png(payload)
