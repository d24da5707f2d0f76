"""Conformance checks every backend implementation must pass.

Each check returns a list of human-readable failure strings; empty means
the backend honors its contract. The test suite runs these against the
mocks, and adapter authors are expected to run them against anything new.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .base import FaceEmbedding, FaceRegion


def check_embedder(embedder, images: Sequence[np.ndarray]) -> list[str]:
    failures = []
    for idx, image in enumerate(images):
        first = embedder.embed_face(image)
        second = embedder.embed_face(np.array(image, copy=True))
        if not isinstance(first, FaceEmbedding):
            failures.append(f"image {idx}: embed_face did not return a FaceEmbedding")
            continue
        try:
            first.validate()
        except Exception as exc:
            failures.append(f"image {idx}: embedding invalid: {exc}")
        if first.vector != second.vector:
            failures.append(f"image {idx}: embedding not deterministic for identical bytes")
    return failures


def check_localizer(localizer, images: Sequence[np.ndarray]) -> list[str]:
    failures = []
    for idx, image in enumerate(images):
        region = localizer.locate_face(image)
        if not isinstance(region, FaceRegion):
            failures.append(f"image {idx}: locate_face did not return a FaceRegion")
            continue
        height, width = np.asarray(image).shape[:2]
        if region.mask.shape != (height, width):
            failures.append(f"image {idx}: mask shape {region.mask.shape} != image {height, width}")
        bg = region.background_mask()
        if int(bg.sum()) + int(region.mask.sum()) != region.mask.size:
            failures.append(f"image {idx}: background mask is not the face-mask complement")
    return failures


def check_perceptual(perceptual, images: Sequence[np.ndarray]) -> list[str]:
    failures = []
    for idx, image in enumerate(images):
        d_self = perceptual.perceptual_distance(image, image)
        if abs(d_self) > 1e-12:
            failures.append(f"image {idx}: d(X, X) = {d_self}, expected 0")
    for i in range(len(images)):
        for j in range(i + 1, len(images)):
            a, b = images[i], images[j]
            if np.asarray(a).shape != np.asarray(b).shape:
                continue
            forward = perceptual.perceptual_distance(a, b)
            backward = perceptual.perceptual_distance(b, a)
            if forward < 0:
                failures.append(f"pair {i},{j}: negative distance {forward}")
            if abs(forward - backward) > 1e-12:
                failures.append(f"pair {i},{j}: asymmetric ({forward} vs {backward})")
    return failures


def check_editor(editor, images: Sequence[np.ndarray], instruction: str) -> list[str]:
    failures = []
    for idx, image in enumerate(images):
        out = editor.edit_image(image, instruction)
        if np.asarray(out).shape != np.asarray(image).shape:
            failures.append(f"image {idx}: editor changed dimensions")
        again = editor.edit_image(np.array(image, copy=True), instruction)
        if not np.array_equal(out, again):
            failures.append(f"image {idx}: editor not deterministic")
    return failures


def run_conformance(
    *,
    embedder=None,
    localizer=None,
    perceptual=None,
    editor=None,
    images: Sequence[np.ndarray],
    instruction: str = "change the expression from neutral to happy",
) -> list[str]:
    """Run every applicable check; returns the combined failure list."""
    failures: list[str] = []
    if embedder is not None:
        failures += check_embedder(embedder, images)
    if localizer is not None:
        failures += check_localizer(localizer, images)
    if perceptual is not None:
        failures += check_perceptual(perceptual, images)
    if editor is not None:
        failures += check_editor(editor, images, instruction)
    return failures
