"""Shared fixtures: synthetic portraits, mock backend suites, tiny benchmarks."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from fedbench.backends import (
    BackendSuite,
    CallCache,
    CenterBoxLocalizer,
    HashEmbedder,
    IdentityEditor,
    MeanAbsDiff,
    PatchEditor,
    ScriptedJudge,
    centered_face_box,
    task_scripted_judge,
)
from fedbench.images import synthetic_portrait, write_image
from fedbench.records import (
    BenchmarkSample,
    EmotionLabel,
    render_instruction,
    save_manifest,
)

EMOTIONS = list(EmotionLabel)


@pytest.fixture
def portraits():
    return [synthetic_portrait(seed, size=(32, 32)) for seed in range(4)]


def make_suite(
    cache_dir: Path | None,
    *,
    judge=None,
    editor=None,
    classifiers=(),
    embedder=None,
    sleep=lambda s: None,
):
    return BackendSuite(
        embedder=embedder or HashEmbedder(),
        localizer=CenterBoxLocalizer(),
        perceptual=MeanAbsDiff(),
        judge=judge or ScriptedJudge("SCORE: 7"),
        classifiers=classifiers,
        editor=editor or IdentityEditor(),
        cache=CallCache(cache_dir) if cache_dir is not None else None,
        sleep=sleep,
    )


@pytest.fixture
def suite_factory(tmp_path):
    def factory(**kwargs):
        cache_dir = kwargs.pop("cache_dir", tmp_path / "cache")
        return make_suite(cache_dir, **kwargs)

    return factory


def distinct_truth(source: np.ndarray, seed: int) -> np.ndarray:
    """A ground truth that shares dimensions with the source but differs
    inside the face box, so the gain denominator is never degenerate."""
    rng = np.random.default_rng(seed + 10_000)
    gt = np.array(source, copy=True)
    x, y, w, h = centered_face_box(gt.shape[1], gt.shape[0])
    gt[y : y + h, x : x + w] = rng.integers(0, 256, size=3, dtype=np.uint8)
    return gt


def build_benchmark(root: Path, n: int, *, size=(32, 32), with_dense=True):
    """Write n synthetic samples plus their manifest under root."""
    root.mkdir(parents=True, exist_ok=True)
    samples = []
    for i in range(n):
        src_emotion = EMOTIONS[i % len(EMOTIONS)]
        trg_emotion = EMOTIONS[(i + 1) % len(EMOTIONS)]
        source = synthetic_portrait(i, size=size)
        truth = distinct_truth(source, i)
        source_ref = write_image(source, root / "images" / f"s{i:03d}.src.png", root)
        truth_ref = write_image(truth, root / "images" / f"s{i:03d}.gt.png", root)
        samples.append(
            BenchmarkSample(
                sample_id=f"s{i:03d}",
                source=source_ref,
                src_emotion=src_emotion,
                trg_emotion=trg_emotion,
                simple_instruction=render_instruction(src_emotion, trg_emotion),
                dense_instruction=(
                    f"raise the brow and curve the mouth toward {trg_emotion.value}"
                    if with_dense
                    else None
                ),
                ground_truth=truth_ref,
            )
        )
    save_manifest(samples, root / "benchmark.manifest")
    return samples


@pytest.fixture
def small_benchmark(tmp_path):
    root = tmp_path / "bench"
    samples = build_benchmark(root, 3)
    return samples, root


@pytest.fixture
def scoring_judge():
    return task_scripted_judge(
        scores={"perceptual_quality": 9, "semantic_consistency": 8, "expression_alignment": 6},
        texts={
            "dense_instruction": "curl both mouth corners upward and relax the brow",
            "expression_caption": "eyes relaxed, mouth curved upward, apparent mild joy",
        },
    )
