"""Helpers shared by the demo scripts: scratch dirs and synthetic data."""

import shutil
from pathlib import Path

from fedbench.images import synthetic_portrait, write_image
from fedbench.backends.base import centered_face_box
from fedbench.records import (
    BenchmarkSample,
    EmotionLabel,
    render_instruction,
    save_manifest,
)

import numpy as np

SCRATCH_ROOT = Path(__file__).parent / "_scratch"


def fresh_dir(name: str) -> Path:
    path = SCRATCH_ROOT / name
    if path.exists():
        shutil.rmtree(path)
    path.mkdir(parents=True)
    return path


def make_cards_and_results(n_samples: int = 40):
    """Paired results plus scorecards for two fictional models, no images.

    The strong model gets uniformly better sub-scores, with per-sample
    jitter so metric preferences are not fully one-sided.
    """
    import hashlib

    from fedbench.records import EditResult, Granularity, ImageRef, ScoreCard

    def ref(name: str) -> ImageRef:
        return ImageRef(path=f"r/{name}.png",
                        content_hash=hashlib.sha256(name.encode()).hexdigest(),
                        width=48, height=48)

    rng = np.random.default_rng(17)
    results, cards = [], []
    profiles = {"strong": (0.65, 12.0, 9, 8, 7, 1.1), "weak": (0.45, 25.0, 7, 4, 3, 1.8)}
    for i in range(n_samples):
        sample_id = f"d{i:03d}"
        for model, (id_mu, bg_mu, pq, sc, gta, ratio_mu) in profiles.items():
            results.append(EditResult(sample_id=sample_id, model_id=model,
                                      granularity=Granularity.SIMPLE,
                                      edited=ref(f"{model}-{sample_id}")))
            id_raw = float(np.clip(rng.normal(id_mu, 0.08), -1, 1))
            bg_rmse = float(max(0.0, rng.normal(bg_mu, 3.0)))
            ratio = float(max(0.0, rng.normal(ratio_mu, 0.15)))
            id01 = max(id_raw, 0.0)
            bg01 = float(np.exp(-bg_rmse / 25.0))
            pq01, sc01, gta01 = pq / 10, sc / 10, gta / 10
            s_fid = (id01 + bg01 + pq01) / 3
            s_align = (sc01 + gta01) / 2
            s_reg = float(np.exp(-((ratio - 1.0) ** 2) / 0.5))
            cards.append(ScoreCard(
                sample_id=sample_id, model_id=model, granularity=Granularity.SIMPLE,
                id_raw=id_raw, bg_rmse=bg_rmse, pq_raw=pq, sc_raw=sc, gta_raw=gta,
                reg_ratio=ratio, id01=id01, bg01=bg01, pq01=pq01, sc01=sc01,
                gta01=gta01, s_fid=s_fid, s_align=s_align, s_reg=s_reg,
                fed=s_fid * s_align * s_reg,
            ))
    return results, cards


def tiny_benchmark(root: Path, n: int = 3, size=(48, 48)):
    """n synthetic (source, instruction, truth) triplets plus their manifest."""
    emotions = list(EmotionLabel)
    samples = []
    for i in range(n):
        src_emotion = emotions[i % len(emotions)]
        trg_emotion = emotions[(i + 3) % len(emotions)]
        source = synthetic_portrait(i, size=size)
        truth = np.array(source, copy=True)
        x, y, w, h = centered_face_box(size[1], size[0])
        rng = np.random.default_rng(1000 + i)
        truth[y : y + h, x : x + w] = rng.integers(0, 256, size=3, dtype=np.uint8)
        source_ref = write_image(source, root / "images" / f"d{i}.src.png", root)
        truth_ref = write_image(truth, root / "images" / f"d{i}.gt.png", root)
        samples.append(
            BenchmarkSample(
                sample_id=f"d{i}",
                source=source_ref,
                src_emotion=src_emotion,
                trg_emotion=trg_emotion,
                simple_instruction=render_instruction(src_emotion, trg_emotion),
                dense_instruction=f"shift the whole face toward {trg_emotion.value}: "
                                  "adjust brow height, eye openness, and mouth curvature",
                ground_truth=truth_ref,
            )
        )
    save_manifest(samples, root / "benchmark.manifest")
    return samples, root
