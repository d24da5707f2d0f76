"""Every sub-metric of the evaluation protocol and their composition.

The protocol decouples judgment into three dimensions and multiplies them:

* fidelity  = mean(identity cosine clamped at 0, exp(-bg_rmse/tau), pq/10)
* alignment = mean(sc/10, gta/10)
* expression gain = exp(-(ratio - 1)^2 / (2 sigma^2)), where ratio is the
  face-crop perceptual distance source->edited divided by source->truth

A ratio near 0 exposes lazy editing (nothing changed), a ratio far above 1
exposes overfit editing; both collapse the gain term, and any collapsed
dimension collapses the product.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import prompts
from .backends.base import FaceRegion
from .errors import (
    DegenerateGroundTruth,
    EmptyBackground,
    FedError,
    ShapeMismatch,
)
from .images import load_ref
from .records import (
    BenchmarkSample,
    EditResult,
    FailureRecord,
    ScoreCard,
)

DEGENERATE_GT_EPSILON = 1e-8


@dataclass(frozen=True)
class MetricConfig:
    """Tunable constants of the protocol.

    ``sigma`` is the tolerance width of the expression-gain penalty;
    ``bg_tau`` the pixel-RMSE scale of background normalization; judge
    scores live on the fixed 0-10 integer scale.
    """

    sigma: float = 0.5
    bg_tau: float = 25.0
    judge_scale_max: int = 10

    def __post_init__(self):
        if not (self.sigma > 0):
            raise ValueError("sigma must be > 0")
        if not (self.bg_tau > 0):
            raise ValueError("bg_tau must be > 0")
        if self.judge_scale_max != 10:
            raise ValueError("judge scale is fixed at 0-10")


# --- identity -----------------------------------------------------------------


def compute_id(src_image: np.ndarray, trg_image: np.ndarray, backends) -> float:
    """Cosine similarity of the two face embeddings, in [-1, 1]."""
    a = backends.embed_face(src_image).as_array()
    b = backends.embed_face(trg_image).as_array()
    return float(np.clip(np.dot(a, b), -1.0, 1.0))


def normalize_id(cosine: float) -> float:
    """Clamp negative cosines (a different person) to 0 for aggregation."""
    if not -1.0 <= cosine <= 1.0:
        raise ValueError(f"cosine {cosine} outside [-1, 1]")
    return max(cosine, 0.0)


# --- background ----------------------------------------------------------------


def compute_bg_rmse(
    src_image: np.ndarray, trg_image: np.ndarray, face_region: FaceRegion
) -> float:
    """Root mean square pixel error over the background (mask == 0) set,
    across all channels, on the 0-255 scale."""
    src = np.asarray(src_image, dtype=np.float64)
    trg = np.asarray(trg_image, dtype=np.float64)
    if src.shape != trg.shape:
        raise ShapeMismatch(f"{src.shape} vs {trg.shape}")
    if face_region.mask.shape != src.shape[:2]:
        raise ShapeMismatch(f"mask {face_region.mask.shape} vs image {src.shape[:2]}")
    background = face_region.background_mask()
    if not background.any():
        raise EmptyBackground("face mask covers the whole image")
    diff = src[background] - trg[background]
    return float(np.sqrt(np.mean(diff**2)))


def normalize_bg(rmse: float, config: MetricConfig) -> float:
    """Map pixel RMSE on [0, inf) to (0, 1], higher is better: exp(-rmse/tau)."""
    if rmse < 0:
        raise ValueError(f"rmse {rmse} must be >= 0")
    return math.exp(-rmse / config.bg_tau)


# --- judged metrics --------------------------------------------------------------


def compute_pq(trg_image: np.ndarray, backends) -> int:
    """Perceptual-quality verdict for the edited image alone."""
    prompt = prompts.render("perceptual_quality")
    return backends.judge(prompt, [trg_image]).score


def compute_sc(trg_image: np.ndarray, instruction: str, backends) -> int:
    """Semantic-consistency verdict between the edited image and its instruction."""
    if not instruction or not instruction.strip():
        raise ValueError("instruction must be non-empty")
    prompt = prompts.render("semantic_consistency", instruction=instruction)
    return backends.judge(prompt, [trg_image]).score


def compute_gta(trg_image: np.ndarray, gt_image: np.ndarray, backends) -> int:
    """Expression-alignment verdict for the ordered pair (edited, reference)."""
    prompt = prompts.render("expression_alignment")
    return backends.judge(prompt, [trg_image, gt_image]).score


# --- relative expression gain -----------------------------------------------------


def compute_reg_ratio(
    src_image: np.ndarray,
    trg_image: np.ndarray,
    gt_image: np.ndarray,
    face_region: FaceRegion,
    backends,
) -> float:
    """Face-crop perceptual distance ratio (source->edited) / (source->truth).

    The source image's face box is applied at identical coordinates to all
    three images so the ratio compares like regions even when the edit
    displaced the face.
    """
    src_face = face_region.crop(np.asarray(src_image))
    trg_face = face_region.crop(np.asarray(trg_image))
    gt_face = face_region.crop(np.asarray(gt_image))
    denominator = backends.perceptual_distance(src_face, gt_face)
    if denominator < DEGENERATE_GT_EPSILON:
        raise DegenerateGroundTruth(
            f"source->truth face distance {denominator} below {DEGENERATE_GT_EPSILON}"
        )
    numerator = backends.perceptual_distance(src_face, trg_face)
    return float(numerator / denominator)


def reg_penalty(ratio: float, config: MetricConfig) -> float:
    """Gaussian-shaped penalty centered at ratio 1: exp(-(r-1)^2 / (2 sigma^2))."""
    if ratio < 0:
        raise ValueError(f"ratio {ratio} must be >= 0")
    return math.exp(-((ratio - 1.0) ** 2) / (2.0 * config.sigma**2))


# --- aggregation -----------------------------------------------------------------


def _check_unit(name: str, value: float) -> None:
    if not (math.isfinite(value) and 0.0 <= value <= 1.0):
        raise ValueError(f"{name} {value} outside [0, 1]")


def fidelity_score(id01: float, bg01: float, pq01: float) -> float:
    for name, value in (("id01", id01), ("bg01", bg01), ("pq01", pq01)):
        _check_unit(name, value)
    return (id01 + bg01 + pq01) / 3.0


def alignment_score(sc01: float, gta01: float) -> float:
    for name, value in (("sc01", sc01), ("gta01", gta01)):
        _check_unit(name, value)
    return (sc01 + gta01) / 2.0


def fed_score(s_fid: float, s_align: float, s_reg: float) -> float:
    for name, value in (("s_fid", s_fid), ("s_align", s_align), ("s_reg", s_reg)):
        _check_unit(name, value)
    return s_fid * s_align * s_reg


# --- whole-sample scoring -----------------------------------------------------------


def score_sample(
    sample: BenchmarkSample,
    result: EditResult,
    backends,
    config: MetricConfig = MetricConfig(),
    *,
    benchmark_root: str | Path,
    results_root: str | Path,
) -> ScoreCard:
    """Produce the full ScoreCard for one edit result.

    Every backend call goes through the suite (and therefore the call
    cache), so re-scoring is free and byte-stable.
    """
    if result.sample_id != sample.sample_id:
        raise ValueError(
            f"result {result.sample_id!r} does not belong to sample {sample.sample_id!r}"
        )
    src = load_ref(sample.source, benchmark_root)
    gt = load_ref(sample.ground_truth, benchmark_root)
    trg = load_ref(result.edited, results_root)
    instruction = sample.instruction(result.granularity)

    region = backends.locate_face(src)
    id_raw = compute_id(src, trg, backends)
    bg_rmse = compute_bg_rmse(src, trg, region)
    pq_raw = compute_pq(trg, backends)
    sc_raw = compute_sc(trg, instruction, backends)
    gta_raw = compute_gta(trg, gt, backends)
    reg_ratio = compute_reg_ratio(src, trg, gt, region, backends)

    id01 = normalize_id(id_raw)
    bg01 = normalize_bg(bg_rmse, config)
    scale = float(config.judge_scale_max)
    pq01 = pq_raw / scale
    sc01 = sc_raw / scale
    gta01 = gta_raw / scale
    s_fid = fidelity_score(id01, bg01, pq01)
    s_align = alignment_score(sc01, gta01)
    s_reg = reg_penalty(reg_ratio, config)

    card = ScoreCard(
        sample_id=sample.sample_id,
        model_id=result.model_id,
        granularity=result.granularity,
        id_raw=id_raw,
        bg_rmse=bg_rmse,
        pq_raw=pq_raw,
        sc_raw=sc_raw,
        gta_raw=gta_raw,
        reg_ratio=reg_ratio,
        id01=id01,
        bg01=bg01,
        pq01=pq01,
        sc01=sc01,
        gta01=gta01,
        s_fid=s_fid,
        s_align=s_align,
        s_reg=s_reg,
        fed=fed_score(s_fid, s_align, s_reg),
    )
    card.validate()
    return card


def score_batch(
    samples: Sequence[BenchmarkSample],
    results: Sequence[EditResult],
    backends,
    config: MetricConfig = MetricConfig(),
    *,
    benchmark_root: str | Path,
    results_root: str | Path,
    max_workers: int = 4,
) -> tuple[list[ScoreCard], list[FailureRecord]]:
    """Score every result that resolves against the benchmark.

    One corrupt sample never aborts the batch: failures become records with
    the reason attached. Output order is canonicalized by
    (model_id, sample_id, granularity) regardless of completion order.
    """
    by_id = {sample.sample_id: sample for sample in samples}

    def one(result: EditResult):
        sample = by_id.get(result.sample_id)
        if sample is None:
            return FailureRecord(
                subject_id=result.sample_id,
                model_id=result.model_id,
                granularity=result.granularity.value,
                stage="score",
                reason="sample_id not present in benchmark",
            )
        try:
            return score_sample(
                sample,
                result,
                backends,
                config,
                benchmark_root=benchmark_root,
                results_root=results_root,
            )
        except FedError as exc:
            return FailureRecord(
                subject_id=result.sample_id,
                model_id=result.model_id,
                granularity=result.granularity.value,
                stage="score",
                reason=f"{type(exc).__name__}: {exc}",
            )

    if max_workers > 1 and len(results) > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            outcomes = list(pool.map(one, results))
    else:
        outcomes = [one(result) for result in results]

    cards = [o for o in outcomes if isinstance(o, ScoreCard)]
    failures = [o for o in outcomes if isinstance(o, FailureRecord)]
    cards.sort(key=lambda c: (c.model_id, c.sample_id, c.granularity.value))
    failures.sort(key=lambda f: (f.model_id or "", f.subject_id))
    return cards, failures
