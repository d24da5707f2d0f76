"""fedbench: reference-based evaluation toolkit and benchmark builder for
facial expression image editing.

The library decomposes editing quality into fidelity (identity cosine,
background RMSE, judged perceptual quality), alignment (judged semantic
and reference-based expression match), and relative expression gain (a
Gaussian penalty on the face-crop perceptual-distance ratio), and reports
their product per sample. Everything model-shaped hides behind pluggable
backend contracts with deterministic mocks, so every formula is testable
offline.
"""

__version__ = "0.1.0"

from .records import (
    BenchmarkSample,
    CoarseLabel,
    EditResult,
    EmotionLabel,
    FailureRecord,
    Granularity,
    ImageRef,
    ScoreCard,
    coarse_map,
    load_manifest,
    render_instruction,
    save_manifest,
)
from .metrics import (
    MetricConfig,
    alignment_score,
    compute_bg_rmse,
    compute_gta,
    compute_id,
    compute_pq,
    compute_reg_ratio,
    compute_sc,
    fed_score,
    fidelity_score,
    normalize_bg,
    normalize_id,
    reg_penalty,
    score_batch,
    score_sample,
)
from .backends import BackendSuite, CallCache

__all__ = [
    "BackendSuite",
    "BenchmarkSample",
    "CallCache",
    "CoarseLabel",
    "EditResult",
    "EmotionLabel",
    "FailureRecord",
    "Granularity",
    "ImageRef",
    "MetricConfig",
    "ScoreCard",
    "alignment_score",
    "coarse_map",
    "compute_bg_rmse",
    "compute_gta",
    "compute_id",
    "compute_pq",
    "compute_reg_ratio",
    "compute_sc",
    "fed_score",
    "fidelity_score",
    "load_manifest",
    "normalize_bg",
    "normalize_id",
    "reg_penalty",
    "render_instruction",
    "save_manifest",
    "score_batch",
    "score_sample",
]
