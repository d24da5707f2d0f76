"""Backend contracts, deterministic mocks, call cache, and the suite façade."""

from .base import (
    BACKEND_KINDS,
    BackendId,
    FaceEmbedding,
    FaceRegion,
    JudgeVerdict,
    RateLimiter,
    centered_face_box,
    parse_judge_response,
)
from .cache import CallCache, NullCache, cache_key
from .mocks import (
    CenterBoxLocalizer,
    HashEmbedder,
    IdentityEditor,
    MeanAbsDiff,
    PatchEditor,
    ScriptedClassifier,
    ScriptedJudge,
    hash_classifier,
    task_scripted_judge,
)
from .suite import COARSE, FINE, BackendSuite, ClassifierHandle

__all__ = [
    "BACKEND_KINDS",
    "BackendId",
    "BackendSuite",
    "CallCache",
    "CenterBoxLocalizer",
    "ClassifierHandle",
    "COARSE",
    "FINE",
    "FaceEmbedding",
    "FaceRegion",
    "HashEmbedder",
    "IdentityEditor",
    "JudgeVerdict",
    "MeanAbsDiff",
    "NullCache",
    "PatchEditor",
    "RateLimiter",
    "ScriptedClassifier",
    "ScriptedJudge",
    "cache_key",
    "centered_face_box",
    "hash_classifier",
    "parse_judge_response",
    "task_scripted_judge",
]
