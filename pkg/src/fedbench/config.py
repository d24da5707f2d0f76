"""Toolkit configuration: one YAML file, strict validation, flag overrides.

Unknown keys are rejected outright so typos fail before any workflow
starts. Backends are selected by name from a registry; the shipped
registry contains the deterministic mocks, and adapters for hosted models
register themselves the same way.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import yaml

from .backends import (
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
from .backends.cache import CallCache
from .backends.suite import BackendSuite
from .errors import ConfigError
from .metrics import MetricConfig
from .pipeline import PipelineConfig, VotingConfig
from .records import EmotionLabel

ENV_VARS = {
    "FED_CONFIG": "path of the config file when --config is not given",
    "FED_CACHE_DIR": "overrides paths.cache_dir",
    "FED_JUDGE_API_KEY": "credential handed to a hosted judge backend",
    "FED_EDITOR_API_KEY": "credential handed to a hosted editor backend",
}


@dataclass(frozen=True)
class BackendChoice:
    name: str
    params: dict = field(default_factory=dict)

    @classmethod
    def parse(cls, obj: Any, role: str) -> "BackendChoice":
        if isinstance(obj, str):
            return cls(name=obj)
        if isinstance(obj, dict):
            extra = set(obj) - {"name", "params"}
            if extra:
                raise ConfigError(f"{role}: unknown keys {sorted(extra)}")
            if "name" not in obj:
                raise ConfigError(f"{role}: backend needs a name")
            params = obj.get("params", {})
            if not isinstance(params, dict):
                raise ConfigError(f"{role}: params must be a mapping")
            return cls(name=str(obj["name"]), params=dict(params))
        raise ConfigError(f"{role}: expected a backend name or mapping, got {type(obj).__name__}")


@dataclass(frozen=True)
class ToolkitConfig:
    embedder: BackendChoice = BackendChoice("hash")
    localizer: BackendChoice = BackendChoice("centered-box")
    perceptual: BackendChoice = BackendChoice("mean-abs-diff")
    judge: BackendChoice = BackendChoice("scripted")
    classifiers: tuple[BackendChoice, ...] = tuple(
        BackendChoice("hash", {"salt": f"member-{i}"}) for i in range(5)
    )
    editor: BackendChoice = BackendChoice("patch")
    metrics: MetricConfig = MetricConfig()
    pipeline: PipelineConfig = PipelineConfig()
    cache_dir: str = "cache"
    data_dir: str = "data"
    out_dir: str = "out"
    workers: int = 4
    max_concurrent_calls: int = 8
    seed: int = 0


_ALLOWED_TOP = {"backends", "metrics", "pipeline", "paths", "concurrency", "seed"}
_ALLOWED_BACKENDS = {"embedder", "localizer", "perceptual", "judge", "classifiers", "editor"}
_ALLOWED_METRICS = {"sigma", "bg_tau"}
_ALLOWED_PIPELINE = {"granularity", "ensemble", "rank_weights", "min_resolution",
                     "candidates_per_emotion"}
_ALLOWED_PATHS = {"cache_dir", "data_dir", "out_dir"}
_ALLOWED_CONCURRENCY = {"workers", "max_concurrent_calls"}


def _reject_unknown(section: dict, allowed: set[str], where: str) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")


def load_config(path: str | Path | None = None, overrides: dict | None = None) -> ToolkitConfig:
    """Parse and validate a config file; ``overrides`` (flag values) win."""
    raw: dict = {}
    if path is None:
        path = os.environ.get("FED_CONFIG") or None
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file {path} does not exist")
        try:
            loaded = yaml.safe_load(path.read_text(encoding="utf-8"))
        except yaml.YAMLError as exc:
            raise ConfigError(f"config file {path} is not valid YAML: {exc}") from exc
        if loaded is None:
            loaded = {}
        if not isinstance(loaded, dict):
            raise ConfigError(f"config file {path} must hold a mapping")
        raw = loaded
    if overrides:
        raw = _merge(raw, overrides)

    _reject_unknown(raw, _ALLOWED_TOP, "config")
    try:
        backends_raw = raw.get("backends", {})
        _reject_unknown(backends_raw, _ALLOWED_BACKENDS, "backends")
        metrics_raw = raw.get("metrics", {})
        _reject_unknown(metrics_raw, _ALLOWED_METRICS, "metrics")
        pipeline_raw = raw.get("pipeline", {})
        _reject_unknown(pipeline_raw, _ALLOWED_PIPELINE, "pipeline")
        paths_raw = raw.get("paths", {})
        _reject_unknown(paths_raw, _ALLOWED_PATHS, "paths")
        concurrency_raw = raw.get("concurrency", {})
        _reject_unknown(concurrency_raw, _ALLOWED_CONCURRENCY, "concurrency")

        defaults = ToolkitConfig()
        classifiers = defaults.classifiers
        if "classifiers" in backends_raw:
            entries = backends_raw["classifiers"]
            if not isinstance(entries, list) or not entries:
                raise ConfigError("backends.classifiers must be a non-empty list")
            classifiers = tuple(
                BackendChoice.parse(entry, f"backends.classifiers[{i}]")
                for i, entry in enumerate(entries)
            )
        metric_config = MetricConfig(
            sigma=float(metrics_raw.get("sigma", defaults.metrics.sigma)),
            bg_tau=float(metrics_raw.get("bg_tau", defaults.metrics.bg_tau)),
        )
        weights = pipeline_raw.get("rank_weights", list(defaults.pipeline.rank_weights))
        if not (isinstance(weights, (list, tuple)) and len(weights) == 2):
            raise ConfigError("pipeline.rank_weights must be [id_weight, bg_weight]")
        pipeline_config = PipelineConfig(
            voting=VotingConfig(
                granularity=str(pipeline_raw.get("granularity", "coarse")),
                ensemble=tuple(pipeline_raw.get("ensemble", ())),
            ),
            rank_weights=(float(weights[0]), float(weights[1])),
            min_resolution=int(pipeline_raw.get("min_resolution",
                                                defaults.pipeline.min_resolution)),
            candidates_per_emotion=int(
                pipeline_raw.get("candidates_per_emotion",
                                 defaults.pipeline.candidates_per_emotion)
            ),
        )
        cache_dir = os.environ.get("FED_CACHE_DIR") or str(
            paths_raw.get("cache_dir", defaults.cache_dir)
        )
        return ToolkitConfig(
            embedder=BackendChoice.parse(backends_raw.get("embedder", "hash"), "backends.embedder"),
            localizer=BackendChoice.parse(
                backends_raw.get("localizer", "centered-box"), "backends.localizer"
            ),
            perceptual=BackendChoice.parse(
                backends_raw.get("perceptual", "mean-abs-diff"), "backends.perceptual"
            ),
            judge=BackendChoice.parse(backends_raw.get("judge", "scripted"), "backends.judge"),
            classifiers=classifiers,
            editor=BackendChoice.parse(backends_raw.get("editor", "patch"), "backends.editor"),
            metrics=metric_config,
            pipeline=pipeline_config,
            cache_dir=cache_dir,
            data_dir=str(paths_raw.get("data_dir", defaults.data_dir)),
            out_dir=str(paths_raw.get("out_dir", defaults.out_dir)),
            workers=int(concurrency_raw.get("workers", defaults.workers)),
            max_concurrent_calls=int(
                concurrency_raw.get("max_concurrent_calls", defaults.max_concurrent_calls)
            ),
            seed=int(raw.get("seed", defaults.seed)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _merge(base: dict, extra: dict) -> dict:
    merged = dict(base)
    for key, value in extra.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def config_hash(config: ToolkitConfig) -> str:
    def encode(obj: Any):
        if hasattr(obj, "__dataclass_fields__"):
            return {name: encode(getattr(obj, name)) for name in obj.__dataclass_fields__}
        if isinstance(obj, (list, tuple)):
            return [encode(v) for v in obj]
        if isinstance(obj, dict):
            return {k: encode(v) for k, v in sorted(obj.items())}
        return obj

    canonical = json.dumps(encode(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


# --- backend registry ------------------------------------------------------------------


def _scripted_judge_factory(params: dict):
    if "scores" in params or "texts" in params:
        return task_scripted_judge(
            scores=params.get("scores"),
            texts=params.get("texts"),
            default=params.get("default", "SCORE: 7"),
            version=str(params.get("version", "1")),
        )
    return ScriptedJudge(params.get("response", "SCORE: 7"),
                         version=str(params.get("version", "1")))


def _scripted_classifier_factory(params: dict):
    if "answer" not in params:
        raise ConfigError("scripted classifier needs params.answer")
    return ScriptedClassifier(
        str(params["answer"]),
        granularities=tuple(params.get("granularities", ("fine", "coarse"))),
        name=str(params.get("name", "scripted")),
        version=str(params.get("version", "1")),
    )


BACKEND_FACTORIES: dict[tuple[str, str], Callable[[dict], Any]] = {
    ("embedder", "hash"): lambda p: HashEmbedder(
        seed=int(p.get("seed", 0)), min_side=int(p.get("min_side", 0))
    ),
    ("localizer", "centered-box"): lambda p: CenterBoxLocalizer(
        min_side=int(p.get("min_side", 4))
    ),
    ("perceptual", "mean-abs-diff"): lambda p: MeanAbsDiff(),
    ("judge", "scripted"): _scripted_judge_factory,
    ("classifier", "hash"): lambda p: hash_classifier(
        name=str(p.get("salt", p.get("name", "hash"))),
        labels=list(p.get("labels", [label.value for label in EmotionLabel])),
        granularities=tuple(p.get("granularities", ("fine", "coarse"))),
    ),
    ("classifier", "scripted"): _scripted_classifier_factory,
    ("editor", "identity"): lambda p: IdentityEditor(),
    ("editor", "patch"): lambda p: PatchEditor(),
}


def register_backend(kind: str, name: str, factory: Callable[[dict], Any]) -> None:
    BACKEND_FACTORIES[(kind, name)] = factory


def _build(kind: str, choice: BackendChoice, default_seed: int = 0):
    factory = BACKEND_FACTORIES.get((kind, choice.name))
    if factory is None:
        known = sorted(n for k, n in BACKEND_FACTORIES if k == kind)
        raise ConfigError(f"no {kind} backend named {choice.name!r}; known: {known}")
    params = dict(choice.params)
    if kind == "embedder" and choice.name == "hash":
        params.setdefault("seed", default_seed)  # global seed threads into mocks
    if kind == "judge" and os.environ.get("FED_JUDGE_API_KEY"):
        params.setdefault("api_key", os.environ["FED_JUDGE_API_KEY"])
    if kind == "editor" and os.environ.get("FED_EDITOR_API_KEY"):
        params.setdefault("api_key", os.environ["FED_EDITOR_API_KEY"])
    if choice.name in ("hash", "centered-box", "mean-abs-diff", "scripted",
                       "identity", "patch"):
        params.pop("api_key", None)  # mocks take no credentials
    return factory(params)


def build_suite(config: ToolkitConfig, *, sleep=None) -> BackendSuite:
    """Instantiate every configured backend behind one cached suite."""
    cache = CallCache(config.cache_dir)
    kwargs: dict[str, Any] = {}
    if sleep is not None:
        kwargs["sleep"] = sleep
    return BackendSuite(
        embedder=_build("embedder", config.embedder, config.seed),
        localizer=_build("localizer", config.localizer),
        perceptual=_build("perceptual", config.perceptual),
        judge=_build("judge", config.judge),
        classifiers=[_build("classifier", c) for c in config.classifiers],
        editor=_build("editor", config.editor),
        cache=cache,
        max_concurrent=config.max_concurrent_calls,
        **kwargs,
    )
