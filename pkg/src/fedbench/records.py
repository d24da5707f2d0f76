"""Core domain records and line-delimited manifest IO.

A manifest is a text file with one JSON record per line. Records are
immutable values; every record type knows how to serialize itself, parse
itself back, and check its own invariants, so a round-trip through disk is
the identity. Field names are frozen by the per-record ``schema_version``
field (see README "Manifest formats").
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, fields
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Iterable, Sequence

from .errors import (
    InvariantViolation,
    MalformedRecord,
    MissingFile,
    SameEmotion,
    WriteFailure,
)

SCHEMA_VERSION = 1

FED_PRODUCT_TOL = 1e-9


class EmotionLabel(str, Enum):
    """The seven admissible expression labels."""

    ANGRY = "angry"
    DISGUST = "disgust"
    FEAR = "fear"
    HAPPY = "happy"
    NEUTRAL = "neutral"
    SAD = "sad"
    SURPRISE = "surprise"

    @classmethod
    def parse(cls, text: str) -> "EmotionLabel":
        try:
            return cls(str(text).strip().lower())
        except ValueError:
            raise ValueError(f"not an expression label: {text!r}") from None

    def __str__(self) -> str:
        return self.value


class CoarseLabel(str, Enum):
    """Expression polarity used by the coarse-grained filter."""

    POSITIVE = "positive"
    NEUTRAL = "neutral"
    NEGATIVE = "negative"

    @classmethod
    def parse(cls, text: str) -> "CoarseLabel":
        try:
            return cls(str(text).strip().lower())
        except ValueError:
            raise ValueError(f"not a polarity label: {text!r}") from None

    def __str__(self) -> str:
        return self.value


class Granularity(str, Enum):
    SIMPLE = "simple"
    DENSE = "dense"

    @classmethod
    def parse(cls, text: str) -> "Granularity":
        try:
            return cls(str(text).strip().lower())
        except ValueError:
            raise ValueError(f"not an instruction granularity: {text!r}") from None

    def __str__(self) -> str:
        return self.value


def render_instruction(src: EmotionLabel, trg: EmotionLabel) -> str:
    """Render the canonical short editing instruction for a label pair."""
    if src == trg:
        raise SameEmotion(f"source and target emotion are both {src.value!r}")
    return f"change the expression from {src.value} to {trg.value}"


def coarse_map(fine: EmotionLabel) -> CoarseLabel:
    """Collapse the seven labels onto three polarities: happy is positive,
    neutral stays neutral, the remaining five are negative."""
    if fine is EmotionLabel.HAPPY:
        return CoarseLabel.POSITIVE
    if fine is EmotionLabel.NEUTRAL:
        return CoarseLabel.NEUTRAL
    return CoarseLabel.NEGATIVE


def _require(condition: bool, record_id: str, reason: str) -> None:
    if not condition:
        raise InvariantViolation(record_id, reason)


@dataclass(frozen=True)
class ImageRef:
    """Pointer to an image on disk: relative path, content hash, dimensions.

    Manifests never embed pixels; the hash pins the exact bytes so cache
    keys and provenance stay stable.
    """

    path: str
    content_hash: str
    width: int
    height: int

    def validate(self) -> None:
        _require(bool(self.path), self.path or "<empty>", "image path is empty")
        _require(not os.path.isabs(self.path), self.path, "image path must be relative")
        _require(
            isinstance(self.content_hash, str) and len(self.content_hash) == 64
            and all(c in "0123456789abcdef" for c in self.content_hash),
            self.path,
            "content_hash must be a lowercase sha256 hex digest",
        )
        _require(int(self.width) >= 1, self.path, "width must be >= 1")
        _require(int(self.height) >= 1, self.path, "height must be >= 1")

    def resolve(self, root: str | Path) -> Path:
        return Path(root) / self.path

    def to_record(self) -> dict:
        return {
            "path": self.path,
            "content_hash": self.content_hash,
            "width": self.width,
            "height": self.height,
        }

    @classmethod
    def from_record(cls, obj: dict) -> "ImageRef":
        return cls(
            path=str(obj["path"]),
            content_hash=str(obj["content_hash"]),
            width=int(obj["width"]),
            height=int(obj["height"]),
        )


@dataclass(frozen=True)
class BenchmarkSample:
    """One evaluation triplet: source image, instruction pair, ground truth."""

    sample_id: str
    source: ImageRef
    src_emotion: EmotionLabel
    trg_emotion: EmotionLabel
    simple_instruction: str
    dense_instruction: str | None
    ground_truth: ImageRef

    def validate(self) -> None:
        _require(bool(self.sample_id), "<sample>", "sample_id is empty")
        self.source.validate()
        self.ground_truth.validate()
        _require(
            self.src_emotion != self.trg_emotion,
            self.sample_id,
            "src_emotion equals trg_emotion",
        )
        expected = render_instruction(self.src_emotion, self.trg_emotion)
        _require(
            self.simple_instruction == expected,
            self.sample_id,
            f"simple_instruction must be {expected!r}",
        )
        if self.dense_instruction is not None:
            _require(
                bool(self.dense_instruction.strip()),
                self.sample_id,
                "dense_instruction present but blank",
            )
        _require(
            (self.ground_truth.width, self.ground_truth.height)
            == (self.source.width, self.source.height),
            self.sample_id,
            "ground_truth dimensions differ from source dimensions",
        )

    def instruction(self, granularity: Granularity) -> str:
        if granularity is Granularity.SIMPLE:
            return self.simple_instruction
        if self.dense_instruction is None:
            raise InvariantViolation(self.sample_id, "sample has no dense_instruction")
        return self.dense_instruction

    def to_record(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "sample_id": self.sample_id,
            "source": self.source.to_record(),
            "src_emotion": self.src_emotion.value,
            "trg_emotion": self.trg_emotion.value,
            "simple_instruction": self.simple_instruction,
            "dense_instruction": self.dense_instruction,
            "ground_truth": self.ground_truth.to_record(),
        }

    @classmethod
    def from_record(cls, obj: dict) -> "BenchmarkSample":
        return cls(
            sample_id=str(obj["sample_id"]),
            source=ImageRef.from_record(obj["source"]),
            src_emotion=EmotionLabel.parse(obj["src_emotion"]),
            trg_emotion=EmotionLabel.parse(obj["trg_emotion"]),
            simple_instruction=str(obj["simple_instruction"]),
            dense_instruction=(
                None if obj.get("dense_instruction") is None
                else str(obj["dense_instruction"])
            ),
            ground_truth=ImageRef.from_record(obj["ground_truth"]),
        )


@dataclass(frozen=True)
class EditResult:
    """One model output for one benchmark sample at one instruction granularity."""

    sample_id: str
    model_id: str
    granularity: Granularity
    edited: ImageRef

    def validate(self) -> None:
        _require(bool(self.sample_id), "<result>", "sample_id is empty")
        _require(bool(self.model_id), self.sample_id, "model_id is empty")
        self.edited.validate()

    def to_record(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "sample_id": self.sample_id,
            "model_id": self.model_id,
            "granularity": self.granularity.value,
            "edited": self.edited.to_record(),
        }

    @classmethod
    def from_record(cls, obj: dict) -> "EditResult":
        return cls(
            sample_id=str(obj["sample_id"]),
            model_id=str(obj["model_id"]),
            granularity=Granularity.parse(obj["granularity"]),
            edited=ImageRef.from_record(obj["edited"]),
        )


def _in_unit(value: float) -> bool:
    return math.isfinite(value) and 0.0 <= value <= 1.0


@dataclass(frozen=True)
class ScoreCard:
    """All raw sub-metrics and derived scores for one (sample, model) pair.

    Raw values keep their native scales (cosine, pixel RMSE, 0-10 judge
    integers, distance ratio); the ``*01`` fields are the unit-interval
    normalizations that enter the three dimension scores, and ``fed`` is
    always their product.
    """

    sample_id: str
    model_id: str
    granularity: Granularity
    id_raw: float
    bg_rmse: float
    pq_raw: int
    sc_raw: int
    gta_raw: int
    reg_ratio: float
    id01: float
    bg01: float
    pq01: float
    sc01: float
    gta01: float
    s_fid: float
    s_align: float
    s_reg: float
    fed: float

    def validate(self) -> None:
        sid = self.sample_id
        _require(bool(sid), "<scorecard>", "sample_id is empty")
        _require(bool(self.model_id), sid, "model_id is empty")
        _require(-1.0 <= self.id_raw <= 1.0, sid, "id_raw outside [-1, 1]")
        _require(self.bg_rmse >= 0.0, sid, "bg_rmse negative")
        for name in ("pq_raw", "sc_raw", "gta_raw"):
            value = getattr(self, name)
            _require(
                isinstance(value, int) and 0 <= value <= 10,
                sid,
                f"{name} must be an integer in 0..10",
            )
        _require(self.reg_ratio >= 0.0, sid, "reg_ratio negative")
        for name in ("id01", "bg01", "pq01", "sc01", "gta01",
                     "s_fid", "s_align", "s_reg", "fed"):
            _require(_in_unit(getattr(self, name)), sid, f"{name} outside [0, 1]")
        product = self.s_fid * self.s_align * self.s_reg
        _require(
            abs(self.fed - product) <= FED_PRODUCT_TOL,
            sid,
            f"fed {self.fed!r} differs from s_fid*s_align*s_reg {product!r}",
        )

    def to_record(self) -> dict:
        obj: dict[str, Any] = {"schema_version": SCHEMA_VERSION}
        for f in fields(self):
            value = getattr(self, f.name)
            obj[f.name] = value.value if isinstance(value, Enum) else value
        return obj

    @classmethod
    def from_record(cls, obj: dict) -> "ScoreCard":
        return cls(
            sample_id=str(obj["sample_id"]),
            model_id=str(obj["model_id"]),
            granularity=Granularity.parse(obj["granularity"]),
            id_raw=float(obj["id_raw"]),
            bg_rmse=float(obj["bg_rmse"]),
            pq_raw=int(obj["pq_raw"]),
            sc_raw=int(obj["sc_raw"]),
            gta_raw=int(obj["gta_raw"]),
            reg_ratio=float(obj["reg_ratio"]),
            id01=float(obj["id01"]),
            bg01=float(obj["bg01"]),
            pq01=float(obj["pq01"]),
            sc01=float(obj["sc01"]),
            gta01=float(obj["gta01"]),
            s_fid=float(obj["s_fid"]),
            s_align=float(obj["s_align"]),
            s_reg=float(obj["s_reg"]),
            fed=float(obj["fed"]),
        )


@dataclass(frozen=True)
class FailureRecord:
    """Why one unit of work was skipped instead of producing output.

    Failed units are surfaced, never silently folded into aggregates.
    """

    subject_id: str
    model_id: str | None
    granularity: str | None
    stage: str
    reason: str

    def validate(self) -> None:
        _require(bool(self.subject_id), "<failure>", "subject_id is empty")
        _require(bool(self.stage), self.subject_id, "stage is empty")
        _require(bool(self.reason), self.subject_id, "reason is empty")

    def to_record(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "subject_id": self.subject_id,
            "model_id": self.model_id,
            "granularity": self.granularity,
            "stage": self.stage,
            "reason": self.reason,
        }

    @classmethod
    def from_record(cls, obj: dict) -> "FailureRecord":
        return cls(
            subject_id=str(obj["subject_id"]),
            model_id=None if obj.get("model_id") is None else str(obj["model_id"]),
            granularity=None if obj.get("granularity") is None else str(obj["granularity"]),
            stage=str(obj["stage"]),
            reason=str(obj["reason"]),
        )


# --- manifest IO ----------------------------------------------------------------

# kind -> record class; other modules register their own kinds on import.
MANIFEST_KINDS: dict[str, type] = {
    "benchmark": BenchmarkSample,
    "results": EditResult,
    "scorecards": ScoreCard,
    "failures": FailureRecord,
}


def register_kind(kind: str, record_cls: type) -> None:
    existing = MANIFEST_KINDS.get(kind)
    if existing is not None and existing is not record_cls:
        raise ValueError(f"manifest kind {kind!r} already registered")
    MANIFEST_KINDS[kind] = record_cls


def _record_class(kind: str) -> type:
    try:
        return MANIFEST_KINDS[kind]
    except KeyError:
        raise ValueError(f"unknown manifest kind {kind!r}") from None


def encode_record(record: Any) -> str:
    """Serialize one record to its canonical single-line JSON form."""
    return json.dumps(record.to_record(), separators=(",", ":"), ensure_ascii=False)


def load_manifest(path: str | Path, kind: str) -> list:
    """Read every record of the declared kind from a line-delimited manifest.

    Order is preserved. Whitespace-only lines are skipped. Raises
    MalformedRecord with the 1-based line number for unparsable lines and
    InvariantViolation for records that parse but break their own rules.
    """
    record_cls = _record_class(kind)
    path = Path(path)
    if not path.is_file():
        raise MissingFile(str(path))
    records = []
    with open(path, "r", encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedRecord(line_no, f"invalid JSON: {exc.msg}") from None
            if not isinstance(obj, dict):
                raise MalformedRecord(line_no, "record is not a JSON object")
            version = obj.get("schema_version", SCHEMA_VERSION)
            if version != SCHEMA_VERSION:
                raise MalformedRecord(line_no, f"unsupported schema_version {version!r}")
            try:
                record = record_cls.from_record(obj)
            except (KeyError, TypeError, ValueError) as exc:
                raise MalformedRecord(line_no, f"bad {kind} record: {exc}") from None
            record.validate()
            records.append(record)
    return records


def save_manifest(records: Sequence, path: str | Path) -> None:
    """Write records as one JSON line each, atomically (tmp file + rename)."""
    path = Path(path)
    for record in records:
        record.validate()
    tmp = path.with_name(path.name + ".tmp")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(tmp, "w", encoding="utf-8") as handle:
            for record in records:
                handle.write(encode_record(record) + "\n")
        os.replace(tmp, path)
    except OSError as exc:
        try:
            tmp.unlink(missing_ok=True)
        except OSError:
            pass
        raise WriteFailure(f"cannot write manifest {path}: {exc}") from exc


def append_manifest(records: Iterable, path: str | Path) -> None:
    """Append records to a manifest; single-writer, append-only discipline."""
    path = Path(path)
    materialized = list(records)
    for record in materialized:
        record.validate()
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "a", encoding="utf-8") as handle:
            for record in materialized:
                handle.write(encode_record(record) + "\n")
            handle.flush()
            os.fsync(handle.fileno())
    except OSError as exc:
        raise WriteFailure(f"cannot append to manifest {path}: {exc}") from exc


def validate_results_against(
    results: Sequence[EditResult], benchmark: Sequence[BenchmarkSample]
) -> None:
    """Reject results whose sample_id does not resolve in the benchmark."""
    known = {sample.sample_id for sample in benchmark}
    for result in results:
        if result.sample_id not in known:
            raise InvariantViolation(
                result.sample_id, f"no such sample in benchmark (model {result.model_id})"
            )
