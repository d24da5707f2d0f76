"""Run editors over a benchmark and aggregate scorecards into leaderboards.

Aggregation averages the per-sample composite score (the per-sample
product is the protocol's unit of judgment; means of products are not
products of means). Failed samples are excluded from every mean but
reported in n_failed, so a crashing model gets neither an implicit zero
nor an implicit pass.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .errors import EmptyGroup, FedError, InvariantViolation
from .images import load_ref, write_image
from .records import (
    SCHEMA_VERSION,
    BenchmarkSample,
    EditResult,
    FailureRecord,
    Granularity,
    ScoreCard,
    register_kind,
)


@dataclass(frozen=True)
class LeaderboardRow:
    """Per-model aggregate of raw sub-metric means and the mean composite."""

    model_id: str
    granularity: Granularity
    mean_id_raw: float
    mean_bg_rmse: float
    mean_pq_raw: float
    mean_sc_raw: float
    mean_gta_raw: float
    mean_reg_ratio: float
    mean_fed: float
    n_samples: int
    n_failed: int

    def validate(self) -> None:
        if not self.model_id:
            raise InvariantViolation("<row>", "model_id is empty")
        if not 0.0 <= self.mean_fed <= 1.0:
            raise InvariantViolation(self.model_id, f"mean_fed {self.mean_fed} outside [0, 1]")
        if self.n_failed < 0 or self.n_samples < self.n_failed:
            raise InvariantViolation(self.model_id, "failure count exceeds sample count")
        if self.n_samples - self.n_failed < 1:
            raise InvariantViolation(self.model_id, "row has no successfully scored samples")

    def to_record(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "model_id": self.model_id,
            "granularity": self.granularity.value,
            "mean_id_raw": self.mean_id_raw,
            "mean_bg_rmse": self.mean_bg_rmse,
            "mean_pq_raw": self.mean_pq_raw,
            "mean_sc_raw": self.mean_sc_raw,
            "mean_gta_raw": self.mean_gta_raw,
            "mean_reg_ratio": self.mean_reg_ratio,
            "mean_fed": self.mean_fed,
            "n_samples": self.n_samples,
            "n_failed": self.n_failed,
        }

    @classmethod
    def from_record(cls, obj: dict) -> "LeaderboardRow":
        return cls(
            model_id=str(obj["model_id"]),
            granularity=Granularity.parse(obj["granularity"]),
            mean_id_raw=float(obj["mean_id_raw"]),
            mean_bg_rmse=float(obj["mean_bg_rmse"]),
            mean_pq_raw=float(obj["mean_pq_raw"]),
            mean_sc_raw=float(obj["mean_sc_raw"]),
            mean_gta_raw=float(obj["mean_gta_raw"]),
            mean_reg_ratio=float(obj["mean_reg_ratio"]),
            mean_fed=float(obj["mean_fed"]),
            n_samples=int(obj["n_samples"]),
            n_failed=int(obj["n_failed"]),
        )


register_kind("leaderboard", LeaderboardRow)


# --- running a model over the benchmark ------------------------------------------------


def run_model(
    samples: Sequence[BenchmarkSample],
    backends,
    granularity: Granularity,
    *,
    model_id: str | None = None,
    benchmark_root: str | Path,
    out_dir: str | Path,
    max_workers: int = 4,
) -> tuple[list[EditResult], list[FailureRecord]]:
    """One EditResult per sample via the configured editor.

    Editor calls are content addressed, so rerunning against a warm cache
    re-invokes nothing. Failures (including samples missing the requested
    instruction granularity) become records, not aborts.
    """
    out_dir = Path(out_dir)
    name = model_id or backends.editor.backend_id.name

    def one(sample: BenchmarkSample):
        try:
            instruction = sample.instruction(granularity)
            source = load_ref(sample.source, benchmark_root)
            edited = backends.edit_image(source, instruction)
            ref = write_image(
                edited,
                out_dir / name / granularity.value / f"{sample.sample_id}.png",
                out_dir,
            )
            result = EditResult(
                sample_id=sample.sample_id,
                model_id=name,
                granularity=granularity,
                edited=ref,
            )
            result.validate()
            return result
        except FedError as exc:
            return FailureRecord(
                subject_id=sample.sample_id,
                model_id=name,
                granularity=granularity.value,
                stage="edit",
                reason=f"{type(exc).__name__}: {exc}",
            )

    if max_workers > 1 and len(samples) > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            outcomes = list(pool.map(one, samples))
    else:
        outcomes = [one(sample) for sample in samples]
    results = [o for o in outcomes if isinstance(o, EditResult)]
    failures = [o for o in outcomes if isinstance(o, FailureRecord)]
    results.sort(key=lambda r: r.sample_id)
    failures.sort(key=lambda f: f.subject_id)
    return results, failures


# --- aggregation --------------------------------------------------------------------------


def _mean(values: list[float]) -> float:
    return sum(values) / len(values)


def sort_rows(rows: Iterable[LeaderboardRow]) -> list[LeaderboardRow]:
    """Descending by mean composite score; ties break on model_id within the
    same descending sort, keeping ranking a pure function of the rows."""
    return sorted(rows, key=lambda r: (r.mean_fed, r.model_id), reverse=True)


def aggregate(
    cards: Sequence[ScoreCard],
    failures: Sequence[FailureRecord] = (),
) -> list[LeaderboardRow]:
    """Arithmetic means of raw sub-metrics and of the per-sample composite,
    grouped by (model, granularity)."""
    if not cards:
        raise EmptyGroup("no scorecards to aggregate")
    groups: dict[tuple[str, str], list[ScoreCard]] = {}
    for card in cards:
        groups.setdefault((card.model_id, card.granularity.value), []).append(card)
    failure_counts: dict[tuple[str, str], int] = {}
    for failure in failures:
        key = (failure.model_id or "", failure.granularity or "")
        failure_counts[key] = failure_counts.get(key, 0) + 1

    rows = []
    for (model_id, granularity), group in groups.items():
        # canonical accumulation order: output is exactly permutation-invariant
        group.sort(key=lambda c: c.sample_id)
        n_failed = failure_counts.get((model_id, granularity), 0)
        row = LeaderboardRow(
            model_id=model_id,
            granularity=Granularity.parse(granularity),
            mean_id_raw=_mean([c.id_raw for c in group]),
            mean_bg_rmse=_mean([c.bg_rmse for c in group]),
            mean_pq_raw=_mean([float(c.pq_raw) for c in group]),
            mean_sc_raw=_mean([float(c.sc_raw) for c in group]),
            mean_gta_raw=_mean([float(c.gta_raw) for c in group]),
            mean_reg_ratio=_mean([c.reg_ratio for c in group]),
            mean_fed=_mean([c.fed for c in group]),
            n_samples=len(group) + n_failed,
            n_failed=n_failed,
        )
        row.validate()
        rows.append(row)
    return sort_rows(rows)


# --- rendering ------------------------------------------------------------------------------


@dataclass(frozen=True)
class LeaderboardFormat:
    """Decimal conventions per column; defaults mimic the usual table style
    (leading-dot two-decimal cosines, one-decimal judge means, three-decimal
    composite)."""

    id_decimals: int = 2
    bg_decimals: int = 1
    judge_decimals: int = 1
    reg_decimals: int = 2
    fed_decimals: int = 3
    strip_leading_zero: bool = True

    def dot(self, value: float, decimals: int) -> str:
        text = f"{value:.{decimals}f}"
        if self.strip_leading_zero and text.startswith("0."):
            return text[1:]
        if self.strip_leading_zero and text.startswith("-0."):
            return "-" + text[2:]
        return text


def render_leaderboard(
    rows: Sequence[LeaderboardRow],
    fmt: str = "markdown",
    style: LeaderboardFormat = LeaderboardFormat(),
) -> str:
    """One table per granularity present, sorted, with fixed formatting."""
    if not rows:
        raise EmptyGroup("no rows to render")
    if fmt not in ("markdown", "csv"):
        raise ValueError(f"format must be markdown|csv, got {fmt!r}")

    header = ["Method", "ID", "BG (lower is better)", "PQ", "SC", "GTA", "REG", "Score",
              "Samples", "Failed"]
    granularities = []
    for row in rows:
        if row.granularity not in granularities:
            granularities.append(row.granularity)

    def cells(row: LeaderboardRow) -> list[str]:
        return [
            row.model_id,
            style.dot(row.mean_id_raw, style.id_decimals),
            f"{row.mean_bg_rmse:.{style.bg_decimals}f}",
            f"{row.mean_pq_raw:.{style.judge_decimals}f}",
            f"{row.mean_sc_raw:.{style.judge_decimals}f}",
            f"{row.mean_gta_raw:.{style.judge_decimals}f}",
            f"{row.mean_reg_ratio:.{style.reg_decimals}f}",
            style.dot(row.mean_fed, style.fed_decimals),
            str(row.n_samples),
            str(row.n_failed),
        ]

    lines: list[str] = []
    for granularity in granularities:
        section = sort_rows(r for r in rows if r.granularity == granularity)
        if fmt == "markdown":
            lines.append(f"## {granularity.value} instructions")
            lines.append("| " + " | ".join(header) + " |")
            lines.append("|" + "|".join([" --- "] * len(header)) + "|")
            for row in section:
                lines.append("| " + " | ".join(cells(row)) + " |")
            lines.append("")
        else:
            lines.append(",".join(["granularity"] + header))
            for row in section:
                lines.append(",".join([granularity.value] + cells(row)))
    return "\n".join(lines).rstrip() + "\n"
