"""Two-alternative forced-choice study: pair sampling, annotator consensus,
metric preferences, agreement accuracy, and score-ablation variants.

Agreement accuracy counts a metric's exact ties as half a match, the
standard unbiased 2AFC convention; majorities of three forced votes can
never tie, so the human side is always decisive.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

from .errors import (
    DuplicateAnnotator,
    InsufficientResults,
    InvariantViolation,
    MissingConsensus,
    NonFiniteValue,
    UnknownVariant,
    WrongVoteCount,
)
from .records import (
    SCHEMA_VERSION,
    EditResult,
    Granularity,
    ScoreCard,
    register_kind,
)

PERSPECTIVES = ("identity", "magnitude", "overall")

LEFT = "left"
RIGHT = "right"
TIE_PREF = "tie"

VARIANTS = ("full", "no_rule", "no_reg", "no_fidelity", "no_alignment", "no_model")


@dataclass(frozen=True)
class PairTask:
    """One sampled 2AFC comparison: two models' results for the same sample.

    Left/right assignment is randomized at sampling time and recorded here,
    so presentations replay exactly and position bias stays measurable.
    """

    pair_id: str
    sample_id: str
    granularity: Granularity
    left: EditResult
    right: EditResult

    def validate(self) -> None:
        if not self.pair_id:
            raise InvariantViolation("<pair>", "pair_id is empty")
        if self.left.model_id == self.right.model_id:
            raise InvariantViolation(self.pair_id, "left and right are the same model")
        if not (self.left.sample_id == self.right.sample_id == self.sample_id):
            raise InvariantViolation(self.pair_id, "sides do not share the pair's sample_id")
        if not (self.left.granularity == self.right.granularity == self.granularity):
            raise InvariantViolation(self.pair_id, "sides do not share the pair's granularity")
        self.left.validate()
        self.right.validate()

    def to_record(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "pair_id": self.pair_id,
            "sample_id": self.sample_id,
            "granularity": self.granularity.value,
            "left": self.left.to_record(),
            "right": self.right.to_record(),
        }

    @classmethod
    def from_record(cls, obj: dict) -> "PairTask":
        return cls(
            pair_id=str(obj["pair_id"]),
            sample_id=str(obj["sample_id"]),
            granularity=Granularity.parse(obj["granularity"]),
            left=EditResult.from_record(obj["left"]),
            right=EditResult.from_record(obj["right"]),
        )


@dataclass(frozen=True)
class PreferenceVote:
    """One forced choice (left or right, no abstain) on one pair+perspective."""

    pair_id: str
    annotator_id: str
    perspective: str
    choice: str

    def validate(self) -> None:
        if self.choice not in (LEFT, RIGHT):
            raise InvariantViolation(self.pair_id, f"choice must be left|right, got {self.choice!r}")
        if self.perspective not in PERSPECTIVES:
            raise InvariantViolation(self.pair_id, f"unknown perspective {self.perspective!r}")


@dataclass(frozen=True)
class MetricOrientation:
    name: str
    higher_is_better: bool


register_kind("pairs", PairTask)


# --- pair sampling ----------------------------------------------------------------


def sample_pairs(results: Sequence[EditResult], n: int, seed: int) -> list[PairTask]:
    """Sample n distinct pairs uniformly over all eligible (sample,
    model-pair, granularity) combinations, reproducibly from the seed."""
    by_key: dict[tuple[str, str], dict[str, EditResult]] = {}
    for result in results:
        slot = by_key.setdefault((result.sample_id, result.granularity.value), {})
        slot[result.model_id] = result

    eligible: list[tuple[str, str, str, str]] = []
    for (sample_id, granularity), models in sorted(by_key.items()):
        names = sorted(models)
        for i in range(len(names)):
            for j in range(i + 1, len(names)):
                eligible.append((sample_id, granularity, names[i], names[j]))

    if n > len(eligible):
        raise InsufficientResults(
            f"requested {n} pairs but only {len(eligible)} eligible combinations exist"
        )
    rng = random.Random(seed)
    chosen = rng.sample(eligible, n)
    pairs = []
    for idx, (sample_id, granularity, model_a, model_b) in enumerate(chosen):
        slot = by_key[(sample_id, granularity)]
        first, second = slot[model_a], slot[model_b]
        if rng.random() < 0.5:  # randomized, recorded presentation side
            first, second = second, first
        pair = PairTask(
            pair_id=f"pair-{idx:05d}",
            sample_id=sample_id,
            granularity=Granularity.parse(granularity),
            left=first,
            right=second,
        )
        pair.validate()
        pairs.append(pair)
    return pairs


# --- consensus ---------------------------------------------------------------------


def consensus(votes: Sequence[PreferenceVote]) -> str:
    """Majority choice of exactly three forced votes from distinct annotators."""
    if len(votes) != 3:
        raise WrongVoteCount(f"need exactly 3 votes, got {len(votes)}")
    annotators = {vote.annotator_id for vote in votes}
    if len(annotators) != 3:
        raise DuplicateAnnotator(f"3 votes but only {len(annotators)} distinct annotators")
    keys = {(vote.pair_id, vote.perspective) for vote in votes}
    if len(keys) != 1:
        raise ValueError(f"votes span multiple pair/perspective groups: {sorted(keys)}")
    for vote in votes:
        vote.validate()
    lefts = sum(1 for vote in votes if vote.choice == LEFT)
    return LEFT if lefts >= 2 else RIGHT


# --- metric preference and agreement --------------------------------------------------


def metric_preference(
    v_left: float, v_right: float, orientation: "bool | MetricOrientation"
) -> str:
    """Which side a metric prefers under its declared orientation; exact
    equality is a tie."""
    if not (math.isfinite(v_left) and math.isfinite(v_right)):
        raise NonFiniteValue(f"non-finite metric values ({v_left}, {v_right})")
    higher_is_better = (
        orientation.higher_is_better if isinstance(orientation, MetricOrientation)
        else bool(orientation)
    )
    if v_left == v_right:
        return TIE_PREF
    better_left = v_left > v_right if higher_is_better else v_left < v_right
    return LEFT if better_left else RIGHT


def agreement_accuracy(
    metric_prefs: Mapping[str, str], human_consensus: Mapping[str, str]
) -> float:
    """(matches + 0.5 * ties) / pairs, over identical pair coverage."""
    if set(metric_prefs) != set(human_consensus):
        missing = set(metric_prefs) ^ set(human_consensus)
        raise MissingConsensus(
            f"{len(missing)} pairs lack a metric preference or a consensus: "
            f"{sorted(missing)[:5]}"
        )
    if not metric_prefs:
        raise ValueError("no pairs to score")
    matches = 0.0
    for pair_id, pref in metric_prefs.items():
        if pref == TIE_PREF:
            matches += 0.5
        elif pref == human_consensus[pair_id]:
            matches += 1.0
    return matches / len(metric_prefs)


# --- score ablation variants ------------------------------------------------------------


def fed_variant(card: ScoreCard, variant: str) -> float:
    """Composite score with one family of terms removed.

    full          s_fid * s_align * s_reg
    no_rule       model-judged terms only: pq01 * mean(sc01, gta01)
    no_reg        s_fid * s_align
    no_fidelity   s_align * s_reg
    no_alignment  s_fid * s_reg
    no_model      rule-based terms only: mean(id01, bg01) * s_reg
    """
    if variant == "full":
        return card.s_fid * card.s_align * card.s_reg
    if variant == "no_rule":
        return card.pq01 * ((card.sc01 + card.gta01) / 2.0)
    if variant == "no_reg":
        return card.s_fid * card.s_align
    if variant == "no_fidelity":
        return card.s_align * card.s_reg
    if variant == "no_alignment":
        return card.s_fid * card.s_reg
    if variant == "no_model":
        return ((card.id01 + card.bg01) / 2.0) * card.s_reg
    raise UnknownVariant(variant)


# --- the study report ---------------------------------------------------------------------


@dataclass(frozen=True)
class MetricColumn:
    """Pluggable metric entry: how to read a comparable value off a ScoreCard."""

    name: str
    panel: str
    perspective: str
    higher_is_better: bool
    extract: Callable[[ScoreCard], float]


def default_metric_suite() -> list[MetricColumn]:
    suite = [
        MetricColumn("arcface_cosine", "identity", "identity", True, lambda c: c.id_raw),
        MetricColumn("expression_gain", "magnitude", "magnitude", True, lambda c: c.s_reg),
        MetricColumn("fed_score", "overall", "overall", True, lambda c: c.fed),
    ]
    for variant in VARIANTS:
        if variant == "full":
            continue
        suite.append(
            MetricColumn(
                f"fed_{variant}", "ablation", "overall", True,
                (lambda v: lambda c: fed_variant(c, v))(variant),
            )
        )
    suite.append(MetricColumn("fed_full", "ablation", "overall", True,
                              lambda c: fed_variant(c, "full")))
    return suite


@dataclass(frozen=True)
class ReportRow:
    panel: str
    metric: str
    perspective: str
    accuracy: float
    n_pairs: int

    def validate(self) -> None:
        if not 0.0 <= self.accuracy <= 1.0:
            raise InvariantViolation(self.metric, f"accuracy {self.accuracy} outside [0, 1]")

    def to_record(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "panel": self.panel,
            "metric": self.metric,
            "perspective": self.perspective,
            "accuracy": self.accuracy,
            "n_pairs": self.n_pairs,
        }

    @classmethod
    def from_record(cls, obj: dict) -> "ReportRow":
        return cls(
            panel=str(obj["panel"]),
            metric=str(obj["metric"]),
            perspective=str(obj["perspective"]),
            accuracy=float(obj["accuracy"]),
            n_pairs=int(obj["n_pairs"]),
        )


register_kind("study_report", ReportRow)


@dataclass
class StudyReport:
    rows: list[ReportRow]
    warnings: list[str]

    def render_markdown(self) -> str:
        lines = []
        for panel in ("identity", "magnitude", "overall", "ablation"):
            panel_rows = [row for row in self.rows if row.panel == panel]
            if not panel_rows:
                continue
            lines.append(f"### {panel}")
            lines.append("| metric | perspective | accuracy | pairs |")
            lines.append("| --- | --- | --- | --- |")
            for row in panel_rows:
                lines.append(
                    f"| {row.metric} | {row.perspective} | {row.accuracy:.4f} | {row.n_pairs} |"
                )
            lines.append("")
        for warning in self.warnings:
            lines.append(f"> warning: {warning}")
        return "\n".join(lines).rstrip() + "\n"


def preference_votes_from_log(vote_records: Sequence) -> list[PreferenceVote]:
    """Convert annotation-service pairwise vote records (task_id =
    "<pair_id>.<perspective>") into study votes; other kinds are skipped."""
    votes = []
    for record in vote_records:
        if getattr(record, "kind", None) != "pairwise":
            continue
        suffix = f".{record.perspective}"
        pair_id = record.task_id
        if pair_id.endswith(suffix):
            pair_id = pair_id[: -len(suffix)]
        vote = PreferenceVote(
            pair_id=pair_id,
            annotator_id=record.annotator_id,
            perspective=record.perspective,
            choice=record.choice,
        )
        vote.validate()
        votes.append(vote)
    return votes


def consensus_by_perspective(
    votes: Sequence[PreferenceVote],
) -> dict[str, dict[str, str]]:
    """Group votes and reduce each (pair, perspective) ballot to a consensus."""
    grouped: dict[tuple[str, str], list[PreferenceVote]] = {}
    for vote in votes:
        grouped.setdefault((vote.pair_id, vote.perspective), []).append(vote)
    out: dict[str, dict[str, str]] = {p: {} for p in PERSPECTIVES}
    for (pair_id, perspective), ballot in sorted(grouped.items()):
        out.setdefault(perspective, {})[pair_id] = consensus(ballot)
    return out


def run_study_report(
    pairs: Sequence[PairTask],
    votes: Sequence[PreferenceVote],
    scorecards: Sequence[ScoreCard],
    suite: Sequence[MetricColumn] | None = None,
) -> StudyReport:
    """One accuracy row per (metric, perspective) with consensus coverage.

    A perspective with no voted pairs drops its rows with a warning; a
    metric whose scorecards cannot cover a voted pair raises
    MissingConsensus rather than silently shrinking the denominator.
    """
    suite = list(suite) if suite is not None else default_metric_suite()
    pair_index = {pair.pair_id: pair for pair in pairs}
    card_index = {
        (card.sample_id, card.model_id, card.granularity.value): card for card in scorecards
    }
    by_perspective = consensus_by_perspective(votes)

    rows: list[ReportRow] = []
    warnings: list[str] = []
    for column in suite:
        consensus_map = by_perspective.get(column.perspective, {})
        if not consensus_map:
            warnings.append(
                f"{column.name}: no voted pairs for perspective {column.perspective!r}; row omitted"
            )
            continue
        prefs: dict[str, str] = {}
        for pair_id in consensus_map:
            pair = pair_index.get(pair_id)
            if pair is None:
                raise MissingConsensus(f"votes reference unknown pair {pair_id!r}")
            sides = []
            for side in (pair.left, pair.right):
                card = card_index.get((side.sample_id, side.model_id, side.granularity.value))
                if card is None:
                    raise MissingConsensus(
                        f"no scorecard for pair {pair_id} side "
                        f"({side.sample_id}, {side.model_id}, {side.granularity.value})"
                    )
                sides.append(column.extract(card))
            prefs[pair_id] = metric_preference(sides[0], sides[1], column.higher_is_better)
        row = ReportRow(
            panel=column.panel,
            metric=column.name,
            perspective=column.perspective,
            accuracy=agreement_accuracy(prefs, consensus_map),
            n_pairs=len(consensus_map),
        )
        row.validate()
        rows.append(row)
    return StudyReport(rows=rows, warnings=warnings)
