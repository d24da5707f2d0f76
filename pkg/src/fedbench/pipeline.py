"""Cascaded benchmark-construction engine.

Five stages turn labeled source portraits into human-verification tasks:

1. screen     - pluggable predicate hooks drop unusable sources
2. generate   - the editor produces one candidate per non-source emotion
3. filter     - a classifier ensemble votes on the candidate's polarity;
                the candidate passes only when the plurality matches the
                target emotion's polarity
4. rank       - per (source, target emotion) group, identity cosine and
                background RMSE are min-max normalized and summed; only
                the top two candidates survive
5. handoff    - survivors get a reference caption and become tasks

Every candidate's fate lands in an audit log, so emitted + dropped always
equals generated.
"""

from __future__ import annotations

import dataclasses
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import prompts
from .errors import (
    EmptyGroup,
    FedError,
    InvariantViolation,
    JudgeParseFailure,
    MixedGranularity,
)
from .images import load_ref, write_image
from .metrics import compute_bg_rmse, compute_id
from .records import (
    SCHEMA_VERSION,
    CoarseLabel,
    EmotionLabel,
    FailureRecord,
    ImageRef,
    coarse_map,
    register_kind,
    render_instruction,
)
from .tasks import VerificationTask

RETAIN_TOP = 2


class Tie:
    """Sentinel returned by vote() when the top count is shared."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "TIE"


TIE = Tie()


@dataclass(frozen=True)
class SourceRecord:
    """One labeled source portrait entering the pipeline."""

    source_id: str
    image: ImageRef
    labeled_emotion: EmotionLabel
    provenance: str = ""

    def validate(self) -> None:
        if not self.source_id:
            raise InvariantViolation("<source>", "source_id is empty")
        self.image.validate()

    def to_record(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "source_id": self.source_id,
            "image": self.image.to_record(),
            "labeled_emotion": self.labeled_emotion.value,
            "provenance": self.provenance,
        }

    @classmethod
    def from_record(cls, obj: dict) -> "SourceRecord":
        return cls(
            source_id=str(obj["source_id"]),
            image=ImageRef.from_record(obj["image"]),
            labeled_emotion=EmotionLabel.parse(obj["labeled_emotion"]),
            provenance=str(obj.get("provenance", "")),
        )


@dataclass(frozen=True)
class CandidateRecord:
    """One generated candidate and everything the pipeline learned about it."""

    candidate_id: str
    source_id: str
    candidate: ImageRef
    trg_emotion: EmotionLabel
    votes: tuple[tuple[str, str | None], ...] = ()  # (classifier key, label or abstent)
    voted_label: CoarseLabel | None = None
    passed_expression_filter: bool = False
    s_id_raw: float | None = None
    s_bg_raw: float | None = None
    s_total: float | None = None
    rank: int | None = None
    retained: bool = False

    def validate(self) -> None:
        if not self.candidate_id:
            raise InvariantViolation("<candidate>", "candidate_id is empty")
        self.candidate.validate()
        if self.passed_expression_filter and self.voted_label != coarse_map(self.trg_emotion):
            raise InvariantViolation(
                self.candidate_id,
                "passed filter but voted_label differs from the target polarity",
            )
        if self.rank is not None and self.rank < 1:
            raise InvariantViolation(self.candidate_id, "rank must start at 1")

    def to_record(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "candidate_id": self.candidate_id,
            "source_id": self.source_id,
            "candidate": self.candidate.to_record(),
            "trg_emotion": self.trg_emotion.value,
            "votes": [[key, label] for key, label in self.votes],
            "voted_label": None if self.voted_label is None else self.voted_label.value,
            "passed_expression_filter": self.passed_expression_filter,
            "s_id_raw": self.s_id_raw,
            "s_bg_raw": self.s_bg_raw,
            "s_total": self.s_total,
            "rank": self.rank,
            "retained": self.retained,
        }

    @classmethod
    def from_record(cls, obj: dict) -> "CandidateRecord":
        return cls(
            candidate_id=str(obj["candidate_id"]),
            source_id=str(obj["source_id"]),
            candidate=ImageRef.from_record(obj["candidate"]),
            trg_emotion=EmotionLabel.parse(obj["trg_emotion"]),
            votes=tuple((str(k), None if v is None else str(v)) for k, v in obj.get("votes", [])),
            voted_label=(
                None if obj.get("voted_label") is None
                else CoarseLabel.parse(obj["voted_label"])
            ),
            passed_expression_filter=bool(obj.get("passed_expression_filter", False)),
            s_id_raw=obj.get("s_id_raw"),
            s_bg_raw=obj.get("s_bg_raw"),
            s_total=obj.get("s_total"),
            rank=obj.get("rank"),
            retained=bool(obj.get("retained", False)),
        )


@dataclass(frozen=True)
class VotingConfig:
    """How the expression filter votes.

    Coarse polarity voting is the default; fine mode (plurality over the
    seven labels must equal the target emotion) is kept for ablations.
    """

    granularity: str = "coarse"
    ensemble: tuple[str, ...] = ()

    def __post_init__(self):
        if self.granularity not in ("fine", "coarse"):
            raise ValueError(f"granularity must be fine|coarse, got {self.granularity!r}")
        if self.ensemble and (len(self.ensemble) < 3 or len(self.ensemble) % 2 == 0):
            raise ValueError("ensemble size must be odd and >= 3")


@dataclass(frozen=True)
class PipelineConfig:
    voting: VotingConfig = VotingConfig()
    rank_weights: tuple[float, float] = (1.0, 1.0)  # (identity, background)
    min_resolution: int = 8
    candidates_per_emotion: int = 1

    def __post_init__(self):
        if self.min_resolution < 1:
            raise ValueError("min_resolution must be >= 1")
        if self.candidates_per_emotion < 1:
            raise ValueError("candidates_per_emotion must be >= 1")
        if any(w < 0 for w in self.rank_weights):
            raise ValueError("rank weights must be >= 0")


@dataclass(frozen=True)
class AuditEntry:
    """One line of the pipeline audit log."""

    source_id: str
    stage: str
    action: str  # generated | drop | emit | error
    reason: str
    candidate_id: str | None = None

    def validate(self) -> None:
        if not self.source_id or not self.stage or not self.action:
            raise InvariantViolation(self.source_id or "<audit>", "incomplete audit entry")

    def to_record(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "source_id": self.source_id,
            "stage": self.stage,
            "action": self.action,
            "reason": self.reason,
            "candidate_id": self.candidate_id,
        }

    @classmethod
    def from_record(cls, obj: dict) -> "AuditEntry":
        return cls(
            source_id=str(obj["source_id"]),
            stage=str(obj["stage"]),
            action=str(obj["action"]),
            reason=str(obj["reason"]),
            candidate_id=None if obj.get("candidate_id") is None else str(obj["candidate_id"]),
        )


register_kind("sources", SourceRecord)
register_kind("candidates", CandidateRecord)
register_kind("audit", AuditEntry)


# --- voting -----------------------------------------------------------------------


def vote(labels: Sequence[EmotionLabel | CoarseLabel]):
    """Plurality label of a non-empty, single-granularity ballot, or TIE."""
    if not labels:
        raise ValueError("empty ballot")
    kinds = {type(label) for label in labels}
    if len(kinds) > 1:
        raise MixedGranularity(f"mixed label kinds in one ballot: {sorted(k.__name__ for k in kinds)}")
    if kinds not in ({EmotionLabel}, {CoarseLabel}):
        raise MixedGranularity(f"ballot of non-label values: {kinds}")
    counts = Counter(labels)
    ranked = counts.most_common()
    if len(ranked) > 1 and ranked[0][1] == ranked[1][1]:
        return TIE
    return ranked[0][0]


# --- stage 2: candidate generation ---------------------------------------------------


def candidate_emotions(src_emotion: EmotionLabel) -> list[EmotionLabel]:
    return [label for label in EmotionLabel if label != src_emotion]


def generate_candidates(
    source: SourceRecord,
    backends,
    *,
    source_root: str | Path,
    out_dir: str | Path,
    round_idx: int = 0,
) -> tuple[list[CandidateRecord], list[FailureRecord]]:
    """One candidate per non-source emotion; editor failures are recorded
    and do not stop the remaining emotions."""
    out_dir = Path(out_dir)
    image = load_ref(source.image, source_root)
    candidates: list[CandidateRecord] = []
    failures: list[FailureRecord] = []
    suffix = f".r{round_idx}" if round_idx else ""
    for trg in candidate_emotions(source.labeled_emotion):
        candidate_id = f"{source.source_id}.{trg.value}{suffix}"
        instruction = render_instruction(source.labeled_emotion, trg)
        try:
            edited = backends.edit_image(image, instruction)
        except FedError as exc:
            failures.append(
                FailureRecord(
                    subject_id=candidate_id,
                    model_id=None,
                    granularity=None,
                    stage="generate",
                    reason=f"{type(exc).__name__}: {exc}",
                )
            )
            continue
        ref = write_image(edited, out_dir / "candidates" / f"{candidate_id}.png", out_dir)
        candidates.append(
            CandidateRecord(
                candidate_id=candidate_id,
                source_id=source.source_id,
                candidate=ref,
                trg_emotion=trg,
            )
        )
    return candidates, failures


# --- stage 3: expression filter ------------------------------------------------------


def expression_filter(
    candidate: CandidateRecord,
    voting_config: VotingConfig,
    backends,
    *,
    root: str | Path,
) -> CandidateRecord:
    """Collect one vote per ensemble member and decide pass/fail.

    Classifier failures become abstentions; if abstentions leave an even
    number of valid votes the odd-ensemble guarantee is broken and the
    candidate fails closed. Ties fail closed too.
    """
    members = backends.classifiers
    if len(members) < 3 or len(members) % 2 == 0:
        raise ValueError(f"classifier ensemble must be odd and >= 3, have {len(members)}")
    if voting_config.ensemble and len(voting_config.ensemble) != len(members):
        raise ValueError("voting config ensemble does not match configured classifiers")

    image = load_ref(candidate.candidate, root)
    granularity = voting_config.granularity
    votes: list[tuple[str, str | None]] = []
    ballot = []
    for member in members:
        try:
            label = member.classify_expression(image, granularity)
            votes.append((member.backend_id.key(), label.value))
            ballot.append(label)
        except FedError:
            votes.append((member.backend_id.key(), None))

    voted_label: CoarseLabel | None = None  # losing pluralities kept for the audit trail
    passed = False
    if ballot and len(ballot) % 2 == 1:
        outcome = vote(ballot)
        if outcome is not TIE:
            if granularity == "coarse":
                voted_label = outcome
                passed = outcome == coarse_map(candidate.trg_emotion)
            else:
                voted_label = coarse_map(outcome)
                passed = outcome == candidate.trg_emotion
    updated = dataclasses.replace(
        candidate,
        votes=tuple(votes),
        voted_label=voted_label,
        passed_expression_filter=passed,
    )
    updated.validate()
    return updated


# --- stage 4: fidelity ranking --------------------------------------------------------


def _minmax(values: list[float]) -> list[float]:
    lo, hi = min(values), max(values)
    if hi - lo <= 0.0:
        return [1.0] * len(values)  # degenerate axis: everyone is equally good
    return [(v - lo) / (hi - lo) for v in values]


def rank_preservation(
    entries: Sequence[tuple[float, float, str]],
    weights: tuple[float, float] = (1.0, 1.0),
) -> list[tuple[int, float]]:
    """Pure ranking core: score (id_cosine, bg_rmse, tie_break) triples.

    Background RMSE is negated before min-max so higher always means
    better preserved; a zero-range axis contributes 1.0 for everyone.
    Returns (input index, combined score) pairs in descending rank order,
    ties broken ascending on the tie-break string.
    """
    if not entries:
        raise EmptyGroup("nothing to rank")
    ids = [e[0] for e in entries]
    rmses = [e[1] for e in entries]
    norm_id = _minmax(ids)
    norm_bg = _minmax([-r for r in rmses])
    w_id, w_bg = weights
    totals = [w_id * a + w_bg * b for a, b in zip(norm_id, norm_bg)]
    order = sorted(range(len(entries)), key=lambda i: (-totals[i], entries[i][2]))
    return [(i, totals[i]) for i in order]


def fidelity_rank(
    source_image: np.ndarray,
    group: Sequence[CandidateRecord],
    backends,
    *,
    root: str | Path,
    weights: tuple[float, float] = (1.0, 1.0),
) -> list[CandidateRecord]:
    """Rank one (source, target emotion) candidate group by preservation.

    Identity cosine and negated background RMSE are min-max normalized
    within the group (a degenerate axis scores 1.0 for everyone), then
    combined with the given weights. Sort is descending by the combined
    score with the candidate content hash as the deterministic tie-break;
    the top two are flagged as retained.
    """
    if not group:
        raise EmptyGroup("fidelity_rank needs at least one candidate")
    region = backends.locate_face(source_image)
    entries: list[tuple[float, float, str]] = []
    for candidate in group:
        image = load_ref(candidate.candidate, root)
        entries.append(
            (
                compute_id(source_image, image, backends),
                compute_bg_rmse(source_image, image, region),
                candidate.candidate.content_hash,
            )
        )
    ranked = []
    for pos, (idx, total) in enumerate(rank_preservation(entries, weights)):
        candidate = dataclasses.replace(
            group[idx],
            s_id_raw=entries[idx][0],
            s_bg_raw=entries[idx][1],
            s_total=total,
            rank=pos + 1,
            retained=pos < RETAIN_TOP,
        )
        candidate.validate()
        ranked.append(candidate)
    return ranked


# --- stage 5 helpers -------------------------------------------------------------------


def generate_dense_instruction(src_image: np.ndarray, gt_image: np.ndarray, backends) -> str:
    """Fine-grained instruction from the visual difference analyzer prompt
    over the ordered pair (source, ground truth)."""
    prompt = prompts.render("dense_instruction")
    text = backends.complete(prompt, [src_image, gt_image])
    if not text or not text.strip():
        raise JudgeParseFailure("difference analyzer returned an empty instruction")
    return text.strip()


def generate_caption(image: np.ndarray, backends) -> str:
    prompt = prompts.render("expression_caption")
    text = backends.complete(prompt, [image])
    if not text or not text.strip():
        raise JudgeParseFailure("caption backend returned empty text")
    return text.strip()


# --- source screening --------------------------------------------------------------------

ScreenHook = Callable[[SourceRecord, "np.ndarray | None"], "str | None"]


def resolution_hook(min_resolution: int) -> ScreenHook:
    def hook(source: SourceRecord, image) -> str | None:
        if min(source.image.width, source.image.height) < min_resolution:
            return (
                f"resolution {source.image.width}x{source.image.height} "
                f"below minimum {min_resolution}"
            )
        return None

    return hook


def default_screen_hooks(config: PipelineConfig) -> list[ScreenHook]:
    return [resolution_hook(config.min_resolution)]


# --- the full run ---------------------------------------------------------------------------


@dataclass
class PipelineResult:
    tasks: list[VerificationTask] = field(default_factory=list)
    candidates: list[CandidateRecord] = field(default_factory=list)
    audit: list[AuditEntry] = field(default_factory=list)
    n_generated: int = 0
    n_emitted: int = 0
    n_dropped: int = 0


def run_pipeline(
    sources: Sequence[SourceRecord],
    backends,
    config: PipelineConfig = PipelineConfig(),
    *,
    source_root: str | Path,
    out_dir: str | Path,
    screen_hooks: Sequence[ScreenHook] | None = None,
    max_workers: int = 4,
) -> PipelineResult:
    """Run all five stages over every source, with per-source fault isolation.

    Re-running against a warm call cache performs zero backend invocations
    and reproduces the same bytes: every stage's model calls are content
    addressed.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    hooks = list(screen_hooks) if screen_hooks is not None else default_screen_hooks(config)

    def process(source: SourceRecord):
        audit: list[AuditEntry] = []
        tasks: list[VerificationTask] = []
        final_candidates: list[CandidateRecord] = []
        sid = source.source_id
        try:
            source.validate()
            # stage 1: screening
            try:
                image = load_ref(source.image, source_root)
            except FedError as exc:
                audit.append(AuditEntry(sid, "screen", "drop", f"undecodable: {exc}"))
                return tasks, final_candidates, audit
            for hook in hooks:
                reason = hook(source, image)
                if reason:
                    audit.append(AuditEntry(sid, "screen", "drop", reason))
                    return tasks, final_candidates, audit
            # tasks must be self-contained relative to out_dir
            source_ref = write_image(image, out_dir / "sources" / f"{sid}.png", out_dir)

            # stage 2: candidate generation
            candidates: list[CandidateRecord] = []
            for round_idx in range(config.candidates_per_emotion):
                generated, failures = generate_candidates(
                    source, backends, source_root=source_root,
                    out_dir=out_dir, round_idx=round_idx,
                )
                candidates.extend(generated)
                for failure in failures:
                    audit.append(
                        AuditEntry(sid, "generate", "error", failure.reason,
                                   candidate_id=failure.subject_id)
                    )
            for candidate in candidates:
                audit.append(
                    AuditEntry(sid, "generate", "generated", "candidate generated",
                               candidate_id=candidate.candidate_id)
                )

            # stage 3: expression filter
            filtered: list[CandidateRecord] = []
            for candidate in candidates:
                updated = expression_filter(candidate, config.voting, backends, root=out_dir)
                filtered.append(updated)
                if not updated.passed_expression_filter:
                    label = updated.voted_label.value if updated.voted_label else "tie/abstain"
                    audit.append(
                        AuditEntry(sid, "filter", "drop",
                                   f"plurality {label} != required "
                                   f"{coarse_map(candidate.trg_emotion).value}",
                                   candidate_id=candidate.candidate_id)
                    )

            # stage 4: fidelity ranking per (source, target emotion) group
            passed = [c for c in filtered if c.passed_expression_filter]
            groups: dict[EmotionLabel, list[CandidateRecord]] = {}
            for candidate in passed:
                groups.setdefault(candidate.trg_emotion, []).append(candidate)
            retained_by_emotion: dict[EmotionLabel, list[CandidateRecord]] = {}
            for trg in sorted(groups, key=lambda e: e.value):
                ranked = fidelity_rank(
                    image, groups[trg], backends, root=out_dir, weights=config.rank_weights
                )
                kept = []
                for candidate in ranked:
                    if candidate.retained:
                        kept.append(candidate)
                    else:
                        audit.append(
                            AuditEntry(sid, "rank", "drop",
                                       f"rank {candidate.rank} of {len(ranked)} "
                                       f"(keep top {RETAIN_TOP})",
                                       candidate_id=candidate.candidate_id)
                        )
                retained_by_emotion[trg] = kept
                final_candidates.extend(ranked)
            final_candidates.extend(c for c in filtered if not c.passed_expression_filter)

            # stage 5: handoff to human verification
            for trg in sorted(retained_by_emotion, key=lambda e: e.value):
                kept = retained_by_emotion[trg]
                if not kept:
                    continue
                captions = []
                for idx, candidate in enumerate(kept, start=1):
                    cand_image = load_ref(candidate.candidate, out_dir)
                    captions.append(f"Candidate {idx}: {generate_caption(cand_image, backends)}")
                task = VerificationTask(
                    task_id=f"vt-{sid}-{trg.value}",
                    source_id=sid,
                    source=source_ref,
                    src_emotion=source.labeled_emotion,
                    trg_emotion=trg,
                    candidates=tuple(c.candidate for c in kept),
                    reference_caption="\n".join(captions),
                )
                task.validate()
                tasks.append(task)
                for candidate in kept:
                    audit.append(
                        AuditEntry(sid, "handoff", "emit",
                                   f"verification task {task.task_id}",
                                   candidate_id=candidate.candidate_id)
                    )
        except FedError as exc:  # fault isolation: one broken source never aborts the run
            audit.append(AuditEntry(sid, "pipeline", "error", f"{type(exc).__name__}: {exc}"))
        return tasks, final_candidates, audit

    if max_workers > 1 and len(sources) > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            outcomes = list(pool.map(process, sources))
    else:
        outcomes = [process(source) for source in sources]

    result = PipelineResult()
    for tasks, candidates, audit in outcomes:
        result.tasks.extend(tasks)
        result.candidates.extend(candidates)
        result.audit.extend(audit)
    result.n_generated = sum(1 for a in result.audit if a.action == "generated")
    result.n_emitted = sum(1 for a in result.audit if a.action == "emit")
    result.n_dropped = sum(
        1 for a in result.audit if a.action == "drop" and a.candidate_id is not None
    )
    return result


def save_pipeline_outputs(result: PipelineResult, out_dir: str | Path) -> dict[str, Path]:
    """Write the pending-verification manifest, candidate records, and audit log."""
    from .records import save_manifest  # local import keeps module load light

    out_dir = Path(out_dir)
    paths = {
        "tasks": out_dir / "pending_tasks.manifest",
        "candidates": out_dir / "candidates.manifest",
        "audit": out_dir / "audit.log",
    }
    save_manifest(result.tasks, paths["tasks"])
    save_manifest(result.candidates, paths["candidates"])
    save_manifest(result.audit, paths["audit"])
    return paths
