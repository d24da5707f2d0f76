"""Task queue, durable vote log, consensus finalization, and GT export.

State is event-sourced: the only mutable artifact is an append-only vote
log, and replaying it over the task manifests reconstructs exact state.
A task closes at exactly three votes, never more, never fewer.
"""

from __future__ import annotations

import datetime as _dt
import hashlib
import os
import secrets as _secrets
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import (
    DuplicateVote,
    InvariantViolation,
    MissingFile,
    PendingTasks,
    TaskClosed,
    UnknownAnnotator,
    UnknownTask,
    WrongVoteCount,
)
from ..humanstudy import PERSPECTIVES, PairTask, PreferenceVote, consensus
from ..records import (
    BenchmarkSample,
    ImageRef,
    append_manifest,
    load_manifest,
    render_instruction,
    save_manifest,
)
from ..tasks import (
    PAIRWISE,
    VERIFICATION,
    VOTES_PER_TASK,
    VerificationTask,
    VoteRecord,
)

PERSPECTIVE_PROMPTS = {
    "identity": "Which image better preserves the person's identity?",
    "magnitude": "Which image shows the more faithful magnitude of expression change?",
    "overall": "Which image is the better edit overall?",
}

TASKS_FILENAME = "pending_tasks.manifest"
PAIRS_FILENAME = "pairs.manifest"
VOTES_FILENAME = "votes.log"
ANNOTATORS_FILENAME = "annotators.txt"
SECRET_FILENAME = ".token_secret"


@dataclass
class TaskState:
    """One unit of annotator work plus its accumulated votes."""

    task_id: str
    kind: str  # verification | pairwise
    verification: VerificationTask | None = None
    pair: PairTask | None = None
    perspective: str | None = None
    votes: list[VoteRecord] = field(default_factory=list)

    @property
    def closed(self) -> bool:
        return len(self.votes) >= VOTES_PER_TASK

    def vote_by(self, annotator_id: str) -> VoteRecord | None:
        for vote in self.votes:
            if vote.annotator_id == annotator_id:
                return vote
        return None


@dataclass(frozen=True)
class Outcome:
    """Finalization result for one closed task."""

    task_id: str
    status: str  # accepted | rejected | unresolved | left | right
    winner_index: int | None = None  # 1-based candidate index for accepted tasks


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


class TaskStore:
    """All service state for one data directory."""

    def __init__(self, data_dir: str | Path):
        self.data_dir = Path(data_dir)
        if not self.data_dir.is_dir():
            raise MissingFile(f"data directory {self.data_dir} does not exist")
        self.tasks: dict[str, TaskState] = {}
        self._load_tasks()
        self.annotators = self._load_annotators()
        self.secret = self._load_secret()
        self._tokens: dict[str, Path] = {}
        self._register_images()
        self._replay_votes()

    # --- loading ------------------------------------------------------------------

    def _load_tasks(self) -> None:
        tasks_path = self.data_dir / TASKS_FILENAME
        if tasks_path.is_file():
            for task in load_manifest(tasks_path, "verification_tasks"):
                self.tasks[task.task_id] = TaskState(
                    task_id=task.task_id, kind=VERIFICATION, verification=task
                )
        pairs_path = self.data_dir / PAIRS_FILENAME
        if pairs_path.is_file():
            for pair in load_manifest(pairs_path, "pairs"):
                for perspective in PERSPECTIVES:
                    task_id = f"{pair.pair_id}.{perspective}"
                    self.tasks[task_id] = TaskState(
                        task_id=task_id, kind=PAIRWISE, pair=pair, perspective=perspective
                    )

    def _load_annotators(self) -> set[str]:
        path = self.data_dir / ANNOTATORS_FILENAME
        if not path.is_file():
            return set()
        return {
            line.strip()
            for line in path.read_text(encoding="utf-8").splitlines()
            if line.strip()
        }

    def _load_secret(self) -> str:
        path = self.data_dir / SECRET_FILENAME
        if not path.is_file():
            path.write_text(_secrets.token_hex(16), encoding="utf-8")
        return path.read_text(encoding="utf-8").strip()

    def _register_images(self) -> None:
        for state in self.tasks.values():
            refs: list[ImageRef] = []
            if state.kind == VERIFICATION:
                refs.append(state.verification.source)
                refs.extend(state.verification.candidates)
            else:
                refs.append(state.pair.left.edited)
                refs.append(state.pair.right.edited)
            for ref in refs:
                self._tokens[self.image_token(ref)] = ref.resolve(self.data_dir)

    def _replay_votes(self) -> None:
        path = self.data_dir / VOTES_FILENAME
        if not path.is_file():
            return
        for vote in load_manifest(path, "votes"):
            state = self.tasks.get(vote.task_id)
            if state is None:
                raise InvariantViolation(vote.task_id, "vote log references unknown task")
            if state.vote_by(vote.annotator_id) is None:
                state.votes.append(vote)

    # --- image tokens -----------------------------------------------------------------

    def image_token(self, ref: ImageRef) -> str:
        digest = hashlib.sha256(f"{self.secret}:{ref.path}".encode("utf-8"))
        return digest.hexdigest()[:32]

    def image_path(self, token: str) -> Path:
        try:
            return self._tokens[token]
        except KeyError:
            raise UnknownTask(f"unknown image token {token!r}") from None

    # --- queue -----------------------------------------------------------------------------

    def _check_annotator(self, annotator_id: str) -> None:
        if annotator_id not in self.annotators:
            raise UnknownAnnotator(annotator_id)

    def next_task(self, annotator_id: str, kind: str) -> TaskState | None:
        """Open task of the kind the annotator has not voted on yet,
        fewest votes first, task_id as the tie-break; None when exhausted."""
        self._check_annotator(annotator_id)
        if kind not in (VERIFICATION, PAIRWISE):
            raise ValueError(f"unknown task kind {kind!r}")
        candidates = [
            state
            for state in self.tasks.values()
            if state.kind == kind and not state.closed and state.vote_by(annotator_id) is None
        ]
        if not candidates:
            return None
        return min(candidates, key=lambda s: (len(s.votes), s.task_id))

    # --- voting -----------------------------------------------------------------------------

    def record_vote(
        self, task_id: str, annotator_id: str, choice: str, perspective: str | None = None
    ) -> VoteRecord:
        """Append one vote durably. Exact duplicates are idempotent; a
        different choice from the same annotator is rejected."""
        self._check_annotator(annotator_id)
        state = self.tasks.get(task_id)
        if state is None:
            raise UnknownTask(task_id)
        if state.kind == PAIRWISE:
            perspective = perspective or state.perspective
            if perspective != state.perspective:
                raise InvariantViolation(task_id, f"task carries perspective {state.perspective!r}")
        elif perspective is not None:
            raise InvariantViolation(task_id, "verification votes carry no perspective")

        vote = VoteRecord(
            task_id=task_id,
            annotator_id=annotator_id,
            kind=state.kind,
            choice=choice,
            perspective=perspective,
            timestamp=_now(),
        )
        vote.validate()
        if state.kind == VERIFICATION and choice == "candidate_2":
            if len(state.verification.candidates) < 2:
                raise InvariantViolation(task_id, "task has a single candidate")

        previous = state.vote_by(annotator_id)
        if previous is not None:
            if previous.choice == choice:
                return previous  # idempotent resend
            raise DuplicateVote(
                f"annotator {annotator_id} already voted {previous.choice!r} on {task_id}"
            )
        if state.closed:
            raise TaskClosed(task_id)
        append_manifest([vote], self.data_dir / VOTES_FILENAME)
        state.votes.append(vote)
        return vote

    # --- finalization -----------------------------------------------------------------------

    def finalize(self, task_id: str) -> Outcome:
        """Reduce exactly three votes to an outcome; order-invariant."""
        state = self.tasks.get(task_id)
        if state is None:
            raise UnknownTask(task_id)
        if len(state.votes) != VOTES_PER_TASK:
            raise WrongVoteCount(
                f"{task_id} has {len(state.votes)} votes, needs {VOTES_PER_TASK}"
            )
        if state.kind == PAIRWISE:
            preference = consensus(
                [
                    PreferenceVote(
                        pair_id=state.pair.pair_id,
                        annotator_id=vote.annotator_id,
                        perspective=state.perspective,
                        choice=vote.choice,
                    )
                    for vote in state.votes
                ]
            )
            return Outcome(task_id=task_id, status=preference)
        counts = Counter(vote.choice for vote in state.votes)
        choice, top = counts.most_common(1)[0]
        if top < 2:  # 1-1-1 split: flag for re-adjudication, never guess
            return Outcome(task_id=task_id, status="unresolved")
        if choice == "reject_both":
            return Outcome(task_id=task_id, status="rejected")
        return Outcome(
            task_id=task_id,
            status="accepted",
            winner_index=1 if choice == "candidate_1" else 2,
        )

    def progress(self) -> dict:
        stats: dict[str, dict[str, int]] = {}
        for kind in (VERIFICATION, PAIRWISE):
            states = [s for s in self.tasks.values() if s.kind == kind]
            closed = [s for s in states if s.closed]
            resolved = 0
            unresolved = 0
            for state in closed:
                outcome = self.finalize(state.task_id)
                if outcome.status == "unresolved":
                    unresolved += 1
                else:
                    resolved += 1
            stats[kind] = {
                "total": len(states),
                "open": len(states) - len(closed),
                "closed": len(closed),
                "resolved": resolved,
                "unresolved": unresolved,
                "votes": sum(len(s.votes) for s in states),
            }
        return stats

    # --- export ------------------------------------------------------------------------------

    def export_verified(
        self,
        out_path: str | Path | None = None,
        *,
        partial: bool = False,
        backends=None,
        dense: bool = False,
    ) -> tuple[list[BenchmarkSample], list[dict]]:
        """Benchmark samples for every resolved-accept verification task.

        Open or unresolved tasks raise PendingTasks unless ``partial``;
        with ``partial`` (and always for rejected tasks) they are excluded
        with an audit entry. ``dense=True`` runs the difference analyzer
        over each exported (source, truth) pair.
        """
        states = sorted(
            (s for s in self.tasks.values() if s.kind == VERIFICATION),
            key=lambda s: s.task_id,
        )

        def rebase(ref: ImageRef) -> ImageRef:
            # refs are data-dir relative; rewrite them relative to the
            # manifest's own directory so any consumer can resolve them
            if out_path is None:
                return ref
            target = Path(out_path).parent
            relative = os.path.relpath(ref.resolve(self.data_dir), target)
            return ImageRef(
                path=Path(relative).as_posix(),
                content_hash=ref.content_hash,
                width=ref.width,
                height=ref.height,
            )

        samples: list[BenchmarkSample] = []
        excluded: list[dict] = []
        for state in states:
            task = state.verification
            if not state.closed:
                if not partial:
                    raise PendingTasks(f"{state.task_id} has {len(state.votes)} of 3 votes")
                excluded.append({"task_id": state.task_id, "reason": "open"})
                continue
            outcome = self.finalize(state.task_id)
            if outcome.status == "unresolved":
                if not partial:
                    raise PendingTasks(f"{state.task_id} is unresolved (1-1-1 split)")
                excluded.append({"task_id": state.task_id, "reason": "unresolved"})
                continue
            if outcome.status == "rejected":
                excluded.append({"task_id": state.task_id, "reason": "rejected"})
                continue
            ground_truth = task.candidates[outcome.winner_index - 1]
            dense_instruction = None
            if dense:
                if backends is None:
                    raise ValueError("dense export needs a backend suite")
                from ..images import load_ref
                from ..pipeline import generate_dense_instruction

                dense_instruction = generate_dense_instruction(
                    load_ref(task.source, self.data_dir),
                    load_ref(ground_truth, self.data_dir),
                    backends,
                )
            sample = BenchmarkSample(
                sample_id=f"{task.source_id}.{task.trg_emotion.value}",
                source=rebase(task.source),
                src_emotion=task.src_emotion,
                trg_emotion=task.trg_emotion,
                simple_instruction=render_instruction(task.src_emotion, task.trg_emotion),
                dense_instruction=dense_instruction,
                ground_truth=rebase(ground_truth),
            )
            sample.validate()
            samples.append(sample)
        if out_path is not None:
            save_manifest(samples, out_path)
        return samples, excluded
