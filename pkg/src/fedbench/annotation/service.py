"""HTTP facade over the task store.

Annotators see opaque image tokens and positional candidate labels only;
model identities never cross the wire. Errors map to conventional status
codes with a machine-readable ``error`` field.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, Query, Request
from fastapi.responses import FileResponse, JSONResponse
from pydantic import BaseModel

from ..errors import (
    DuplicateVote,
    FedError,
    InvariantViolation,
    PendingTasks,
    TaskClosed,
    UnknownAnnotator,
    UnknownTask,
)
from ..tasks import PAIRWISE, VERIFICATION
from .store import PERSPECTIVE_PROMPTS, TaskState, TaskStore

_STATUS = {
    UnknownAnnotator: 403,
    UnknownTask: 404,
    DuplicateVote: 409,
    TaskClosed: 409,
    PendingTasks: 409,
    InvariantViolation: 400,
}


def _error_response(exc: Exception) -> JSONResponse:
    status = _STATUS.get(type(exc), 400 if isinstance(exc, ValueError) else 500)
    name = type(exc).__name__
    code = "".join(("_" + c.lower()) if c.isupper() else c for c in name).lstrip("_")
    return JSONResponse(status_code=status, content={"error": code, "detail": str(exc)})


class VoteBody(BaseModel):
    task_id: str
    annotator_id: str
    choice: str
    perspective: str | None = None


class ExportBody(BaseModel):
    partial: bool = False
    out_path: str | None = None


def task_view(store: TaskStore, state: TaskState, remaining: int, total: int) -> dict:
    base = {
        "task_id": state.task_id,
        "kind": state.kind,
        "votes": len(state.votes),
        "progress": {"remaining": remaining, "total": total},
    }
    if state.kind == VERIFICATION:
        task = state.verification
        base.update(
            {
                "trg_emotion": task.trg_emotion.value,
                "caption": task.reference_caption,
                "source_url": f"/api/image/{store.image_token(task.source)}",
                "candidate_urls": [
                    f"/api/image/{store.image_token(ref)}" for ref in task.candidates
                ],
            }
        )
    else:
        base.update(
            {
                "perspective": state.perspective,
                "prompt": PERSPECTIVE_PROMPTS[state.perspective],
                "left_url": f"/api/image/{store.image_token(state.pair.left.edited)}",
                "right_url": f"/api/image/{store.image_token(state.pair.right.edited)}",
            }
        )
    return base


def create_app(store: TaskStore, static_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="fedbench annotation service")

    @app.exception_handler(FedError)
    async def handle_fed_error(request: Request, exc: FedError):
        return _error_response(exc)

    @app.exception_handler(ValueError)
    async def handle_value_error(request: Request, exc: ValueError):
        return _error_response(exc)

    @app.get("/api/tasks/next")
    def next_task(annotator: str = Query(...), kind: str = Query(VERIFICATION)):
        state = store.next_task(annotator, kind)
        open_for_annotator = [
            s
            for s in store.tasks.values()
            if s.kind == kind and not s.closed and s.vote_by(annotator) is None
        ]
        total = sum(1 for s in store.tasks.values() if s.kind == kind)
        if state is None:
            return {"task": None, "progress": {"remaining": 0, "total": total}}
        return {"task": task_view(store, state, len(open_for_annotator), total)}

    @app.post("/api/votes")
    def record_vote(body: VoteBody):
        vote = store.record_vote(
            body.task_id, body.annotator_id, body.choice, body.perspective
        )
        state = store.tasks[body.task_id]
        return {
            "status": "ok",
            "task_id": vote.task_id,
            "choice": vote.choice,
            "votes": len(state.votes),
            "closed": state.closed,
        }

    @app.get("/api/progress")
    def progress():
        return store.progress()

    @app.get("/api/image/{token}")
    def image(token: str):
        path = store.image_path(token)
        return FileResponse(path, media_type="image/png")

    @app.post("/api/export")
    def export(body: ExportBody):
        out_path = Path(body.out_path) if body.out_path else store.data_dir / "export" / "benchmark.manifest"
        samples, excluded = store.export_verified(out_path, partial=body.partial)
        return {
            "path": str(out_path),
            "emitted": len(samples),
            "excluded": excluded,
        }

    if static_dir is not None and Path(static_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app
