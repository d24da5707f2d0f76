"""Drive the annotation service end to end, in process.

Builds pending verification tasks with the pipeline, serves them over the
HTTP API (via the in-process test client, no socket needed), simulates
three annotators, and exports the verified benchmark manifest. To use a
real browser instead, run ``fed serve --data <dir>`` and open the bundled
frontend.
"""

import sys
from pathlib import Path

from fastapi.testclient import TestClient

from fedbench.annotation import TaskStore, create_app
from fedbench.records import load_manifest

sys.path.insert(0, str(Path(__file__).parent))
from _shared import fresh_dir  # noqa: E402

import importlib

builder = importlib.import_module("02_build_benchmark")

SCRATCH = fresh_dir("05_annotation_service")


def main():
    # reuse the construction demo to create pending tasks
    builder.SCRATCH = SCRATCH
    sources, root = builder.make_sources(n=2)
    from fedbench.backends import (
        CallCache, CenterBoxLocalizer, HashEmbedder, MeanAbsDiff, PatchEditor, ScriptedJudge,
    )
    from fedbench.backends.suite import BackendSuite
    from fedbench.pipeline import run_pipeline, save_pipeline_outputs

    suite = BackendSuite(
        embedder=HashEmbedder(), localizer=CenterBoxLocalizer(),
        perceptual=MeanAbsDiff(),
        judge=ScriptedJudge("Neutral gaze, slight mouth tension."),
        classifiers=builder.calibrated_ensemble(sources, root),
        editor=PatchEditor(), cache=CallCache(SCRATCH / "cache"),
    )
    data = SCRATCH / "service-data"
    result = run_pipeline(sources, suite, source_root=root, out_dir=data)
    save_pipeline_outputs(result, data)
    (data / "annotators.txt").write_text("alice\nbo\nchris\n")

    store = TaskStore(data)
    client = TestClient(create_app(store))
    print(f"seeded {len(result.tasks)} verification tasks; serving via API\n")

    for annotator in ("alice", "bo", "chris"):
        done = 0
        while True:
            view = client.get("/api/tasks/next",
                              params={"annotator": annotator,
                                      "kind": "verification"}).json()["task"]
            if view is None:
                break
            client.post("/api/votes", json={"task_id": view["task_id"],
                                            "annotator_id": annotator,
                                            "choice": "candidate_1"})
            done += 1
        print(f"  {annotator} voted on {done} tasks")

    progress = client.get("/api/progress").json()["verification"]
    print(f"\nprogress: {progress}")
    export = client.post("/api/export", json={"partial": False}).json()
    samples = load_manifest(export["path"], "benchmark")
    print(f"exported {export['emitted']} verified samples -> {export['path']}")
    for sample in samples[:3]:
        print(f"  {sample.sample_id}: '{sample.simple_instruction}'")
    print("  ...")


if __name__ == "__main__":
    main()
