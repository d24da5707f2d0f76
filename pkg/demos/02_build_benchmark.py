"""Run the five-stage construction pipeline over synthetic sources.

Shows candidate generation, polarity voting, preservation ranking, and the
audit trail whose drop + emit counts always reconcile with what was
generated. The scripted classifier table plays the role of a perfectly
calibrated ensemble.
"""

import sys
from pathlib import Path

from fedbench.backends import (
    CallCache,
    CenterBoxLocalizer,
    HashEmbedder,
    MeanAbsDiff,
    PatchEditor,
    ScriptedClassifier,
    ScriptedJudge,
)
from fedbench.backends.suite import BackendSuite
from fedbench.images import array_hash, load_ref, synthetic_portrait, write_image
from fedbench.pipeline import (
    SourceRecord,
    candidate_emotions,
    coarse_map,
    run_pipeline,
    save_pipeline_outputs,
)
from fedbench.records import EmotionLabel, render_instruction, save_manifest

sys.path.insert(0, str(Path(__file__).parent))
from _shared import fresh_dir  # noqa: E402

SCRATCH = fresh_dir("02_build_benchmark")


def make_sources(n=3):
    root = SCRATCH / "sources"
    emotions = list(EmotionLabel)
    sources = []
    for i in range(n):
        ref = write_image(synthetic_portrait(i, size=(48, 48)), root / f"s{i}.png", root)
        sources.append(SourceRecord(source_id=f"s{i}", image=ref,
                                    labeled_emotion=emotions[i % len(emotions)],
                                    provenance="synthetic demo"))
    save_manifest(sources, root / "sources.manifest")
    return sources, root


def calibrated_ensemble(sources, root, members=5):
    """Precompute every candidate the patch editor will produce and answer
    with its true polarity: a stand-in for a strong classifier ensemble."""
    editor = PatchEditor()
    table = {}
    for source in sources:
        image = load_ref(source.image, root)
        for trg in candidate_emotions(source.labeled_emotion):
            instruction = render_instruction(source.labeled_emotion, trg)
            table[array_hash(editor.edit_image(image, instruction))] = coarse_map(trg).value
    return [ScriptedClassifier(dict(table), granularities=("coarse",), name=f"member{i}")
            for i in range(members)]


def main():
    sources, root = make_sources()
    suite = BackendSuite(
        embedder=HashEmbedder(),
        localizer=CenterBoxLocalizer(),
        perceptual=MeanAbsDiff(),
        judge=ScriptedJudge("Brows level, mouth corners turned; apparent calm."),
        classifiers=calibrated_ensemble(sources, root),
        editor=PatchEditor(),
        cache=CallCache(SCRATCH / "cache"),
    )
    out = SCRATCH / "out"
    result = run_pipeline(sources, suite, source_root=root, out_dir=out)
    paths = save_pipeline_outputs(result, out)

    print(f"sources            {len(sources)}")
    print(f"candidates made    {result.n_generated}")
    print(f"emitted to humans  {result.n_emitted}")
    print(f"dropped            {result.n_dropped}")
    print(f"conservation       {result.n_generated} == {result.n_emitted} + {result.n_dropped}")
    print(f"\npending verification tasks -> {paths['tasks']}")
    for task in result.tasks[:4]:
        print(f"  {task.task_id}: {len(task.candidates)} candidate(s), "
              f"target {task.trg_emotion.value}")
    print("  ...")
    print(f"\naudit log -> {paths['audit']} "
          f"({sum(1 for a in result.audit if a.action == 'drop')} drops recorded)")


if __name__ == "__main__":
    main()
