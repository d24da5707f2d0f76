"""Benchmark two mock editors and render the leaderboard.

The lazy editor wins on raw fidelity columns but its near-zero gain ratio
sinks the composite; the repainting editor lands on top, which is the whole
point of multiplying the three dimensions instead of averaging them.
"""

import sys
from pathlib import Path

from fedbench.backends import (
    CallCache,
    CenterBoxLocalizer,
    HashEmbedder,
    IdentityEditor,
    MeanAbsDiff,
    PatchEditor,
    task_scripted_judge,
)
from fedbench.backends.suite import BackendSuite
from fedbench.harness import aggregate, render_leaderboard, run_model
from fedbench.metrics import MetricConfig, score_batch
from fedbench.records import Granularity

sys.path.insert(0, str(Path(__file__).parent))
from _shared import fresh_dir, tiny_benchmark  # noqa: E402

SCRATCH = fresh_dir("03_evaluate_and_leaderboard")


def suite_for(editor, judge_scores):
    return BackendSuite(
        embedder=HashEmbedder(),
        localizer=CenterBoxLocalizer(),
        perceptual=MeanAbsDiff(),
        judge=task_scripted_judge(scores=judge_scores),
        editor=editor,
        cache=CallCache(SCRATCH / f"cache-{editor.backend_id.name}"),
    )


def main():
    samples, root = tiny_benchmark(SCRATCH / "bench", n=4)
    all_cards, all_failures = [], []
    # a plausible judge profile per model: the lazy editor shows pristine
    # pixels (high PQ) that ignore the instruction (low SC/GTA)
    configs = [
        (IdentityEditor(), {"perceptual_quality": 10, "semantic_consistency": 2,
                            "expression_alignment": 2}),
        (PatchEditor(), {"perceptual_quality": 8, "semantic_consistency": 8,
                         "expression_alignment": 7}),
    ]
    for editor, judge_scores in configs:
        suite = suite_for(editor, judge_scores)
        out = SCRATCH / f"results-{editor.backend_id.name}"
        results, edit_failures = run_model(samples, suite, Granularity.SIMPLE,
                                           benchmark_root=root, out_dir=out)
        cards, score_failures = score_batch(samples, results, suite, MetricConfig(),
                                            benchmark_root=root, results_root=out)
        all_cards.extend(cards)
        all_failures.extend(edit_failures + score_failures)

    rows = aggregate(all_cards, all_failures)
    print(render_leaderboard(rows, "markdown"))
    print("Same table as CSV:\n")
    print(render_leaderboard(rows, "csv"))


if __name__ == "__main__":
    main()
