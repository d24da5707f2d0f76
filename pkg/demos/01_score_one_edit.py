"""Score a single edit end to end, fully offline.

Walks one synthetic sample through the whole protocol twice: once with a
lazy editor that returns the source unchanged, once with an editor that
actually repaints the face region. The printout shows why the multiplicative
composite punishes the lazy editor even when a judge loves the pixels.
"""

from pathlib import Path

from fedbench.backends import PatchEditor, task_scripted_judge
from fedbench.backends.suite import BackendSuite
from fedbench.backends import CallCache, CenterBoxLocalizer, HashEmbedder, IdentityEditor, MeanAbsDiff
from fedbench.harness import run_model
from fedbench.metrics import MetricConfig, score_batch
from fedbench.records import Granularity

import sys

sys.path.insert(0, str(Path(__file__).parent))
from _shared import fresh_dir, tiny_benchmark  # noqa: E402

SCRATCH = fresh_dir("01_score_one_edit")


def make_suite(editor, cache_name):
    judge = task_scripted_judge(scores={
        "perceptual_quality": 10,  # the judge loves clean pixels
        "semantic_consistency": 9,
        "expression_alignment": 8,
    })
    return BackendSuite(
        embedder=HashEmbedder(),
        localizer=CenterBoxLocalizer(),
        perceptual=MeanAbsDiff(),
        judge=judge,
        editor=editor,
        cache=CallCache(SCRATCH / cache_name),
    )


def show(card):
    print(f"  identity cosine    {card.id_raw:+.3f} -> {card.id01:.3f}")
    print(f"  background RMSE    {card.bg_rmse:7.3f} -> {card.bg01:.3f}")
    print(f"  perceptual quality {card.pq_raw:2d}/10  -> {card.pq01:.3f}")
    print(f"  semantic match     {card.sc_raw:2d}/10  -> {card.sc01:.3f}")
    print(f"  expression match   {card.gta_raw:2d}/10  -> {card.gta01:.3f}")
    print(f"  gain ratio         {card.reg_ratio:7.3f} -> penalty {card.s_reg:.3f}")
    print(f"  fidelity {card.s_fid:.3f} x alignment {card.s_align:.3f} "
          f"x gain {card.s_reg:.3f} = FED {card.fed:.4f}")


def main():
    samples, bench_root = tiny_benchmark(SCRATCH / "bench", n=1)
    for label, editor in (("lazy (returns the source)", IdentityEditor()),
                          ("face repaint", PatchEditor())):
        suite = make_suite(editor, f"cache-{editor.backend_id.name}")
        out = SCRATCH / f"results-{editor.backend_id.name}"
        results, _ = run_model(samples, suite, Granularity.SIMPLE,
                               benchmark_root=bench_root, out_dir=out)
        cards, errors = score_batch(samples, results, suite, MetricConfig(),
                                    benchmark_root=bench_root, results_root=out)
        assert not errors
        print(f"\n== {label} ==")
        show(cards[0])
    print("\nSame judge scores, hugely different composite: the gain ratio of the")
    print("lazy editor is 0, so its penalty term exp(-2) caps everything it does.")


if __name__ == "__main__":
    main()
