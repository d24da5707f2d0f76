"""2AFC agreement study on simulated annotators.

Samples pairs from two models' results, simulates three annotators whose
preferences mostly track the stronger model, and reports how well each
metric's algorithmic preference agrees with the human consensus.
"""

import random
import sys
from pathlib import Path

from fedbench.humanstudy import (
    PreferenceVote,
    run_study_report,
    sample_pairs,
)
from fedbench.records import Granularity

sys.path.insert(0, str(Path(__file__).parent))
from _shared import fresh_dir, make_cards_and_results  # noqa: E402

SCRATCH = fresh_dir("04_human_study")


def main():
    results, cards = make_cards_and_results(n_samples=40)
    pairs = sample_pairs(results, n=40, seed=7)
    rng = random.Random(7)

    votes = []
    for pair in pairs:
        strong_side = "left" if pair.left.model_id == "strong" else "right"
        weak_side = "right" if strong_side == "left" else "left"
        for perspective in ("identity", "magnitude", "overall"):
            for annotator in ("a1", "a2", "a3"):
                # annotators agree with the stronger model ~85% of the time
                choice = strong_side if rng.random() < 0.85 else weak_side
                votes.append(PreferenceVote(pair_id=pair.pair_id,
                                            annotator_id=annotator,
                                            perspective=perspective,
                                            choice=choice))

    report = run_study_report(pairs, votes, cards)
    print(report.render_markdown())
    print("Accuracy = (matches + 0.5 * exact ties) / pairs, per perspective panel.")


if __name__ == "__main__":
    main()
