"""Published dense-instruction evaluation of 18 editing models, used as a
sorting/formatting fixture: (model, mean ID, mean BG, mean PQ, mean SC,
mean GTA, mean gain ratio, mean composite score), in printed rank order.

Note the exact tie at score .155: the printed order puts OmniGen2 above
FLUX-Kontext-Fill, which the descending (score, model) sort reproduces.
"""

from fedbench.harness import LeaderboardRow
from fedbench.records import Granularity

DENSE_ROWS = [
    ("Qwen-image-edit-plus", 0.58, 17.5, 9.7, 8.8, 5.7, 1.18, 0.469),
    ("SeedDream 4.0", 0.62, 15.5, 9.5, 9.1, 4.3, 1.37, 0.379),
    ("FLUX.2 Pro", 0.58, 13.9, 9.8, 9.0, 4.0, 1.37, 0.377),
    ("Qwen-image-edit", 0.45, 19.6, 9.3, 8.9, 4.2, 1.37, 0.337),
    ("FLUX-Kontext-FED", 0.68, 7.3, 9.7, 6.2, 3.4, 0.95, 0.332),
    ("FLUX-Kontext-Pro", 0.52, 7.3, 9.8, 7.6, 3.5, 0.99, 0.327),
    ("FLUX-Kontext-Max", 0.50, 9.7, 9.7, 7.7, 3.5, 1.07, 0.320),
    ("Qwen-image-edit-2511", 0.46, 15.8, 9.5, 9.3, 3.4, 1.43, 0.317),
    ("Step1X v1p2", 0.56, 17.1, 9.4, 7.7, 3.0, 1.31, 0.303),
    ("FLUX-Kontext-Dev", 0.72, 23.8, 9.6, 6.7, 3.0, 0.67, 0.243),
    ("SeedEdit 3.0", 0.49, 11.6, 7.8, 7.4, 1.9, 1.55, 0.203),
    ("UniWorld-v2", 0.37, 31.6, 9.1, 7.6, 2.5, 1.45, 0.201),
    ("DreamOmni2", 0.81, 24.1, 9.6, 5.0, 2.6, 0.45, 0.168),
    ("OmniGen2", 0.56, 63.7, 7.3, 6.3, 2.6, 1.52, 0.155),
    ("FLUX-Kontext-Fill", 0.11, 5.1, 9.9, 5.5, 1.7, 1.56, 0.155),
    ("Step1X", 0.33, 16.3, 7.3, 6.9, 1.3, 1.72, 0.127),
    ("Bagel", 0.42, 47.2, 6.5, 6.8, 1.8, 1.57, 0.115),
    ("InstructPix2Pix", 0.08, 47.0, 0.0, 0.0, 0.0, 2.56, 0.001),
]

PRINTED_ORDER = [row[0] for row in DENSE_ROWS]


def dense_leaderboard_rows(n_samples: int = 747) -> list[LeaderboardRow]:
    rows = []
    for model, mid, bg, pq, sc, gta, reg, score in DENSE_ROWS:
        rows.append(
            LeaderboardRow(
                model_id=model,
                granularity=Granularity.DENSE,
                mean_id_raw=mid,
                mean_bg_rmse=bg,
                mean_pq_raw=pq,
                mean_sc_raw=sc,
                mean_gta_raw=gta,
                mean_reg_ratio=reg,
                mean_fed=score,
                n_samples=n_samples,
                n_failed=0,
            )
        )
    return rows
