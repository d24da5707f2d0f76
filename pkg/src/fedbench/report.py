"""Static qualitative report: one page per scorecard, no server needed."""

from __future__ import annotations

import html
import shutil
from pathlib import Path
from typing import Sequence

from .errors import MissingImage
from .records import BenchmarkSample, EditResult, ImageRef, ScoreCard

_PAGE_STYLE = """
body { font-family: sans-serif; margin: 2rem; color: #222; }
table { border-collapse: collapse; margin: 1rem 0; }
td, th { border: 1px solid #ccc; padding: 0.3rem 0.7rem; text-align: left; }
.images { display: flex; gap: 1rem; }
.images figure { margin: 0; }
.images img { max-width: 260px; image-rendering: pixelated; border: 1px solid #999; }
.missing { padding: 2rem; background: #fee; border: 1px solid #c66; color: #900; }
.badge { color: #900; font-weight: bold; }
"""


def _slug(card: ScoreCard) -> str:
    return f"{card.sample_id}.{card.model_id}.{card.granularity.value}".replace("/", "_")


def _copy_image(ref: ImageRef | None, root: Path, assets: Path) -> str | None:
    """Copy an image into the bundle, deduplicated by content hash."""
    if ref is None:
        return None
    src = ref.resolve(root)
    if not src.is_file():
        raise MissingImage(str(src))
    target = assets / f"{ref.content_hash}.png"
    if not target.is_file():
        shutil.copyfile(src, target)
    return f"assets/{target.name}"


def _figure(title: str, href: str | None) -> str:
    if href is None:
        return (
            f'<figure><div class="missing">missing image</div>'
            f"<figcaption>{html.escape(title)} <span class=\"badge\">unavailable</span>"
            f"</figcaption></figure>"
        )
    return (
        f'<figure><img src="{href}" alt="{html.escape(title)}">'
        f"<figcaption>{html.escape(title)}</figcaption></figure>"
    )


def render_report(
    cards: Sequence[ScoreCard],
    samples: Sequence[BenchmarkSample],
    results: Sequence[EditResult],
    *,
    benchmark_root: str | Path,
    results_root: str | Path,
    out_dir: str | Path,
) -> Path:
    """Write the bundle and return the index page path."""
    out_dir = Path(out_dir)
    assets = out_dir / "assets"
    assets.mkdir(parents=True, exist_ok=True)
    benchmark_root = Path(benchmark_root)
    results_root = Path(results_root)
    sample_index = {s.sample_id: s for s in samples}
    result_index = {(r.sample_id, r.model_id, r.granularity): r for r in results}

    rows = []
    for card in cards:
        sample = sample_index.get(card.sample_id)
        result = result_index.get((card.sample_id, card.model_id, card.granularity))
        page = f"{_slug(card)}.html"
        errors: list[str] = []

        def safe_copy(ref: ImageRef | None, root: Path, label: str) -> str | None:
            try:
                return _copy_image(ref, root, assets)
            except MissingImage as exc:
                errors.append(f"{label}: {exc}")
                return None

        source_href = safe_copy(sample.source if sample else None, benchmark_root, "source")
        gt_href = safe_copy(sample.ground_truth if sample else None, benchmark_root, "truth")
        edited_href = safe_copy(result.edited if result else None, results_root, "edited")

        metric_rows = "".join(
            f"<tr><th>{name}</th><td>{value}</td></tr>"
            for name, value in (
                ("identity cosine (raw)", f"{card.id_raw:.4f}"),
                ("background RMSE (raw)", f"{card.bg_rmse:.3f}"),
                ("perceptual quality (0-10)", card.pq_raw),
                ("semantic consistency (0-10)", card.sc_raw),
                ("expression alignment (0-10)", card.gta_raw),
                ("gain ratio (raw)", f"{card.reg_ratio:.4f}"),
                ("fidelity", f"{card.s_fid:.4f}"),
                ("alignment", f"{card.s_align:.4f}"),
                ("expression gain", f"{card.s_reg:.4f}"),
                ("FED score", f"{card.fed:.4f}"),
            )
        )
        instruction = ""
        if sample is not None:
            try:
                instruction = sample.instruction(card.granularity)
            except Exception:
                instruction = sample.simple_instruction
        error_html = "".join(f'<p class="badge">{html.escape(e)}</p>' for e in errors)
        body = f"""<!doctype html>
<html><head><meta charset="utf-8"><title>{html.escape(_slug(card))}</title>
<style>{_PAGE_STYLE}</style></head><body>
<h1>{html.escape(card.sample_id)} / {html.escape(card.model_id)} / {card.granularity.value}</h1>
<p>instruction: {html.escape(instruction)}</p>
{error_html}
<div class="images">
{_figure("source", source_href)}
{_figure("ground truth", gt_href)}
{_figure("edited", edited_href)}
</div>
<table>{metric_rows}</table>
<p><a href="index.html">back to index</a></p>
</body></html>
"""
        (out_dir / page).write_text(body, encoding="utf-8")
        rows.append((card, page, errors))

    if rows:
        listing = "".join(
            f'<tr><td><a href="{page}">{html.escape(card.sample_id)}</a></td>'
            f"<td>{html.escape(card.model_id)}</td><td>{card.granularity.value}</td>"
            f"<td>{card.fed:.4f}</td>"
            f"<td>{'; '.join(html.escape(e) for e in errors) or 'ok'}</td></tr>"
            for card, page, errors in rows
        )
        table = (
            "<table><tr><th>sample</th><th>model</th><th>granularity</th>"
            f"<th>FED</th><th>status</th></tr>{listing}</table>"
        )
    else:
        table = "<p>No scorecards to report; the manifest was empty.</p>"
    index = f"""<!doctype html>
<html><head><meta charset="utf-8"><title>score report</title>
<style>{_PAGE_STYLE}</style></head><body>
<h1>Score report</h1>
{table}
</body></html>
"""
    index_path = out_dir / "index.html"
    index_path.write_text(index, encoding="utf-8")

    md_lines = ["# Score report", ""]
    if rows:
        md_lines += ["| sample | model | granularity | FED |", "| --- | --- | --- | --- |"]
        md_lines += [
            f"| {card.sample_id} | {card.model_id} | {card.granularity.value} | {card.fed:.4f} |"
            for card, _, _ in rows
        ]
    else:
        md_lines.append("No scorecards to report; the manifest was empty.")
    (out_dir / "index.md").write_text("\n".join(md_lines) + "\n", encoding="utf-8")
    return index_path
