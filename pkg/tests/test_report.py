"""Static report bundle rendering."""

import dataclasses

from fedbench.harness import run_model
from fedbench.metrics import score_batch
from fedbench.records import Granularity
from fedbench.report import render_report

from conftest import build_benchmark, make_suite


def scored_setup(tmp_path, n=1):
    root = tmp_path / "bench"
    samples = build_benchmark(root, n)
    suite = make_suite(tmp_path / "cache")
    out = tmp_path / "results"
    results, _ = run_model(samples, suite, Granularity.SIMPLE,
                           benchmark_root=root, out_dir=out)
    cards, _ = score_batch(samples, results, suite, benchmark_root=root,
                           results_root=out, max_workers=1)
    return samples, results, cards, root, out


def test_one_scorecard_one_detail_page(tmp_path):
    samples, results, cards, root, out = scored_setup(tmp_path)
    report_dir = tmp_path / "report"
    index = render_report(cards, samples, results, benchmark_root=root,
                          results_root=out, out_dir=report_dir)
    assert index.is_file()
    pages = list(report_dir.glob("*.html"))
    assert len(pages) == 2  # index + one detail page
    detail = next(p for p in pages if p.name != "index.html")
    text = detail.read_text()
    assert "FED score" in text
    assert 'src="assets/' in text
    assert (report_dir / "index.md").is_file()


def test_empty_scorecards_empty_state(tmp_path):
    samples, results, cards, root, out = scored_setup(tmp_path)
    report_dir = tmp_path / "report"
    render_report([], samples, results, benchmark_root=root,
                  results_root=out, out_dir=report_dir)
    index = (report_dir / "index.html").read_text()
    assert "No scorecards to report" in index


def test_missing_edited_image_gets_badge(tmp_path):
    samples, results, cards, root, out = scored_setup(tmp_path)
    (out / results[0].edited.path).unlink()
    report_dir = tmp_path / "report"
    render_report(cards, samples, results, benchmark_root=root,
                  results_root=out, out_dir=report_dir)
    detail = next(p for p in report_dir.glob("*.html") if p.name != "index.html")
    text = detail.read_text()
    assert "missing image" in text
    assert 'class="badge"' in text
