"""The ``fed`` command line: one entry point wiring config, backends, and
every workflow.

Exit codes: 0 success, 1 workflow failure, 2 usage error, 3 config error.
Every workflow writes a ``run.meta`` record (config hash, seed, version)
into its output directory so mock-backed runs can be reproduced exactly.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import sys
from pathlib import Path

from . import __version__
from .config import ENV_VARS, ToolkitConfig, build_suite, config_hash, load_config
from .errors import ConfigError, FedError, WorkflowError
from .records import (
    Granularity,
    load_manifest,
    save_manifest,
    validate_results_against,
)

_MOCK_BACKENDS = {"hash", "centered-box", "mean-abs-diff", "scripted", "identity", "patch"}

EXIT_OK = 0
EXIT_WORKFLOW = 1
EXIT_USAGE = 2
EXIT_CONFIG = 3


def _is_deterministic(config: ToolkitConfig) -> bool:
    names = {config.embedder.name, config.localizer.name, config.perceptual.name,
             config.judge.name, config.editor.name}
    names.update(choice.name for choice in config.classifiers)
    return names <= _MOCK_BACKENDS


def write_run_meta(out_dir: Path, command: str, config: ToolkitConfig, argv: list[str]) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    meta = {
        "command": command,
        "config_hash": config_hash(config),
        "seed": config.seed,
        "toolkit_version": __version__,
        "deterministic": _is_deterministic(config),
        "argv": argv,
        "started_at": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }
    with open(out_dir / "run.meta", "w", encoding="utf-8") as handle:
        handle.write(json.dumps(meta, sort_keys=True) + "\n")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fed",
        description="Benchmark builder and scoring harness for facial expression editing.",
    )
    parser.add_argument("--config", help="config file path (or set FED_CONFIG)")
    parser.add_argument("--seed", type=int, help="override the configured seed")
    parser.add_argument("--help-env", action="store_true",
                        help="list environment variables and exit")
    sub = parser.add_subparsers(dest="command")

    p_build = sub.add_parser("build", help="run the benchmark-construction pipeline")
    p_build.add_argument("--sources", required=True, help="sources manifest")
    p_build.add_argument("--out", required=True, help="output directory")

    p_serve = sub.add_parser("serve", help="start the annotation service")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--data", required=True, help="service data directory")
    p_serve.add_argument("--static", help="static frontend bundle directory")

    p_eval = sub.add_parser("evaluate", help="run an editing model and score it")
    p_eval.add_argument("--benchmark", required=True, help="benchmark manifest")
    p_eval.add_argument("--model", required=True, help="editor backend name")
    p_eval.add_argument("--granularity", required=True, choices=["simple", "dense"])
    p_eval.add_argument("--out", required=True, help="output directory")

    p_board = sub.add_parser("leaderboard", help="aggregate scorecards into a table")
    p_board.add_argument("--scores", required=True, nargs="+",
                         help="scorecard manifest file(s)")
    p_board.add_argument("--failures", nargs="*", default=[],
                         help="failure manifest file(s)")
    p_board.add_argument("--format", default="markdown", choices=["markdown", "csv"])
    p_board.add_argument("--out", help="write the table here instead of stdout")

    p_study = sub.add_parser("human-study", help="agreement accuracy report")
    p_study.add_argument("--results", help="directory holding pairs.manifest, votes.log, "
                                           "scorecards.manifest")
    p_study.add_argument("--pairs", help="pairs manifest (overrides --results)")
    p_study.add_argument("--votes", help="vote log (overrides --results)")
    p_study.add_argument("--scores", help="scorecards manifest (overrides --results)")
    p_study.add_argument("--out", required=True, help="output directory")

    p_validate = sub.add_parser("validate", help="check manifests")
    p_validate.add_argument("--benchmark", required=True)
    p_validate.add_argument("--results", nargs="*", default=[],
                            help="results manifests to check against the benchmark")

    p_report = sub.add_parser("report", help="static per-sample report bundle")
    p_report.add_argument("--scores", required=True, help="scorecards manifest")
    p_report.add_argument("--benchmark", required=True)
    p_report.add_argument("--results", required=True, nargs="+")
    p_report.add_argument("--out", required=True)
    return parser


def dispatch(argv: list[str]) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse already printed usage
        return int(exc.code or 0) if exc.code != 2 else EXIT_USAGE

    if args.help_env:
        for name, meaning in ENV_VARS.items():
            print(f"{name}\t{meaning}")
        return EXIT_OK
    if not args.command:
        parser.print_usage()
        print("fed: error: a subcommand is required", file=sys.stderr)
        return EXIT_USAGE

    try:
        overrides = {"seed": args.seed} if args.seed is not None else None
        config = load_config(args.config, overrides)
        return _run(args, config, argv)
    except ConfigError as exc:
        print(f"fed: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FedError as exc:
        print(f"fed: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_WORKFLOW


def _run(args, config: ToolkitConfig, argv: list[str]) -> int:
    command = args.command

    if command == "validate":
        benchmark = load_manifest(args.benchmark, "benchmark")
        for path in args.results:
            results = load_manifest(path, "results")
            validate_results_against(results, benchmark)
        print(f"ok: {len(benchmark)} samples"
              + (f", {len(args.results)} results manifests" if args.results else ""))
        return EXIT_OK

    if command == "build":
        from .pipeline import run_pipeline, save_pipeline_outputs

        sources = load_manifest(args.sources, "sources")
        out_dir = Path(args.out)
        suite = build_suite(config)
        write_run_meta(out_dir, "build", config, argv)
        result = run_pipeline(
            sources,
            suite,
            config.pipeline,
            source_root=Path(args.sources).parent,
            out_dir=out_dir,
            max_workers=config.workers,
        )
        paths = save_pipeline_outputs(result, out_dir)
        print(
            f"generated {result.n_generated} candidates, emitted {result.n_emitted}, "
            f"dropped {result.n_dropped}; tasks -> {paths['tasks']}"
        )
        return EXIT_OK

    if command == "evaluate":
        from .harness import run_model
        from .metrics import score_batch

        benchmark_path = Path(args.benchmark)
        samples = load_manifest(benchmark_path, "benchmark")
        out_dir = Path(args.out)
        overrides = {"backends": {"editor": args.model}}
        config = load_config(args.config, _with_seed(overrides, args.seed))
        suite = build_suite(config)
        write_run_meta(out_dir, "evaluate", config, argv)
        granularity = Granularity.parse(args.granularity)
        results, edit_failures = run_model(
            samples,
            suite,
            granularity,
            benchmark_root=benchmark_path.parent,
            out_dir=out_dir,
            max_workers=config.workers,
        )
        model_id = results[0].model_id if results else args.model
        save_manifest(results, out_dir / f"results.{model_id}.{granularity.value}")
        cards, score_failures = score_batch(
            samples,
            results,
            suite,
            config.metrics,
            benchmark_root=benchmark_path.parent,
            results_root=out_dir,
            max_workers=config.workers,
        )
        save_manifest(cards, out_dir / f"scorecards.{model_id}.{granularity.value}")
        failures = edit_failures + score_failures
        if failures:
            save_manifest(failures, out_dir / f"failures.{model_id}.{granularity.value}")
        print(f"scored {len(cards)} samples, {len(failures)} failures -> {out_dir}")
        return EXIT_OK

    if command == "leaderboard":
        from .harness import aggregate, render_leaderboard

        cards = []
        for path in args.scores:
            cards.extend(load_manifest(path, "scorecards"))
        failures = []
        for path in args.failures:
            failures.extend(load_manifest(path, "failures"))
        rows = aggregate(cards, failures)
        text = render_leaderboard(rows, args.format)
        if args.out:
            Path(args.out).parent.mkdir(parents=True, exist_ok=True)
            Path(args.out).write_text(text, encoding="utf-8")
            print(f"leaderboard -> {args.out}")
        else:
            print(text, end="")
        return EXIT_OK

    if command == "human-study":
        from .humanstudy import preference_votes_from_log, run_study_report

        def pick(explicit, conventional):
            if explicit:
                return Path(explicit)
            if args.results:
                return Path(args.results) / conventional
            raise WorkflowError("give --results or explicit --pairs/--votes/--scores")

        pairs = load_manifest(pick(args.pairs, "pairs.manifest"), "pairs")
        vote_log = load_manifest(pick(args.votes, "votes.log"), "votes")
        cards = load_manifest(pick(args.scores, "scorecards.manifest"), "scorecards")
        votes = preference_votes_from_log(vote_log)
        report = run_study_report(pairs, votes, cards)
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        write_run_meta(out_dir, "human-study", config, argv)
        (out_dir / "report.md").write_text(report.render_markdown(), encoding="utf-8")
        save_manifest(report.rows, out_dir / "report.manifest")
        print(report.render_markdown(), end="")
        for warning in report.warnings:
            print(f"warning: {warning}", file=sys.stderr)
        return EXIT_OK

    if command == "report":
        from .report import render_report

        cards = load_manifest(args.scores, "scorecards")
        samples = load_manifest(args.benchmark, "benchmark")
        results = []
        results_root = None
        for path in args.results:
            results.extend(load_manifest(path, "results"))
            results_root = results_root or Path(path).parent
        out_dir = Path(args.out)
        write_run_meta(out_dir, "report", config, argv)
        index = render_report(
            cards,
            samples,
            results,
            benchmark_root=Path(args.benchmark).parent,
            results_root=results_root or Path("."),
            out_dir=out_dir,
        )
        print(f"report -> {index}")
        return EXIT_OK

    if command == "serve":
        import uvicorn

        from .annotation import TaskStore, create_app

        store = TaskStore(args.data)
        app = create_app(store, static_dir=args.static)
        uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
        return EXIT_OK

    raise WorkflowError(f"unhandled command {command!r}")


def _with_seed(overrides: dict, seed: int | None) -> dict:
    if seed is not None:
        overrides = dict(overrides)
        overrides["seed"] = seed
    return overrides


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
