"""The unipar command line: curate, split, translate, run, sweep, report,
export-finetune, verify-env.

Exit codes: 0 success, 1 task-level failure under --strict, 2 configuration
or usage errors.
"""

from __future__ import annotations

import argparse
import json
import os
import shlex
import shutil
import sys
import uuid
from pathlib import Path

from . import agents, corpus, llm, metrics, prompting
from .apis import DIRECTIONS, Api, Direction
from .config import AppConfig, ConfigError, load_config
from .tokens import CounterError, make_counter
from .toolchain import Toolchain

EXIT_OK = 0
EXIT_TASK_FAILURE = 1
EXIT_CONFIG = 2


class CliError(Exception):
    """Configuration-level failure; maps to exit code 2."""


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="unipar",
        description="Curate aligned parallel-kernel corpora and evaluate "
        "LLM translation with compiler/execution feedback.",
    )
    parser.add_argument("--config", help="TOML config file")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("curate", help="build the aligned corpus from a benchmark tree")
    p.add_argument("--root", required=True, help="benchmark tree root")
    p.add_argument("--out", default=None, help="corpus output directory")
    p.add_argument("--cutoff", type=int, default=None, help="token-count cutoff (inclusive)")
    p.add_argument("--counter", choices=["approx", "vocab"], default=None)
    p.add_argument("--vocab", default=None, help="vocabulary file for --counter vocab")
    p.add_argument("--verify", choices=["on", "off"], default=None)
    p.add_argument("--categories", default=None, help="JSON file: benchmark id -> category")
    p.add_argument("--parallelism", type=int, default=None)

    p = sub.add_parser("split", help="split the corpus into train/test per direction")
    p.add_argument("--corpus", required=True)
    p.add_argument("--ratio", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None, help="split manifest path")

    p = sub.add_parser("translate", help="run a single task and print its outcome")
    _add_run_arguments(p)
    p.add_argument("--benchmark", required=True)

    p = sub.add_parser("run", help="run the test split through the pipeline")
    _add_run_arguments(p)
    p.add_argument("--strict", action="store_true", help="exit 1 on any task failure")

    p = sub.add_parser("sweep", help="run the decoding-parameter grid")
    _add_run_arguments(p)
    p.add_argument("--temperatures", default="0.2,0.6,0.9")
    p.add_argument("--max-tokens-grid", default="5000,10000,15000")
    p.add_argument("--top-p", type=float, default=0.8)
    p.add_argument("--shots-grid", default="0")

    p = sub.add_parser("report", help="render reports from a run directory")
    p.add_argument("run_dir")
    p.add_argument(
        "--format",
        default="markdown,csv,json",
        help="comma list of markdown,csv,json",
    )

    p = sub.add_parser("export-finetune", help="emit the instruction-tuning dataset")
    p.add_argument("--corpus", required=True)
    p.add_argument("--split", required=True)
    p.add_argument("--out", default="finetune.jsonl")
    p.add_argument("--context-limit", type=int, default=metrics.FINETUNE_CONTEXT_LIMIT)
    p.add_argument(
        "--keep-over-limit",
        action="store_true",
        help="flag over-length records instead of dropping them",
    )

    sub.add_parser("verify-env", help="print the compiler/backend capability table")
    return parser


def _add_run_arguments(p: argparse.ArgumentParser) -> None:
    p.add_argument("--corpus", required=True)
    p.add_argument("--split", default=None, help="split manifest (required for shots)")
    p.add_argument(
        "--direction",
        action="append",
        default=None,
        help="direction slug like cuda-to-omp; repeatable; default all four",
    )
    p.add_argument("--backend", default=None, help="questioner backend: mock:<script> or http[:model]")
    p.add_argument("--repair-backend", default=None, help="repair backend; defaults to --backend")
    p.add_argument("--shots", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--run-id", default=None)
    p.add_argument("--runs-root", default=None)
    p.add_argument("--parallelism", type=int, default=None)
    p.add_argument("--no-agentic", action="store_true", help="zero/few-shot baseline mode")
    p.add_argument("--temperature", type=float, default=None)
    p.add_argument("--max-tokens", type=int, default=None)
    p.add_argument("--top-p-value", type=float, default=None)
    p.add_argument("--model", default=None)


def make_backend(spec: str) -> llm.Backend:
    """Parse a backend spec: mock:<script.jsonl>[:echo-input] or http[:model]."""
    if not spec:
        raise CliError("no backend configured: pass --backend or set [backend] in the config")
    kind, _, rest = spec.partition(":")
    if kind == "mock":
        path, _, policy = rest.partition(":")
        if not path:
            raise CliError("mock backend needs a script: mock:<script.jsonl>")
        try:
            return llm.MockBackend.from_file(path, miss_policy=policy or "error")
        except (OSError, ValueError, llm.BackendConfigError) as exc:
            raise CliError(f"cannot load mock script {path}: {exc}") from exc
    if kind == "http":
        try:
            return llm.HttpBackend()
        except llm.BackendConfigError as exc:
            raise CliError(str(exc)) from exc
    raise CliError(f"unknown backend spec {spec!r} (expected mock:<script> or http)")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        handler = {
            "curate": _cmd_curate,
            "split": _cmd_split,
            "translate": _cmd_translate,
            "run": _cmd_run,
            "sweep": _cmd_sweep,
            "report": _cmd_report,
            "export-finetune": _cmd_export,
            "verify-env": _cmd_verify_env,
        }[args.command]
        return handler(args, config)
    except (CliError, ConfigError, CounterError, corpus.CorpusError, metrics.MetricsError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def _cmd_curate(args: argparse.Namespace, config: AppConfig) -> int:
    section = config.corpus
    cutoff = args.cutoff if args.cutoff is not None else section.cutoff
    counter_kind = args.counter or section.counter
    vocab = args.vocab or (section.vocab or None)
    verify = section.verify if args.verify is None else args.verify == "on"
    out = Path(args.out or section.out)
    counter = make_counter(counter_kind, vocab)
    categories = None
    categories_path = args.categories or (section.categories or None)
    if categories_path:
        categories = json.loads(Path(categories_path).read_text(encoding="utf-8"))
    result = corpus.curate(
        args.root,
        out,
        cutoff=cutoff,
        counter=counter,
        verify=verify,
        toolchain=Toolchain(config.toolchain.settings()),
        workers=args.parallelism or config.run.parallelism,
        categories=categories,
    )
    print(f"scanned {result.scanned} sources; kept {result.kept} after pruning (cutoff {cutoff})")
    for benchmark_id, api, tokens in result.dropped:
        print(f"  pruned {benchmark_id}/{api}: {tokens} tokens")
    for skip in result.scan_report.skipped:
        print(f"  skipped {skip['directory']}: {skip['reason']}")
    for warning in result.scan_report.warnings:
        print(f"  warning: {warning}")
    if result.verified:
        counts: dict[str, int] = {}
        for verdict in result.verified.values():
            counts[verdict] = counts.get(verdict, 0) + 1
        summary = ", ".join(f"{k}={v}" for k, v in sorted(counts.items()))
        print(f"verification: {summary}")
    for benchmark_id in result.dropped_tuples:
        print(f"  dropped tuple {benchmark_id} after verification")
    print(f"wrote {len(result.tuples)} tuples to {out}")
    return EXIT_OK


def _cmd_split(args: argparse.Namespace, config: AppConfig) -> int:
    tuples = corpus.load_corpus(args.corpus)
    ratio = args.ratio if args.ratio is not None else config.split.ratio
    seed = args.seed if args.seed is not None else config.split.seed
    manifest = corpus.split_corpus(tuples, ratio=ratio, seed=seed)
    out = Path(args.out or config.split.out)
    manifest.save(out)
    for direction in DIRECTIONS:
        n_train = len(manifest.ids("train", direction))
        n_test = len(manifest.ids("test", direction))
        print(f"{direction.slug}: {n_train} train / {n_test} test")
    print(f"wrote {out}")
    return EXIT_OK


def _resolve_run(args: argparse.Namespace, config: AppConfig):
    tuples = corpus.load_corpus(args.corpus)
    directions = tuple(
        Direction.parse(d) for d in (args.direction or [d.slug for d in DIRECTIONS])
    )
    questioner_spec = args.backend or config.backend.questioner
    repair_spec = args.repair_backend or config.backend.repair or questioner_spec
    questioner = make_backend(questioner_spec)
    repair = make_backend(repair_spec) if repair_spec != questioner_spec else questioner
    gen = llm.GenerationConfig(
        temperature=args.temperature if args.temperature is not None else config.gen.temperature,
        top_p=args.top_p_value if args.top_p_value is not None else config.gen.top_p,
        max_tokens=args.max_tokens if args.max_tokens is not None else config.gen.max_tokens,
        model_id=args.model or config.gen.model_id,
    )
    shots = args.shots if args.shots is not None else config.pipeline.shots
    pipeline_config = agents.PipelineConfig(
        questioner_backend=questioner,
        repair_backend=repair,
        gen=gen,
        shots=shots,
        compile_rounds=config.pipeline.compile_rounds,
        exec_rounds=config.pipeline.exec_rounds,
        transplant_rounds=config.pipeline.transplant_rounds,
        agentic=config.pipeline.agentic and not args.no_agentic,
    )
    seed = args.seed if args.seed is not None else config.run.seed
    manifest = corpus.SplitManifest.load(args.split) if args.split else None

    def shot_selector_for(n: int):
        if n == 0:
            return None
        if manifest is None:
            raise CliError("--shots needs --split so examples come from the train set")
        train_tasks = corpus.tasks_from_manifest(tuples, manifest, "train", directions)

        def select(task):
            return prompting.select_shots(
                train_tasks, task.direction, n, seed, exclude_benchmark=task.benchmark_id
            )

        return select

    run_id = args.run_id or config.run.run_id or uuid.uuid4().hex[:12]
    runs_root = Path(args.runs_root or config.run.runs_root)
    parallelism = args.parallelism or config.run.parallelism
    toolchain = Toolchain(config.toolchain.settings())
    return (
        tuples,
        directions,
        pipeline_config,
        manifest,
        shot_selector_for,
        run_id,
        runs_root,
        parallelism,
        toolchain,
        seed,
    )


def _tasks_for_run(tuples, manifest, directions, benchmark: str | None = None):
    if manifest is not None:
        tasks = corpus.tasks_from_manifest(tuples, manifest, "test", directions)
    else:
        tasks = []
        for direction in directions:
            tasks.extend(corpus.tasks_for_direction(tuples, direction))
    if benchmark is not None:
        tasks = [t for t in tasks if t.benchmark_id == benchmark]
    return tasks


def _cmd_translate(args: argparse.Namespace, config: AppConfig) -> int:
    (tuples, directions, pipeline_config, manifest, shot_selector_for,
     run_id, runs_root, _, toolchain, _) = _resolve_run(args, config)
    tasks = _tasks_for_run(tuples, manifest, directions, benchmark=args.benchmark)
    if not tasks:
        raise CliError(f"no task for benchmark {args.benchmark!r} in the given directions")
    run_dir = runs_root / run_id
    completion_log = llm.CompletionLog(None)
    selector = shot_selector_for(pipeline_config.shots)
    for task in tasks:
        shots = selector(task) if selector else []
        outcome = agents.run_pipeline(
            task, pipeline_config, toolchain, run_dir, completion_log, shots
        )
        print(json.dumps(outcome.to_dict(), indent=2, sort_keys=True))
    return EXIT_OK


def _cmd_run(args: argparse.Namespace, config: AppConfig) -> int:
    (tuples, directions, pipeline_config, manifest, shot_selector_for,
     run_id, runs_root, parallelism, toolchain, _) = _resolve_run(args, config)
    tasks = _tasks_for_run(tuples, manifest, directions)
    if not tasks:
        raise CliError("no tasks selected; check --split and --direction")
    run_dir = runs_root / run_id
    run_dir.mkdir(parents=True, exist_ok=True)
    completion_log = llm.CompletionLog(run_dir / "completions.jsonl")
    outcomes = agents.run_batch(
        tasks,
        pipeline_config,
        toolchain,
        run_dir,
        parallelism=parallelism,
        completion_log=completion_log,
        shot_selector=shot_selector_for(pipeline_config.shots),
    )
    stats = metrics.aggregate(outcomes)
    point = {
        "temperature": pipeline_config.gen.temperature,
        "max_tokens": pipeline_config.gen.max_tokens,
        "top_p": pipeline_config.gen.top_p,
        "shots": pipeline_config.shots,
    }
    manifest_out = metrics.RunManifest(
        run_id=run_id,
        config_snapshot=config.snapshot(),
        environment=metrics.describe_environment(toolchain),
        points=[metrics.stats_to_manifest_point(point, stats, len(outcomes))],
    )
    manifest_out.save(run_dir / "manifest.json")
    for direction in sorted(stats, key=lambda d: d.slug):
        s = stats[direction]
        comp = f"{float(s.compilation_rate):.3f}" if s.compilation_rate is not None else "n/a"
        val = f"{float(s.validation_rate):.3f}" if s.validation_rate is not None else "n/a"
        print(
            f"{direction.slug}: {s.n_tasks} tasks, {s.n_skipped} skipped, "
            f"compilation {comp}, validation {val}"
        )
    print(f"run directory: {run_dir}")
    if args.strict and any(o.skipped or not o.validated for o in outcomes):
        return EXIT_TASK_FAILURE
    return EXIT_OK


def _cmd_sweep(args: argparse.Namespace, config: AppConfig) -> int:
    (tuples, directions, pipeline_config, manifest, shot_selector_for,
     run_id, runs_root, parallelism, toolchain, _) = _resolve_run(args, config)
    tasks = _tasks_for_run(tuples, manifest, directions)
    if not tasks:
        raise CliError("no tasks selected; check --split and --direction")
    spec = metrics.SweepSpec(
        temperatures=tuple(float(t) for t in args.temperatures.split(",")),
        max_tokens=tuple(int(m) for m in args.max_tokens_grid.split(",")),
        top_p=args.top_p,
        shots=tuple(int(s) for s in args.shots_grid.split(",")),
    )
    run_dir = runs_root / run_id
    run_dir.mkdir(parents=True, exist_ok=True)
    completion_log = llm.CompletionLog(run_dir / "completions.jsonl")
    sweep_manifest = metrics.run_sweep(
        spec,
        tasks,
        pipeline_config,
        toolchain,
        run_dir,
        run_id,
        parallelism=parallelism,
        completion_log=completion_log,
        shot_selector_factory=shot_selector_for,
        config_snapshot=config.snapshot(),
    )
    print(f"{len(sweep_manifest.points)} grid points complete; manifest in {run_dir}")
    return EXIT_OK


def _cmd_report(args: argparse.Namespace, config: AppConfig) -> int:
    run_dir = Path(args.run_dir)
    manifest_path = run_dir / "manifest.json"
    if not manifest_path.is_file():
        raise CliError(f"no manifest.json under {run_dir}")
    manifest = metrics.RunManifest.load(manifest_path)
    extensions = {"markdown": "md", "csv": "csv", "json": "json"}
    for fmt in args.format.split(","):
        fmt = fmt.strip()
        if fmt not in extensions:
            raise CliError(f"unknown report format {fmt!r}")
        out = metrics.emit_report(manifest, fmt, run_dir / f"report.{extensions[fmt]}")
        print(f"wrote {out}")
    return EXIT_OK


def _cmd_export(args: argparse.Namespace, config: AppConfig) -> int:
    tuples = corpus.load_corpus(args.corpus)
    manifest = corpus.SplitManifest.load(args.split)
    train_tasks = corpus.tasks_from_manifest(tuples, manifest, "train")
    counter = make_counter(config.corpus.counter, config.corpus.vocab or None)
    result = metrics.export_finetune(
        train_tasks,
        args.out,
        counter=counter,
        context_limit=args.context_limit,
        drop_over_limit=not args.keep_over_limit,
    )
    print(
        f"wrote {result.written} records to {args.out} "
        f"({len(result.flagged)} over the context limit, {result.dropped} dropped)"
    )
    return EXIT_OK


def _cmd_verify_env(args: argparse.Namespace, config: AppConfig) -> int:
    toolchain = Toolchain(config.toolchain.settings())
    print(f"{'component':<12} {'status':<10} detail")
    for api in Api:
        command = toolchain.settings.command_for(api)
        head = shlex.split(command)[0]
        found = shutil.which(head)
        status = "ok" if found else "missing"
        print(f"{api.slug:<12} {status:<10} {found or head}")
    for env_var in (llm.API_KEY_ENV, llm.API_BASE_ENV):
        status = "set" if os.environ.get(env_var) else "unset"
        print(f"{env_var:<12} {status:<10}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
