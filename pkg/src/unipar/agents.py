"""The feedback-driven translation pipeline.

One task runs strictly sequentially: the questioner issues the translation,
the compilation agent gets up to three rounds against compiler diagnostics,
the ground-truth main is transplanted (with its own repair budget), and the
execution agent gets up to three rounds against runtime feedback. Parallelism
exists only across tasks.
"""

from __future__ import annotations

import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

from . import llm, prompting, toolchain as tc
from .apis import Direction, TranslationTask
from .lexing import MainNotFound
from .prompting import EmptyCompletion, PromptError, ShotExample, TemplateSet

log = logging.getLogger(__name__)

TRANSLATE = "translate"
COMPILE_REPAIR = "compile_repair"
EXEC_REPAIR = "exec_repair"
TRANSPLANT_REPAIR = "transplant_repair"

MAX_ROUNDS = 3

ShotSelector = Callable[[TranslationTask], list[ShotExample]]


@dataclass
class PipelineConfig:
    questioner_backend: llm.Backend
    repair_backend: llm.Backend
    gen: llm.GenerationConfig = field(default_factory=llm.GenerationConfig)
    shots: int = 0
    compile_rounds: int = MAX_ROUNDS
    exec_rounds: int = MAX_ROUNDS
    agentic: bool = True
    transplant_rounds: int = tc.TRANSPLANT_REPAIR_BUDGET
    templates: TemplateSet = prompting.DEFAULT_TEMPLATES

    def __post_init__(self) -> None:
        if not self.agentic:
            # pure zero/few-shot baseline: no repair agents
            self.compile_rounds = 0
            self.exec_rounds = 0
        for name in ("compile_rounds", "exec_rounds", "transplant_rounds"):
            value = getattr(self, name)
            if not 0 <= value <= MAX_ROUNDS:
                raise ValueError(f"{name} must be within 0..{MAX_ROUNDS}, got {value}")


@dataclass
class RoundRecord:
    stage: str  # translate | compile_repair | exec_repair | transplant_repair
    round_index: int
    prompt_hash: str
    response_hash: str
    compile: tc.CompileResult | None = None
    run: tc.RunResult | None = None

    def to_dict(self) -> dict:
        entry: dict = {
            "stage": self.stage,
            "round_index": self.round_index,
            "prompt_hash": self.prompt_hash,
            "response_hash": self.response_hash,
            "compile": None,
            "run": None,
        }
        if self.compile is not None:
            entry["compile"] = {
                "status": self.compile.status,
                "diagnostics": self.compile.diagnostics,
                "duration_ms": self.compile.duration_ms,
            }
        if self.run is not None:
            entry["run"] = {
                "exit_code": self.run.exit_code,
                "verdict": self.run.verdict,
                "duration_ms": self.run.duration_ms,
            }
        return entry

    @classmethod
    def from_dict(cls, raw: dict) -> "RoundRecord":
        compile_result = None
        if raw.get("compile") is not None:
            c = raw["compile"]
            compile_result = tc.CompileResult(c["status"], c["diagnostics"], None, c["duration_ms"])
        run_result = None
        if raw.get("run") is not None:
            r = raw["run"]
            run_result = tc.RunResult(r["exit_code"], "", "", r["verdict"], r["duration_ms"])
        return cls(
            stage=raw["stage"],
            round_index=raw["round_index"],
            prompt_hash=raw["prompt_hash"],
            response_hash=raw["response_hash"],
            compile=compile_result,
            run=run_result,
        )


@dataclass
class PipelineOutcome:
    task_id: str
    direction: Direction
    compiled: bool = False
    validated: bool = False
    success_stage: tuple[str, int] | None = None
    trace: list[RoundRecord] = field(default_factory=list)
    skipped_reason: str | None = None
    transplant: dict | None = None  # main_replaced, repair_rounds_used, kernel_guard

    @property
    def skipped(self) -> bool:
        return self.skipped_reason is not None

    def to_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "direction": self.direction.slug,
            "compiled": self.compiled,
            "validated": self.validated,
            "success_stage": list(self.success_stage) if self.success_stage else None,
            "trace": [record.to_dict() for record in self.trace],
            "skipped_reason": self.skipped_reason,
            "transplant": self.transplant,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "PipelineOutcome":
        success = raw.get("success_stage")
        return cls(
            task_id=raw["task_id"],
            direction=Direction.parse(raw["direction"]),
            compiled=raw["compiled"],
            validated=raw["validated"],
            success_stage=(success[0], success[1]) if success else None,
            trace=[RoundRecord.from_dict(r) for r in raw.get("trace", [])],
            skipped_reason=raw.get("skipped_reason"),
            transplant=raw.get("transplant"),
        )


def run_pipeline(
    task: TranslationTask,
    config: PipelineConfig,
    toolchain: tc.Toolchain,
    run_dir: str | Path,
    completion_log: llm.CompletionLog | None = None,
    shots: Sequence[ShotExample] = (),
) -> PipelineOutcome:
    """Run one task through the full cycle and seal its outcome on disk."""
    run_dir = Path(run_dir)
    workspace = run_dir / task.task_id
    workspace.mkdir(parents=True, exist_ok=True)
    outcome = PipelineOutcome(task_id=task.task_id, direction=task.direction)
    if not toolchain.available(task.direction.to_api):
        outcome.skipped_reason = f"toolchain_missing:{task.direction.to_api.slug}"
        _seal(outcome, workspace)
        return outcome
    try:
        _drive(task, config, toolchain, workspace, completion_log, shots, outcome)
    except (llm.LLMError, EmptyCompletion, PromptError, MainNotFound) as exc:
        outcome.skipped_reason = f"{type(exc).__name__}: {exc}"
    except Exception as exc:  # a task must never take the whole run down
        log.exception("task %s aborted", task.task_id)
        outcome.skipped_reason = f"{type(exc).__name__}: {exc}"
    _seal(outcome, workspace)
    return outcome


def _drive(
    task: TranslationTask,
    config: PipelineConfig,
    toolchain: tc.Toolchain,
    workspace: Path,
    completion_log: llm.CompletionLog | None,
    shots: Sequence[ShotExample],
    outcome: PipelineOutcome,
) -> None:
    direction = task.direction
    trace_path = workspace / "trace.jsonl"

    def push(record: RoundRecord) -> None:
        outcome.trace.append(record)
        with trace_path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(record.to_dict(), sort_keys=True) + "\n")

    # (1) initial translation by the questioner
    bundle = prompting.render_translation_prompt(task, shots, config.templates)
    response = llm.complete(
        bundle,
        config.gen,
        config.questioner_backend,
        context=llm.CallContext(task.task_id, TRANSLATE, 0),
        log=completion_log,
    )
    candidate = prompting.extract_code(response, direction.to_api)
    compiled = toolchain.compile(candidate, direction.to_api, workspace / "round_0")
    push(RoundRecord(TRANSLATE, 0, llm.prompt_hash(bundle), llm.response_hash(response), compiled))

    # (2) compilation agent: repair against the latest compiler diagnostics
    rounds = 0
    while not compiled.ok and rounds < config.compile_rounds:
        rounds += 1
        bundle = prompting.render_repair_prompt(
            "compile", candidate, _diag(compiled.diagnostics), direction, config.templates
        )
        response = llm.complete(
            bundle,
            config.gen,
            config.repair_backend,
            context=llm.CallContext(task.task_id, COMPILE_REPAIR, rounds),
            log=completion_log,
        )
        candidate = prompting.extract_code(response, direction.to_api)
        compiled = toolchain.compile(candidate, direction.to_api, workspace / f"round_{rounds}")
        push(
            RoundRecord(
                COMPILE_REPAIR,
                rounds,
                llm.prompt_hash(bundle),
                llm.response_hash(response),
                compiled,
            )
        )

    if not compiled.ok:
        return  # budget exhausted without a compiling candidate

    outcome.compiled = True
    outcome.success_stage = (outcome.trace[-1].stage, outcome.trace[-1].round_index)

    # (3) transplant the ground-truth main so its verification check runs
    merged = tc.transplant_main(candidate, task.ground_truth)
    merged.compile = toolchain.compile(
        merged.merged_source, direction.to_api, workspace / "merged"
    )
    if not merged.compile.ok:
        merged = tc.repair_transplant(
            merged,
            merged.compile.diagnostics,
            config.repair_backend,
            direction,
            toolchain,
            workspace,
            task_id=task.task_id,
            gen_config=config.gen,
            budget=config.transplant_rounds,
            templates=config.templates,
            log=completion_log,
        )
        for round_info in merged.rounds:
            push(
                RoundRecord(
                    TRANSPLANT_REPAIR,
                    round_info.round_index,
                    round_info.prompt_hash,
                    round_info.response_hash,
                    round_info.compile,
                )
            )
    outcome.transplant = {
        "main_replaced": merged.main_replaced,
        "repair_rounds_used": merged.repair_rounds_used,
        "kernel_guard": merged.kernel_guard,
    }
    if merged.compile is None or not merged.compile.ok:
        return  # transplant never compiled: validation failure
    if merged.kernel_guard == tc.CHANGED:
        return  # repair touched a kernel: counts as validation failure

    # (4) execute; execution agent repairs against runtime feedback
    run = toolchain.run_and_verify(
        merged.compile.artifact_path, api=direction.to_api, benchmark_id=task.benchmark_id
    )
    outcome.trace[-1].run = run
    current = merged.merged_source
    feedback_kind, feedback = "runtime", _run_feedback(run)
    rounds = 0
    while not run.passed and rounds < config.exec_rounds:
        rounds += 1
        bundle = prompting.render_repair_prompt(
            feedback_kind, current, feedback, direction, config.templates
        )
        response = llm.complete(
            bundle,
            config.gen,
            config.repair_backend,
            context=llm.CallContext(task.task_id, EXEC_REPAIR, rounds),
            log=completion_log,
        )
        repaired = prompting.extract_code(response, direction.to_api)
        # keep the verification main intact no matter what the repair did
        remerged = tc.transplant_main(repaired, task.ground_truth)
        compiled = toolchain.compile(
            remerged.merged_source, direction.to_api, workspace / f"exec_round_{rounds}"
        )
        record = RoundRecord(
            EXEC_REPAIR, rounds, llm.prompt_hash(bundle), llm.response_hash(response), compiled
        )
        if compiled.ok:
            current = remerged.merged_source
            run = toolchain.run_and_verify(
                compiled.artifact_path, api=direction.to_api, benchmark_id=task.benchmark_id
            )
            record.run = run
            feedback_kind, feedback = "runtime", _run_feedback(run)
        else:
            # a repair that breaks compilation burns the exec round
            feedback_kind, feedback = "compile", _diag(compiled.diagnostics)
        push(record)
    outcome.validated = run.passed


def _diag(diagnostics: str) -> str:
    return diagnostics if diagnostics.strip() else "compiler produced no diagnostics"


def _run_feedback(run: tc.RunResult) -> str:
    output = run.output()
    if not output.strip():
        output = "(no output)"
    return f"exit code {run.exit_code}, verdict {run.verdict}\n{output}"


# ---------------------------------------------------------------------------
# batch execution

def _seal(outcome: PipelineOutcome, workspace: Path) -> None:
    """Atomic write: a crash mid-run never leaves a half-written outcome."""
    target = workspace / "outcome.json"
    temp = workspace / "outcome.json.tmp"
    temp.write_text(json.dumps(outcome.to_dict(), sort_keys=True, indent=2), encoding="utf-8")
    os.replace(temp, target)


def load_sealed(run_dir: str | Path, task_id: str) -> PipelineOutcome | None:
    path = Path(run_dir) / task_id / "outcome.json"
    if not path.is_file():
        return None
    try:
        return PipelineOutcome.from_dict(json.loads(path.read_text(encoding="utf-8")))
    except (ValueError, KeyError):
        log.warning("ignoring unreadable sealed outcome at %s", path)
        return None


def run_batch(
    tasks: Sequence[TranslationTask],
    config: PipelineConfig,
    toolchain: tc.Toolchain,
    run_dir: str | Path,
    parallelism: int = 1,
    completion_log: llm.CompletionLog | None = None,
    shot_selector: ShotSelector | None = None,
) -> list[PipelineOutcome]:
    """Run tasks with bounded parallelism; outcomes return in task order.

    Sealed outcomes already present in the run directory are loaded, not
    recomputed, which makes an interrupted batch resumable.
    """
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    outcomes: dict[str, PipelineOutcome] = {}
    pending: list[TranslationTask] = []
    for task in tasks:
        sealed = load_sealed(run_dir, task.task_id)
        if sealed is not None:
            outcomes[task.task_id] = sealed
        else:
            pending.append(task)

    def run_one(task: TranslationTask) -> PipelineOutcome:
        shots = shot_selector(task) if shot_selector else []
        return run_pipeline(task, config, toolchain, run_dir, completion_log, shots)

    if pending:
        pool = ThreadPoolExecutor(max_workers=max(1, parallelism))
        try:
            futures = {pool.submit(run_one, task): task for task in pending}
            for future in as_completed(futures):
                outcome = future.result()
                outcomes[outcome.task_id] = outcome
        except BaseException:
            pool.shutdown(wait=False, cancel_futures=True)
            raise
        pool.shutdown(wait=True)

    ordered = [outcomes[t.task_id] for t in tasks]
    write_outcomes(ordered, run_dir / "outcomes.jsonl")
    return ordered


def write_outcomes(outcomes: Sequence[PipelineOutcome], path: str | Path) -> None:
    path = Path(path)
    temp = path.with_suffix(".jsonl.tmp")
    with temp.open("w", encoding="utf-8") as fh:
        for outcome in outcomes:
            fh.write(json.dumps(outcome.to_dict(), sort_keys=True) + "\n")
    os.replace(temp, path)


def load_outcomes(path: str | Path) -> list[PipelineOutcome]:
    outcomes = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            outcomes.append(PipelineOutcome.from_dict(json.loads(line)))
    return outcomes
