"""Compile, execute, and verify candidate code; ground-truth main transplant.

Compile failure is data, not an exception: every result carries the merged
compiler diagnostics. A missing compiler marks the task skippable instead of
failed so GPU-less hosts do not deflate CUDA rates.
"""

from __future__ import annotations

import os
import re
import shlex
import shutil
import subprocess
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import lexing, llm, prompting
from .apis import Api, Direction
from .lexing import MainNotFound, find_main_span, non_main_function_tokens

OK = "ok"
FAILED = "failed"
TOOLCHAIN_MISSING = "toolchain_missing"

PASS = "pass"
FAIL = "fail"
TIMEOUT = "timeout"
CRASH = "crash"

UNCHANGED = "unchanged"
CHANGED = "changed"
NOT_CHECKED = "not_checked"

DEFAULT_COMMANDS: dict[str, str] = {
    "serial": "g++ -O2 {src} -o {out}",
    "omp": "g++ -O2 -fopenmp {src} -o {out}",
    "cuda": "nvcc -O2 {src} -o {out}",
}

TRANSPLANT_REPAIR_BUDGET = 3


@dataclass(frozen=True)
class VerdictDetector:
    """Regex-set classifier over a program's merged output."""

    pass_patterns: tuple[str, ...] = (r"PASS", r"Verification\s*:?\s*(pass|passed|success)")
    fail_patterns: tuple[str, ...] = (r"FAIL", r"error")

    def matches(self, output: str) -> bool:
        if any(re.search(p, output, re.IGNORECASE) for p in self.fail_patterns):
            return False
        return any(re.search(p, output, re.IGNORECASE) for p in self.pass_patterns)


DEFAULT_DETECTOR = VerdictDetector()


@dataclass(frozen=True)
class ToolchainSettings:
    commands: dict[str, str] = field(default_factory=lambda: dict(DEFAULT_COMMANDS))
    compile_timeout_s: float = 120.0
    run_timeout_s: float = 300.0
    output_cap_bytes: int = 4 * 1024 * 1024  # per stream
    detector: VerdictDetector = DEFAULT_DETECTOR
    detector_overrides: dict[str, VerdictDetector] = field(default_factory=dict)
    gpu_slots: int = 1

    def command_for(self, api: Api) -> str:
        return self.commands.get(api.slug, DEFAULT_COMMANDS[api.slug])

    def detector_for(self, benchmark_id: str | None) -> VerdictDetector:
        if benchmark_id is not None and benchmark_id in self.detector_overrides:
            return self.detector_overrides[benchmark_id]
        return self.detector


@dataclass
class CompileResult:
    status: str  # ok | failed | toolchain_missing
    diagnostics: str
    artifact_path: Path | None
    duration_ms: int

    @property
    def ok(self) -> bool:
        return self.status == OK


@dataclass
class RunResult:
    exit_code: int
    stdout: str
    stderr: str
    verdict: str  # pass | fail | timeout | crash
    duration_ms: int

    @property
    def passed(self) -> bool:
        return self.verdict == PASS

    def output(self) -> str:
        return self.stdout + self.stderr


class Toolchain:
    """Settings plus the concurrency guards (GPU device-slot semaphore)."""

    def __init__(self, settings: ToolchainSettings | None = None):
        self.settings = settings or ToolchainSettings()
        self._gpu_slots = threading.BoundedSemaphore(max(1, self.settings.gpu_slots))

    def available(self, api: Api) -> bool:
        head = shlex.split(self.settings.command_for(api))[0]
        return shutil.which(head) is not None

    def compile(self, source_text: str, api: Api, workspace: str | Path) -> CompileResult:
        """Compile source_text inside *workspace*; never raises on failure."""
        workspace = Path(workspace).resolve()  # artifact paths must survive cwd changes
        workspace.mkdir(parents=True, exist_ok=True)
        src = workspace / f"src{api.extension}"
        out = workspace / "bin"
        src.write_text(source_text, encoding="utf-8")
        template = self.settings.command_for(api)
        # relative paths (the command runs with cwd=workspace) keep compiler
        # diagnostics byte-identical across run directories
        argv = [
            part.format(src=src.name, out=out.name)
            for part in shlex.split(template)
        ]
        if shutil.which(argv[0]) is None:
            diag = f"compiler not found: {argv[0]}"
            (workspace / "compile.log").write_text(diag, encoding="utf-8")
            return CompileResult(TOOLCHAIN_MISSING, diag, None, 0)
        started = time.monotonic()
        try:
            proc = subprocess.run(
                argv,
                capture_output=True,
                text=True,
                errors="replace",
                timeout=self.settings.compile_timeout_s,
                cwd=workspace,
            )
            diagnostics = self._cap(proc.stdout) + self._cap(proc.stderr)
            rc = proc.returncode
        except subprocess.TimeoutExpired:
            diagnostics = f"compiler timed out after {self.settings.compile_timeout_s}s"
            rc = -1
        duration_ms = int((time.monotonic() - started) * 1000)
        (workspace / "compile.log").write_text(diagnostics, encoding="utf-8")
        if rc == 0 and out.is_file() and os.access(out, os.X_OK):
            return CompileResult(OK, diagnostics, out, duration_ms)
        return CompileResult(FAILED, diagnostics, None, duration_ms)

    def run_and_verify(
        self,
        artifact: str | Path,
        timeout_s: float | None = None,
        args: tuple[str, ...] = (),
        api: Api | None = None,
        benchmark_id: str | None = None,
    ) -> RunResult:
        """Execute the artifact under timeout and size caps; classify output."""
        if api is Api.CUDA:
            with self._gpu_slots:
                return self._run(artifact, timeout_s, args, benchmark_id)
        return self._run(artifact, timeout_s, args, benchmark_id)

    def _run(
        self,
        artifact: str | Path,
        timeout_s: float | None,
        args: tuple[str, ...],
        benchmark_id: str | None,
    ) -> RunResult:
        artifact = Path(artifact).resolve()
        budget = timeout_s if timeout_s is not None else self.settings.run_timeout_s
        detector = self.settings.detector_for(benchmark_id)
        started = time.monotonic()
        try:
            proc = subprocess.run(
                [str(artifact), *args],
                capture_output=True,
                text=True,
                errors="replace",
                timeout=budget,
                cwd=artifact.parent,
            )
            stdout, stderr = self._cap(proc.stdout), self._cap(proc.stderr)
            exit_code = proc.returncode
        except subprocess.TimeoutExpired as exc:
            duration_ms = int((time.monotonic() - started) * 1000)
            result = RunResult(
                exit_code=-1,
                stdout=self._cap(_decode(exc.stdout)),
                stderr=self._cap(_decode(exc.stderr)) + f"\ntimed out after {budget}s",
                verdict=TIMEOUT,
                duration_ms=max(duration_ms, int(budget * 1000)),
            )
            return self._finish_run(artifact, result)
        except OSError as exc:
            duration_ms = int((time.monotonic() - started) * 1000)
            result = RunResult(-1, "", f"could not execute artifact: {exc}", CRASH, duration_ms)
            return self._finish_run(artifact, result)
        duration_ms = int((time.monotonic() - started) * 1000)
        if exit_code < 0:
            verdict = CRASH
        elif exit_code == 0 and detector.matches(stdout + stderr):
            verdict = PASS
        else:
            verdict = FAIL
        return self._finish_run(
            artifact, RunResult(exit_code, stdout, stderr, verdict, duration_ms)
        )

    @staticmethod
    def _finish_run(artifact: Path, result: RunResult) -> RunResult:
        log = (
            f"exit={result.exit_code} verdict={result.verdict} "
            f"duration_ms={result.duration_ms}\n"
            f"--- stdout ---\n{result.stdout}\n--- stderr ---\n{result.stderr}\n"
        )
        try:
            (artifact.parent / "run.log").write_text(log, encoding="utf-8")
        except OSError:
            pass  # the run verdict matters more than the log file
        return result

    def _cap(self, stream: str) -> str:
        cap = self.settings.output_cap_bytes
        raw = stream.encode("utf-8", errors="replace")
        if len(raw) <= cap:
            return stream
        return raw[:cap].decode("utf-8", errors="ignore") + "\n[output truncated]"


def _decode(data: bytes | str | None) -> str:
    if data is None:
        return ""
    if isinstance(data, bytes):
        return data.decode("utf-8", errors="replace")
    return data


# ---------------------------------------------------------------------------
# ground-truth main transplant

@dataclass
class TransplantRound:
    round_index: int
    prompt_hash: str
    response_hash: str
    compile: CompileResult


@dataclass
class TransplantOutcome:
    merged_source: str
    main_replaced: bool
    repair_rounds_used: int = 0
    kernel_guard: str = NOT_CHECKED  # unchanged | changed | not_checked
    compile: CompileResult | None = None
    rounds: list[TransplantRound] = field(default_factory=list)


def transplant_main(generated: str, ground_truth: str) -> TransplantOutcome:
    """Swap the ground-truth main (which carries the verification check) into
    the generated program; everything else in the generated text is kept
    byte-for-byte. A generated program with no main gets the ground-truth main
    appended, since translated output frequently contains only kernels.
    """
    gt_start, gt_end = find_main_span(ground_truth, "ground_truth")
    gt_main = ground_truth[gt_start:gt_end]
    try:
        gen_start, gen_end = find_main_span(generated, "generated")
    except MainNotFound:
        merged = generated
        if merged and not merged.endswith("\n"):
            merged += "\n"
        return TransplantOutcome(merged + gt_main + "\n", main_replaced=False)
    merged = generated[:gen_start] + gt_main + generated[gen_end:]
    return TransplantOutcome(merged, main_replaced=True)


def kernel_guard_check(before: str, after: str) -> str:
    """Compare all non-main function definitions as normalized token streams.

    Token-level equality is deliberately conservative: a renamed local counts
    as changed, a whitespace or comment reshuffle does not.
    """
    try:
        if non_main_function_tokens(before) == non_main_function_tokens(after):
            return UNCHANGED
    except lexing.LexError:
        return CHANGED
    return CHANGED


def repair_transplant(
    merged: TransplantOutcome,
    diagnostics: str,
    backend: llm.Backend,
    direction: Direction,
    toolchain: Toolchain,
    workspace_root: str | Path,
    task_id: str = "",
    gen_config: llm.GenerationConfig | None = None,
    budget: int = TRANSPLANT_REPAIR_BUDGET,
    templates: prompting.TemplateSet = prompting.DEFAULT_TEMPLATES,
    log: llm.CompletionLog | None = None,
) -> TransplantOutcome:
    """Repair a transplant that broke compilation, up to *budget* rounds.

    After a successful repair the kernel guard compares the repaired program
    against the pre-repair merged source; a guard hit counts as a validation
    failure upstream.
    """
    gen_config = gen_config or llm.GenerationConfig()
    workspace_root = Path(workspace_root)
    current = merged.merged_source
    diag = diagnostics
    rounds: list[TransplantRound] = []
    last_compile: CompileResult | None = merged.compile
    for k in range(1, budget + 1):
        bundle = prompting.render_repair_prompt("compile", current, diag, direction, templates)
        response = llm.complete(
            bundle,
            gen_config,
            backend,
            context=llm.CallContext(task_id=task_id, stage="transplant_repair", round=k),
            log=log,
        )
        candidate = prompting.extract_code(response, direction.to_api)
        result = toolchain.compile(
            candidate, direction.to_api, workspace_root / f"transplant_round_{k}"
        )
        rounds.append(
            TransplantRound(k, llm.prompt_hash(bundle), llm.response_hash(response), result)
        )
        last_compile = result
        if result.ok:
            guard = kernel_guard_check(merged.merged_source, candidate)
            return TransplantOutcome(
                merged_source=candidate,
                main_replaced=merged.main_replaced,
                repair_rounds_used=k,
                kernel_guard=guard,
                compile=result,
                rounds=rounds,
            )
        current = candidate
        diag = result.diagnostics
    return TransplantOutcome(
        merged_source=current,
        main_replaced=merged.main_replaced,
        repair_rounds_used=budget,
        kernel_guard=NOT_CHECKED,
        compile=last_compile,
        rounds=rounds,
    )
