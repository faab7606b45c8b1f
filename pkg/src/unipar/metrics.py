"""Aggregation, repair-round attribution, sweeps, reports, fine-tune export.

Rates are exact rationals over non-skipped tasks; skipped tasks (missing
toolchain, backend abort) never deflate a denominator. The per-compiled-task
counts are stored alongside so the alternative validated/compiled convention
stays derivable from any manifest.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import platform
import shlex
import shutil
import subprocess
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Sequence

from . import prompting
from .agents import PipelineConfig, PipelineOutcome, run_batch
from .apis import Api, Direction, TranslationTask
from .llm import CompletionLog, GenerationConfig
from .tokens import TokenCounter, approx_count
from .toolchain import Toolchain

log = logging.getLogger(__name__)

REPORT_FORMATS = ("markdown", "csv", "json")

FINETUNE_CONTEXT_LIMIT = 16384

FINETUNE_SCHEMA: dict = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "title": "unipar fine-tuning record",
    "type": "object",
    "required": ["system", "instruction", "response"],
    "properties": {
        "system": {"type": "string"},
        "instruction": {"type": "string"},
        "response": {"type": "string"},
    },
    "additionalProperties": False,
}


class MetricsError(Exception):
    pass


@dataclass
class DirectionStats:
    direction: Direction
    n_tasks: int
    n_compiled: int
    n_validated: int
    n_skipped: int
    round_attribution: dict[tuple[str, int], int] = field(default_factory=dict)

    @property
    def denominator(self) -> int:
        return self.n_tasks - self.n_skipped

    @property
    def compilation_rate(self) -> Fraction | None:
        return Fraction(self.n_compiled, self.denominator) if self.denominator else None

    @property
    def validation_rate(self) -> Fraction | None:
        return Fraction(self.n_validated, self.denominator) if self.denominator else None

    def to_dict(self) -> dict:
        return {
            "direction": self.direction.slug,
            "n_tasks": self.n_tasks,
            "n_compiled": self.n_compiled,
            "n_validated": self.n_validated,
            "n_skipped": self.n_skipped,
            "compilation_rate": _rate_dict(self.compilation_rate),
            "validation_rate": _rate_dict(self.validation_rate),
            "round_attribution": [
                {"stage": stage, "round": round_index, "count": count}
                for (stage, round_index), count in sorted(self.round_attribution.items())
            ],
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "DirectionStats":
        return cls(
            direction=Direction.parse(raw["direction"]),
            n_tasks=raw["n_tasks"],
            n_compiled=raw["n_compiled"],
            n_validated=raw["n_validated"],
            n_skipped=raw["n_skipped"],
            round_attribution={
                (entry["stage"], entry["round"]): entry["count"]
                for entry in raw.get("round_attribution", [])
            },
        )


def _rate_dict(rate: Fraction | None) -> dict | None:
    if rate is None:
        return None
    return {
        "numerator": rate.numerator,
        "denominator": rate.denominator,
        "value": float(rate),
    }


def aggregate(outcomes: Sequence[PipelineOutcome]) -> dict[Direction, DirectionStats]:
    """Per-direction counts; directions with zero outcomes are omitted."""
    grouped: dict[Direction, list[PipelineOutcome]] = {}
    for outcome in outcomes:
        grouped.setdefault(outcome.direction, []).append(outcome)
    stats: dict[Direction, DirectionStats] = {}
    for direction in sorted(grouped, key=lambda d: d.slug):
        group = grouped[direction]
        if not group:
            log.warning("no outcomes for direction %s; omitting stats", direction.slug)
            continue
        entry = DirectionStats(
            direction=direction,
            n_tasks=len(group),
            n_compiled=sum(1 for o in group if not o.skipped and o.compiled),
            n_validated=sum(1 for o in group if not o.skipped and o.validated),
            n_skipped=sum(1 for o in group if o.skipped),
            round_attribution=attribute_rounds(group),
        )
        stats[direction] = entry
    return stats


def attribute_rounds(outcomes: Sequence[PipelineOutcome]) -> dict[tuple[str, int], int]:
    """Count compile successes at the earliest stage/round that achieved them.

    Cells partition the compiled set: they are disjoint by construction and
    sum to the number of compiled outcomes.
    """
    table: dict[tuple[str, int], int] = {}
    for outcome in outcomes:
        if outcome.skipped or not outcome.compiled or outcome.success_stage is None:
            continue
        key = (outcome.success_stage[0], outcome.success_stage[1])
        table[key] = table.get(key, 0) + 1
    return table


# ---------------------------------------------------------------------------
# sweeps and manifests

@dataclass(frozen=True)
class SweepSpec:
    temperatures: tuple[float, ...] = (0.2, 0.6, 0.9)
    max_tokens: tuple[int, ...] = (5000, 10000, 15000)
    top_p: float = 0.8
    shots: tuple[int, ...] = (0, 1, 2, 3)

    def points(self) -> list[dict]:
        grid = []
        for temperature in self.temperatures:
            for limit in self.max_tokens:
                for shots in self.shots:
                    grid.append(
                        {
                            "temperature": temperature,
                            "max_tokens": limit,
                            "top_p": self.top_p,
                            "shots": shots,
                        }
                    )
        return grid


def point_slug(point: dict) -> str:
    return (
        f"t{point['temperature']:g}_m{point['max_tokens']}"
        f"_p{point['top_p']:g}_s{point['shots']}"
    )


@dataclass
class RunManifest:
    run_id: str
    config_snapshot: dict = field(default_factory=dict)
    environment: dict = field(default_factory=dict)
    points: list[dict] = field(default_factory=list)  # {"point", "stats", "n_outcomes"}

    def to_dict(self) -> dict:
        points = sorted(self.points, key=lambda p: point_slug(p["point"]))
        return {
            "run_id": self.run_id,
            "config": self.config_snapshot,
            "environment": self.environment,
            "points": points,
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )

    @classmethod
    def load(cls, path: str | Path) -> "RunManifest":
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(
            run_id=raw["run_id"],
            config_snapshot=raw.get("config", {}),
            environment=raw.get("environment", {}),
            points=raw.get("points", []),
        )


def describe_environment(toolchain: Toolchain | None = None) -> dict:
    env = {
        "python": sys.version.split()[0],
        "platform": platform.platform(),
        "compilers": {},
    }
    if toolchain is not None:
        for api in Api:
            head = shlex.split(toolchain.settings.command_for(api))[0]
            env["compilers"][api.slug] = _tool_version(head)
    return env


def _tool_version(binary: str) -> str | None:
    if shutil.which(binary) is None:
        return None
    try:
        proc = subprocess.run(
            [binary, "--version"], capture_output=True, text=True, timeout=10
        )
        first = (proc.stdout or proc.stderr).splitlines()
        return first[0].strip() if first else binary
    except (OSError, subprocess.TimeoutExpired):
        return binary


def stats_to_manifest_point(
    point: dict, stats: dict[Direction, DirectionStats], n_outcomes: int
) -> dict:
    return {
        "point": point,
        "n_outcomes": n_outcomes,
        "stats": {d.slug: s.to_dict() for d, s in stats.items()},
    }


def run_sweep(
    spec: SweepSpec,
    tasks: Sequence[TranslationTask],
    config: PipelineConfig,
    toolchain: Toolchain,
    run_root: str | Path,
    run_id: str,
    parallelism: int = 1,
    completion_log: CompletionLog | None = None,
    shot_selector_factory: Callable[[int], Callable | None] | None = None,
    config_snapshot: dict | None = None,
) -> RunManifest:
    """One run_batch per grid point, each resumable independently."""
    run_root = Path(run_root)
    manifest = RunManifest(
        run_id=run_id,
        config_snapshot=config_snapshot or {},
        environment=describe_environment(toolchain),
    )
    for point in spec.points():
        gen = GenerationConfig(
            temperature=point["temperature"],
            top_p=point["top_p"],
            max_tokens=point["max_tokens"],
            model_id=config.gen.model_id,
        )
        point_config = PipelineConfig(
            questioner_backend=config.questioner_backend,
            repair_backend=config.repair_backend,
            gen=gen,
            shots=point["shots"],
            compile_rounds=config.compile_rounds,
            exec_rounds=config.exec_rounds,
            agentic=config.agentic,
            transplant_rounds=config.transplant_rounds,
            templates=config.templates,
        )
        selector = shot_selector_factory(point["shots"]) if shot_selector_factory else None
        outcomes = run_batch(
            tasks,
            point_config,
            toolchain,
            run_root / point_slug(point),
            parallelism=parallelism,
            completion_log=completion_log,
            shot_selector=selector,
        )
        manifest.points.append(
            stats_to_manifest_point(point, aggregate(outcomes), len(outcomes))
        )
    manifest.save(run_root / "manifest.json")
    return manifest


# ---------------------------------------------------------------------------
# reports

def emit_report(manifest: RunManifest, format: str, out_path: str | Path) -> Path:
    if format not in REPORT_FORMATS:
        raise MetricsError(f"unknown report format {format!r} (choose from {REPORT_FORMATS})")
    out_path = Path(out_path)
    if format == "json":
        out_path.write_text(
            json.dumps(manifest.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
    elif format == "csv":
        out_path.write_text(render_csv(manifest), encoding="utf-8")
    else:
        out_path.write_text(render_markdown(manifest), encoding="utf-8")
    return out_path


CSV_COLUMNS = (
    "temperature",
    "max_tokens",
    "top_p",
    "shots",
    "direction",
    "n_tasks",
    "n_compiled",
    "n_validated",
    "n_skipped",
    "compilation_rate",
    "validation_rate",
)


def render_csv(manifest: RunManifest) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for entry in manifest.to_dict()["points"]:
        point = entry["point"]
        for slug in sorted(entry["stats"]):
            s = entry["stats"][slug]
            writer.writerow(
                [
                    point["temperature"],
                    point["max_tokens"],
                    point["top_p"],
                    point["shots"],
                    slug,
                    s["n_tasks"],
                    s["n_compiled"],
                    s["n_validated"],
                    s["n_skipped"],
                    _fmt_rate(s["compilation_rate"]),
                    _fmt_rate(s["validation_rate"]),
                ]
            )
    return buffer.getvalue()


def parse_report_csv(path: str | Path) -> list[dict]:
    with Path(path).open(encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def render_markdown(manifest: RunManifest) -> str:
    data = manifest.to_dict()
    lines = [f"# Run report: {data['run_id']}", ""]
    env = data.get("environment", {})
    if env:
        lines.append("## Environment")
        lines.append("")
        lines.append(f"- python: {env.get('python', 'unknown')}")
        lines.append(f"- platform: {env.get('platform', 'unknown')}")
        for api, version in sorted(env.get("compilers", {}).items()):
            lines.append(f"- compiler[{api}]: {version or 'not found'}")
        lines.append("")
    if data.get("config"):
        lines.append("## Config snapshot")
        lines.append("")
        lines.append("```json")
        lines.append(json.dumps(data["config"], indent=2, sort_keys=True))
        lines.append("```")
        lines.append("")
    for entry in data["points"]:
        point = entry["point"]
        lines.append(
            f"## temperature={point['temperature']:g} max_tokens={point['max_tokens']} "
            f"top_p={point['top_p']:g} shots={point['shots']}"
        )
        lines.append("")
        lines.append(
            "| direction | tasks | skipped | compiled | validated "
            "| compilation rate | validation rate |"
        )
        lines.append("|---|---|---|---|---|---|---|")
        for slug in sorted(entry["stats"]):
            s = entry["stats"][slug]
            lines.append(
                f"| {slug} | {s['n_tasks']} | {s['n_skipped']} | {s['n_compiled']} "
                f"| {s['n_validated']} | {_fmt_rate(s['compilation_rate'])} "
                f"| {_fmt_rate(s['validation_rate'])} |"
            )
        lines.append("")
        attribution = _attribution_rows(entry["stats"])
        if attribution:
            lines.append("### Compile-success attribution")
            lines.append("")
            lines.append("| direction | stage | round | count |")
            lines.append("|---|---|---|---|")
            lines.extend(attribution)
            lines.append("")
    return "\n".join(lines)


def _attribution_rows(stats: dict) -> list[str]:
    rows = []
    for slug in sorted(stats):
        for cell in stats[slug].get("round_attribution", []):
            rows.append(f"| {slug} | {cell['stage']} | {cell['round']} | {cell['count']} |")
    return rows


def _fmt_rate(rate: dict | None) -> str:
    if rate is None:
        return "n/a"
    return f"{rate['value']:.3f}"


# ---------------------------------------------------------------------------
# fine-tuning export

@dataclass
class ExportResult:
    written: int
    flagged: list[str] = field(default_factory=list)  # task ids over the context limit
    dropped: int = 0


def export_finetune(
    train_tasks: Sequence[TranslationTask],
    out_path: str | Path,
    counter: TokenCounter = approx_count,
    context_limit: int = FINETUNE_CONTEXT_LIMIT,
    drop_over_limit: bool = True,
    templates: prompting.TemplateSet = prompting.DEFAULT_TEMPLATES,
) -> ExportResult:
    """One instruction/response JSONL record per training pair.

    Records whose token estimate exceeds the fine-tuning context length are
    flagged, and by default excluded. The record schema lands next to the
    dataset as finetune.schema.json.
    """
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    result = ExportResult(written=0)
    with out_path.open("w", encoding="utf-8") as fh:
        for task in train_tasks:
            record = prompting.finetune_record(task, templates)
            estimate = counter(
                "\n".join((record["system"], record["instruction"], record["response"]))
            )
            if estimate > context_limit:
                result.flagged.append(task.task_id)
                log.warning(
                    "%s: estimate %d exceeds context length %d%s",
                    task.task_id,
                    estimate,
                    context_limit,
                    " (dropped)" if drop_over_limit else "",
                )
                if drop_over_limit:
                    result.dropped += 1
                    continue
            fh.write(json.dumps(record, sort_keys=True) + "\n")
            result.written += 1
    schema_path = out_path.with_name("finetune.schema.json")
    schema_path.write_text(json.dumps(FINETUNE_SCHEMA, indent=2) + "\n", encoding="utf-8")
    return result
