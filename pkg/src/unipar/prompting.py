"""Prompt construction for translation and repair, plus response post-processing.

All prompts share one system line. A translation prompt is the system line,
n example pairs (instruction + assistant turns), and a final instruction turn;
repair prompts carry the current candidate and the verbatim tool diagnostics,
truncated tail-first so the decisive message near the end survives.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

from .apis import Api, Direction, TranslationTask
from .tokens import TokenCounter, approx_count

SYSTEM_TEMPLATE = (
    "You are an HPC expert specializing in translating between parallel programming APIs."
)
TRANSLATE_TEMPLATE = "Translate the following code from {from_api} to {to_api}\nCode: {from_code}"
SHOT_RESPONSE_TEMPLATE = "Here is the translated code: {to_code}"
COMPILE_REPAIR_TEMPLATE = (
    "The following {to_api} code failed to compile.\n"
    "Code: {code}\n"
    "Compiler diagnostics:\n"
    "{diagnostics}\n"
    "Return the complete corrected {to_api} code only."
)
RUNTIME_REPAIR_TEMPLATE = (
    "The following {to_api} code compiled but did not pass its runtime check.\n"
    "Code: {code}\n"
    "Runtime output:\n"
    "{diagnostics}\n"
    "Return the complete corrected {to_api} code only."
)

DEFAULT_DIAGNOSTIC_BUDGET = 16 * 1024  # bytes, tail kept

INSTRUCTION = "instruction"
ASSISTANT = "assistant"


class PromptError(Exception):
    pass


class EmptyCompletion(Exception):
    """The model returned no text to extract code from."""


@dataclass(frozen=True)
class PromptBundle:
    system: str
    turns: tuple[tuple[str, str], ...]  # (role, text)
    rendered_token_estimate: int

    def text(self) -> str:
        return "\n".join([self.system, *(text for _, text in self.turns)])


def bundle_display(bundle: PromptBundle) -> str:
    """Labelled, human-readable form of a bundle; golden files use this."""
    lines = [f"System: {bundle.system}"]
    for role, text in bundle.turns:
        label = "Assistant" if role == ASSISTANT else "Instruction"
        lines.append(f"{label}: {text}")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class ShotExample:
    benchmark_id: str
    direction: Direction
    from_code: str
    to_code: str


@dataclass(frozen=True)
class TemplateSet:
    """The renderable templates; any of them can be overridden from files."""

    system: str = SYSTEM_TEMPLATE
    translate: str = TRANSLATE_TEMPLATE
    shot_response: str = SHOT_RESPONSE_TEMPLATE
    compile_repair: str = COMPILE_REPAIR_TEMPLATE
    runtime_repair: str = RUNTIME_REPAIR_TEMPLATE

    @classmethod
    def with_overrides(cls, directory: str | Path) -> "TemplateSet":
        """Load ``<field>.txt`` files from *directory* over the defaults."""
        templates = cls()
        directory = Path(directory)
        for field in ("system", "translate", "shot_response", "compile_repair", "runtime_repair"):
            path = directory / f"{field}.txt"
            if path.is_file():
                templates = replace(templates, **{field: path.read_text(encoding="utf-8")})
        return templates


DEFAULT_TEMPLATES = TemplateSet()


def _bundle(system: str, turns: list[tuple[str, str]], counter: TokenCounter) -> PromptBundle:
    bundle = PromptBundle(system=system, turns=tuple(turns), rendered_token_estimate=0)
    return replace(bundle, rendered_token_estimate=counter(bundle.text()))


def render_translation_prompt(
    task: TranslationTask,
    shots: Sequence[ShotExample] = (),
    templates: TemplateSet = DEFAULT_TEMPLATES,
    counter: TokenCounter = approx_count,
) -> PromptBundle:
    """Instantiate the translation prompt: n example pairs, then the task."""
    direction = task.direction
    for shot in shots:
        if shot.direction != direction:
            raise PromptError(
                f"shot {shot.benchmark_id} is {shot.direction.slug}, task needs {direction.slug}"
            )
    turns: list[tuple[str, str]] = []
    for shot in shots:
        turns.append((INSTRUCTION, _translate_turn(templates, direction, shot.from_code)))
        turns.append((ASSISTANT, templates.shot_response.format(to_code=shot.to_code)))
    turns.append((INSTRUCTION, _translate_turn(templates, direction, task.source_code)))
    return _bundle(templates.system, turns, counter)


def _translate_turn(templates: TemplateSet, direction: Direction, code: str) -> str:
    return templates.translate.format(
        from_api=direction.from_api, to_api=direction.to_api, from_code=code
    )


def render_repair_prompt(
    kind: str,
    current_code: str,
    diagnostics: str,
    direction: Direction,
    templates: TemplateSet = DEFAULT_TEMPLATES,
    diagnostic_budget: int = DEFAULT_DIAGNOSTIC_BUDGET,
    counter: TokenCounter = approx_count,
) -> PromptBundle:
    """One instruction turn asking for corrected code, given tool feedback."""
    if kind == "compile":
        template = templates.compile_repair
    elif kind == "runtime":
        template = templates.runtime_repair
    else:
        raise PromptError(f"unknown repair kind {kind!r} (expected compile or runtime)")
    turn = template.format(
        to_api=direction.to_api,
        code=current_code,
        diagnostics=truncate_tail(diagnostics, diagnostic_budget),
    )
    return _bundle(templates.system, [(INSTRUCTION, turn)], counter)


def truncate_tail(text: str, budget_bytes: int) -> str:
    """Keep the last *budget_bytes* of text; compilers put the verdict last."""
    raw = text.encode("utf-8")
    if len(raw) <= budget_bytes:
        return text
    tail = raw[-budget_bytes:].decode("utf-8", errors="ignore")
    return f"[diagnostics truncated to final {budget_bytes} bytes]\n{tail}"


def select_shots(
    train_tasks: Sequence[TranslationTask],
    direction: Direction,
    n: int,
    seed: int,
    exclude_benchmark: str | None = None,
    max_shots: int = 3,
) -> list[ShotExample]:
    """Seeded sample of n examples for the direction, test benchmark excluded."""
    if not 0 <= n <= max_shots:
        raise PromptError(f"shot count {n} outside 0..{max_shots}")
    if n == 0:
        return []
    candidates = sorted(
        (
            t
            for t in train_tasks
            if t.direction == direction and t.benchmark_id != exclude_benchmark
        ),
        key=lambda t: t.benchmark_id,
    )
    if len(candidates) < n:
        raise PromptError(
            f"need {n} shot examples for {direction.slug} but only "
            f"{len(candidates)} are available"
        )
    picked = random.Random(seed).sample(candidates, n)
    return [
        ShotExample(t.benchmark_id, t.direction, t.source_code, t.ground_truth) for t in picked
    ]


_FENCE_RE = re.compile(r"^\s*```")
_CODE_HINT_RE = re.compile(r"[;{}#]")


def extract_code(response: str, target_api: Api | None = None) -> str:
    """Pull source code out of a model response.

    The longest fenced block wins (models often show a short snippet before
    the full program); without fences, leading and trailing lines that carry
    no code punctuation are shed. Never empty for a non-empty response.
    """
    if response == "":
        raise EmptyCompletion("model response was empty")
    blocks = _fenced_blocks(response)
    if blocks:
        return max(blocks, key=len)
    lines = response.splitlines(keepends=True)
    start, end = 0, len(lines)
    while start < end and not _CODE_HINT_RE.search(lines[start]):
        start += 1
    while end > start and not _CODE_HINT_RE.search(lines[end - 1]):
        end -= 1
    trimmed = "".join(lines[start:end])
    return trimmed if trimmed else response


def _fenced_blocks(response: str) -> list[str]:
    blocks: list[str] = []
    current: list[str] | None = None
    for line in response.splitlines(keepends=True):
        if _FENCE_RE.match(line):
            if current is None:
                current = []
            else:
                blocks.append("".join(current))
                current = None
        elif current is not None:
            current.append(line)
    if current:  # fence left open: take what followed it
        blocks.append("".join(current))
    return blocks


def finetune_record(
    task: TranslationTask, templates: TemplateSet = DEFAULT_TEMPLATES
) -> dict[str, str]:
    """One instruction-tuning record in the training format."""
    return {
        "system": templates.system,
        "instruction": _translate_turn(templates, task.direction, task.source_code),
        "response": task.ground_truth,
    }
