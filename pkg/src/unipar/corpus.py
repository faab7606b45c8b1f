"""Aligned cross-paradigm corpus construction from a benchmark tree.

The pipeline: scan `<benchmark>-<suffix>/` directories for their primary-logic
file, strip comments, count tokens and prune over-long sources, group into
aligned tuples (deriving a Serial member from each OpenMP one), verify with
the local toolchain, and split train/test per translation direction.
"""

from __future__ import annotations

import json
import logging
import random
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

from .apis import DIRECTIONS, Api, Direction, TranslationTask
from .lexing import LexError, strip_comments, tokenize
from .tokens import TokenCounter, approx_count
from .toolchain import OK, TOOLCHAIN_MISSING, Toolchain

log = logging.getLogger(__name__)

UNVERIFIED = "unverified"
PASSED = "passed"
FAILED = "failed"

DEFAULT_CUTOFF = 7500
DEFAULT_RATIO = 0.9

DEFAULT_SUFFIXES: dict[str, Api] = {"cuda": Api.CUDA, "omp": Api.OPENMP, "serial": Api.SERIAL}
DEFAULT_EXCLUDED_STEMS: tuple[str, ...] = ("utils", "reference")
SOURCE_EXTENSIONS = frozenset({".c", ".cc", ".cpp", ".cxx", ".cu"})


class CorpusError(Exception):
    pass


@dataclass
class BenchmarkSource:
    benchmark_id: str
    api: Api
    main_file_path: str  # relative to the scanned root (or its derivation origin)
    source_text: str
    token_count: int = 0
    verified: str = UNVERIFIED  # unverified | passed | failed


@dataclass
class KernelTuple:
    benchmark_id: str
    members: dict[Api, BenchmarkSource] = field(default_factory=dict)
    category: str | None = None
    notes: tuple[str, ...] = ()

    def has(self, *apis: Api) -> bool:
        return all(api in self.members for api in apis)


@dataclass
class ScanReport:
    skipped: list[dict] = field(default_factory=list)  # {"directory", "reason", "candidates"}
    warnings: list[str] = field(default_factory=list)

    def skip(self, directory: Path, reason: str, candidates: list[str]) -> None:
        self.skipped.append(
            {"directory": str(directory), "reason": reason, "candidates": candidates}
        )

    def warn(self, message: str) -> None:
        self.warnings.append(message)
        log.warning("%s", message)


def scan_benchmarks(
    root: str | Path,
    apis: set[Api] | None = None,
    suffixes: dict[str, Api] | None = None,
    excluded_stems: tuple[str, ...] = DEFAULT_EXCLUDED_STEMS,
) -> tuple[list[BenchmarkSource], ScanReport]:
    """Find each benchmark directory's primary-logic file.

    A directory qualifies when it holds exactly one source file, or when
    exactly one candidate remains after dropping auxiliary stems (utils,
    reference, ... case-insensitive). Anything still ambiguous is skipped and
    listed in the report.
    """
    root = Path(root)
    if not root.is_dir():
        raise CorpusError(f"benchmark root does not exist: {root}")
    suffixes = suffixes if suffixes is not None else DEFAULT_SUFFIXES
    excluded = tuple(stem.lower() for stem in excluded_stems)
    report = ScanReport()
    sources: list[BenchmarkSource] = []
    for directory in sorted(p for p in root.iterdir() if p.is_dir()):
        benchmark_id, _, suffix = directory.name.rpartition("-")
        api = suffixes.get(suffix.lower())
        if not benchmark_id or api is None:
            continue  # not part of the benchmark layout
        if apis is not None and api not in apis:
            continue
        candidates = sorted(
            p for p in directory.iterdir() if p.is_file() and p.suffix in SOURCE_EXTENSIONS
        )
        if len(candidates) > 1:
            candidates = [p for p in candidates if p.stem.lower() not in excluded]
        if not candidates:
            report.skip(directory, "no source files", [])
            continue
        if len(candidates) > 1:
            report.skip(
                directory,
                "ambiguous primary-logic file",
                [p.name for p in candidates],
            )
            continue
        path = candidates[0]
        try:
            text = path.read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as exc:
            report.warn(f"unreadable source {path}: {exc}")
            continue
        sources.append(
            BenchmarkSource(
                benchmark_id=benchmark_id,
                api=api,
                main_file_path=str(path.relative_to(root)),
                source_text=text,
            )
        )
    return sources, report


# ---------------------------------------------------------------------------
# preprocessing

_PRAGMA_OMP_RE = re.compile(r"#\s*pragma\s+omp\b")
_OMP_INCLUDE_RE = re.compile(r'#\s*include\s*[<"]omp\.h[">]')


@dataclass
class SerialDerivation:
    text: str
    pragma_lines_removed: int
    include_lines_removed: int
    omp_calls: tuple[str, ...]  # runtime calls left intact, flagged for review


def derive_serial_detailed(openmp_source: str) -> SerialDerivation:
    """Drop every `#pragma omp` logical line (continuations included) and
    omp.h includes; omp_* runtime calls stay in place but get flagged."""
    out: list[str] = []
    pragma_lines = 0
    include_lines = 0
    lines = openmp_source.splitlines(keepends=True)
    i = 0
    while i < len(lines):
        stripped = lines[i].lstrip()
        if _PRAGMA_OMP_RE.match(stripped):
            while i < len(lines) and lines[i].rstrip("\r\n").endswith("\\"):
                pragma_lines += 1
                i += 1
            if i < len(lines):
                pragma_lines += 1
                i += 1
            continue
        if _OMP_INCLUDE_RE.match(stripped):
            include_lines += 1
            i += 1
            continue
        out.append(lines[i])
        i += 1
    text = "".join(out)
    calls = set()
    toks = tokenize(text)
    for tok, nxt in zip(toks, toks[1:]):
        if nxt.text == "(" and tok.text.startswith("omp_"):
            calls.add(tok.text)
    return SerialDerivation(text, pragma_lines, include_lines, tuple(sorted(calls)))


def derive_serial(openmp_source: str) -> str:
    return derive_serial_detailed(openmp_source).text


def count_tokens(source_text: str, counter: TokenCounter = approx_count) -> int:
    return counter(source_text)


def prune_by_tokens(
    sources: list[BenchmarkSource], cutoff: int = DEFAULT_CUTOFF
) -> tuple[list[BenchmarkSource], list[BenchmarkSource]]:
    """Partition sources at the cutoff; the boundary itself is kept."""
    kept = [s for s in sources if s.token_count <= cutoff]
    dropped = [s for s in sources if s.token_count > cutoff]
    return kept, dropped


# ---------------------------------------------------------------------------
# verification

@dataclass
class VerifyResult:
    verdict: str  # unverified | passed | failed
    detail: str


def verify_kernel(
    source: BenchmarkSource,
    toolchain: Toolchain,
    workspace: str | Path,
    timeout_s: float | None = None,
) -> VerifyResult:
    """Passed iff the kernel compiles, exits 0 in time, and its own check
    reports a pass. A missing compiler leaves the kernel unverified so the
    corpus can still be built offline."""
    if not toolchain.available(source.api):
        return VerifyResult(UNVERIFIED, f"toolchain for {source.api.value} not available")
    compiled = toolchain.compile(source.source_text, source.api, workspace)
    if compiled.status == TOOLCHAIN_MISSING:
        return VerifyResult(UNVERIFIED, compiled.diagnostics)
    if compiled.status != OK:
        return VerifyResult(FAILED, f"compile failed:\n{compiled.diagnostics}")
    run = toolchain.run_and_verify(
        compiled.artifact_path,
        timeout_s=timeout_s,
        api=source.api,
        benchmark_id=source.benchmark_id,
    )
    if run.passed:
        return VerifyResult(PASSED, "self-check passed")
    return VerifyResult(FAILED, f"run verdict {run.verdict} (exit {run.exit_code})")


# ---------------------------------------------------------------------------
# tuples

def build_tuples(
    sources: list[BenchmarkSource],
    derive_serial_members: bool = True,
    counter: TokenCounter = approx_count,
    categories: dict[str, str] | None = None,
) -> list[KernelTuple]:
    """Group sources by benchmark, deriving Serial members from OpenMP ones.

    Only benchmarks implemented in at least one of OpenMP or CUDA are
    retained. A duplicate (benchmark, api) pair is a hard error.
    """
    by_id: dict[str, KernelTuple] = {}
    for source in sources:
        entry = by_id.setdefault(source.benchmark_id, KernelTuple(source.benchmark_id))
        if source.api in entry.members:
            raise CorpusError(
                f"duplicate {source.api.value} member for benchmark "
                f"{source.benchmark_id!r}: {entry.members[source.api].main_file_path} "
                f"and {source.main_file_path}"
            )
        entry.members[source.api] = source
    tuples: list[KernelTuple] = []
    for benchmark_id in sorted(by_id):
        entry = by_id[benchmark_id]
        if not entry.has(Api.OPENMP) and not entry.has(Api.CUDA):
            log.info("dropping %s: no OpenMP or CUDA member", benchmark_id)
            continue
        if derive_serial_members and entry.has(Api.OPENMP) and not entry.has(Api.SERIAL):
            omp = entry.members[Api.OPENMP]
            derived = derive_serial_detailed(omp.source_text)
            entry.members[Api.SERIAL] = BenchmarkSource(
                benchmark_id=benchmark_id,
                api=Api.SERIAL,
                main_file_path=omp.main_file_path,
                source_text=derived.text,
                token_count=counter(derived.text),
            )
            notes = [f"serial derived: {derived.pragma_lines_removed} pragma line(s) removed"]
            if derived.omp_calls:
                notes.append(
                    "omp runtime calls left intact: " + ", ".join(derived.omp_calls)
                )
                log.warning(
                    "%s: derived serial still calls %s",
                    benchmark_id,
                    ", ".join(derived.omp_calls),
                )
            entry.notes = tuple(notes)
        if categories and benchmark_id in categories:
            entry.category = categories[benchmark_id]
        tuples.append(entry)
    return tuples


# ---------------------------------------------------------------------------
# train/test split

@dataclass
class SplitManifest:
    seed: int
    ratio: float
    train: list[tuple[str, Direction]] = field(default_factory=list)
    test: list[tuple[str, Direction]] = field(default_factory=list)

    def ids(self, part: str, direction: Direction) -> set[str]:
        entries = self.train if part == "train" else self.test
        return {bid for bid, d in entries if d == direction}

    def to_json(self) -> str:
        payload = {
            "seed": self.seed,
            "ratio": self.ratio,
            "train": [{"benchmark_id": b, "direction": d.slug} for b, d in self.train],
            "test": [{"benchmark_id": b, "direction": d.slug} for b, d in self.test],
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "SplitManifest":
        raw = json.loads(text)
        return cls(
            seed=raw["seed"],
            ratio=raw["ratio"],
            train=[(e["benchmark_id"], Direction.parse(e["direction"])) for e in raw["train"]],
            test=[(e["benchmark_id"], Direction.parse(e["direction"])) for e in raw["test"]],
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "SplitManifest":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


def direction_benchmarks(tuples: list[KernelTuple], direction: Direction) -> list[str]:
    return sorted(
        t.benchmark_id for t in tuples if t.has(direction.from_api, direction.to_api)
    )


def split_corpus(
    tuples: list[KernelTuple],
    directions: tuple[Direction, ...] = DIRECTIONS,
    ratio: float = DEFAULT_RATIO,
    seed: int = 0,
) -> SplitManifest:
    """Deterministic per-direction split; a benchmark never straddles the
    split within a direction. Directions with fewer than two tasks go wholly
    to train."""
    manifest = SplitManifest(seed=seed, ratio=ratio)
    for direction in directions:
        ids = direction_benchmarks(tuples, direction)
        if len(ids) < 2:
            if ids:
                log.warning(
                    "direction %s has %d task(s); placing all in train",
                    direction.slug,
                    len(ids),
                )
            manifest.train.extend((bid, direction) for bid in ids)
            continue
        rng = random.Random(f"{seed}:{direction.slug}")
        shuffled = list(ids)
        rng.shuffle(shuffled)
        n_train = int(ratio * len(shuffled) + 0.5)
        n_train = min(max(n_train, 1), len(shuffled) - 1)
        manifest.train.extend((bid, direction) for bid in shuffled[:n_train])
        manifest.test.extend((bid, direction) for bid in shuffled[n_train:])
    return manifest


def tasks_for_direction(tuples: list[KernelTuple], direction: Direction) -> list[TranslationTask]:
    tasks = []
    for t in tuples:
        if t.has(direction.from_api, direction.to_api):
            tasks.append(
                TranslationTask(
                    benchmark_id=t.benchmark_id,
                    direction=direction,
                    source_code=t.members[direction.from_api].source_text,
                    ground_truth=t.members[direction.to_api].source_text,
                )
            )
    return sorted(tasks, key=lambda t: t.benchmark_id)


def tasks_from_manifest(
    tuples: list[KernelTuple],
    manifest: SplitManifest,
    part: str,
    directions: tuple[Direction, ...] | None = None,
) -> list[TranslationTask]:
    """Materialize the manifest's (benchmark, direction) entries as tasks."""
    by_id = {t.benchmark_id: t for t in tuples}
    entries = manifest.train if part == "train" else manifest.test
    tasks = []
    for benchmark_id, direction in entries:
        if directions is not None and direction not in directions:
            continue
        bench = by_id.get(benchmark_id)
        if bench is None or not bench.has(direction.from_api, direction.to_api):
            log.warning("manifest entry %s/%s not in corpus", benchmark_id, direction.slug)
            continue
        tasks.append(
            TranslationTask(
                benchmark_id=benchmark_id,
                direction=direction,
                source_code=bench.members[direction.from_api].source_text,
                ground_truth=bench.members[direction.to_api].source_text,
            )
        )
    return sorted(tasks, key=lambda t: (t.direction.slug, t.benchmark_id))


# ---------------------------------------------------------------------------
# corpus directory layout

def write_corpus(tuples: list[KernelTuple], out_dir: str | Path) -> None:
    """Write corpus/<benchmark>/<api>.{cpp,cu} plus corpus.jsonl."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    records = []
    for t in sorted(tuples, key=lambda t: t.benchmark_id):
        bench_dir = out_dir / t.benchmark_id
        bench_dir.mkdir(parents=True, exist_ok=True)
        for api in (Api.SERIAL, Api.OPENMP, Api.CUDA):
            member = t.members.get(api)
            if member is None:
                continue
            rel = f"{t.benchmark_id}/{api.slug}{api.extension}"
            (out_dir / rel).write_text(member.source_text, encoding="utf-8")
            record = {
                "id": t.benchmark_id,
                "api": api.slug,
                "path": rel,
                "token_count": member.token_count,
                "verified": member.verified,
            }
            if t.category:
                record["category"] = t.category
            records.append(record)
    with (out_dir / "corpus.jsonl").open("w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, sort_keys=True) + "\n")


def load_corpus(corpus_dir: str | Path) -> list[KernelTuple]:
    corpus_dir = Path(corpus_dir)
    index = corpus_dir / "corpus.jsonl"
    if not index.is_file():
        raise CorpusError(f"no corpus.jsonl under {corpus_dir}")
    by_id: dict[str, KernelTuple] = {}
    for line in index.read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        record = json.loads(line)
        api = Api.parse(record["api"])
        entry = by_id.setdefault(record["id"], KernelTuple(record["id"]))
        entry.members[api] = BenchmarkSource(
            benchmark_id=record["id"],
            api=api,
            main_file_path=record["path"],
            source_text=(corpus_dir / record["path"]).read_text(encoding="utf-8"),
            token_count=record["token_count"],
            verified=record.get("verified", UNVERIFIED),
        )
        if record.get("category"):
            entry.category = record["category"]
    return [by_id[k] for k in sorted(by_id)]


# ---------------------------------------------------------------------------
# curate: the full corpus build

@dataclass
class CurateResult:
    tuples: list[KernelTuple]
    scan_report: ScanReport
    scanned: int = 0
    kept: int = 0
    dropped: list[tuple[str, str, int]] = field(default_factory=list)  # id, api, tokens
    verified: dict[str, str] = field(default_factory=dict)  # "id/api" -> verdict
    dropped_tuples: list[str] = field(default_factory=list)


def curate(
    root: str | Path,
    out_dir: str | Path | None = None,
    apis: set[Api] | None = None,
    cutoff: int = DEFAULT_CUTOFF,
    counter: TokenCounter = approx_count,
    verify: bool = True,
    toolchain: Toolchain | None = None,
    workspace_root: str | Path | None = None,
    verify_timeout_s: float | None = None,
    workers: int = 4,
    categories: dict[str, str] | None = None,
    suffixes: dict[str, Api] | None = None,
    excluded_stems: tuple[str, ...] = DEFAULT_EXCLUDED_STEMS,
) -> CurateResult:
    sources, report = scan_benchmarks(root, apis, suffixes, excluded_stems)
    result = CurateResult(tuples=[], scan_report=report, scanned=len(sources))

    prepared: list[BenchmarkSource] = []
    for source in sources:
        try:
            text = strip_comments(source.source_text)
        except LexError as exc:
            report.warn(f"{source.main_file_path}: {exc}")
            continue
        prepared.append(
            replace(source, source_text=text, token_count=count_tokens(text, counter))
        )

    kept, dropped = prune_by_tokens(prepared, cutoff)
    result.kept = len(kept)
    result.dropped = [(s.benchmark_id, s.api.slug, s.token_count) for s in dropped]
    for benchmark_id, api, tokens in result.dropped:
        log.info("pruned %s/%s at %d tokens (cutoff %d)", benchmark_id, api, tokens, cutoff)

    tuples = build_tuples(kept, counter=counter, categories=categories)

    if verify:
        toolchain = toolchain or Toolchain()
        base = Path(workspace_root) if workspace_root else Path(out_dir or ".") / ".verify"
        members = [(t, m) for t in tuples for m in t.members.values()]

        def check(item: tuple[KernelTuple, BenchmarkSource]) -> VerifyResult:
            t, member = item
            workspace = base / f"{member.benchmark_id}-{member.api.slug}"
            return verify_kernel(member, toolchain, workspace, verify_timeout_s)

        with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
            verdicts = list(pool.map(check, members))
        for (t, member), verdict in zip(members, verdicts):
            member.verified = verdict.verdict
            result.verified[f"{member.benchmark_id}/{member.api.slug}"] = verdict.verdict
            if verdict.verdict == FAILED:
                report.warn(
                    f"{member.benchmark_id}/{member.api.slug} failed verification: "
                    f"{verdict.detail}"
                )
        tuples = _apply_verification(tuples, result)

    result.tuples = tuples
    if out_dir is not None:
        write_corpus(tuples, out_dir)
    return result


def _apply_verification(tuples: list[KernelTuple], result: CurateResult) -> list[KernelTuple]:
    """Drop failed members; a failed *derived* serial sinks its whole tuple."""
    surviving = []
    for t in tuples:
        serial = t.members.get(Api.SERIAL)
        serial_derived = serial is not None and any(
            note.startswith("serial derived") for note in t.notes
        )
        if serial_derived and serial.verified == FAILED:
            result.dropped_tuples.append(t.benchmark_id)
            continue
        t.members = {api: m for api, m in t.members.items() if m.verified != FAILED}
        if not t.has(Api.OPENMP) and not t.has(Api.CUDA):
            result.dropped_tuples.append(t.benchmark_id)
            continue
        surviving.append(t)
    return surviving
