from __future__ import annotations

import shutil
import sys
from pathlib import Path

import pytest

from unipar.apis import Api, Direction, TranslationTask
from unipar.llm import MockBackend, ScriptedBehavior
from unipar.toolchain import Toolchain, ToolchainSettings

TESTDATA = Path(__file__).resolve().parent.parent / "testdata"
MINI_CORPUS = TESTDATA / "mini_corpus"
PROMPTS = TESTDATA / "prompts"
TRANSPLANT = TESTDATA / "transplant"
GOLDEN = TESTDATA / "golden"
STUBCC = Path(__file__).resolve().parent / "stubcc.py"

requires_gcc = pytest.mark.skipif(shutil.which("g++") is None, reason="g++ not available")

SERIAL_TO_OMP = Direction(Api.SERIAL, Api.OPENMP)
CUDA_TO_OMP = Direction(Api.CUDA, Api.OPENMP)
OMP_TO_CUDA = Direction(Api.OPENMP, Api.CUDA)

# Stub-toolchain sources: COMPILE_OK gates compilation; the RUN_* marker in
# the ground-truth main decides the artifact's behavior after transplant.
GOOD_CODE = "COMPILE_OK\nint kernel(int x) { return x + 1; }\nint main() { return 0; }\n"
BAD_CODE = "int kernel(int x) { return x + 1 }\nint main() { return 0; }\n"
GROUND_TRUTH = (
    "COMPILE_OK\nint kernel(int x) { return x + 1; }\n"
    "int main() { /* RUN_PASS */ return 0; }\n"
)


def stub_settings(**overrides) -> ToolchainSettings:
    cmd = f"{sys.executable} {STUBCC} {{src}} {{out}}"
    return ToolchainSettings(
        commands={"serial": cmd, "omp": cmd, "cuda": cmd},
        compile_timeout_s=30.0,
        run_timeout_s=30.0,
        **overrides,
    )


@pytest.fixture
def stub_toolchain() -> Toolchain:
    return Toolchain(stub_settings())


def make_task(
    benchmark_id: str = "bench",
    direction: Direction = SERIAL_TO_OMP,
    source_code: str = "int kernel(int x) { return x + 1; }\n",
    ground_truth: str = GROUND_TRUTH,
) -> TranslationTask:
    return TranslationTask(benchmark_id, direction, source_code, ground_truth)


def scripted(task_id: str, stage: str, round_index: int, response: str) -> ScriptedBehavior:
    return ScriptedBehavior(task_id, stage, round_index, response)


def backend_for(*behaviors: ScriptedBehavior, miss_policy: str = "error") -> MockBackend:
    return MockBackend(behaviors, miss_policy=miss_policy)
