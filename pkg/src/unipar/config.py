"""Application configuration: TOML file, strict keys, flag overrides on top.

Precedence is flags > config file > built-in defaults. The resolved snapshot
is embedded in every run manifest so a run directory stays self-describing.
"""

from __future__ import annotations

import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .llm import GenerationConfig
from .toolchain import DEFAULT_COMMANDS, ToolchainSettings


class ConfigError(Exception):
    pass


@dataclass
class CorpusConfig:
    root: str = ""
    out: str = "corpus"
    cutoff: int = 7500
    counter: str = "approx"
    vocab: str = ""
    verify: bool = True
    categories: str = ""


@dataclass
class SplitConfig:
    ratio: float = 0.9
    seed: int = 0
    out: str = "split.json"


@dataclass
class ToolchainConfig:
    serial_cmd: str = DEFAULT_COMMANDS["serial"]
    omp_cmd: str = DEFAULT_COMMANDS["omp"]
    cuda_cmd: str = DEFAULT_COMMANDS["cuda"]
    compile_timeout_s: float = 120.0
    run_timeout_s: float = 300.0
    output_cap_bytes: int = 4 * 1024 * 1024
    gpu_slots: int = 1

    def settings(self) -> ToolchainSettings:
        return ToolchainSettings(
            commands={"serial": self.serial_cmd, "omp": self.omp_cmd, "cuda": self.cuda_cmd},
            compile_timeout_s=self.compile_timeout_s,
            run_timeout_s=self.run_timeout_s,
            output_cap_bytes=self.output_cap_bytes,
            gpu_slots=self.gpu_slots,
        )


@dataclass
class PipelineSection:
    shots: int = 0
    compile_rounds: int = 3
    exec_rounds: int = 3
    transplant_rounds: int = 3
    agentic: bool = True


@dataclass
class BackendSection:
    questioner: str = ""
    repair: str = ""


@dataclass
class RunSection:
    run_id: str = ""
    runs_root: str = "runs"
    parallelism: int = 1
    seed: int = 0


@dataclass
class AppConfig:
    corpus: CorpusConfig = field(default_factory=CorpusConfig)
    split: SplitConfig = field(default_factory=SplitConfig)
    toolchain: ToolchainConfig = field(default_factory=ToolchainConfig)
    gen: GenerationConfig = field(default_factory=GenerationConfig)
    pipeline: PipelineSection = field(default_factory=PipelineSection)
    backend: BackendSection = field(default_factory=BackendSection)
    run: RunSection = field(default_factory=RunSection)

    def snapshot(self) -> dict:
        return asdict(self)


# toolchain commands nest one level deeper in TOML: [toolchain.omp] cmd = "..."
_TOOLCHAIN_CMD_KEYS = {
    "serial": "serial_cmd",
    "omp": "omp_cmd",
    "openmp": "omp_cmd",
    "cuda": "cuda_cmd",
}


def load_config(path: str | Path | None) -> AppConfig:
    config = AppConfig()
    if path is None:
        return config
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = tomllib.loads(path.read_text(encoding="utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    for section_name, values in raw.items():
        target = getattr(config, section_name, None)
        if target is None or not isinstance(values, dict):
            raise ConfigError(f"{path}: unknown section [{section_name}]")
        if section_name == "toolchain":
            values = _flatten_toolchain(path, values)
        if section_name == "gen":
            config.gen = _build_gen(path, values)
            continue
        _apply(path, target, section_name, values)
    return config


def _flatten_toolchain(path: Path, values: dict) -> dict:
    flat = {}
    for key, value in values.items():
        if key in _TOOLCHAIN_CMD_KEYS and isinstance(value, dict):
            extra = set(value) - {"cmd"}
            if extra:
                raise ConfigError(
                    f"{path}: unknown key(s) in [toolchain.{key}]: {sorted(extra)}"
                )
            if "cmd" in value:
                flat[_TOOLCHAIN_CMD_KEYS[key]] = value["cmd"]
        else:
            flat[key] = value
    return flat


def _build_gen(path: Path, values: dict) -> GenerationConfig:
    allowed = {f.name for f in fields(GenerationConfig)}
    unknown = set(values) - allowed
    if unknown:
        raise ConfigError(f"{path}: unknown key(s) in [gen]: {sorted(unknown)}")
    try:
        return GenerationConfig(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: bad [gen] values: {exc}") from exc


def _apply(path: Path, target, section: str, values: dict) -> None:
    allowed = {f.name for f in fields(target)}
    for key, value in values.items():
        if key not in allowed:
            raise ConfigError(f"{path}: unknown key {key!r} in [{section}]")
        current = getattr(target, key)

        def reject() -> None:
            raise ConfigError(
                f"{path}: key {key!r} in [{section}] has type "
                f"{type(value).__name__}, expected {type(current).__name__}"
            )

        if isinstance(current, bool):
            if not isinstance(value, bool):
                reject()
        elif isinstance(current, float):
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                reject()
            value = float(value)
        elif isinstance(current, int):
            if isinstance(value, bool) or not isinstance(value, int):
                reject()
        elif isinstance(current, str) and not isinstance(value, str):
            reject()
        setattr(target, key, value)
