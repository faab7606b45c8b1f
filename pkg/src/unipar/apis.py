"""Parallel-programming API names, translation directions, and tasks."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class Api(Enum):
    SERIAL = "Serial"
    OPENMP = "OpenMP"
    CUDA = "CUDA"

    @property
    def slug(self) -> str:
        return _SLUGS[self]

    @property
    def extension(self) -> str:
        return ".cu" if self is Api.CUDA else ".cpp"

    @classmethod
    def parse(cls, name: str) -> "Api":
        key = name.strip().lower()
        for api, slug in _SLUGS.items():
            if key in (slug, api.value.lower()):
                return api
        raise ValueError(f"unknown API name: {name!r} (expected serial, omp, or cuda)")

    def __str__(self) -> str:  # canonical prompt-facing name
        return self.value


_SLUGS = {Api.SERIAL: "serial", Api.OPENMP: "omp", Api.CUDA: "cuda"}


@dataclass(frozen=True, order=True)
class Direction:
    from_api: Api
    to_api: Api

    @property
    def slug(self) -> str:
        return f"{self.from_api.slug}-to-{self.to_api.slug}"

    @property
    def label(self) -> str:
        return f"{self.from_api.value}->{self.to_api.value}"

    @classmethod
    def parse(cls, text: str) -> "Direction":
        parts = text.strip().lower().split("-to-")
        if len(parts) != 2:
            raise ValueError(f"bad direction {text!r} (expected e.g. cuda-to-omp)")
        return cls(Api.parse(parts[0]), Api.parse(parts[1]))

    def __str__(self) -> str:
        return self.slug


# The four directions evaluated by default, in canonical order.
DIRECTIONS: tuple[Direction, ...] = (
    Direction(Api.SERIAL, Api.OPENMP),
    Direction(Api.SERIAL, Api.CUDA),
    Direction(Api.OPENMP, Api.CUDA),
    Direction(Api.CUDA, Api.OPENMP),
)


@dataclass(frozen=True)
class TranslationTask:
    """One translation problem: source kernel plus its ground-truth target."""

    benchmark_id: str
    direction: Direction
    source_code: str
    ground_truth: str

    @property
    def task_id(self) -> str:
        return f"{self.benchmark_id}--{self.direction.slug}"
