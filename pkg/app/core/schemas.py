from __future__ import annotations

from typing import Any, Literal, Optional

from pydantic import BaseModel, Field

from app.core.constants import DEFAULT_SEED, LW_WORKERS

Algorithm = Literal["simulate", "lw", "mh"]
OutputFormat = Literal["csv", "json"]
KindName = Literal["real", "int", "bool", "vec"]

SEED_FIELD = Field(default=DEFAULT_SEED, ge=0, le=2**64 - 1)


class EnvEntryModel(BaseModel):
    name: str = Field(min_length=1)
    kind: KindName
    values: list[Any] = Field(default_factory=list)


class RunConfig(BaseModel):
    model: str = Field(min_length=1)
    algo: Algorithm
    iterations: int = Field(default=1, ge=0)
    seed: int = SEED_FIELD
    env: Optional[list[EnvEntryModel]] = None
    inputs: dict[str, Any] = Field(default_factory=dict)
    out: Optional[str] = None
    format: OutputFormat = "csv"
    dump_traces: bool = False
    workers: int = Field(default=LW_WORKERS, ge=1)


class RunRequest(BaseModel):
    model: str = Field(min_length=1)
    algo: Algorithm
    iterations: int = Field(default=1, ge=1)
    seed: int = SEED_FIELD
    env: Optional[list[EnvEntryModel]] = None
    inputs: dict[str, Any] = Field(default_factory=dict)


class BenchRequest(BaseModel):
    models: list[str] = Field(default_factory=lambda: ["linregr", "hmm"])
    algos: list[Algorithm] = Field(default_factory=lambda: ["simulate", "lw"])
    sizes: list[int] = Field(min_length=1)
    seed: int = SEED_FIELD


class LinRegrInputs(BaseModel):
    xs: list[float] = Field(default_factory=lambda: [float(x) for x in range(101)], min_length=1)


class HmmInputs(BaseModel):
    n: int = Field(default=10, ge=0)
    x0: int = Field(default=0, ge=0)


class SirInputs(BaseModel):
    n: int = Field(default=100, ge=0)
    s: int = Field(default=762, ge=0)
    i: int = Field(default=1, ge=0)
    r: int = Field(default=0, ge=0)
    v: int = Field(default=0, ge=0)


class CoinFlipInputs(BaseModel):
    pass


class LdaInputs(BaseModel):
    vocabulary: list[str] = Field(default_factory=lambda: ["DNA", "evolution", "parsing", "phonology"], min_length=2)
    topic_count: int = Field(default=2, ge=1)
    doc_length: int = Field(default=10, ge=0)
