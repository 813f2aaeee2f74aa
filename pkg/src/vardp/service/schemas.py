"""Request and response models for the solver service.

The request bodies double as the CLI's config-file schema: the CLI reads a
JSON document, validates it against these models and dispatches it through
the same handlers the HTTP routes use.
"""

from __future__ import annotations

from typing import Any, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field


class DiscountSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["linear", "log", "sqrt", "piecewise-linear"]
    beta: Optional[float] = None
    p: Optional[float] = None


class FamilySpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["linear-beta", "convex-combination-log", "convex-combination-sqrt"]
    beta: Optional[float] = None
    p: Optional[float] = None


class ProcessSpec(BaseModel):
    """One of: finite tables, doubling-map grid, subshift cylinders, IFS grid."""

    model_config = ConfigDict(extra="forbid")

    kind: Literal["finite", "doubling", "subshift", "ifs"]
    # finite
    transitions: Optional[list[list[int]]] = None
    rewards: Optional[list[list[float]]] = None
    feasible: Optional[list[list[int]] | str] = None
    weights: Optional[list[list[float]] | str] = None
    # grid builders
    nodes: Optional[int] = None
    potential: Optional[dict[str, Any]] = None
    # subshift
    adjacency: Optional[list[list[int]]] = None
    depth: Optional[int] = None
    transpose: Optional[bool] = None
    # ifs
    maps: Optional[list[dict[str, float]]] = None
    probs: Optional[list[dict[str, Any]]] = None
    periodic: Optional[bool] = None


class HistorySpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    origin: float | int
    actions: list[int]


class RunOptions(BaseModel):
    model_config = ConfigDict(extra="forbid")

    tol: Optional[float] = None
    max_iter: int = 400_000
    schedule: Optional[list[int]] = None
    no_meta: bool = False


class SampleSpecModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    lo: float = 0.0
    hi: float = 10.0
    count: int = 1000
    pair_count: int = 400
    iterate_n: int = 200
    iterate_eps: float = 1e-6
    slack: float = 1e-9
    seed: int = 0


class SolveRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    process: ProcessSpec
    discount: DiscountSpec
    options: RunOptions = Field(default_factory=RunOptions)


class KoopmanRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    process: ProcessSpec
    discount: DiscountSpec
    histories: list[HistorySpec]
    options: RunOptions = Field(default_factory=RunOptions)


class LimitRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    process: ProcessSpec
    family: FamilySpec
    options: RunOptions = Field(default_factory=RunOptions)


class VerifyDiscountRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    discount: Optional[DiscountSpec] = None
    family: Optional[FamilySpec] = None
    samples: Optional[SampleSpecModel] = None
    options: RunOptions = Field(default_factory=RunOptions)


class RegularityRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    process: ProcessSpec
    discount: DiscountSpec
    options: RunOptions = Field(default_factory=RunOptions)


class CycleRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    process: ProcessSpec
    options: RunOptions = Field(default_factory=RunOptions)


class TranslationRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    nodes: int
    potential: dict[str, Any]
    family: Optional[FamilySpec] = None
    options: RunOptions = Field(default_factory=RunOptions)


class Report(BaseModel):
    """Canonical command report; also the JSON document the CLI writes."""

    command: str
    status: Literal["ok", "violation"]
    shift_constant: float
    outputs_shifted: bool
    results: dict[str, Any]
    diagnostics: dict[str, Any] = Field(default_factory=dict)
    inputs: dict[str, Any] = Field(default_factory=dict)
    meta: Optional[dict[str, Any]] = None


class HealthResponse(BaseModel):
    status: str
    package: str
    version: str
