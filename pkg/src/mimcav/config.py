"""Run configuration for the command-line tool."""
from __future__ import annotations

import json
from pathlib import Path
from typing import Literal, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .errors import ConfigError
from .modes import MAX_MEMBRANES

Command = Literal["spectrum", "couplings", "modes", "validate"]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GeometryConfig(_Strict):
    n_membranes: int = Field(2, ge=1, le=MAX_MEMBRANES)
    reflectivity: float = Field(0.5, ge=0.0, le=1.0)
    half_length: float = Field(1.0, gt=0.0)
    light_speed: float = Field(1.0, gt=0.0)


class SweepRange(_Strict):
    lo: float
    hi: float
    points: int = Field(ge=2)

    @model_validator(mode="after")
    def _ordered(self):
        if not self.lo < self.hi:
            raise ValueError("range needs lo < hi")
        return self

    @classmethod
    def parse(cls, text: str) -> "SweepRange":
        try:
            lo, hi, pts = text.split(":")
            return cls(lo=float(lo), hi=float(hi), points=int(pts))
        except ValueError as exc:
            raise ConfigError(f"range must look like lo:hi:npts, got {text!r}") from exc


class OperationConfig(_Strict):
    # spectrum
    sweep: list[str] = Field(default_factory=lambda: ["q"], min_length=1, max_length=2)
    ranges: list[SweepRange] = Field(default_factory=lambda: [SweepRange(lo=1.9, hi=2.1, points=401)])
    fixed: dict[str, float] = Field(default_factory=dict)
    k_window: tuple[float, float] = (1.4, 2.3)
    multiplets: Optional[list[int]] = Field(default_factory=lambda: [1])
    oversample: int = Field(200, ge=1)
    # couplings
    multiplet: int = Field(1, ge=0)
    branches: list[int] = Field(default_factory=lambda: [1, 2, 3])
    q0: Optional[float] = None
    Q0: float = 0.0
    step: float = Field(1e-4, gt=0.0, lt=0.1)
    # modes
    mode_index: Optional[int] = Field(None, ge=0)
    amplitude: float = Field(0.05, gt=0.0)
    # validate
    tolerances: dict[str, float] = Field(default_factory=dict)

    @field_validator("k_window")
    @classmethod
    def _window(cls, v):
        if not 0 < v[0] < v[1]:
            raise ValueError("k_window needs 0 < lo < hi")
        return v

    @model_validator(mode="after")
    def _ranges_match_axes(self):
        if len(self.ranges) != len(self.sweep):
            raise ValueError("one range is required per sweep axis")
        return self


class OutputConfig(_Strict):
    path: Optional[str] = None
    format: Optional[Literal["csv", "json"]] = None
    precision: int = Field(12, ge=1, le=17)


class RunConfig(_Strict):
    geometry: GeometryConfig = Field(default_factory=GeometryConfig)
    operation: OperationConfig = Field(default_factory=OperationConfig)
    output: OutputConfig = Field(default_factory=OutputConfig)

    def dumps(self) -> str:
        return json.dumps(self.model_dump(mode="json"), indent=2, sort_keys=True)

    @classmethod
    def loads(cls, text: str, suffix: str = ".json") -> "RunConfig":
        try:
            data = yaml.safe_load(text) if suffix in (".yml", ".yaml") else json.loads(text)
            return cls.model_validate(data or {})
        except (ValidationError, ValueError, yaml.YAMLError) as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.loads(text, path.suffix.lower())

    def updated(self, geometry: dict, operation: dict, output: dict) -> "RunConfig":
        """Copy with overrides applied, re-validated as a whole."""
        data = self.model_dump()
        data["geometry"].update(geometry)
        data["operation"].update(operation)
        data["output"].update(output)
        try:
            return RunConfig.model_validate(data)
        except ValidationError as exc:
            raise ConfigError(str(exc)) from exc
