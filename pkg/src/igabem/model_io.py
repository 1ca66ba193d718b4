"""JSON model files: schema validation and conversion to runtime objects.

Control nets are stored as flat lists of points numbered first along xi and
then along eta (``i + n_u * j``); weights follow the same numbering.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .assembly import Model, PatchBC
from .geometry import Inclusion, InfinitePatch, Patch
from .inclusion_field import InclusionGrid, Interp1D
from .kernels import ElasticMaterial
from .nurbs import KnotVector, NurbsSurface
from .solver import SolveOptions
from .volume import VolumeOptions

Vec3 = tuple[float, float, float]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class MaterialSpec(_Strict):
    E: float = Field(gt=0)
    nu: float = Field(gt=-1.0, lt=0.5)

    def build(self) -> ElasticMaterial:
        return ElasticMaterial(self.E, self.nu)


class SurfaceSpec(_Strict):
    degree: tuple[int, int]
    knots_u: list[float]
    knots_v: list[float]
    control: list[Vec3]
    weights: Optional[list[float]] = None

    def build(self) -> NurbsSurface:
        ku = KnotVector(self.degree[0], self.knots_u)
        kv = KnotVector(self.degree[1], self.knots_v)
        return NurbsSurface(ku, kv, np.array(self.control), self.weights)


class BCSpec(_Strict):
    kinds: tuple[Literal["u", "t"], Literal["u", "t"], Literal["u", "t"]] = ("t", "t", "t")
    values: Vec3 = (0.0, 0.0, 0.0)
    pressure: float = 0.0

    def build(self) -> PatchBC:
        return PatchBC(tuple(self.kinds), tuple(self.values), self.pressure)


class FinitePatchSpec(_Strict):
    kind: Literal["finite"] = "finite"
    name: str = ""
    surface: SurfaceSpec
    elevate: Union[int, tuple[int, int]] = 0
    insert_u: list[float] = []
    insert_v: list[float] = []
    flip: bool = False
    bc: BCSpec = BCSpec()

    def build(self):
        return Patch(self.surface.build(), self.elevate, self.insert_u, self.insert_v,
                     self.flip, self.name)


class InfinitePatchSpec(_Strict):
    kind: Literal["infinite"]
    name: str = ""
    degree: int
    knots: list[float]
    p1: list[Vec3]
    p2: list[Vec3]
    weights: Optional[list[float]] = None
    elevate: int = Field(0, ge=0)
    insert_u: list[float] = []
    flip: bool = False
    bc: BCSpec = BCSpec()

    def build(self):
        return InfinitePatch(KnotVector(self.degree, self.knots), self.p1, self.p2,
                             self.weights, self.elevate, self.insert_u, self.flip, self.name)


class InterpSpec(_Strict):
    family: Literal["lagrange", "nurbs"] = "lagrange"
    points: Optional[list[float]] = None
    degree: Optional[int] = None
    knots: Optional[list[float]] = None
    weights: Optional[list[float]] = None

    def build(self) -> Interp1D:
        return Interp1D(self.family, self.points, self.degree, self.knots, self.weights)


class InclusionSpec(_Strict):
    name: str = ""
    bottom: SurfaceSpec
    top: Optional[SurfaceSpec] = None
    thickness: Optional[float] = Field(None, gt=0)
    material: MaterialSpec
    interp: tuple[InterpSpec, InterpSpec, InterpSpec]
    sigma: Literal["constant", "linear"] = "constant"

    @model_validator(mode="after")
    def _one_of(self):
        if (self.top is None) == (self.thickness is None):
            raise ValueError("give exactly one of 'top' and 'thickness'")
        return self

    def build(self) -> InclusionGrid:
        inc = Inclusion(self.bottom.build(), self.top.build() if self.top else None,
                        self.thickness, self.name)
        return InclusionGrid(inc, tuple(i.build() for i in self.interp), self.sigma,
                             self.material.build(), self.name)


class SolveSpec(_Strict):
    scheme: Literal["iterative", "one-step"] = "one-step"
    tol: float = Field(1e-6, gt=0)
    max_iter: int = Field(50, ge=1)
    integration_option: Literal[1, 2] = 2
    exclusion_radius: Optional[float] = Field(None, gt=0)
    pyramid_order: int = Field(4, ge=1, le=64)


class LineSpec(_Strict):
    name: str
    start: Vec3
    end: Vec3
    n: int = Field(11, ge=2)

    def points(self) -> np.ndarray:
        f = np.linspace(0.0, 1.0, self.n)[:, None]
        return (1 - f) * np.array(self.start) + f * np.array(self.end)


class PointSpec(_Strict):
    name: str
    x: Vec3


class OutputSpec(_Strict):
    points: list[PointSpec] = []
    lines: list[LineSpec] = []


class ModelFile(_Strict):
    name: str = ""
    material: MaterialSpec
    infinite: bool = False
    patches: list[Union[FinitePatchSpec, InfinitePatchSpec]] = Field(min_length=1)
    inclusions: list[InclusionSpec] = []
    solve: SolveSpec = SolveSpec()
    outputs: OutputSpec = OutputSpec()

    @field_validator("patches")
    @classmethod
    def _names_unique(cls, v):
        names = [p.name for p in v if p.name]
        if len(names) != len(set(names)):
            raise ValueError("patch names must be unique")
        return v


class ModelFileError(ValueError):
    """Unreadable or schema-invalid model file."""


def _format_errors(e: ValidationError) -> str:
    lines = []
    for err in e.errors():
        loc = ".".join(str(p) for p in err["loc"])
        lines.append(f"  {loc}: {err['msg']}")
    return "\n".join(lines)


def parse_model(doc: dict) -> ModelFile:
    try:
        return ModelFile.model_validate(doc)
    except ValidationError as e:
        raise ModelFileError("invalid model:\n" + _format_errors(e)) from None


def load_model_file(path) -> ModelFile:
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ModelFileError(f"{path}: line {e.lineno} column {e.colno}: {e.msg}") from None
    return parse_model(doc)


def volume_options(spec: SolveSpec, option: int | None = None) -> VolumeOptions:
    return VolumeOptions(option=option or spec.integration_option, radius=spec.exclusion_radius,
                         pyramid_order=spec.pyramid_order)


def build_model(mf: ModelFile, option: int | None = None) -> Model:
    """Runtime model; ``option`` overrides the integration option of the file."""
    try:
        patches = [p.build() for p in mf.patches]
        grids = [i.build() for i in mf.inclusions]
        return Model(patches, [p.bc.build() for p in mf.patches], mf.material.build(), grids,
                     mf.infinite, volume_options(mf.solve, option), mf.name)
    except ValueError as e:
        raise ModelFileError(f"invalid model: {e}") from None


def solve_options(mf: ModelFile, scheme: str | None = None) -> SolveOptions:
    s = mf.solve
    return SolveOptions(scheme or s.scheme, s.tol, s.max_iter)
