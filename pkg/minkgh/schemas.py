"""Input documents accepted by the command-line front end."""

from __future__ import annotations

from typing import Annotated, Any, Dict, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError

Vector = List[float]
Matrix = List[List[float]]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class IsometryIn(_Strict):
    L: Annotated[Matrix, Field(description="Linear part, an n x n Lorentz matrix.")]
    tau: Annotated[Vector, Field(description="Translation part.")]


class PlaneIn(_Strict):
    v: Annotated[Vector, Field(description="Future lightlike direction; normalized on input.")]
    s: float


class ClassifyIn(_Strict):
    isometries: List[IsometryIn] = Field(min_length=1)


class AchronalIn(_Strict):
    isometry: IsometryIn
    points: List[Vector] = Field(default_factory=list)
    qmax: Annotated[int, Field(ge=0, description="Iterates checked by the oracle; 0 skips it.")] = 0
    witness_base: Optional[Vector] = None


class PenroseIn(_Strict):
    isometry: IsometryIn
    planes: List[PlaneIn] = Field(min_length=1)


class DomainIn(_Strict):
    planes: List[PlaneIn] = Field(min_length=1)
    orientation: Literal["future", "past"] = "future"
    points: List[Vector] = Field(default_factory=list)
    levels: List[Annotated[float, Field(gt=0)]] = Field(default_factory=list)
    samples: Annotated[int, Field(ge=1)] = 32
    spread: Annotated[float, Field(gt=0)] = 1.0


class GroupIn(_Strict):
    name: str = "group"
    generators: List[IsometryIn] = Field(min_length=1)
    relations: List[List[int]] = Field(default_factory=list)
    orientation: Literal["future", "past"] = "future"
    depths: List[Annotated[int, Field(ge=1)]] = Field(default_factory=list)


class CocycleIn(_Strict):
    group: GroupIn
    values: Optional[Matrix] = Field(default=None, description="tau on each generator; omitted for the cohomology report only.")
    probe_depth: Annotated[int, Field(ge=1)] = 4


class TranslationIn(_Strict):
    family: Literal["translation"]
    translations: Matrix


class MisnerIn(_Strict):
    family: Literal["misner"]
    t0: float
    lattice: List[Dict[str, Any]] = Field(default_factory=list, description="Entries {boost, shift}.")
    dimension: Annotated[int, Field(ge=3)] = 3
    qmax: Annotated[int, Field(ge=1)] = 50


class UnipotentIn(_Strict):
    family: Literal["unipotent"]
    lambdas: Vector = Field(min_length=1)
    component_index: Annotated[int, Field(ge=0)] = 0
    lattice: Optional[Matrix] = None


class RadiantIn(_Strict):
    family: Literal["radiant"]
    group: GroupIn
    levels: List[Annotated[float, Field(gt=0)]] = Field(default_factory=lambda: [1.0, 2.0])


class SymExtIn(_Strict):
    family: Literal["symext"]
    basis: Matrix
    T: Matrix
    case: Literal["bounded", "future_infinite", "past_infinite"]
    bound: float


class TwistedIn(_Strict):
    family: Literal["twisted"]
    base: Union[MisnerIn, TranslationIn] = Field(discriminator="family")
    fiber_rank: Annotated[int, Field(ge=1)]
    monodromy: List[Dict[str, Any]] = Field(description="Entries {rotation, translation}, one per base generator.")


ModelIn = Annotated[
    Union[TranslationIn, MisnerIn, UnipotentIn, RadiantIn, SymExtIn, TwistedIn],
    Field(discriminator="family"),
]


class ModelDocument(_Strict):
    model: ModelIn


class SurfaceIn(_Strict):
    kind: Literal["hyperboloid", "plane", "misner", "bumpy", "translation_leaf", "tabulated"]
    t: Annotated[float, Field(gt=0)] = 1.0
    dimension: Annotated[int, Field(ge=3)] = 3
    slope: Optional[Vector] = None
    translations: Optional[Matrix] = None
    csv: Optional[str] = None
    amplitude: Annotated[float, Field(gt=0)] = 0.2
    points: Annotated[int, Field(ge=10)] = 16
    tol: Annotated[float, Field(gt=0)] = 1e-4


def validation_pointers(exc: ValidationError) -> List[Dict[str, str]]:
    """Turn pydantic error locations into JSON pointers."""
    out = []
    for error in exc.errors():
        parts = [str(item).replace("~", "~0").replace("/", "~1") for item in error.get("loc", ())]
        out.append({"pointer": "/" + "/".join(parts), "message": error.get("msg", "")})
    return out
