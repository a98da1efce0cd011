"""Run configuration: a TOML file validated by a strict pydantic schema.

Example::

    rng_seed = 0

    [system]
    name = "decoupled-pendulum"
    params = { N = 2, T = 1.0, eps = 0.1 }

    [sphere]
    name = "unit-sphere"
    params = { N = 2 }

    [rays]
    side = "inward"

Every section except ``system`` and ``sphere`` is optional.  Unknown keys
anywhere are rejected.
"""
from __future__ import annotations

import sys
from pathlib import Path
from typing import Dict, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, PositiveInt, ValidationError

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .errors import ConfigError

Scalar = Union[bool, int, float, str]
ParamValue = Union[Scalar, list]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class NamedSpec(_Strict):
    name: str
    params: Dict[str, ParamValue] = Field(default_factory=dict)


class Discretization(_Strict):
    K: PositiveInt = 16
    M: Optional[PositiveInt] = None
    oracle_grid: int = Field(12, ge=4)
    degree_resolution: int = Field(256, ge=16)
    plot_grid: int = Field(101, ge=2)


class Tolerances(_Strict):
    integrator: PositiveFloat = 1e-10
    newton: PositiveFloat = 1e-10
    metric: PositiveFloat = 1e-4
    nondegeneracy: PositiveFloat = 1e-3
    basket: PositiveFloat = 1e-3
    basket_tail: PositiveFloat = 1e-2


class Budget(_Strict):
    seeds: PositiveInt = 200
    oracle_cells: PositiveInt = 2_000_000


class Rays(_Strict):
    side: Literal["inward", "outward"] = "inward"
    n_boundary: PositiveInt = 1000
    n_angles: PositiveInt = 8


class Basket(_Strict):
    """Optional planted defect (a notch at level ``defect_r0``) for negative tests."""
    defect_r0: Optional[PositiveFloat] = None
    defect_width: Optional[PositiveFloat] = None


class Output(_Strict):
    dir: str = "pbrays-out"


class RunConfig(_Strict):
    system: NamedSpec
    sphere: NamedSpec
    discretization: Discretization = Field(default_factory=Discretization)
    tolerances: Tolerances = Field(default_factory=Tolerances)
    budget: Budget = Field(default_factory=Budget)
    rays: Rays = Field(default_factory=Rays)
    basket: Basket = Field(default_factory=Basket)
    rng_seed: int = 0
    output: Output = Field(default_factory=Output)


def parse_config(data: dict) -> RunConfig:
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        lines = [f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in exc.errors()]
        raise ConfigError("invalid configuration:\n  " + "\n  ".join(lines)) from None


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        with path.open("rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"configuration file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    return parse_config(data)
