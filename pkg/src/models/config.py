"""
Run configuration schema

This module defines the Pydantic schema that every command validates before
it computes anything. Values come from the built-in defaults, then an
optional JSON file, then command-line flags.

"""
from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from calculus.geometry import Domain, Partition, build_partition


DEFAULT_TOLERANCES: Dict[str, float] = {
    "duality": 1e-8,
    "kronecker": 1e-8,
    "delta": 1e-8,
    "symmetry": 1e-10,
    "ibp": 1e-8,
    "ibp_matrix": 1e-10,
    "consistency": 1e-8,
    "interface": 1e-8,
    "gauss": 1e-9,
    "flux": 1e-8,
    "oracle": 1e-12,
    "poisson": 1e-8,
    "pivot": 1e-8,
    "gram_condition": 1e12,
    "quadrature": 1e-13,
    "normal_zero": 1e-14,
    "singular": 1e-12,
}

# Seeds per cell axis when the config leaves seeds_per_cell unset; a cell gets m**d.
DEFAULT_SEEDS_PER_AXIS = {"check": 2, "gauss": 2, "poisson": 0, "degenerate1d": 0, "refine-study": 0}


class RunConfig(BaseModel):
    """
    Pydantic schema for one run.

    Attributes:
        domain_lower (list[float]): Lower corner of Ω; its length is the dimension (1 or 2).
        domain_upper (list[float]): Upper corner of Ω.
        cells (list[int]): Cells per axis; a single entry is used for every axis.
        degree (int): Modal degree k ≥ 1.
        smooth_degree (int | None): Degree k₁ ≤ k of the polynomial part of V¹(Q); k when unset.
        seeds_per_cell (int | None): Seeds per cell (m^d); resolved per command when unset.
        levels (int): Refinement levels of the studies.
        gamma (float): γ of the degenerate problem.
        region (str): Gauss region: disk, koch or cells.
        quantity (str): Quantity tabulated by refine-study.
        out (str): Output directory.
        seed (int): Seed of every random draw.
        tolerances (dict[str, float]): Overrides of the default tolerances.
        max_iterations (int): Descent sweeps of the generic minimizer.

    Example:
        {
            "domain_lower": [0.0, 0.0],
            "domain_upper": [1.0, 1.0],
            "cells": [4, 4],
            "degree": 2,
            "tolerances": {"gauss": 1e-10}
        }
    """
    model_config = ConfigDict(extra="forbid")

    domain_lower: List[float] = Field(default_factory=lambda: [0.0])
    domain_upper: List[float] = Field(default_factory=lambda: [1.0])
    cells: List[int] = Field(default_factory=lambda: [8])
    degree: int = 2
    smooth_degree: Optional[int] = None
    seeds_per_cell: Optional[int] = None
    levels: int = 3
    gamma: float = 4.0
    region: Literal["disk", "koch", "cells"] = "disk"
    quantity: Literal["perimeter", "pairing", "poisson_error", "smooth_error"] = "perimeter"
    out: str = "out"
    seed: int = 12345
    tolerances: Dict[str, float] = Field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    max_iterations: int = 200

    @field_validator("degree")
    @classmethod
    def check_degree(cls, value: int) -> int:
        if value < 1:
            raise ValueError(f"degree must be at least 1, got {value}")
        return value

    @field_validator("levels", "max_iterations")
    @classmethod
    def check_positive(cls, value: int) -> int:
        if value < 1:
            raise ValueError(f"must be at least 1, got {value}")
        return value

    @field_validator("seeds_per_cell")
    @classmethod
    def check_seeds(cls, value: Optional[int]) -> Optional[int]:
        if value is not None and value < 0:
            raise ValueError(f"seeds_per_cell must be non-negative, got {value}")
        return value

    @field_validator("gamma")
    @classmethod
    def check_gamma(cls, value: float) -> float:
        if not value > 0.0:
            raise ValueError(f"gamma must be positive, got {value}")
        return value

    @field_validator("tolerances", mode="before")
    @classmethod
    def merge_tolerances(cls, value):
        value = dict(value or {})
        unknown = sorted(set(value) - set(DEFAULT_TOLERANCES))
        if unknown:
            raise ValueError(f"unknown tolerances: {', '.join(unknown)}")
        merged = dict(DEFAULT_TOLERANCES)
        merged.update({name: float(v) for name, v in value.items()})
        bad = [name for name, v in merged.items() if not v > 0.0]
        if bad:
            raise ValueError(f"tolerances must be positive: {', '.join(bad)}")
        return merged

    @model_validator(mode="after")
    def check_shape(self) -> "RunConfig":
        if not {"domain_lower", "domain_upper"} & self.model_fields_set and len(self.cells) == 2:
            self.domain_lower, self.domain_upper = [0.0, 0.0], [1.0, 1.0]
        d = len(self.domain_lower)
        if d not in (1, 2) or len(self.domain_upper) != d:
            raise ValueError(f"domain corners must both have length 1 or 2, got {self.domain_lower} and {self.domain_upper}")
        if any(lo >= hi for lo, hi in zip(self.domain_lower, self.domain_upper)):
            raise ValueError("domain_lower must be below domain_upper on every axis")
        if len(self.cells) == 1 and d == 2:
            self.cells = self.cells * 2
        if len(self.cells) != d or any(n < 1 for n in self.cells):
            raise ValueError(f"cells must give a positive count per axis, got {self.cells}")
        if self.smooth_degree is not None and not 0 <= self.smooth_degree <= self.degree:
            raise ValueError(f"smooth_degree must lie in [0, {self.degree}], got {self.smooth_degree}")
        return self

    @property
    def dimension(self) -> int:
        return len(self.domain_lower)

    def tolerance(self, name: str) -> float:
        return self.tolerances[name]

    def resolved_seeds(self, command: str, dimension: Optional[int] = None) -> int:
        """
        Seeds per cell for `command` on a level of the given dimension.

        An explicit seeds_per_cell = m**d of the configured dimension carries
        its m over to levels of another dimension.
        """
        dimension = self.dimension if dimension is None else dimension
        if self.seeds_per_cell is None:
            per_axis = DEFAULT_SEEDS_PER_AXIS.get(command, 0)
        elif dimension == self.dimension:
            return self.seeds_per_cell
        else:
            per_axis = int(round(self.seeds_per_cell ** (1.0 / self.dimension)))
        return per_axis ** dimension

    def domain(self) -> Domain:
        return Domain(tuple(self.domain_lower), tuple(self.domain_upper))

    def partition(self) -> Partition:
        return build_partition(self.domain(), self.cells)

    def with_defaults(self, **values) -> "RunConfig":
        """Copy with `values` applied to the fields the user did not set."""
        unset = {k: v for k, v in values.items() if k not in self.model_fields_set}
        return RunConfig.model_validate({**self.model_dump(exclude_unset=True), **unset})
