"""CAM+RAM lookup schemes and a name-based dispatch over them."""

import logging
from dataclasses import dataclass
from typing import Any, Optional

from ..config import ChipSpec
from ..cram import CramProgram
from ..errors import BuildError
from ..fib import V4, V6, Family, Fib
from .bsic import BsicConfig, BsicStructure, bsic_lookup, bsic_to_program, build_bsic
from .mashup import MashupStructure, StridePlan, build_mashup, choose_strides, mashup_lookup, mashup_to_program
from .resail import ResailConfig, ResailStructure, build_resail, resail_lookup, resail_to_program

logger = logging.getLogger(__name__)

SCHEMES = ("resail", "bsic", "mashup")


@dataclass
class SchemeParams:
    """Parameters of all three schemes for one run.

    ``strides`` may be empty, in which case the plan is chosen from the
    table's length distribution at build time.
    """

    pivot: int = 24
    min_bmp: int = 13
    k: int = 16
    strides: str = "16-4-4-8"
    seed: int = 0

    @classmethod
    def defaults(cls, family: Family) -> "SchemeParams":
        if family == V4:
            return cls()
        if family == V6:
            return cls(k=24, strides="20-12-16-16")
        return cls(pivot=max(family.width - 2, 0), min_bmp=0, k=max(family.width // 2, 1), strides="")

    @classmethod
    def resolve(
        cls,
        family: Family,
        pivot: Optional[int] = None,
        min_bmp: Optional[int] = None,
        k: Optional[int] = None,
        strides: str = "",
        seed: int = 0,
    ) -> "SchemeParams":
        """Family defaults overridden by whatever the caller set."""
        params = cls.defaults(family)
        if pivot is not None:
            params.pivot = pivot
        if min_bmp is not None:
            params.min_bmp = min_bmp
        if k is not None:
            params.k = k
        if strides:
            params.strides = strides
        params.seed = seed
        return params

    def stride_plan(self, fib: Fib) -> StridePlan:
        if self.strides:
            return StridePlan.parse(self.strides)
        if not len(fib):
            return StridePlan((fib.family.width,))
        return choose_strides(fib)


def build_scheme(name: str, fib: Fib, params: SchemeParams, chip: Optional[ChipSpec] = None) -> Any:
    """Build the named scheme's structure.

    Raises:
        BuildError: On an unknown scheme or parameters the table cannot take
    """
    chip = chip or ChipSpec()
    if name == "resail":
        return build_resail(fib, ResailConfig(pivot=params.pivot, min_bmp=params.min_bmp, seed=params.seed))
    if name == "bsic":
        return build_bsic(fib, BsicConfig(k=params.k))
    if name == "mashup":
        return build_mashup(
            fib, params.stride_plan(fib), tcam_budget=chip.tcam_block_depth, sram_budget=chip.sram_page_depth
        )
    raise BuildError(f"unknown scheme {name!r}; choose from {', '.join(SCHEMES)}")


def scheme_lookup(structure: Any, addr: int) -> int:
    if isinstance(structure, ResailStructure):
        return resail_lookup(structure, addr)
    if isinstance(structure, BsicStructure):
        return bsic_lookup(structure, addr)
    if isinstance(structure, MashupStructure):
        return mashup_lookup(structure, addr)
    raise BuildError(f"not a lookup structure: {type(structure).__name__}")


def scheme_program(structure: Any) -> CramProgram:
    if isinstance(structure, ResailStructure):
        return resail_to_program(structure)
    if isinstance(structure, BsicStructure):
        return bsic_to_program(structure)
    if isinstance(structure, MashupStructure):
        return mashup_to_program(structure)
    raise BuildError(f"not a lookup structure: {type(structure).__name__}")


def scheme_name(structure: Any) -> str:
    return {ResailStructure: "resail", BsicStructure: "bsic", MashupStructure: "mashup"}[type(structure)]
