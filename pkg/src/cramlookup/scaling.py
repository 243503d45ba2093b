"""
Synthetic database generators and the size and slice-size sweeps built on them.

Two generators grow a real table: constant per-length scaling adds random
prefixes at every length in proportion to its count, and multiverse scaling
clones a table whose top three bits are all zero into the unused
three-bit combinations.
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Set

import numpy as np

from .config import ChipSpec
from .errors import ScalingError
from .fib import Fib, IpPrefix, length_histogram
from .oracle import random_addresses
from .rmt import map_program
from .schemes import SchemeParams, build_scheme, scheme_program

logger = logging.getLogger(__name__)

UNIVERSE_BITS = 3
MAX_UNIVERSES = 1 << UNIVERSE_BITS
SWEEP_COLUMNS = ["size", "tcam_blocks", "sram_pages", "stages", "feasible", "seed"]
K_SWEEP_COLUMNS = ["k", "tcam_blocks", "sram_pages", "stages", "feasible", "seed"]


@dataclass
class SweepRow:
    size: int
    tcam_blocks: int
    sram_pages: int
    stages: int
    feasible: bool
    seed: int

    def as_dict(self) -> Dict[str, Any]:
        return {column: getattr(self, column) for column in SWEEP_COLUMNS}


@dataclass
class KSweepRow:
    k: int
    tcam_blocks: int
    sram_pages: int
    stages: int
    feasible: bool
    seed: int

    def as_dict(self) -> Dict[str, Any]:
        return {column: getattr(self, column) for column in K_SWEEP_COLUMNS}


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def _fresh_values(rng: np.random.Generator, length: int, taken: Set[int], need: int) -> List[int]:
    """``need`` distinct length-bit values outside ``taken``."""
    space = 1 << length
    if need * 2 >= space - len(taken):
        free = np.setdiff1d(np.arange(space, dtype=np.int64), np.fromiter(taken, dtype=np.int64, count=len(taken)))
        return [int(v) for v in rng.choice(free, size=need, replace=False)]
    fresh: List[int] = []
    seen = set(taken)
    while len(fresh) < need:
        for value in random_addresses(rng, length, 2 * (need - len(fresh))):
            if value not in seen:
                seen.add(value)
                fresh.append(value)
                if len(fresh) == need:
                    break
    return fresh


def scale_by_length(fib: Fib, factor: float, seed: int = 0) -> Fib:
    """Grow every prefix length by the same factor with seeded random prefixes.

    Original routes are kept. New prefixes are uniform over each length's
    unused values and their hops are drawn from the table's own hop set.

    Args:
        fib: Table to grow
        factor: Growth factor, at least 1
        seed: PRNG seed

    Returns:
        Fib: Table whose count at each length L is round(original * factor)

    Raises:
        ScalingError: If factor < 1 or a length runs out of distinct prefixes
    """
    if factor < 1:
        raise ScalingError(f"scaling factor must be at least 1, got {factor}")
    rng = np.random.default_rng(seed)
    hops = fib.hops()
    routes = dict(fib.routes)
    taken: Dict[int, Set[int]] = {}
    for prefix in fib.routes:
        taken.setdefault(prefix.length, set()).add(prefix.bits())

    for length, count in enumerate(length_histogram(fib).counts):
        if not count:
            continue
        target = _round_half_up(count * factor)
        if target > (1 << length):
            raise ScalingError(f"length /{length} holds {1 << length} prefixes, {target} requested")
        need = target - count
        if not need:
            continue
        values = _fresh_values(rng, length, taken[length], need)
        picks = rng.integers(0, len(hops), size=need)
        for value, pick in zip(values, picks):
            routes[IpPrefix.from_bits(fib.family, value, length)] = hops[int(pick)]
        logger.debug(f"/{length}: {count} -> {target}")

    logger.info(f"Scaled {len(fib)} routes by {factor} to {len(routes)} (seed {seed})")
    return Fib(fib.family, routes, fib.default_hop, fib.hop_bits)


def _universe_shift(fib: Fib) -> int:
    width = fib.family.width
    if width < UNIVERSE_BITS:
        raise ScalingError(f"multiverse scaling needs at least {UNIVERSE_BITS} address bits, family has {width}")
    for prefix, _ in fib.sorted_routes():
        if prefix.length < UNIVERSE_BITS or prefix.slice(0, UNIVERSE_BITS):
            raise ScalingError(f"route {prefix} does not start with {UNIVERSE_BITS} zero bits")
    return width - UNIVERSE_BITS


def multiverse_scale(fib: Fib, n: int) -> Fib:
    """Copy the table into universes 0..n-1 by rewriting its top three bits.

    Raises:
        ScalingError: If n is outside 1..8 or a route's top three bits are not 000
    """
    if not 1 <= n <= MAX_UNIVERSES:
        raise ScalingError(f"universe count must be in 1..{MAX_UNIVERSES}, got {n}")
    shift = _universe_shift(fib)
    routes: Dict[IpPrefix, int] = {}
    for universe in range(n):
        for prefix, hop in fib.routes.items():
            routes[IpPrefix(fib.family, prefix.length, prefix.value | (universe << shift))] = hop
    logger.info(f"Multiverse: {len(fib)} routes x {n} universes = {len(routes)}")
    return Fib(fib.family, routes, fib.default_hop, fib.hop_bits)


def multiverse_sample(fib: Fib, size: int, seed: int = 0) -> Fib:
    """Whole universes plus a seeded random part of the next one, ``size`` routes in all.

    Raises:
        ScalingError: If size exceeds eight universes or the table is empty
    """
    original = len(fib)
    if not original:
        raise ScalingError("cannot multiverse-scale an empty table")
    if size > MAX_UNIVERSES * original:
        raise ScalingError(f"size {size} exceeds {MAX_UNIVERSES} universes of {original} routes")
    whole, rest = divmod(size, original)
    scaled = multiverse_scale(fib, whole) if whole else Fib(fib.family, {}, fib.default_hop, fib.hop_bits)
    if not rest:
        return scaled
    shift = _universe_shift(fib)
    rng = np.random.default_rng(seed)
    ordered = fib.sorted_routes()
    routes = dict(scaled.routes)
    for pick in rng.choice(original, size=rest, replace=False):
        prefix, hop = ordered[int(pick)]
        routes[IpPrefix(fib.family, prefix.length, prefix.value | (whole << shift))] = hop
    return Fib(fib.family, routes, fib.default_hop, fib.hop_bits)


def scaled_fib(fib: Fib, size: int, method: str = "length", seed: int = 0) -> Fib:
    """The table grown to ``size`` routes by the named method.

    Raises:
        ScalingError: On an unknown method or a size below the table's own
    """
    if method == "multiverse":
        return multiverse_sample(fib, size, seed)
    if method != "length":
        raise ScalingError(f"unknown scaling method {method!r}; choose length or multiverse")
    if size == len(fib):
        return fib
    if not len(fib) or size < len(fib):
        raise ScalingError(f"length scaling cannot reach {size} routes from {len(fib)}")
    return scale_by_length(fib, size / len(fib), seed)


def sweep(
    scheme: str,
    fib: Fib,
    sizes: List[int],
    chip: ChipSpec,
    method: str = "length",
    seed: int = 0,
    params: Optional[SchemeParams] = None,
) -> List[SweepRow]:
    """Build and map the scheme at each database size.

    Raises:
        ScalingError: If sizes are not ascending
        BuildError, MappingError: Propagated from the build or the mapping
    """
    if any(b < a for a, b in zip(sizes, sizes[1:])):
        raise ScalingError(f"sweep sizes must be ascending, got {sizes}")
    params = params or SchemeParams.resolve(fib.family, seed=seed)
    rows = []
    for size in sizes:
        grown = scaled_fib(fib, size, method, seed)
        mapping = map_program(scheme_program(build_scheme(scheme, grown, params, chip)), chip)
        rows.append(
            SweepRow(len(grown), mapping.total_blocks, mapping.total_pages, mapping.stages, mapping.feasible, seed)
        )
        logger.info(f"{scheme} at {len(grown)} routes: {mapping.stages} stages, feasible={mapping.feasible}")
    return rows


def k_sweep(fib: Fib, ks: List[int], chip: ChipSpec, seed: int = 0) -> List[KSweepRow]:
    """Map BSIC for each initial slice size k on the same table."""
    rows = []
    for k in ks:
        params = SchemeParams.resolve(fib.family, k=k, seed=seed)
        mapping = map_program(scheme_program(build_scheme("bsic", fib, params, chip)), chip)
        rows.append(KSweepRow(k, mapping.total_blocks, mapping.total_pages, mapping.stages, mapping.feasible, seed))
        logger.debug(f"k={k}: {mapping.stages} stages")
    return rows
