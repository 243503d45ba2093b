"""
RESAIL: per-length bitmaps, a bit-marked d-left hash table and a look-aside TCAM.

Prefixes longer than the pivot live in the look-aside TCAM. Prefixes of
length min_bmp..pivot set one bit in their level's bitmap and store their hop
in the hash table under a bit-marked key. Shorter prefixes are expanded into
level min_bmp, filling only bits that are still clear.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

import numpy as np

from ..cram import CramProgram, MatchKind, StepNode, TableSpec, layered
from ..errors import BuildError, DLeftOverflowError, PrefixError, StructureCorruptError, UpdateError
from ..fib import NO_ROUTE, Family, Fib, IpPrefix, UpdateOp
from ..utils.bits import bit_string
from ..utils.tables import render_table
from .dleft import DEFAULT_WAYS, MAX_LOAD, DLeftTable
from .ternary import PriorityTcam

logger = logging.getLogger(__name__)

NOTE_HASH_CAPACITY = "hash table memory counts allocated slots, not occupied entries"
NOTE_NO_MERGING = "expanded short prefixes keep one hash entry per bitmap bit (no identical-hop merging)"


@dataclass
class ResailConfig:
    """RESAIL parameters.

    Attributes:
        pivot: Longest prefix length handled by bitmaps (24 for v4)
        min_bmp: Smallest bitmap level; shorter prefixes are expanded into it
        dleft_ways: d-left subtable count
        dleft_load: Target d-left load factor, at most 0.8
        seed: Hash seed
    """

    pivot: int = 24
    min_bmp: int = 13
    dleft_ways: int = DEFAULT_WAYS
    dleft_load: float = MAX_LOAD
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.min_bmp <= self.pivot:
            raise BuildError(f"min_bmp {self.min_bmp} must be in 0..pivot ({self.pivot})")
        if not 0 < self.dleft_load <= MAX_LOAD:
            raise BuildError(f"d-left load factor {self.dleft_load} must be in (0, {MAX_LOAD}]")
        if self.dleft_ways < 1:
            raise BuildError("d-left table needs at least one way")

    def check_family(self, family: Family) -> None:
        if self.pivot > family.width:
            raise BuildError(f"pivot {self.pivot} exceeds {family.name} width {family.width}")


@dataclass
class Bitmap:
    """Dense bit array of length 2**level."""

    level: int
    bits: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.bits is None:
            self.bits = np.zeros(1 << self.level, dtype=bool)

    def __getitem__(self, index: int) -> bool:
        return bool(self.bits[index])

    def set(self, index: int) -> None:
        self.bits[index] = True

    def clear(self, index: int) -> None:
        self.bits[index] = False

    def count(self) -> int:
        return int(np.count_nonzero(self.bits))

    def set_indices(self) -> List[int]:
        return [int(i) for i in np.flatnonzero(self.bits)]


class LookAsideTcam(PriorityTcam):
    """Ternary table for prefixes longer than the pivot; priority is prefix length."""


def _marked(bits: int, length: int, pivot: int) -> int:
    return ((bits << 1) | 1) << (pivot - length)


def bit_mark_key(p: IpPrefix, cfg: ResailConfig) -> int:
    """Fixed-width (pivot + 1)-bit hash key of a prefix: its bits, a 1, then zeros.

    Raises:
        PrefixError: If the prefix length is outside [min_bmp, pivot]

    Examples:
        >>> from cramlookup.fib import Family
        >>> cfg = ResailConfig(pivot=6, min_bmp=0)
        >>> bin(bit_mark_key(IpPrefix.from_bits(Family.toy(8), 0b011, 3), cfg))
        '0b111000'
    """
    if not cfg.min_bmp <= p.length <= cfg.pivot:
        raise PrefixError(f"{p} has length {p.length} outside [{cfg.min_bmp}, {cfg.pivot}]")
    return _marked(p.bits(), p.length, cfg.pivot)


@dataclass
class ResailStructure:
    family: Family
    config: ResailConfig
    hop_bits: int
    look_aside: LookAsideTcam
    bitmaps: Dict[int, Bitmap]
    hash_table: DLeftTable
    default_hop: int = NO_ROUTE
    routes: Dict[IpPrefix, int] = field(default_factory=dict)

    def levels(self) -> List[int]:
        """Bitmap levels from the pivot down to min_bmp."""
        return list(range(self.config.pivot, self.config.min_bmp - 1, -1))

    def key_at_min_bmp(self, index: int) -> int:
        return _marked(index, self.config.min_bmp, self.config.pivot)


def _expand_short_routes(s: ResailStructure, short: Dict[int, List], items: Dict[int, int]) -> int:
    """Fill level min_bmp from routes shorter than it, longest first; returns bits set."""
    min_bmp = s.config.min_bmp
    bitmap = s.bitmaps[min_bmp]
    added = 0
    for length in range(min_bmp - 1, -1, -1):
        for prefix, hop in sorted(short.get(length, []), key=lambda r: r[0].value):
            base = prefix.bits() << (min_bmp - length)
            span = 1 << (min_bmp - length)
            free = np.flatnonzero(~bitmap.bits[base : base + span]) + base
            bitmap.bits[free] = True
            for index in free:
                items[s.key_at_min_bmp(int(index))] = hop
            added += len(free)
    return added


def build_resail(fib: Fib, cfg: ResailConfig) -> ResailStructure:
    """Build the look-aside TCAM, the bitmaps and the hash table for a routing table.

    Raises:
        BuildError: If the pivot exceeds the family width or the hash table overflows
    """
    cfg.check_family(fib.family)
    width = fib.family.width
    s = ResailStructure(
        family=fib.family,
        config=cfg,
        hop_bits=fib.hop_bits,
        look_aside=LookAsideTcam(width),
        bitmaps={level: Bitmap(level) for level in range(cfg.min_bmp, cfg.pivot + 1)},
        hash_table=DLeftTable(0, cfg.dleft_ways, cfg.dleft_load, cfg.seed),
        default_hop=fib.default_hop,
        routes=dict(fib.routes),
    )
    items: Dict[int, int] = {}
    short: Dict[int, List] = {}
    for prefix, hop in fib.routes.items():
        if prefix.length > cfg.pivot:
            s.look_aside.put(prefix.value, prefix.length, hop)
        elif prefix.length >= cfg.min_bmp:
            s.bitmaps[prefix.length].set(prefix.bits())
            items[bit_mark_key(prefix, cfg)] = hop
        else:
            short.setdefault(prefix.length, []).append((prefix, hop))
    expanded = _expand_short_routes(s, short, items)
    s.hash_table = DLeftTable.build(items.items(), cfg.dleft_ways, cfg.dleft_load, cfg.seed)
    logger.info(
        f"RESAIL built: {len(s.look_aside)} look-aside entries, {len(items)} hash keys "
        f"({expanded} from expansion), load {s.hash_table.load_factor:.3f}"
    )
    return s


def resail_lookup(s: ResailStructure, addr: int) -> int:
    """Look-aside match first, else the longest set bitmap level's hash entry.

    Raises:
        StructureCorruptError: If a set bitmap bit has no hash entry
    """
    hit = s.look_aside.match(addr)
    if hit is not None:
        return hit[1]
    width = s.family.width
    for level in s.levels():
        index = addr >> (width - level)
        if s.bitmaps[level][index]:
            hop = s.hash_table.get(_marked(index, level, s.config.pivot))
            if hop is None:
                raise StructureCorruptError(f"bitmap level {level} bit {index} is set but the hash table has no key")
            return hop
    return s.default_hop


def _covering_short_route(s: ResailStructure, index: int) -> Optional[int]:
    min_bmp = s.config.min_bmp
    for length in range(min_bmp - 1, -1, -1):
        hop = s.routes.get(IpPrefix.from_bits(s.family, index >> (min_bmp - length), length))
        if hop is not None:
            return hop
    return None


def _reconcile_min_bmp(s: ResailStructure, lo: int, hi: int) -> None:
    """Recompute bits lo..hi-1 of level min_bmp from native and shorter routes."""
    min_bmp = s.config.min_bmp
    bitmap = s.bitmaps[min_bmp]
    for index in range(lo, hi):
        key = s.key_at_min_bmp(index)
        hop = s.routes.get(IpPrefix.from_bits(s.family, index, min_bmp))
        if hop is None:
            hop = _covering_short_route(s, index)
        if hop is None:
            bitmap.clear(index)
            s.hash_table.remove(key)
        else:
            s.hash_table.put(key, hop)
            bitmap.set(index)


def resail_update(s: ResailStructure, op: UpdateOp, prefix: IpPrefix, hop: int = NO_ROUTE) -> ResailStructure:
    """Apply one route insert, delete or change in place.

    Raises:
        UpdateError: On a missing or duplicate route, or a hash overflow
    """
    if prefix.family != s.family:
        raise UpdateError(f"route {prefix} is not {s.family.name}")
    present = prefix in s.routes
    if op is UpdateOp.INSERT and present:
        raise UpdateError(f"route {prefix} already exists")
    if op is not UpdateOp.INSERT and not present:
        raise UpdateError(f"route {prefix} is not in the table")
    if op is not UpdateOp.DELETE and not 0 <= hop < (1 << s.hop_bits):
        raise UpdateError(f"next hop {hop} does not fit {s.hop_bits} bits")

    old_hop = s.routes.get(prefix)
    if op is UpdateOp.DELETE:
        del s.routes[prefix]
    else:
        s.routes[prefix] = hop

    cfg = s.config
    length = prefix.length
    base = prefix.bits() << max(cfg.min_bmp - length, 0)
    span = 1 << max(cfg.min_bmp - length, 0)
    try:
        if length > cfg.pivot:
            if op is UpdateOp.DELETE:
                s.look_aside.remove(prefix.value, length)
            else:
                s.look_aside.put(prefix.value, length, hop)
        elif length > cfg.min_bmp:
            key = bit_mark_key(prefix, cfg)
            if op is UpdateOp.DELETE:
                s.bitmaps[length].clear(prefix.bits())
                s.hash_table.remove(key)
            else:
                s.hash_table.put(key, hop)
                s.bitmaps[length].set(prefix.bits())
        else:
            _reconcile_min_bmp(s, base, base + span)
    except DLeftOverflowError as e:
        # a failed put leaves the hash table unchanged
        if old_hop is None:
            del s.routes[prefix]
        else:
            s.routes[prefix] = old_hop
        if length <= cfg.min_bmp:
            _reconcile_min_bmp(s, base, base + span)
        raise UpdateError(f"hash table overflow while applying {op.value} {prefix}: {e}") from e
    logger.debug(f"RESAIL {op.value} {prefix} -> {hop}")
    return s


def resail_to_program(s: ResailStructure) -> CramProgram:
    """Two-step program: look-aside and bitmaps in parallel, then the hash table."""
    cfg = s.config
    width = s.family.width
    first: List[StepNode] = []
    if len(s.look_aside):
        table = TableSpec("look_aside", MatchKind.TERNARY, width, len(s.look_aside), s.hop_bits)
    else:
        table = None
    first.append(StepNode("look_aside", table, frozenset({"addr"}), frozenset({"hop_lookaside"})))
    for level in range(cfg.min_bmp, cfg.pivot + 1):
        first.append(
            StepNode(
                f"bitmap_{level}",
                TableSpec(f"bitmap_{level}", MatchKind.EXACT, level, 1 << level, 1, direct_indexed=True),
                frozenset({"addr"}),
                frozenset({f"hit_{level}"}),
            )
        )
    reads = {"addr", "hop_lookaside"} | {f"hit_{level}" for level in range(cfg.min_bmp, cfg.pivot + 1)}
    hash_step = StepNode(
        "hash",
        TableSpec("hash", MatchKind.EXACT, cfg.pivot + 1, s.hash_table.capacity, s.hop_bits),
        frozenset(reads),
        frozenset({"hop"}),
    )
    return layered("resail", [first, [hash_step]], [NOTE_HASH_CAPACITY, NOTE_NO_MERGING])


def dump_resail(s: ResailStructure, label: Callable[[int], str] = str) -> str:
    """Hash table and look-aside contents as text tables, keys in bit notation."""
    pivot = s.config.pivot
    hash_rows = [[bit_string(key, pivot + 1), label(hop)] for key, hop in s.hash_table.items()]
    aside_rows = []
    for entry in s.look_aside.entries():
        prefix = IpPrefix(s.family, entry.priority, entry.value)
        aside_rows.append([str(prefix), entry.priority, label(entry.payload)])
    out = [f"Hash table (pivot {pivot}, min_bmp {s.config.min_bmp})", render_table(["Key", "Next hop"], hash_rows)]
    out += ["Look-aside TCAM", render_table(["Prefix", "Priority", "Next hop"], aside_rows)]
    return "\n".join(out)
