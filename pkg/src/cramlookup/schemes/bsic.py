"""
BSIC: a ternary initial table over k-bit slices and binary search trees over ranges.

Routes of length <= k go straight into the initial table. Longer routes are
grouped by their k-bit slice; each group's residual prefixes are expanded
into contiguous ranges and searched by a balanced BST whose levels are spread
over one exact table per depth.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

from ..cram import CramProgram, MatchKind, StepNode, TableSpec, layered
from ..errors import BuildError, StructureCorruptError
from ..fib import NO_ROUTE, Family, Fib
from ..utils.bits import bit_string, ceil_log2
from ..utils.tables import render_table
from .ternary import PriorityTcam

logger = logging.getLogger(__name__)

NULL_REF = -1
MAX_SLICE_BITS = 44


@dataclass
class BsicConfig:
    k: int = 16

    def check_family(self, family: Family) -> None:
        if not 0 < self.k <= min(family.width, MAX_SLICE_BITS):
            raise BuildError(f"slice size k={self.k} must be in 1..{min(family.width, MAX_SLICE_BITS)}")


@dataclass(frozen=True)
class InitialEntry:
    """Initial table row: slice bits, covered length and its action.

    ``bst`` is the root index in the first level table, or NULL_REF when the
    entry resolves to ``hop`` directly.
    """

    value: int
    length: int
    hop: int = NO_ROUTE
    bst: int = NULL_REF

    @property
    def priority(self) -> int:
        return self.length


@dataclass(frozen=True)
class Interval:
    left: int
    right: int
    hop: int


@dataclass
class RangeList:
    """Sorted, contiguous, non-overlapping intervals covering the W-bit residual space."""

    width: int
    intervals: List[Interval] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.intervals)

    def endpoints(self) -> List[int]:
        return [iv.left for iv in self.intervals]

    def hop_at(self, residual: int) -> int:
        for iv in self.intervals:
            if iv.left <= residual <= iv.right:
                return iv.hop
        raise ValueError(f"residual {residual} is outside the {self.width}-bit space")


@dataclass(frozen=True)
class BstNode:
    left: int
    right: int
    hop: int
    endpoint: int


@dataclass
class Bst:
    """One search tree; ``levels[d]`` holds its depth-d nodes, children index level d+1."""

    levels: List[List[BstNode]] = field(default_factory=list)

    @property
    def depth(self) -> int:
        return len(self.levels)

    def root(self) -> BstNode:
        return self.levels[0][0]

    def in_order(self) -> List[int]:
        out: List[int] = []

        def walk(depth: int, ref: int) -> None:
            if ref == NULL_REF:
                return
            node = self.levels[depth][ref]
            walk(depth + 1, node.left)
            out.append(node.endpoint)
            walk(depth + 1, node.right)

        walk(0, 0)
        return out


@dataclass
class ResidualGroup:
    """Routes longer than k that share one slice, with the slice's inherited hop."""

    slice_value: int
    inherited_hop: int
    prefixes: List[Tuple[int, int, int]] = field(default_factory=list)  # (bits, length, hop)


@dataclass
class BsicStructure:
    family: Family
    config: BsicConfig
    hop_bits: int
    initial: PriorityTcam
    levels: List[List[BstNode]]
    default_hop: int = NO_ROUTE
    groups: Dict[int, RangeList] = field(default_factory=dict)

    @property
    def residual_bits(self) -> int:
        return self.family.width - self.config.k

    def ref_bits(self) -> int:
        return max(1, max((ceil_log2(len(level) + 1) for level in self.levels), default=1))


def _inherited_hop(fib_by_length: Dict[int, Dict[int, int]], slice_value: int, k: int) -> int:
    for length in range(k, -1, -1):
        hop = fib_by_length.get(length, {}).get(slice_value >> (k - length))
        if hop is not None:
            return hop
    return NO_ROUTE


def build_initial_table(fib: Fib, cfg: BsicConfig) -> Tuple[List[InitialEntry], Dict[int, ResidualGroup]]:
    """Split routes into initial-table rows and per-slice residual groups.

    Routes shorter than k become wildcard-padded rows with their hop. A route
    of exactly k bits keeps its hop unless a longer route shares its slice.
    Every slice holding longer routes gets a row pointing at a BST; the row's
    ``bst`` field is filled in when the trees are laid out.

    Returns:
        Tuple[List[InitialEntry], Dict[int, ResidualGroup]]: Rows in first-match
        order and the residual groups keyed by slice value
    """
    cfg.check_family(fib.family)
    k = cfg.k
    width = fib.family.width
    short: Dict[int, Dict[int, int]] = {}
    groups: Dict[int, ResidualGroup] = {}
    for prefix, hop in fib.routes.items():
        if prefix.length <= k:
            short.setdefault(prefix.length, {})[prefix.bits()] = hop
        else:
            slice_value = prefix.slice(0, k)
            residual_length = prefix.length - k
            residual = prefix.slice(k, residual_length)
            group = groups.setdefault(slice_value, ResidualGroup(slice_value, NO_ROUTE))
            group.prefixes.append((residual, residual_length, hop))
    for slice_value, group in groups.items():
        group.inherited_hop = _inherited_hop(short, slice_value, k)
        group.prefixes.sort()

    rows: List[InitialEntry] = []
    for length, values in short.items():
        for bits, hop in values.items():
            if length == k and bits in groups:
                continue
            rows.append(InitialEntry(bits << (k - length), length, hop))
    rows.extend(InitialEntry(slice_value, k) for slice_value in groups)
    rows.sort(key=lambda e: (-e.length, e.value))
    logger.debug(f"BSIC initial table: {len(rows)} rows, {len(groups)} residual groups (k={k}, W={width - k})")
    return rows, groups


def expand_ranges(group: List[Tuple[int, int, int]], width: int, inherited_hop: int = NO_ROUTE) -> RangeList:
    """Turn nested residual prefixes into a covering list of merged intervals.

    Args:
        group: (bits, length, hop) residual prefixes within ``width`` bits
        width: Residual width W
        inherited_hop: Hop for addresses no residual prefix covers

    Returns:
        RangeList: Intervals covering [0, 2**W - 1]; neighbours have distinct hops

    Examples:
        >>> ranges = expand_ranges([(0b0, 1, 7)], 4, 9)
        >>> [(iv.left, iv.right, iv.hop) for iv in ranges.intervals]
        [(0, 7, 7), (8, 15, 9)]
    """
    top = 1 << width
    by_length: Dict[int, Dict[int, int]] = {}
    cuts = {0}
    for bits, length, hop in group:
        by_length.setdefault(length, {})[bits] = hop
        start = bits << (width - length)
        cuts.add(start)
        end = start + (1 << (width - length))
        if end < top:
            cuts.add(end)
    lengths = sorted(by_length, reverse=True)
    bounds = sorted(cuts)

    def covering_hop(point: int) -> int:
        for length in lengths:
            hop = by_length[length].get(point >> (width - length))
            if hop is not None:
                return hop
        return inherited_hop

    intervals: List[Interval] = []
    for i, left in enumerate(bounds):
        right = (bounds[i + 1] if i + 1 < len(bounds) else top) - 1
        hop = covering_hop(left)
        if intervals and intervals[-1].hop == hop:
            intervals[-1] = Interval(intervals[-1].left, right, hop)
        else:
            intervals.append(Interval(left, right, hop))
    return RangeList(width, intervals)


def build_bst(ranges: RangeList) -> Bst:
    """Balanced BST over the left endpoints, lower median at every split."""
    intervals = ranges.intervals
    if not intervals:
        raise BuildError("cannot build a search tree over an empty range list")
    bst = Bst()

    def place(lo: int, hi: int, depth: int) -> int:
        if lo > hi:
            return NULL_REF
        mid = (lo + hi) // 2
        if len(bst.levels) <= depth:
            bst.levels.append([])
        index = len(bst.levels[depth])
        bst.levels[depth].append(None)
        left = place(lo, mid - 1, depth + 1)
        right = place(mid + 1, hi, depth + 1)
        bst.levels[depth][index] = BstNode(left, right, intervals[mid].hop, intervals[mid].left)
        return index

    place(0, len(intervals) - 1, 0)
    return bst


def _lay_out(levels: List[List[BstNode]], bst: Bst) -> int:
    """Append a tree's levels to the shared level tables; returns the root index."""
    while len(levels) < bst.depth:
        levels.append([])
    offsets = [len(level) for level in levels] + [0]
    for depth, nodes in enumerate(bst.levels):
        below = offsets[depth + 1]
        for node in nodes:
            levels[depth].append(
                BstNode(
                    node.left + below if node.left != NULL_REF else NULL_REF,
                    node.right + below if node.right != NULL_REF else NULL_REF,
                    node.hop,
                    node.endpoint,
                )
            )
    return offsets[0]


def build_bsic(fib: Fib, cfg: BsicConfig) -> BsicStructure:
    """Build the initial table and the per-level BST tables.

    Raises:
        BuildError: If k does not fit the family
    """
    rows, groups = build_initial_table(fib, cfg)
    width = fib.family.width - cfg.k
    s = BsicStructure(fib.family, cfg, fib.hop_bits, PriorityTcam(cfg.k), [], fib.default_hop)
    for row in rows:
        if row.length == cfg.k and row.value in groups:
            group = groups[row.value]
            ranges = expand_ranges(group.prefixes, width, group.inherited_hop)
            s.groups[row.value] = ranges
            row = InitialEntry(row.value, row.length, NO_ROUTE, _lay_out(s.levels, build_bst(ranges)))
        s.initial.put(row.value, row.length, row)
    logger.info(
        f"BSIC built: {len(s.initial)} initial entries, {len(groups)} trees, "
        f"{len(s.levels)} levels, {sum(len(level) for level in s.levels)} nodes"
    )
    return s


def bsic_lookup(s: BsicStructure, addr: int) -> int:
    """Ternary match on the first k bits, then a BST walk over the residual bits.

    Raises:
        StructureCorruptError: On a child reference outside its level table
    """
    width = s.family.width
    k = s.config.k
    hit = s.initial.match(addr >> (width - k))
    if hit is None:
        return s.default_hop
    entry: InitialEntry = hit[1]
    if entry.bst == NULL_REF:
        return s.default_hop if entry.hop == NO_ROUTE else entry.hop
    key = addr & ((1 << (width - k)) - 1)
    best = NO_ROUTE
    ref = entry.bst
    depth = 0
    while ref != NULL_REF:
        if depth >= len(s.levels) or not 0 <= ref < len(s.levels[depth]):
            raise StructureCorruptError(f"BST reference {ref} at level {depth} is out of range")
        node = s.levels[depth][ref]
        if node.endpoint == key:
            best = node.hop
            break
        if node.endpoint < key:
            best = node.hop
            ref = node.right
        else:
            ref = node.left
        depth += 1
    return s.default_hop if best == NO_ROUTE else best


def bsic_rebuild(fib: Fib, cfg: BsicConfig) -> BsicStructure:
    """Updates go through a full rebuild from the updated table."""
    return build_bsic(fib, cfg)


def bsic_to_program(s: BsicStructure) -> CramProgram:
    """Initial ternary step followed by one addressed exact step per BST level."""
    k = s.config.k
    ref = s.ref_bits()
    table = None
    if len(s.initial):
        table = TableSpec("initial", MatchKind.TERNARY, k, len(s.initial), 1 + max(s.hop_bits, ref))
    initial = StepNode("initial", table, frozenset({"addr"}), frozenset({"hop", "ref_0"}))
    layers = [[initial]]
    node_bits = s.hop_bits + 2 * ref + s.residual_bits
    for depth, nodes in enumerate(s.levels):
        table = TableSpec(f"level_{depth}", MatchKind.EXACT, ref, len(nodes), node_bits, addressed=True)
        reads = frozenset({"addr", "hop", f"ref_{depth}"})
        layers.append([StepNode(table.name, table, reads, frozenset({"hop", f"ref_{depth + 1}"}))])
    return layered("bsic", layers, [f"BST child references use {ref} bits"])


def dump_ranges(ranges: RangeList, label: Callable[[int], str] = str) -> str:
    """Intervals as ``left-right hop`` rows in residual bit notation."""
    rows = []
    for iv in ranges.intervals:
        span = bit_string(iv.left, ranges.width)
        if iv.right != iv.left:
            span += "-" + bit_string(iv.right, ranges.width)
        rows.append([span, label(iv.hop)])
    return render_table(["Range", "Next hop"], rows)


def dump_bst(s: BsicStructure, root: int, label: Callable[[int], str] = str) -> str:
    """Pre-order listing of one tree: indentation shows depth."""
    lines: List[str] = []

    def walk(depth: int, ref: int) -> None:
        if ref == NULL_REF:
            return
        node = s.levels[depth][ref]
        lines.append("  " * depth + f"{bit_string(node.endpoint, s.residual_bits)} {label(node.hop)}")
        walk(depth + 1, node.left)
        walk(depth + 1, node.right)

    walk(0, root)
    return "\n".join(lines) + "\n"


def initial_rows(s: BsicStructure) -> List[InitialEntry]:
    return [e.payload for e in s.initial.entries()]


def find_tree(s: BsicStructure, slice_value: int) -> Optional[int]:
    """Root index of the tree for a slice, if the slice has one."""
    entry = s.initial.get(slice_value, s.config.k)
    if entry is None or entry.bst == NULL_REF:
        return None
    return entry.bst
