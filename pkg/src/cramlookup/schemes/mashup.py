"""
MashUp: a fixed-stride multibit trie whose nodes are individually placed in
TCAM or SRAM and then coalesced, per level and kind, into tagged super-tables.

A route of length L is installed at the shallowest level whose cumulative
stride boundary is at least L. TCAM nodes keep their local prefixes
unexpanded; SRAM nodes hold the fully expanded 2**stride slot array.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Optional, Tuple, Union

from ..cram import CramProgram, MatchKind, StepNode, TableSpec, layered
from ..errors import BuildError, StructureCorruptError, UpdateError
from ..fib import NO_ROUTE, Family, Fib, IpPrefix, UpdateOp, length_histogram
from ..utils.bits import ceil_log2
from ..utils.tables import render_table
from .ternary import PriorityTcam

logger = logging.getLogger(__name__)

TCAM_COST_FACTOR = 3.0
TCAM_UNIT_ENTRIES = 512
SRAM_UNIT_ENTRIES = 1024
MAX_FIRST_STRIDE = 20


class NodeKind(Enum):
    TCAM = "tcam"
    SRAM = "sram"


@dataclass(frozen=True)
class StridePlan:
    """Bits consumed per trie level."""

    strides: Tuple[int, ...]

    def __post_init__(self):
        if not self.strides or any(s <= 0 for s in self.strides):
            raise BuildError(f"strides must be positive, got {list(self.strides)}")

    @classmethod
    def parse(cls, text: str) -> "StridePlan":
        """Read a dash-separated plan such as ``16-4-4-8``."""
        try:
            return cls(tuple(int(part) for part in text.split("-")))
        except ValueError as e:
            raise BuildError(f"malformed stride plan {text!r}") from e

    def __str__(self) -> str:
        return "-".join(str(s) for s in self.strides)

    def __len__(self) -> int:
        return len(self.strides)

    @property
    def width(self) -> int:
        return sum(self.strides)

    def start(self, level: int) -> int:
        """Address bit where a level's stride begins."""
        return sum(self.strides[:level])

    def boundary(self, level: int) -> int:
        return sum(self.strides[: level + 1])

    def level_for(self, length: int) -> int:
        """Shallowest level whose boundary is at least ``length``."""
        for level in range(len(self.strides)):
            if self.boundary(level) >= length:
                return level
        raise BuildError(f"prefix length {length} exceeds plan width {self.width}")

    def check_family(self, family: Family) -> None:
        if self.width != family.width:
            raise BuildError(f"stride plan {self} sums to {self.width}, {family.name} needs {family.width}")


@dataclass(frozen=True)
class Placement:
    table: int
    tag: int


@dataclass
class TrieNode:
    """One multibit trie node.

    Attributes:
        level: Trie depth
        path: Address bits before this level, right-aligned
        prefixes: Local (bits, length) -> hop, lengths 1..stride (0 only for a default route at the root)
        children: Slot -> child node
        kind: TCAM or SRAM once hybridized
        placement: Super-table index and tag once coalesced
    """

    level: int
    path: int = 0
    prefixes: Dict[Tuple[int, int], int] = field(default_factory=dict)
    children: Dict[int, "TrieNode"] = field(default_factory=dict)
    kind: Optional[NodeKind] = None
    placement: Optional[Placement] = None

    def is_empty(self) -> bool:
        return not self.prefixes and not self.children


@dataclass(frozen=True)
class SlotEntry:
    hop: int
    child: Optional[TrieNode]


def _best_local(node: TrieNode, slot: int, stride: int, max_length: int) -> int:
    for length in range(max_length, -1, -1):
        hop = node.prefixes.get((slot >> (stride - length), length))
        if hop is not None:
            return hop
    return NO_ROUTE


def ternary_entries(node: TrieNode, stride: int) -> List[Tuple[int, int, SlotEntry]]:
    """Unexpanded rows of a node as (left-aligned value, length, entry).

    Local prefixes keep their length. Each child slot gets an exact row that
    also carries the longest local hop covering it, since that row shadows
    the shorter prefixes in a first-match table.
    """
    rows: Dict[Tuple[int, int], List] = {}
    for (bits, length), hop in node.prefixes.items():
        rows[(bits << (stride - length), length)] = [hop, None]
    for slot, child in node.children.items():
        row = rows.get((slot, stride))
        if row is not None:
            row[1] = child
        else:
            rows[(slot, stride)] = [_best_local(node, slot, stride, stride - 1), child]
    return [(value, length, SlotEntry(hop, child)) for (value, length), (hop, child) in sorted(rows.items())]


def ternary_count(node: TrieNode, stride: int) -> int:
    shared = sum(1 for slot in node.children if (slot, stride) in node.prefixes)
    return len(node.prefixes) + len(node.children) - shared


def expanded_slots(node: TrieNode, stride: int) -> List[Optional[SlotEntry]]:
    """The 2**stride direct-indexed array of an SRAM node."""
    hops = [NO_ROUTE] * (1 << stride)
    for (bits, length), hop in sorted(node.prefixes.items(), key=lambda item: item[0][1]):
        start = bits << (stride - length)
        span = 1 << (stride - length)
        hops[start : start + span] = [hop] * span
    slots: List[Optional[SlotEntry]] = []
    for slot, hop in enumerate(hops):
        child = node.children.get(slot)
        slots.append(SlotEntry(hop, child) if hop != NO_ROUTE or child is not None else None)
    return slots


def entry_count(node: TrieNode, stride: int) -> int:
    if node.kind is NodeKind.SRAM:
        return 1 << stride
    return ternary_count(node, stride)


@dataclass
class SuperTable:
    """Same-kind nodes of one level sharing a table, told apart by a tag prepended to the key."""

    level: int
    kind: NodeKind
    stride: int
    members: List[TrieNode]
    tag_width: int = 0
    tcam: Optional[PriorityTcam] = None
    slots: Optional[List[Optional[SlotEntry]]] = None

    @classmethod
    def build(cls, level: int, kind: NodeKind, stride: int, members: List[TrieNode]) -> "SuperTable":
        table = cls(level, kind, stride, list(members), ceil_log2(len(members)))
        if kind is NodeKind.TCAM:
            table.tcam = PriorityTcam(table.key_bits)
            for tag, node in enumerate(members):
                for value, length, entry in ternary_entries(node, stride):
                    table.tcam.put((tag << stride) | value, table.tag_width + length, entry)
        else:
            table.slots = []
            for node in members:
                table.slots.extend(expanded_slots(node, stride))
        return table

    @property
    def key_bits(self) -> int:
        return self.tag_width + self.stride

    @property
    def entry_count(self) -> int:
        if self.kind is NodeKind.TCAM:
            return len(self.tcam)
        return len(self.slots)

    def match(self, tag: int, key: int) -> Optional[SlotEntry]:
        if not 0 <= tag < len(self.members):
            raise StructureCorruptError(f"tag {tag} outside super-table of {len(self.members)} members")
        combined = (tag << self.stride) | key
        if self.kind is NodeKind.TCAM:
            hit = self.tcam.match(combined)
            return hit[1] if hit is not None else None
        if combined >= len(self.slots):
            raise StructureCorruptError(f"slot {combined} outside super-table of {len(self.slots)} slots")
        return self.slots[combined]


@dataclass
class MashupStructure:
    family: Family
    plan: StridePlan
    hop_bits: int
    root: TrieNode
    tables: List[Dict[NodeKind, List[SuperTable]]]
    default_hop: int = NO_ROUTE
    routes: Dict[IpPrefix, int] = field(default_factory=dict)
    tcam_factor: float = TCAM_COST_FACTOR
    tcam_budget: int = TCAM_UNIT_ENTRIES
    sram_budget: int = SRAM_UNIT_ENTRIES

    def nodes_at(self, level: int) -> List[TrieNode]:
        nodes = [self.root]
        for _ in range(level):
            nodes = [child for node in nodes for _, child in sorted(node.children.items())]
        return nodes


def _local_key(prefix: IpPrefix, plan: StridePlan, level: int) -> Tuple[int, int]:
    start = plan.start(level)
    length = prefix.length - start
    return prefix.slice(start, length), length


def _walk_to(root: TrieNode, prefix: IpPrefix, plan: StridePlan, level: int, create: bool) -> List[TrieNode]:
    """Nodes from the root to the prefix's installation node, creating them if asked."""
    path = [root]
    node = root
    for depth in range(level):
        slot = prefix.slice(plan.start(depth), plan.strides[depth])
        child = node.children.get(slot)
        if child is None:
            if not create:
                return path
            child = TrieNode(depth + 1, (node.path << plan.strides[depth]) | slot)
            node.children[slot] = child
        path.append(child)
        node = child
    return path


def build_trie(fib: Fib, plan: StridePlan) -> TrieNode:
    """Install every route at the shallowest level that can hold it.

    Raises:
        BuildError: If the plan does not sum to the family width
    """
    plan.check_family(fib.family)
    root = TrieNode(0)
    for prefix, hop in fib.sorted_routes():
        level = plan.level_for(prefix.length)
        node = _walk_to(root, prefix, plan, level, create=True)[-1]
        node.prefixes[_local_key(prefix, plan, level)] = hop
    return root


def hybridize(node: TrieNode, stride: int, factor: float = TCAM_COST_FACTOR) -> TrieNode:
    """SRAM when the expanded array costs no more than ``factor`` times the ternary rows."""
    node.kind = NodeKind.SRAM if (1 << stride) <= factor * ternary_count(node, stride) else NodeKind.TCAM
    return node


def coalesce(nodes: List[TrieNode], kind: NodeKind, stride: int, budget: int) -> List[SuperTable]:
    """Greedy packing: the largest unplaced node seeds a group that absorbs the smallest ones.

    Members are tagged in insertion order and each node's placement is updated.

    Examples:
        >>> nodes = [TrieNode(1, prefixes={(0, 1): 1}), TrieNode(1, prefixes={(1, 1): 2})]
        >>> [hybridize(n, 4) for n in nodes] and None
        >>> tables = coalesce(nodes, NodeKind.TCAM, 4, 512)
        >>> len(tables), tables[0].tag_width, tables[0].entry_count
        (1, 1, 2)
    """
    sizes = {id(node): entry_count(node, stride) for node in nodes}
    pending = sorted(nodes, key=lambda n: -sizes[id(n)])
    groups: List[List[TrieNode]] = []
    while pending:
        seed = pending.pop(0)
        group = [seed]
        total = sizes[id(seed)]
        while pending and total + sizes[id(pending[-1])] <= budget:
            node = pending.pop()
            group.append(node)
            total += sizes[id(node)]
        groups.append(group)
    level = nodes[0].level if nodes else 0
    tables = []
    for index, group in enumerate(groups):
        for tag, node in enumerate(group):
            node.placement = Placement(index, tag)
        tables.append(SuperTable.build(level, kind, stride, group))
    return tables


def _coalesce_level(s: MashupStructure, level: int) -> None:
    stride = s.plan.strides[level]
    nodes = s.nodes_at(level)
    s.tables[level] = {
        NodeKind.TCAM: coalesce([n for n in nodes if n.kind is NodeKind.TCAM], NodeKind.TCAM, stride, s.tcam_budget),
        NodeKind.SRAM: coalesce([n for n in nodes if n.kind is NodeKind.SRAM], NodeKind.SRAM, stride, s.sram_budget),
    }


def build_mashup(
    fib: Fib,
    plan: StridePlan,
    tcam_factor: float = TCAM_COST_FACTOR,
    tcam_budget: int = TCAM_UNIT_ENTRIES,
    sram_budget: int = SRAM_UNIT_ENTRIES,
) -> MashupStructure:
    """Build the trie, pick each node's memory kind and coalesce every level."""
    root = build_trie(fib, plan)
    s = MashupStructure(
        fib.family,
        plan,
        fib.hop_bits,
        root,
        [{} for _ in plan.strides],
        fib.default_hop,
        dict(fib.routes),
        tcam_factor,
        tcam_budget,
        sram_budget,
    )
    for level, stride in enumerate(plan.strides):
        for node in s.nodes_at(level):
            hybridize(node, stride, tcam_factor)
        _coalesce_level(s, level)
    logger.info(f"MashUp built with strides {plan}: {len(fib)} routes")
    return s


def mashup_lookup(s: MashupStructure, addr: int) -> int:
    """Walk the levels, keeping the last hop seen, until a miss or a leaf.

    Raises:
        StructureCorruptError: On a child that has no super-table placement
    """
    width = s.family.width
    best = NO_ROUTE
    node = s.root
    consumed = 0
    for level, stride in enumerate(s.plan.strides):
        placement = node.placement
        if placement is None or node.kind is None:
            raise StructureCorruptError(f"trie node at level {level} has no super-table placement")
        try:
            table = s.tables[level][node.kind][placement.table]
        except (KeyError, IndexError) as e:
            raise StructureCorruptError(f"dangling reference to level {level} table {placement.table}") from e
        key = (addr >> (width - consumed - stride)) & ((1 << stride) - 1)
        consumed += stride
        entry = table.match(placement.tag, key)
        if entry is None:
            break
        if entry.hop != NO_ROUTE:
            best = entry.hop
        if entry.child is None:
            break
        node = entry.child
    return s.default_hop if best == NO_ROUTE else best


def mashup_update(s: MashupStructure, op: UpdateOp, prefix: IpPrefix, hop: int = NO_ROUTE) -> MashupStructure:
    """Insert, delete or change one route; only touched nodes are re-hybridized.

    Levels whose nodes changed are re-coalesced.

    Raises:
        UpdateError: On a missing or duplicate route
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

    plan = s.plan
    level = plan.level_for(prefix.length)
    path = _walk_to(s.root, prefix, plan, level, create=op is not UpdateOp.DELETE)
    node = path[-1]
    dirty = {id(node): node}
    levels = set()
    if op is UpdateOp.DELETE:
        del s.routes[prefix]
        del node.prefixes[_local_key(prefix, plan, level)]
        for depth in range(level, 0, -1):
            child = path[depth]
            if not child.is_empty():
                break
            parent = path[depth - 1]
            del parent.children[prefix.slice(plan.start(depth - 1), plan.strides[depth - 1])]
            dirty.pop(id(child), None)
            levels.add(child.level)
            dirty[id(parent)] = parent
    else:
        s.routes[prefix] = hop
        node.prefixes[_local_key(prefix, plan, level)] = hop
        for depth in range(1, len(path)):
            if path[depth].kind is None:
                dirty[id(path[depth])] = path[depth]
                dirty[id(path[depth - 1])] = path[depth - 1]

    for n in dirty.values():
        hybridize(n, plan.strides[n.level], s.tcam_factor)
        levels.add(n.level)
    for lvl in sorted(levels):
        _coalesce_level(s, lvl)
    logger.debug(f"MashUp {op.value} {prefix} re-coalesced levels {sorted(levels)}")
    return s


def _child_ref_bits(s: MashupStructure, level: int) -> int:
    if level + 1 >= len(s.plan):
        return 0
    below = s.tables[level + 1]
    count = sum(len(tables) for tables in below.values())
    tag = max((t.tag_width for tables in below.values() for t in tables), default=0)
    return 1 + ceil_log2(max(count, 1)) + tag


def mashup_to_program(s: MashupStructure) -> CramProgram:
    """One step per stride level; TCAM and SRAM super-tables of a level run in parallel."""
    layers = []
    reads = frozenset({"addr"})
    for level, stride in enumerate(s.plan.strides):
        data_bits = s.hop_bits + _child_ref_bits(s, level)
        steps = []
        tcams = s.tables[level].get(NodeKind.TCAM, [])
        srams = s.tables[level].get(NodeKind.SRAM, [])
        tcam_entries = sum(t.entry_count for t in tcams)
        sram_entries = sum(t.entry_count for t in srams)
        if tcam_entries:
            table = TableSpec(
                f"tcam_{level}", MatchKind.TERNARY, max(t.key_bits for t in tcams), tcam_entries, data_bits
            )
            steps.append(StepNode(table.name, table, reads, frozenset({f"hop_t_{level}", f"ptr_t_{level}"})))
        if sram_entries:
            table = TableSpec(
                f"sram_{level}",
                MatchKind.EXACT,
                max(t.key_bits for t in srams),
                sram_entries,
                data_bits,
                addressed=True,
            )
            steps.append(StepNode(table.name, table, reads, frozenset({f"hop_s_{level}", f"ptr_s_{level}"})))
        if not steps:
            steps.append(StepNode(f"level_{level}", None, reads, frozenset({f"hop_{level}"})))
        layers.append(steps)
        reads = frozenset({"addr"}).union(*(step.writes for step in steps))
    return layered("mashup", layers, [f"strides {s.plan}", f"TCAM cost factor {s.tcam_factor:g}"])


def _spikes(counts: List[int]) -> List[int]:
    width = len(counts) - 1
    spikes = []
    for length in range(1, width):
        if counts[length] > counts[length - 1] and counts[length] > counts[length + 1]:
            spikes.append(length)
    return spikes


def _quantile_cuts(counts: List[int], parts: int) -> List[int]:
    width = len(counts) - 1
    total = sum(counts)
    cuts = []
    running = 0
    target = 1
    for length, count in enumerate(counts):
        running += count
        while target < parts and running * parts >= target * total:
            if 1 <= length < width and length not in cuts:
                cuts.append(length)
            target += 1
    return cuts


def choose_strides(fib: Fib, levels: int = 4, max_first: int = MAX_FIRST_STRIDE) -> StridePlan:
    """Place stride boundaries on the prefix length distribution's spikes.

    The ``levels - 1`` tallest spikes become boundaries. When the first
    boundary would make the root wider than ``max_first`` a boundary is forced
    at ``max_first`` and the smallest remaining cut is dropped. With no
    spikes the boundaries split the route mass evenly, under the same cap.

    Raises:
        BuildError: On an empty table
    """
    if not len(fib):
        raise BuildError("cannot choose strides for an empty table")
    counts = length_histogram(fib).counts
    width = fib.family.width
    want = max(levels - 1, 0)
    spikes = _spikes(counts)
    if spikes:
        cuts = sorted(sorted(spikes, key=lambda length: (-counts[length], length))[:want])
    else:
        cuts = sorted(_quantile_cuts(counts, levels))
    if max_first < width and (not cuts or cuts[0] > max_first):
        if cuts and len(cuts) >= want:
            cuts.remove(min(cuts, key=lambda length: (counts[length], -length)))
        cuts = sorted([max_first, *cuts])
    bounds = [0, *cuts, width]
    plan = StridePlan(tuple(b - a for a, b in zip(bounds, bounds[1:]) if b > a))
    logger.info(f"Chose strides {plan} from spikes {spikes}")
    return plan


def dump_trie(s: MashupStructure) -> str:
    """Per-level node, kind, entry and super-table counts."""
    rows = []
    for level, stride in enumerate(s.plan.strides):
        nodes = s.nodes_at(level)
        tcam_nodes = sum(1 for n in nodes if n.kind is NodeKind.TCAM)
        tcams = s.tables[level].get(NodeKind.TCAM, [])
        srams = s.tables[level].get(NodeKind.SRAM, [])
        rows.append(
            [
                level,
                stride,
                len(nodes),
                tcam_nodes,
                len(nodes) - tcam_nodes,
                sum(t.entry_count for t in tcams),
                sum(t.entry_count for t in srams),
                len(tcams) + len(srams),
            ]
        )
    headers = ["Level", "Stride", "Nodes", "TCAM nodes", "SRAM nodes", "TCAM entries", "SRAM entries", "Super-tables"]
    return render_table(headers, rows)


def route_placements(s: MashupStructure, label: Callable[[int], str] = str) -> List[List[Union[int, str]]]:
    """(level, path, local prefix, hop) rows for every installed route, for fixtures."""
    rows = []
    for level, stride in enumerate(s.plan.strides):
        start = s.plan.start(level)
        for node in s.nodes_at(level):
            for (bits, length), hop in sorted(node.prefixes.items()):
                path = format(node.path, f"0{start}b") if start else ""
                local = format(bits, f"0{length}b") if length else ""
                rows.append([level, path, local + "*" * (stride - length), label(hop)])
    return rows
