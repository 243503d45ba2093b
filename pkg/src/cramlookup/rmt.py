"""
Mapping CRAM programs onto an RMT-style pipeline and the single-resource baselines.

Every table is sized in whole TCAM blocks and SRAM pages of the chip, then
steps are placed in topological order. A step starts one stage after its
latest predecessor ends and spills its blocks and pages across as many
stages as the per-stage budgets require.
"""

import heapq
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Tuple

from .config import ChipSpec
from .cram import CramMetrics, CramProgram, MatchKind, StepNode, TableSpec, to_units, topological_order
from .errors import MappingError
from .fib import V4, Fib
from .utils.bits import ceil_log2

logger = logging.getLogger(__name__)

PLACEMENT_RULE = "topological-spill"
SAIL_PIVOT = 24
NOTE_SAIL_CHUNKS = (
    "SAIL prefixes longer than the pivot are stored as one 2**(W-pivot)-entry chunk per distinct pivot-length parent"
)


@dataclass
class TableFootprint:
    name: str
    tcam_blocks: int
    sram_pages: int


@dataclass
class StepPlacement:
    step_id: str
    first_stage: int
    last_stage: int


@dataclass
class StageUsage:
    stage: int
    tcam_blocks: int = 0
    sram_pages: int = 0


@dataclass
class RmtMapping:
    """Allocation of a program on a chip.

    Attributes:
        tables: Blocks and pages per table
        steps: First and last stage each step occupies
        stage_usage: Blocks and pages consumed in every used stage
        total_blocks: Sum of table blocks
        total_pages: Sum of table pages
        stages: Last stage used
        feasible: Whether the program fits within the chip's stage count
        rule: Name of the placement rule that produced the mapping
    """

    tables: List[TableFootprint] = field(default_factory=list)
    steps: List[StepPlacement] = field(default_factory=list)
    stage_usage: List[StageUsage] = field(default_factory=list)
    total_blocks: int = 0
    total_pages: int = 0
    stages: int = 0
    feasible: bool = True
    rule: str = PLACEMENT_RULE

    def as_dict(self) -> Dict[str, Any]:
        return {
            "rule": self.rule,
            "total_blocks": self.total_blocks,
            "total_pages": self.total_pages,
            "stages": self.stages,
            "feasible": self.feasible,
            "tables": [vars(t) for t in self.tables],
            "steps": [vars(s) for s in self.steps],
            "stage_usage": [vars(u) for u in self.stage_usage],
        }


@dataclass
class LogicalTcamCost:
    blocks: int
    capacity: int
    stages: int


@dataclass
class SailCost:
    pages: int
    stages: int
    feasible: bool
    mapping: RmtMapping


def table_footprint(t: TableSpec, chip: ChipSpec) -> Tuple[int, int]:
    """Whole TCAM blocks and SRAM pages a table occupies.

    Ternary keys take ceil(k/width) blocks side by side for every block
    depth of entries. SRAM holds ternary data, exact data and the keys of
    exact tables that store them, at the chip's utilization.

    Examples:
        >>> from cramlookup.cram import MatchKind, TableSpec
        >>> table_footprint(TableSpec("t", MatchKind.TERNARY, 44, 512, 0), ChipSpec())
        (1, 0)
    """
    blocks = 0
    if t.match_kind is MatchKind.TERNARY:
        columns = max(1, math.ceil(t.key_bits / chip.tcam_block_width))
        blocks = columns * math.ceil(t.max_entries / chip.tcam_block_depth)
    return blocks, chip.pages_for_bits(t.sram_bits)


def _topological_steps(p: CramProgram) -> List[StepNode]:
    """Kahn's order, ties broken by position in the program."""
    topological_order(p)
    position = {step.id: i for i, step in enumerate(p.steps)}
    preds = p.predecessors()
    indegree = {step_id: len(before) for step_id, before in preds.items()}
    succs: Dict[str, List[str]] = {step.id: [] for step in p.steps}
    for u, v in p.edges:
        succs[u].append(v)
    ready = [position[s] for s, d in indegree.items() if d == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        step = p.steps[heapq.heappop(ready)]
        order.append(step)
        for v in succs[step.id]:
            indegree[v] -= 1
            if indegree[v] == 0:
                heapq.heappush(ready, position[v])
    return order


def map_program(p: CramProgram, chip: ChipSpec) -> RmtMapping:
    """Place a program's steps on the chip's stages.

    Raises:
        MappingError: If one table needs more blocks or pages than the whole chip
        DagError: If the program has a cycle
    """
    mapping = RmtMapping()
    blocks_used: Dict[int, int] = {}
    pages_used: Dict[int, int] = {}
    preds = p.predecessors()
    end: Dict[str, int] = {}

    for step in _topological_steps(p):
        start = 1 + max((end[u] for u in preds[step.id]), default=0)
        if step.table is None:
            mapping.steps.append(StepPlacement(step.id, start, start))
            end[step.id] = start
            continue
        blocks, pages = table_footprint(step.table, chip)
        if blocks > chip.total_blocks or pages > chip.total_pages:
            raise MappingError(
                f"table {step.table.name} needs {blocks} blocks and {pages} pages, "
                f"the chip has {chip.total_blocks} and {chip.total_pages}"
            )
        mapping.tables.append(TableFootprint(step.table.name, blocks, pages))
        first = last = None
        stage = start
        while blocks or pages or first is None:
            take_blocks = min(blocks, chip.blocks_per_stage - blocks_used.get(stage, 0))
            take_pages = min(pages, chip.pages_per_stage - pages_used.get(stage, 0))
            if take_blocks or take_pages or (not blocks and not pages):
                blocks_used[stage] = blocks_used.get(stage, 0) + take_blocks
                pages_used[stage] = pages_used.get(stage, 0) + take_pages
                blocks -= take_blocks
                pages -= take_pages
                first = stage if first is None else first
                last = stage
            stage += 1
        mapping.steps.append(StepPlacement(step.id, first, last))
        end[step.id] = last

    mapping.total_blocks = sum(t.tcam_blocks for t in mapping.tables)
    mapping.total_pages = sum(t.sram_pages for t in mapping.tables)
    mapping.stages = max(end.values(), default=0)
    mapping.feasible = mapping.stages <= chip.stage_count
    mapping.stage_usage = [
        StageUsage(stage, blocks_used.get(stage, 0), pages_used.get(stage, 0)) for stage in range(1, mapping.stages + 1)
    ]
    logger.debug(
        f"Mapped {p.name}: {mapping.total_blocks} blocks, {mapping.total_pages} pages, "
        f"{mapping.stages} stages (feasible={mapping.feasible})"
    )
    return mapping


def logical_tcam_for(entries: int, width: int, chip: ChipSpec) -> LogicalTcamCost:
    columns = math.ceil(width / chip.tcam_block_width)
    blocks = columns * math.ceil(entries / chip.tcam_block_depth)
    capacity = (chip.total_blocks // columns) * chip.tcam_block_depth
    return LogicalTcamCost(blocks, capacity, math.ceil(blocks / chip.blocks_per_stage))


def logical_tcam_cost(fib: Fib, chip: ChipSpec) -> LogicalTcamCost:
    """Every route in one TCAM table keyed by the full address.

    Examples:
        >>> from cramlookup.fib import V4, Fib
        >>> logical_tcam_cost(Fib(V4), ChipSpec()).capacity
        245760
    """
    return logical_tcam_for(len(fib), fib.family.width, chip)


def sail_program(fib: Fib) -> CramProgram:
    """SAIL's tables as a program: bitmaps and next-hop arrays up to the pivot plus long-prefix chunks.

    The long-prefix chunk step leads a chain through the bitmaps from the
    pivot down to level 0; each next-hop array hangs off its bitmap, so the
    longest path is the 26-step chain. The single-entry /0 array needs no
    bitmap and reads the address alone.

    Raises:
        MappingError: For any family other than IPv4
    """
    if fib.family != V4:
        raise MappingError(f"the SAIL cost model covers IPv4 tables only, not {fib.family.name}")
    width = fib.family.width
    pivot = SAIL_PIVOT
    d = fib.hop_bits
    lengths = {prefix.length for prefix in fib.routes}
    parents = {prefix.slice(0, pivot) for prefix in fib.routes if prefix.length > pivot}
    chunk_entries = len(parents) * (1 << (width - pivot))

    steps: List[StepNode] = []
    edges: List[Tuple[str, str]] = []
    chunk_table = None
    if chunk_entries:
        chunk_table = TableSpec(
            "n_long", MatchKind.EXACT, ceil_log2(len(parents)) + width - pivot, chunk_entries, d, addressed=True
        )
    steps.append(StepNode("n_long", chunk_table, frozenset({"addr"}), frozenset({"hop_long"})))
    previous = "n_long"
    for level in range(pivot, -1, -1):
        step_id = f"b_{level}"
        table = TableSpec(step_id, MatchKind.EXACT, level, 1 << level, 1, direct_indexed=True)
        steps.append(StepNode(step_id, table, frozenset({"addr"}), frozenset({f"hit_{level}"})))
        edges.append((previous, step_id))
        previous = step_id
    for level in range(pivot, -1, -1):
        if level in lengths:
            step_id = f"n_{level}"
            table = TableSpec(step_id, MatchKind.EXACT, level, 1 << level, d, direct_indexed=True)
            if level == 0:
                steps.append(StepNode(step_id, table, frozenset({"addr"}), frozenset({"hop_0"})))
                continue
            steps.append(StepNode(step_id, table, frozenset({"addr", f"hit_{level}"}), frozenset({f"hop_{level}"})))
            edges.append((f"b_{level}", step_id))
    return CramProgram("sail", steps, edges, [NOTE_SAIL_CHUNKS])


def sail_cost_model(fib: Fib, chip: ChipSpec) -> SailCost:
    """Pages and stages SAIL would need on the chip.

    Raises:
        MappingError: For any family other than IPv4
    """
    mapping = map_program(sail_program(fib), chip)
    return SailCost(mapping.total_pages, mapping.stages, mapping.feasible, mapping)


def cram_units_row(metrics: CramMetrics, mapping: RmtMapping, chip: ChipSpec) -> List[Dict[str, Any]]:
    """CRAM bits converted to units next to the mapped allocation, one row per model."""
    units = to_units(metrics, chip)
    return [
        {"model": "CRAM", "tcam_blocks": units.tcam_blocks, "sram_pages": units.sram_pages, "latency": metrics.steps},
        {
            "model": "Ideal RMT",
            "tcam_blocks": mapping.total_blocks,
            "sram_pages": mapping.total_pages,
            "latency": mapping.stages,
        },
    ]
