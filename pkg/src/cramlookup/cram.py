"""
CRAM program representation and its memory and latency metrics.

A program is a DAG of steps. Each step holds at most one lookup table and
names the registers it reads and writes; statement bodies are not modeled
since the metrics depend only on the tables and the graph.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from graphlib import CycleError, TopologicalSorter
from typing import Any, Dict, FrozenSet, Iterable, List, Optional, Set, Tuple

from .config import ChipSpec
from .errors import ArtifactError, DagError, ProgramError

logger = logging.getLogger(__name__)

NOTE_DEFAULT_VALUES = "table default values (Z_t) are excluded from memory metrics"


class MatchKind(Enum):
    EXACT = "exact"
    TERNARY = "ternary"


@dataclass(frozen=True)
class TableSpec:
    """Counting parameters of one lookup table.

    Attributes:
        name: Unique table name within a program
        match_kind: Exact or ternary match
        key_bits: Key width k_t
        max_entries: Entry count n_t
        data_bits: Associated data width d_t
        direct_indexed: Exact table indexed by its key (n_t = 2**k_t); the key is not stored
        addressed: Exact table indexed by a pointer from an earlier step; the key is not stored
        default_value: Miss value Z_t
    """

    name: str
    match_kind: MatchKind
    key_bits: int
    max_entries: int
    data_bits: int
    direct_indexed: bool = False
    addressed: bool = False
    default_value: int = 0

    def __post_init__(self):
        if self.max_entries < 1:
            raise ProgramError(f"table {self.name}: max_entries must be at least 1")
        if self.key_bits < 0 or self.data_bits < 0:
            raise ProgramError(f"table {self.name}: key and data widths must be non-negative")
        if self.direct_indexed or self.addressed:
            if self.match_kind is not MatchKind.EXACT:
                raise ProgramError(f"table {self.name}: only exact tables can be indexed")
            if self.direct_indexed and self.addressed:
                raise ProgramError(f"table {self.name}: cannot be both direct indexed and addressed")
        if self.direct_indexed and self.max_entries != 1 << self.key_bits:
            raise ProgramError(f"table {self.name}: direct indexed table needs 2**{self.key_bits} entries")

    @property
    def stores_key_in_sram(self) -> bool:
        return self.match_kind is MatchKind.EXACT and not (self.direct_indexed or self.addressed)

    @property
    def tcam_bits(self) -> int:
        if self.match_kind is MatchKind.TERNARY:
            return self.max_entries * self.key_bits
        return 0

    @property
    def sram_bits(self) -> int:
        bits = self.max_entries * self.data_bits
        if self.stores_key_in_sram:
            bits += self.max_entries * self.key_bits
        return bits


@dataclass(frozen=True)
class StepNode:
    id: str
    table: Optional[TableSpec] = None
    reads: FrozenSet[str] = frozenset()
    writes: FrozenSet[str] = frozenset()


@dataclass
class CramProgram:
    """Steps plus the directed edges ordering them."""

    name: str
    steps: List[StepNode]
    edges: List[Tuple[str, str]] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)

    def __post_init__(self):
        ids = [step.id for step in self.steps]
        if len(set(ids)) != len(ids):
            raise ProgramError(f"program {self.name}: duplicate step ids")
        names = [step.table.name for step in self.steps if step.table is not None]
        if len(set(names)) != len(names):
            raise ProgramError(f"program {self.name}: duplicate table names")
        known = set(ids)
        for u, v in self.edges:
            if u not in known or v not in known:
                raise ProgramError(f"program {self.name}: edge ({u}, {v}) names an unknown step")

    def tables(self) -> List[TableSpec]:
        return [step.table for step in self.steps if step.table is not None]

    def step(self, step_id: str) -> StepNode:
        for step in self.steps:
            if step.id == step_id:
                return step
        raise ProgramError(f"program {self.name}: no step {step_id}")

    def predecessors(self) -> Dict[str, Set[str]]:
        preds: Dict[str, Set[str]] = {step.id: set() for step in self.steps}
        for u, v in self.edges:
            preds[v].add(u)
        return preds

    def with_edge(self, u: str, v: str) -> "CramProgram":
        return CramProgram(self.name, list(self.steps), [*self.edges, (u, v)], list(self.notes))


@dataclass
class CramMetrics:
    tcam_bits: int
    sram_bits: int
    steps: int


@dataclass
class CramUnits:
    """CRAM bits expressed in fractional chip allocation units."""

    tcam_blocks: float
    sram_pages: float


@dataclass
class DagReport:
    ok: bool
    violations: List[Tuple[str, str, str]] = field(default_factory=list)
    cycle: List[str] = field(default_factory=list)


def layered(name: str, layers: Iterable[List[StepNode]], notes: Optional[List[str]] = None) -> CramProgram:
    """Program whose layers run in sequence; steps within a layer are unordered."""
    layers = [list(layer) for layer in layers if layer]
    steps = [step for layer in layers for step in layer]
    edges = [(u.id, v.id) for before, after in zip(layers, layers[1:]) for u in before for v in after]
    return CramProgram(name, steps, edges, list(notes or []))


def topological_order(program: CramProgram) -> List[str]:
    """Step ids in dependency order.

    Raises:
        DagError: If the edges contain a cycle
    """
    sorter = TopologicalSorter(program.predecessors())
    try:
        return list(sorter.static_order())
    except CycleError as e:
        raise DagError(f"program {program.name} has a cycle: {' -> '.join(e.args[1])}") from e


def tcam_bits(program: CramProgram) -> int:
    return sum(table.tcam_bits for table in program.tables())


def sram_bits(program: CramProgram) -> int:
    """Data bits of every table plus key bits of exact tables that store their keys."""
    return sum(table.sram_bits for table in program.tables())


def latency_steps(program: CramProgram) -> int:
    """Node count of the longest directed path.

    Raises:
        DagError: If the program has a cycle
    """
    preds = program.predecessors()
    depth: Dict[str, int] = {}
    for step_id in topological_order(program):
        depth[step_id] = 1 + max((depth[p] for p in preds[step_id]), default=0)
    return max(depth.values(), default=0)


def _descendants(program: CramProgram, order: List[str]) -> Dict[str, Set[str]]:
    succs: Dict[str, Set[str]] = {step.id: set() for step in program.steps}
    for u, v in program.edges:
        succs[u].add(v)
    reach: Dict[str, Set[str]] = {}
    for step_id in reversed(order):
        below: Set[str] = set()
        for child in succs[step_id]:
            below.add(child)
            below |= reach[child]
        reach[step_id] = below
    return reach


def validate_dag(program: CramProgram) -> DagReport:
    """Check acyclicity and that conflicting register accesses are ordered by a path.

    Two steps conflict on register r when one writes r and the other reads or
    writes it.

    Returns:
        DagReport: ``ok`` plus every unordered (u, v, register) triple or the cycle
    """
    try:
        order = list(TopologicalSorter(program.predecessors()).static_order())
    except CycleError as e:
        return DagReport(ok=False, cycle=list(e.args[1]))
    reach = _descendants(program, order)
    violations = []
    steps = program.steps
    for i, u in enumerate(steps):
        for v in steps[i + 1 :]:
            conflicts = (u.writes & (v.reads | v.writes)) | (v.writes & u.reads)
            if not conflicts or v.id in reach[u.id] or u.id in reach[v.id]:
                continue
            violations.extend((u.id, v.id, register) for register in sorted(conflicts))
    return DagReport(ok=not violations, violations=violations)


def evaluate(program: CramProgram) -> CramMetrics:
    metrics = CramMetrics(tcam_bits(program), sram_bits(program), latency_steps(program))
    logger.debug(f"{program.name}: {metrics}")
    return metrics


def to_units(metrics: CramMetrics, chip: ChipSpec) -> CramUnits:
    """Raw-bit conversion to TCAM blocks and SRAM pages, ignoring geometry."""
    return CramUnits(
        tcam_blocks=metrics.tcam_bits / chip.tcam_block_bits,
        sram_pages=metrics.sram_bits / chip.sram_page_bits,
    )


def _table_dict(table: TableSpec) -> Dict[str, Any]:
    return {
        "name": table.name,
        "match_kind": table.match_kind.value,
        "key_bits": table.key_bits,
        "max_entries": table.max_entries,
        "data_bits": table.data_bits,
        "direct_indexed": table.direct_indexed,
        "addressed": table.addressed,
        "default_value": table.default_value,
    }


def program_report(program: CramProgram) -> Dict[str, Any]:
    """JSON-shaped description of a program: tables, steps, edges and metrics."""
    metrics = evaluate(program)
    return {
        "name": program.name,
        "tables": [_table_dict(t) for t in program.tables()],
        "steps": [
            {
                "id": step.id,
                "table": step.table.name if step.table else None,
                "reads": sorted(step.reads),
                "writes": sorted(step.writes),
            }
            for step in program.steps
        ],
        "edges": [[u, v] for u, v in program.edges],
        "metrics": {"tcam_bits": metrics.tcam_bits, "sram_bits": metrics.sram_bits, "steps": metrics.steps},
        "notes": [NOTE_DEFAULT_VALUES, *program.notes],
    }


def program_from_report(report: Dict[str, Any]) -> CramProgram:
    """Rebuild a program from :func:`program_report` output.

    Raises:
        ArtifactError: If the report is missing fields or names unknown tables
    """
    try:
        tables = {}
        for t in report["tables"]:
            tables[t["name"]] = TableSpec(
                name=t["name"],
                match_kind=MatchKind(t["match_kind"]),
                key_bits=int(t["key_bits"]),
                max_entries=int(t["max_entries"]),
                data_bits=int(t["data_bits"]),
                direct_indexed=bool(t.get("direct_indexed", False)),
                addressed=bool(t.get("addressed", False)),
                default_value=int(t.get("default_value", 0)),
            )
        steps = []
        for s in report["steps"]:
            table_name = s.get("table")
            if table_name is not None and table_name not in tables:
                raise ArtifactError(f"step {s['id']} names unknown table {table_name}")
            steps.append(
                StepNode(
                    id=s["id"],
                    table=tables[table_name] if table_name is not None else None,
                    reads=frozenset(s.get("reads", [])),
                    writes=frozenset(s.get("writes", [])),
                )
            )
        edges = [(u, v) for u, v in report.get("edges", [])]
        notes = [n for n in report.get("notes", []) if n != NOTE_DEFAULT_VALUES]
        return CramProgram(report.get("name", "program"), steps, edges, notes)
    except (KeyError, TypeError, ValueError) as e:
        raise ArtifactError(f"malformed program report: {e}") from e
