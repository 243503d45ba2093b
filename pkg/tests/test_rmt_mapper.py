#!/usr/bin/env python3
"""
Test suite for the RMT mapper and the single-resource baselines.
"""

import os
import sys

import pytest

# Add the src directory to Python path
sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "src"))

from cramlookup.config import ChipSpec
from cramlookup.cram import CramMetrics, CramProgram, MatchKind, StepNode, TableSpec, evaluate, layered
from cramlookup.errors import DagError, MappingError
from cramlookup.fib import V4, V6, Family, Fib
from cramlookup.parsers.fib_text import parse_fib, read_fib
from cramlookup.rmt import (
    cram_units_row,
    logical_tcam_cost,
    map_program,
    sail_cost_model,
    sail_program,
    table_footprint,
)
from cramlookup.schemes import SchemeParams, build_scheme, scheme_program
from fibgen import data_path


@pytest.fixture
def small_chip():
    return ChipSpec.from_file(data_path("chip.conf"))


def ternary(name, entries):
    return TableSpec(name, MatchKind.TERNARY, 44, entries, 0)


def page_table(name, pages):
    return TableSpec(name, MatchKind.EXACT, 10, 1024, 128 * pages, direct_indexed=True)


class TestTableFootprint:
    """Test whole-unit table sizes."""

    def test_wide_key_uses_columns(self):
        """Test a 64-bit key takes two blocks per 512 entries."""
        t = TableSpec("t", MatchKind.TERNARY, 64, 513, 0)
        assert table_footprint(t, ChipSpec()) == (4, 0)

    def test_ternary_data_in_sram(self):
        """Test ternary data occupies SRAM pages."""
        t = TableSpec("t", MatchKind.TERNARY, 32, 1024, 128)
        assert table_footprint(t, ChipSpec()) == (2, 1)

    def test_utilization(self):
        """Test half utilization doubles pages."""
        assert table_footprint(page_table("p", 3), ChipSpec.tofino2()) == (0, 6)


class TestMapProgram:
    """Test stage placement."""

    def test_spill_across_stages(self, small_chip):
        """Test three blocks spill over two stages and the next step starts after."""
        p = layered("p", [[StepNode("a", ternary("a", 3 * 512))], [StepNode("b", page_table("b", 5))]])
        mapping = map_program(p, small_chip)
        spans = {s.step_id: (s.first_stage, s.last_stage) for s in mapping.steps}
        assert spans == {"a": (1, 2), "b": (3, 4)}
        assert (mapping.total_blocks, mapping.total_pages, mapping.stages) == (3, 5, 4)
        assert mapping.feasible
        assert [(u.tcam_blocks, u.sram_pages) for u in mapping.stage_usage] == [(2, 0), (1, 0), (0, 4), (0, 1)]

    def test_parallel_steps_share_stages(self, small_chip):
        """Test unordered steps fill the same stage before spilling."""
        p = layered("p", [[StepNode("a", page_table("a", 2)), StepNode("b", page_table("b", 3))]])
        mapping = map_program(p, small_chip)
        spans = {s.step_id: (s.first_stage, s.last_stage) for s in mapping.steps}
        assert spans == {"a": (1, 1), "b": (1, 2)}

    def test_tableless_steps_take_a_stage(self, small_chip):
        """Test a chain longer than the chip is infeasible."""
        p = layered("chain", [[StepNode(f"s{i}")] for i in range(7)])
        mapping = map_program(p, small_chip)
        assert mapping.stages == 7
        assert not mapping.feasible
        assert mapping.tables == []

    def test_stages_at_least_latency(self, small_chip):
        """Test mapped stages never undercut the CRAM step count."""
        fib = read_fib(data_path("eight_routes.fib"), None, fixture=True).fib
        params = SchemeParams.defaults(fib.family)
        for name in ("resail", "bsic", "mashup"):
            program = scheme_program(build_scheme(name, fib, params, small_chip))
            assert map_program(program, small_chip).stages >= evaluate(program).steps

    def test_table_too_big(self, small_chip):
        """Test a table larger than the chip raises MappingError."""
        p = CramProgram("big", [StepNode("a", ternary("a", 13 * 512))])
        with pytest.raises(MappingError):
            map_program(p, small_chip)

    def test_cycle(self, small_chip):
        """Test a cyclic program cannot be mapped."""
        p = CramProgram("c", [StepNode("a"), StepNode("b")], [("a", "b"), ("b", "a")])
        with pytest.raises(DagError):
            map_program(p, small_chip)

    def test_mapping_as_dict(self, small_chip):
        """Test the mapping serializes with its rule name."""
        p = layered("p", [[StepNode("a", page_table("a", 1))]])
        d = map_program(p, small_chip).as_dict()
        assert d["rule"] == "topological-spill"
        assert d["tables"] == [{"name": "a", "tcam_blocks": 0, "sram_pages": 1}]


class TestBaselines:
    """Test the logical TCAM and SAIL baselines."""

    def test_logical_tcam_capacity(self):
        """Test the ideal chip holds 245760 v4 or 122880 v6 entries."""
        assert logical_tcam_cost(Fib(V4), ChipSpec()).capacity == 245760
        assert logical_tcam_cost(Fib(V6), ChipSpec()).capacity == 122880

    def test_logical_tcam_blocks(self):
        """Test the bundled v4 table fits in one block and one stage."""
        fib = read_fib(data_path("small_v4.fib"), V4).fib
        cost = logical_tcam_cost(fib, ChipSpec())
        assert (cost.blocks, cost.stages) == (1, 1)

    def test_sail_long_prefix_chunk(self):
        """Test one /25 adds one 256-entry chunk."""
        base = parse_fib(["10.0.0.0/8 1"], V4)
        longer = parse_fib(["10.0.0.0/8 1", "10.1.2.128/25 2"], V4)
        assert not [t for t in sail_program(base).tables() if t.name == "n_long"]
        chunk = [t for t in sail_program(longer).tables() if t.name == "n_long"]
        assert chunk[0].max_entries == 256

    def test_sail_chain(self):
        """Test the chunk step leads a chain through 25 bitmaps."""
        assert evaluate(sail_program(parse_fib(["10.0.0.0/8 1"], V4))).steps == 26

    def test_sail_default_route_keeps_chain(self):
        """Test a /0 route adds its array without lengthening the 26-step chain."""
        fib = parse_fib(["0.0.0.0/0 3", "10.0.0.0/8 1", "10.1.2.128/25 2"], V4)
        program = sail_program(fib)
        assert "n_0" in [t.name for t in program.tables()]
        assert evaluate(program).steps == 26

    def test_sail_rejects_v6(self):
        """Test SAIL is IPv4-only."""
        with pytest.raises(MappingError):
            sail_cost_model(Fib(V6), ChipSpec())

    def test_sail_rejects_toy_families(self):
        """Test a toy table has no SAIL baseline."""
        with pytest.raises(MappingError):
            sail_program(Fib(Family.toy(8)))

    def test_sail_cost(self):
        """Test the 26-step chain alone overruns the ideal chip's 20 stages."""
        cost = sail_cost_model(read_fib(data_path("small_v4.fib"), V4).fib, ChipSpec())
        assert cost.stages >= 26
        assert not cost.feasible
        assert cost.pages == cost.mapping.total_pages


class TestCramUnits:
    """Test the CRAM-versus-RMT comparison rows."""

    def test_rows(self, small_chip):
        """Test one CRAM row in fractional units and one mapped row."""
        p = layered("p", [[StepNode("a", page_table("a", 1))]])
        mapping = map_program(p, small_chip)
        rows = cram_units_row(CramMetrics(0, 128 * 1024, 1), mapping, small_chip)
        assert rows[0] == {"model": "CRAM", "tcam_blocks": 0.0, "sram_pages": 1.0, "latency": 1}
        assert rows[1] == {"model": "Ideal RMT", "tcam_blocks": 0, "sram_pages": 1, "latency": 1}
