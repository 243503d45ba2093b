#!/usr/bin/env python3
"""
Test suite for the d-left hash table.
"""

import os
import sys

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

# Add the src directory to Python path
sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "src"))

from cramlookup.schemes.dleft import MAX_LOAD, DLeftTable
from cramlookup.utils.bits import mix64


class TestDLeftTable:
    """Test exact-match inserts, lookups and removals."""

    def test_build_and_get(self):
        """Test every built key answers its value."""
        table = DLeftTable.build([(k, k * 3) for k in range(100)])
        assert len(table) == 100
        assert all(table.get(k) == k * 3 for k in range(100))
        assert table.get(1000) is None

    def test_capacity_follows_load(self):
        """Test the table is sized to ceil(n / load)."""
        table = DLeftTable.build([(k, 0) for k in range(4)])
        assert table.capacity == 5
        assert table.sizes == [2, 1, 1, 1]
        assert table.load_factor <= MAX_LOAD

    def test_empty_table(self):
        """Test an empty table keeps one slot per way."""
        table = DLeftTable.build([])
        assert table.capacity == 4
        assert len(table) == 0

    def test_put_overwrites(self):
        """Test putting a present key replaces its value in place."""
        table = DLeftTable.build([(7, 1)])
        table.put(7, 2)
        assert table.get(7) == 2
        assert len(table) == 1

    def test_put_grows(self):
        """Test inserts past the load target grow the table."""
        table = DLeftTable.build([(k, 0) for k in range(4)])
        table.put(10, 1)
        table.put(11, 1)
        assert table.capacity == 8
        assert table.get(10) == 1
        assert all(table.get(k) == 0 for k in range(4))

    def test_remove(self):
        """Test removing a key returns its value and frees it."""
        table = DLeftTable.build([(1, 5), (2, 6)])
        assert table.remove(1) == 5
        assert 1 not in table
        assert table.remove(1) is None
        assert table.get(2) == 6

    def test_from_slots_restores_layout(self):
        """Test a table restored from its slots answers identically."""
        table = DLeftTable.build([(k, k) for k in range(50)], seed=9)
        again = DLeftTable.from_slots(table.slots, table.load, table.seed, table.generation)
        assert again.items() == table.items()
        assert all(again.get(k) == k for k in range(50))

    def test_bad_load(self):
        """Test load factors above the maximum are rejected."""
        with pytest.raises(ValueError):
            DLeftTable(10, load=0.95)

    @given(keys=st.sets(st.integers(0, 2**40), max_size=200), seed=st.integers(0, 1000))
    @settings(max_examples=50, deadline=None)
    def test_random_churn(self, keys, seed):
        """Test a mix of puts and removes keeps every surviving key."""
        keys = sorted(keys)
        table = DLeftTable.build([], seed=seed)
        for k in keys:
            table.put(k, k & 0xFF)
        for k in keys[::2]:
            table.remove(k)
        assert table.items() == [(k, k & 0xFF) for k in keys[1::2]]
        assert all(table.get(k) == k & 0xFF for k in keys[1::2])


class TestMix64:
    """Test the seeded hash family."""

    def test_seeds_differ(self):
        """Test different seeds hash the same key differently."""
        assert mix64(12345, 0) != mix64(12345, 1)

    def test_stays_64_bit(self):
        """Test outputs fit in 64 bits."""
        assert 0 <= mix64((1 << 64) - 1, 7) < 1 << 64
