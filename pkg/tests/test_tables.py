#!/usr/bin/env python3
"""
Test suite for the text table renderer used by reports.
"""

import os
import sys

import pytest

# Add the src directory to Python path
sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "src"))

from cramlookup.utils.tables import format_cell, render_table, separator_cell


class TestFormatCell:
    """Test individual cell rendering."""

    def test_values(self):
        """Test floats, booleans, None and pipes."""
        assert format_cell(1.5) == "1.50"
        assert format_cell(False) == "no"
        assert format_cell(None) == ""
        assert format_cell("a|b") == "a\\|b"


class TestSeparatorCell:
    """Test separator alignment markers."""

    def test_alignments(self):
        """Test left, center and right separators."""
        assert separator_cell(5, "left") == "-----"
        assert separator_cell(5, "center") == ":---:"
        assert separator_cell(5, "right") == "----:"


class TestRenderTable:
    """Test whole-table rendering."""

    def test_numbers_align_right(self):
        """Test numeric columns are right-aligned by default."""
        text = render_table(["scheme", "steps"], [["resail", 2], ["bsic", 12]])
        lines = text.splitlines()
        assert lines[0] == "| scheme | steps |"
        assert lines[1] == "|--------|------:|"
        assert lines[2] == "| resail |     2 |"
        assert lines[3] == "| bsic   |    12 |"

    def test_row_width_checked(self):
        """Test a short row raises ValueError."""
        with pytest.raises(ValueError):
            render_table(["a", "b"], [[1]])

    def test_no_rows(self):
        """Test a header-only table still renders."""
        assert render_table(["a"], []).splitlines() == ["| a   |", "|-----|"]
