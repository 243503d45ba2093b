#!/usr/bin/env python3
"""
Test suite for the subcommand bodies: build, verify, map, compare, sweep and scale.
"""

import csv
import io
import json
import os
import sys

import pytest

# Add the src directory to Python path
sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "src"))

from cramlookup.config import ChipSpec, Config, ConfigError
from cramlookup.errors import ArtifactError, FibParseError
from cramlookup.fib import V4, V6
from cramlookup.parsers.fib_text import read_fib
from cramlookup.runner import (
    COMPARE_COLUMNS,
    EXIT_INFEASIBLE,
    EXIT_MISMATCH,
    build_structure,
    compare_rows,
    compare_schemes,
    map_report,
    render_report,
    scale_fib,
    sweep_report,
    verify_structure,
)
from cramlookup.schemes import SchemeParams
from fibgen import data_path

EIGHT_ROUTES = data_path("eight_routes.fib")
SMALL_V4 = data_path("small_v4.fib")


def build_cfg(tmp_path, scheme, fib_path=EIGHT_ROUTES, fixture=True, **kwargs):
    return Config(
        command="build",
        scheme=scheme,
        fib_path=fib_path,
        fixture=fixture,
        out=str(tmp_path / f"{scheme}.json"),
        report_path=str(tmp_path / f"{scheme}.program.json"),
        **kwargs,
    )


def verify_cfg(tmp_path, scheme, fib_path=EIGHT_ROUTES, fixture=True, **kwargs):
    return Config(
        command="verify",
        fib_path=fib_path,
        fixture=fixture,
        artifact_path=str(tmp_path / f"{scheme}.json"),
        **kwargs,
    )


class TestBuildAndVerify:
    """Test building artifacts and checking them against the oracles."""

    @pytest.mark.parametrize("scheme", ["resail", "bsic", "mashup"])
    def test_exhaustive_pass(self, tmp_path, capsys, scheme):
        """Test each scheme on the example table passes every address."""
        assert build_structure(build_cfg(tmp_path, scheme)) == 0
        capsys.readouterr()
        assert verify_structure(verify_cfg(tmp_path, scheme, exhaustive=True)) == 0
        assert capsys.readouterr().out.strip() == f"PASS {scheme} 256 addresses"

    def test_build_outputs(self, tmp_path, capsys):
        """Test the artifact, the program report and the cost table are written."""
        build_structure(build_cfg(tmp_path, "bsic"))
        out = capsys.readouterr().out
        assert "| CRAM" in out and "| Ideal RMT" in out
        report = json.loads((tmp_path / "bsic.program.json").read_text())
        assert report["metrics"] == {"tcam_bits": 16, "sram_bits": 252, "steps": 4}
        artifact = json.loads((tmp_path / "bsic.json").read_text())
        assert artifact["scheme"] == "bsic"

    def test_build_json_report(self, tmp_path, capsys):
        """Test the JSON report carries metrics, mapping and provenance."""
        build_structure(build_cfg(tmp_path, "resail", format="json"))
        doc = json.loads(capsys.readouterr().out)
        assert doc["metrics"] == {"tcam_bits": 32, "sram_bits": 234, "steps": 2}
        assert doc["chip_digest"] == ChipSpec().digest()
        assert doc["mapping"]["rule"] == "topological-spill"
        assert doc["rows"][0]["model"] == "CRAM"

    def test_build_infeasible(self, tmp_path, capsys):
        """Test a chip with too few stages gives exit code 4."""
        chip = tmp_path / "tiny.conf"
        chip.write_text("stage_count = 1\n")
        cfg = build_cfg(tmp_path, "bsic", chip_path=str(chip))
        assert build_structure(cfg) == EXIT_INFEASIBLE

    def test_corrupted_artifact(self, tmp_path, capsys):
        """Test a tampered initial-table hop is reported as a mismatch."""
        build_structure(build_cfg(tmp_path, "bsic"))
        path = tmp_path / "bsic.json"
        doc = json.loads(path.read_text())
        for row in doc["structure"]["initial"]:
            if row[1] == 3:
                row[2] = 0
        path.write_text(json.dumps(doc))
        capsys.readouterr()
        assert verify_structure(verify_cfg(tmp_path, "bsic", exhaustive=True)) == EXIT_MISMATCH
        out = capsys.readouterr().out
        assert "| Address" in out
        assert "| B" in out

    def test_damaged_reference_is_a_mismatch(self, tmp_path, capsys):
        """Test a lookup that hits a broken structure counts as a mismatch."""
        build_structure(build_cfg(tmp_path, "bsic"))
        path = tmp_path / "bsic.json"
        doc = json.loads(path.read_text())
        doc["structure"]["levels"][0][1][0] = 40
        path.write_text(json.dumps(doc))
        assert verify_structure(verify_cfg(tmp_path, "bsic", exhaustive=True)) == EXIT_MISMATCH
        assert "error:" in capsys.readouterr().out

    def test_corrupted_mashup_table(self, tmp_path, capsys):
        """Test a tampered MashUp super-table entry is reported as a mismatch."""
        build_structure(build_cfg(tmp_path, "mashup"))
        path = tmp_path / "mashup.json"
        doc = json.loads(path.read_text())
        for by_kind in doc["structure"]["tables"]:
            for table in by_kind["tcam"]:
                for row in table["tcam"]:
                    row[2] = -1
            for table in by_kind["sram"]:
                table["slots"] = [None if slot is None else [-1, slot[1]] for slot in table["slots"]]
        path.write_text(json.dumps(doc))
        capsys.readouterr()
        assert verify_structure(verify_cfg(tmp_path, "mashup", exhaustive=True)) == EXIT_MISMATCH
        assert "| Address" in capsys.readouterr().out

    def test_mashup_bad_tag_is_a_mismatch(self, tmp_path, capsys):
        """Test a root placed at a tag its super-table lacks counts as a mismatch."""
        build_structure(build_cfg(tmp_path, "mashup"))
        path = tmp_path / "mashup.json"
        doc = json.loads(path.read_text())
        doc["structure"]["nodes"][0][0][3] = 7
        path.write_text(json.dumps(doc))
        capsys.readouterr()
        assert verify_structure(verify_cfg(tmp_path, "mashup", exhaustive=True)) == EXIT_MISMATCH
        assert "error:" in capsys.readouterr().out

    def test_v4_address_file(self, tmp_path, capsys):
        """Test verification over a file of addresses."""
        build_structure(build_cfg(tmp_path, "bsic", fib_path=SMALL_V4, fixture=False))
        capsys.readouterr()
        addresses = data_path("addresses_v4.txt")
        cfg = verify_cfg(tmp_path, "bsic", fib_path=SMALL_V4, fixture=False, addresses_path=addresses)
        assert verify_structure(cfg) == 0
        assert capsys.readouterr().out.strip() == "PASS bsic 7 addresses"

    def test_v4_sampled(self, tmp_path, capsys):
        """Test seeded random verification of a v4 MashUp artifact."""
        build_structure(build_cfg(tmp_path, "mashup", fib_path=SMALL_V4, fixture=False))
        assert verify_structure(verify_cfg(tmp_path, "mashup", fib_path=SMALL_V4, fixture=False, count=500)) == 0

    def test_exhaustive_v4_refused(self, tmp_path):
        """Test exhaustive verification of a 32-bit family is refused."""
        build_structure(build_cfg(tmp_path, "bsic", fib_path=SMALL_V4, fixture=False))
        with pytest.raises(ConfigError):
            verify_structure(verify_cfg(tmp_path, "bsic", fib_path=SMALL_V4, fixture=False, exhaustive=True))

    def test_family_mismatch(self, tmp_path):
        """Test a toy artifact cannot be verified against a v4 table."""
        build_structure(build_cfg(tmp_path, "bsic"))
        with pytest.raises(ArtifactError):
            verify_structure(verify_cfg(tmp_path, "bsic", fib_path=SMALL_V4, fixture=False))

    def test_missing_table(self, tmp_path):
        """Test an absent routing table is a parse error."""
        with pytest.raises(FibParseError):
            build_structure(build_cfg(tmp_path, "bsic", fib_path=str(tmp_path / "absent.fib")))


class TestMap:
    """Test mapping a saved program report."""

    def test_map_report(self, tmp_path, capsys):
        """Test the report maps onto the small chip step by step."""
        build_structure(build_cfg(tmp_path, "bsic"))
        capsys.readouterr()
        cfg = Config(command="map", report_path=str(tmp_path / "bsic.program.json"), chip_path=data_path("chip.conf"))
        assert map_report(cfg) == 0
        out = capsys.readouterr().out
        for step in ("initial", "level_0", "level_1", "level_2"):
            assert f"| {step}" in out

    def test_map_csv_to_file(self, tmp_path):
        """Test CSV output goes to the requested file."""
        build_structure(build_cfg(tmp_path, "resail"))
        out = tmp_path / "map.csv"
        cfg = Config(command="map", report_path=str(tmp_path / "resail.program.json"), format="csv", out=str(out))
        map_report(cfg)
        rows = list(csv.DictReader(io.StringIO(out.read_text())))
        assert rows[-1]["step"] == "hash"

    def test_map_infeasible(self, tmp_path):
        """Test exit code 4 when the chip has too few stages."""
        build_structure(build_cfg(tmp_path, "bsic"))
        chip = tmp_path / "tiny.conf"
        chip.write_text("stage_count = 2\n")
        cfg = Config(command="map", report_path=str(tmp_path / "bsic.program.json"), chip_path=str(chip))
        assert map_report(cfg) == EXIT_INFEASIBLE

    def test_missing_report(self, tmp_path):
        """Test an absent report is an artifact error."""
        with pytest.raises(ArtifactError):
            map_report(Config(command="map", report_path=str(tmp_path / "absent.json")))


class TestCompare:
    """Test the side-by-side comparison."""

    def test_five_rows(self):
        """Test three schemes plus two baselines, all without errors on a v4 table."""
        fib = read_fib(SMALL_V4, V4).fib
        rows = compare_rows(fib, SchemeParams.defaults(V4), ChipSpec())
        assert [r["scheme"] for r in rows] == ["RESAIL", "BSIC", "MashUp", "Logical TCAM", "SAIL"]
        assert not [r for r in rows if "error" in r]

    def test_v6_sail_error_row(self):
        """Test SAIL records an error for IPv6 while the others still run."""
        fib = read_fib(data_path("small_v6.fib"), V6).fib
        rows = compare_rows(fib, SchemeParams.defaults(V6), ChipSpec())
        assert rows[-1]["scheme"] == "SAIL" and "IPv4" in rows[-1]["error"]
        assert all("error" not in r for r in rows[:4])

    def test_bad_parameters_become_error_rows(self):
        """Test a scheme that cannot build reports its error in its row."""
        fib = read_fib(EIGHT_ROUTES, None, fixture=True).fib
        params = SchemeParams.defaults(fib.family)
        params.k = 30
        rows = compare_rows(fib, params, ChipSpec())
        assert "error" in rows[1]
        assert "error" not in rows[0]

    def test_csv_output(self, capsys):
        """Test the CSV header follows the compare columns."""
        cfg = Config(command="compare", fib_path=EIGHT_ROUTES, fixture=True, format="csv")
        assert compare_schemes(cfg) == 0
        header = capsys.readouterr().out.splitlines()[0]
        assert header.split(",") == COMPARE_COLUMNS


class TestSweepAndScale:
    """Test the sweep and scale subcommands."""

    def test_sweep_needs_scheme(self):
        """Test a size sweep without a scheme is a config error."""
        with pytest.raises(ConfigError):
            sweep_report(Config(command="sweep", fib_path=EIGHT_ROUTES, fixture=True))

    def test_size_sweep_csv(self, capsys):
        """Test a size sweep writes one CSV row per size."""
        cfg = Config(command="sweep", scheme="bsic", fib_path=SMALL_V4, sizes=[17, 34], format="csv")
        assert sweep_report(cfg) == 0
        rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
        assert [r["size"] for r in rows] == ["17", "34"]

    def test_k_sweep_json(self, capsys):
        """Test a k-sweep reports the scheme as BSIC."""
        cfg = Config(command="sweep", fib_path=SMALL_V4, k_values=[12, 16], format="json")
        sweep_report(cfg)
        doc = json.loads(capsys.readouterr().out)
        assert doc["scheme"] == "bsic"
        assert [r["k"] for r in doc["rows"]] == [12, 16]

    def test_scale_fixture(self, tmp_path):
        """Test length scaling a fixture writes a fixture with the same labels."""
        out = tmp_path / "scaled.fib"
        cfg = Config(command="scale", fib_path=EIGHT_ROUTES, fixture=True, factor=2.0, out=str(out))
        assert scale_fib(cfg) == 0
        scaled = read_fib(str(out), None, fixture=True)
        assert len(scaled.fib) == 16
        assert scaled.labels == {"A": 0, "B": 1, "C": 2, "D": 3}

    def test_scale_multiverse(self, tmp_path):
        """Test multiverse scaling writes n copies."""
        out = tmp_path / "scaled6.fib"
        cfg = Config(
            command="scale",
            fib_path=data_path("small_v6.fib"),
            family="v6",
            method="multiverse",
            universes=4,
            out=str(out),
        )
        scale_fib(cfg)
        assert len(read_fib(str(out), V6).fib) == 36


class TestRenderReport:
    """Test the three report formats."""

    report = {"tool": "cramlookup", "notes": ["a note"]}
    rows = [{"scheme": "BSIC", "steps": 4}]

    def test_table(self):
        """Test a markdown table with the notes footer."""
        text = render_report(self.report, ["scheme", "steps"], self.rows, "table")
        assert text.splitlines()[2] == "| BSIC   |     4 |"
        assert text.endswith("Notes:\n- a note\n")

    def test_json(self):
        """Test JSON carries the header and the rows."""
        doc = json.loads(render_report(self.report, ["scheme", "steps"], self.rows, "json"))
        assert doc["rows"] == self.rows
        assert doc["tool"] == "cramlookup"

    def test_csv_ignores_extra_keys(self):
        """Test CSV keeps only the listed columns."""
        text = render_report(self.report, ["scheme"], self.rows, "csv")
        assert text == "scheme\nBSIC\n"

    def test_unknown_format(self):
        """Test an unknown format is a config error."""
        with pytest.raises(ConfigError):
            render_report(self.report, ["scheme"], self.rows, "xml")
