#!/usr/bin/env python3
"""
Test suite for structure artifacts: writing, reading and rejecting bad documents.
"""

import io
import json
import os
import sys

import pytest

# Add the src directory to Python path
sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "src"))

from cramlookup.cram import evaluate
from cramlookup.errors import ArtifactError
from cramlookup.fib import NO_ROUTE, V4, Family, IpPrefix, UpdateOp, apply_update
from cramlookup.oracle import build_trie, oracle_lookup, sample_addresses
from cramlookup.parsers.artifacts import (
    ARTIFACT_FORMAT,
    decode_structure,
    encode_structure,
    read_artifact,
    write_artifact,
)
from cramlookup.parsers.fib_text import read_fib
from cramlookup.schemes import SCHEMES, SchemeParams, build_scheme, scheme_lookup, scheme_program
from cramlookup.schemes.mashup import mashup_update
from fibgen import data_path, random_fib


@pytest.fixture
def eight_routes():
    return read_fib(data_path("eight_routes.fib"), None, fixture=True).fib


def reread(structure):
    buffer = io.StringIO()
    write_artifact(structure, buffer)
    return decode_structure(json.loads(buffer.getvalue()))


class TestRoundTrip:
    """Test a decoded structure behaves like the one written."""

    @pytest.mark.parametrize("scheme", SCHEMES)
    def test_eight_routes(self, eight_routes, scheme):
        """Test every address and the metrics survive a round trip."""
        s = build_scheme(scheme, eight_routes, SchemeParams.defaults(eight_routes.family))
        again = reread(s)
        assert [scheme_lookup(again, a) for a in range(256)] == [scheme_lookup(s, a) for a in range(256)]
        assert evaluate(scheme_program(again)) == evaluate(scheme_program(s))

    @pytest.mark.parametrize("scheme", SCHEMES)
    def test_random_toy(self, scheme):
        """Test a larger random table with a default route."""
        fib = random_fib(21, Family.toy(12), 300, default_hop=3)
        s = build_scheme(scheme, fib, SchemeParams.defaults(fib.family))
        again = reread(s)
        assert [scheme_lookup(again, a) for a in range(4096)] == [scheme_lookup(s, a) for a in range(4096)]

    def test_bsic_v4(self):
        """Test a v4 BSIC artifact on sampled addresses."""
        fib = read_fib(data_path("small_v4.fib"), V4).fib
        s = build_scheme("bsic", fib, SchemeParams.defaults(V4))
        again = reread(s)
        for addr in sample_addresses(fib, 1000, 8):
            assert scheme_lookup(again, addr) == scheme_lookup(s, addr)

    def test_mashup_tables_are_read_as_written(self, eight_routes):
        """Test a MashUp artifact answers from its stored super-tables."""
        s = build_scheme("mashup", eight_routes, SchemeParams.defaults(eight_routes.family))
        doc = encode_structure(s)
        for by_kind in doc["structure"]["tables"]:
            for table in by_kind.get("tcam", []):
                for row in table["tcam"]:
                    row[2] = row[2] + 1 if row[2] != NO_ROUTE else row[2]
            for table in by_kind.get("sram", []):
                for slot in table["slots"]:
                    if slot is not None and slot[0] != NO_ROUTE:
                        slot[0] += 1
        again = decode_structure(doc)
        for addr in range(256):
            hop = scheme_lookup(s, addr)
            if hop == NO_ROUTE:
                assert scheme_lookup(again, addr) == NO_ROUTE
            else:
                assert scheme_lookup(again, addr) == hop + 1

    def test_mashup_update_after_decode(self, eight_routes):
        """Test a decoded MashUp trie still takes updates."""
        s = reread(build_scheme("mashup", eight_routes, SchemeParams.defaults(eight_routes.family)))
        prefix = IpPrefix.from_bits(eight_routes.family, 0b0000, 4)
        mashup_update(s, UpdateOp.INSERT, prefix, 2)
        fib = apply_update(eight_routes, UpdateOp.INSERT, prefix, 2)
        trie = build_trie(fib)
        assert [scheme_lookup(s, a) for a in range(256)] == [oracle_lookup(trie, a) for a in range(256)]

    def test_header(self, eight_routes):
        """Test the document names its format, scheme and family."""
        doc = encode_structure(build_scheme("resail", eight_routes, SchemeParams.defaults(eight_routes.family)))
        assert doc["format"] == ARTIFACT_FORMAT
        assert (doc["scheme"], doc["family"], doc["width"]) == ("resail", "toy8", 8)


class TestBadDocuments:
    """Test malformed artifacts raise ArtifactError."""

    def doc(self, eight_routes, scheme="bsic"):
        return encode_structure(build_scheme(scheme, eight_routes, SchemeParams.defaults(eight_routes.family)))

    def test_wrong_format(self, eight_routes):
        """Test another format tag is rejected."""
        doc = self.doc(eight_routes)
        doc["format"] = "something-else/1"
        with pytest.raises(ArtifactError):
            decode_structure(doc)

    def test_unknown_scheme(self, eight_routes):
        """Test an unknown scheme name is rejected."""
        doc = self.doc(eight_routes)
        doc["scheme"] = "sail"
        with pytest.raises(ArtifactError):
            decode_structure(doc)

    def test_missing_body(self, eight_routes):
        """Test a missing structure body is rejected."""
        doc = self.doc(eight_routes)
        del doc["structure"]["levels"]
        with pytest.raises(ArtifactError):
            decode_structure(doc)

    def test_width_mismatch(self, eight_routes):
        """Test a width that contradicts the family is rejected."""
        doc = self.doc(eight_routes, "resail")
        doc["width"] = 9
        with pytest.raises(ArtifactError):
            decode_structure(doc)

    def test_bad_route(self, eight_routes):
        """Test a route wider than its length is rejected."""
        doc = self.doc(eight_routes, "mashup")
        doc["structure"]["routes"][0] = [0b1111, 2, 0]
        with pytest.raises(ArtifactError):
            decode_structure(doc)

    @pytest.mark.parametrize("ref", [99, -1])
    def test_mashup_child_out_of_range(self, eight_routes, ref):
        """Test a child pointer past its level is rejected."""
        doc = self.doc(eight_routes, "mashup")
        root = doc["structure"]["nodes"][0][0]
        root[5][0][1] = ref
        with pytest.raises(ArtifactError):
            decode_structure(doc)

    def test_mashup_missing_root(self, eight_routes):
        """Test a MashUp document without its root level is rejected."""
        doc = self.doc(eight_routes, "mashup")
        doc["structure"]["nodes"][0] = []
        with pytest.raises(ArtifactError):
            decode_structure(doc)

    def test_missing_file(self, tmp_path):
        """Test an absent file is an artifact error."""
        with pytest.raises(ArtifactError):
            read_artifact(str(tmp_path / "absent.json"))

    def test_not_json(self, tmp_path):
        """Test a non-JSON file is an artifact error."""
        path = tmp_path / "bad.json"
        path.write_text("not json")
        with pytest.raises(ArtifactError):
            read_artifact(str(path))
