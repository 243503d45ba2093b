"""
JSON codec for built lookup structures.

Artifacts carry their tables as built (look-aside rows, bitmaps, hash
slots, initial rows, BST levels, trie nodes and super-tables) so
verification exercises exactly what was written. Nodes and child pointers
are numbered by position within their trie level.
"""

import json
import logging
from typing import Any, Dict, List, Optional, TextIO

import numpy as np

from .. import __version__
from ..errors import ArtifactError, BuildError, PrefixError
from ..fib import Family, IpPrefix
from ..schemes import scheme_name
from ..schemes.bsic import BsicConfig, BsicStructure, BstNode, InitialEntry, Interval, RangeList
from ..schemes.dleft import DLeftTable
from ..schemes.mashup import MashupStructure, NodeKind, Placement, SlotEntry, StridePlan, SuperTable, TrieNode
from ..schemes.resail import Bitmap, LookAsideTcam, ResailConfig, ResailStructure
from ..schemes.ternary import PriorityTcam

logger = logging.getLogger(__name__)

ARTIFACT_FORMAT = "cramlookup-artifact/1"


def _routes(routes: Dict[IpPrefix, int]) -> List[List[int]]:
    return [[p.bits(), p.length, hop] for p, hop in sorted(routes.items(), key=lambda r: (r[0].length, r[0].value))]


def _routes_from(family: Family, rows: List[List[int]]) -> Dict[IpPrefix, int]:
    return {IpPrefix.from_bits(family, bits, length): hop for bits, length, hop in rows}


def _bitmap_hex(bitmap: Bitmap) -> str:
    return np.packbits(bitmap.bits).tobytes().hex()


def _bitmap_from(level: int, text: str) -> Bitmap:
    packed = np.frombuffer(bytes.fromhex(text), dtype=np.uint8)
    bits = np.unpackbits(packed)[: 1 << level].astype(bool)
    if len(bits) != 1 << level:
        raise ArtifactError(f"bitmap level {level} holds {len(bits)} bits, expected {1 << level}")
    return Bitmap(level, bits)


def _encode_resail(s: ResailStructure) -> Dict[str, Any]:
    table = s.hash_table
    return {
        "config": vars(s.config),
        "look_aside": [[value, length, hop] for value, length, hop in s.look_aside.items()],
        "bitmaps": {str(level): _bitmap_hex(bitmap) for level, bitmap in sorted(s.bitmaps.items())},
        "hash": {
            "seed": table.seed,
            "load": table.load,
            "generation": table.generation,
            "slots": [[list(slot) if slot is not None else None for slot in way] for way in table.slots],
        },
        "routes": _routes(s.routes),
    }


def _decode_resail(family: Family, hop_bits: int, default_hop: int, body: Dict[str, Any]) -> ResailStructure:
    cfg = ResailConfig(**body["config"])
    look_aside = LookAsideTcam(family.width)
    for value, length, hop in body["look_aside"]:
        look_aside.put(value, length, hop)
    bitmaps = {int(level): _bitmap_from(int(level), text) for level, text in body["bitmaps"].items()}
    h = body["hash"]
    slots = [[tuple(slot) if slot is not None else None for slot in way] for way in h["slots"]]
    return ResailStructure(
        family=family,
        config=cfg,
        hop_bits=hop_bits,
        look_aside=look_aside,
        bitmaps=bitmaps,
        hash_table=DLeftTable.from_slots(slots, h["load"], h["seed"], h["generation"]),
        default_hop=default_hop,
        routes=_routes_from(family, body["routes"]),
    )


def _encode_bsic(s: BsicStructure) -> Dict[str, Any]:
    return {
        "config": vars(s.config),
        "initial": [[e.value, e.length, e.hop, e.bst] for e in (row.payload for row in s.initial.entries())],
        "levels": [[[n.left, n.right, n.hop, n.endpoint] for n in level] for level in s.levels],
        "groups": {
            str(slice_value): [[i.left, i.right, i.hop] for i in ranges.intervals]
            for slice_value, ranges in sorted(s.groups.items())
        },
    }


def _decode_bsic(family: Family, hop_bits: int, default_hop: int, body: Dict[str, Any]) -> BsicStructure:
    cfg = BsicConfig(**body["config"])
    initial = PriorityTcam(cfg.k)
    for value, length, hop, bst in body["initial"]:
        initial.put(value, length, InitialEntry(value, length, hop, bst))
    levels = [[BstNode(*node) for node in level] for level in body["levels"]]
    width = family.width - cfg.k
    groups = {
        int(slice_value): RangeList(width, [Interval(*interval) for interval in intervals])
        for slice_value, intervals in body["groups"].items()
    }
    return BsicStructure(family, cfg, hop_bits, initial, levels, default_hop, groups)


def _encode_mashup(s: MashupStructure) -> Dict[str, Any]:
    levels = [s.nodes_at(level) for level in range(len(s.plan))]
    index = [{id(node): i for i, node in enumerate(nodes)} for nodes in levels]

    def child_ref(level: int, child: Optional[TrieNode]) -> Optional[int]:
        return None if child is None else index[level + 1][id(child)]

    nodes = [
        [
            [
                node.path,
                node.kind.value,
                node.placement.table,
                node.placement.tag,
                [[bits, length, hop] for (bits, length), hop in sorted(node.prefixes.items())],
                [[slot, child_ref(level, child)] for slot, child in sorted(node.children.items())],
            ]
            for node in level_nodes
        ]
        for level, level_nodes in enumerate(levels)
    ]
    tables = []
    for level, by_kind in enumerate(s.tables):
        docs: Dict[str, List[Dict[str, Any]]] = {kind.value: [] for kind in by_kind}
        for kind, supers in by_kind.items():
            for table in supers:
                doc = {"tag_width": table.tag_width, "members": [index[level][id(m)] for m in table.members]}
                if kind is NodeKind.TCAM:
                    doc["tcam"] = [[v, n, e.hop, child_ref(level, e.child)] for v, n, e in table.tcam.items()]
                else:
                    doc["slots"] = [None if e is None else [e.hop, child_ref(level, e.child)] for e in table.slots]
                docs[kind.value].append(doc)
        tables.append(docs)
    return {
        "strides": str(s.plan),
        "tcam_factor": s.tcam_factor,
        "tcam_budget": s.tcam_budget,
        "sram_budget": s.sram_budget,
        "nodes": nodes,
        "tables": tables,
        "routes": _routes(s.routes),
    }


def _node_ref(levels: List[List[TrieNode]], level: int, ref: Optional[int]) -> Optional[TrieNode]:
    if ref is None:
        return None
    if level >= len(levels) or not 0 <= ref < len(levels[level]):
        raise ArtifactError(f"reference to node {ref} of level {level} does not exist")
    return levels[level][ref]


def _decode_super_table(
    levels: List[List[TrieNode]], level: int, kind: NodeKind, stride: int, doc: Dict[str, Any]
) -> SuperTable:
    members = [_node_ref(levels, level, ref) for ref in doc["members"]]
    table = SuperTable(level, kind, stride, members, doc["tag_width"])
    if kind is NodeKind.TCAM:
        table.tcam = PriorityTcam(table.key_bits)
        for value, length, hop, child in doc["tcam"]:
            table.tcam.put(value, length, SlotEntry(hop, _node_ref(levels, level + 1, child)))
    else:
        table.slots = [
            None if slot is None else SlotEntry(slot[0], _node_ref(levels, level + 1, slot[1])) for slot in doc["slots"]
        ]
    return table


def _decode_mashup(family: Family, hop_bits: int, default_hop: int, body: Dict[str, Any]) -> MashupStructure:
    plan = StridePlan.parse(body["strides"])
    plan.check_family(family)
    rows = body["nodes"]
    if len(rows) != len(plan) or len(rows[0]) != 1 or len(body["tables"]) != len(plan):
        raise ArtifactError(f"MashUp artifact does not describe one root and {len(plan)} levels")
    levels = [
        [
            TrieNode(
                level,
                path,
                {(bits, length): hop for bits, length, hop in prefixes},
                kind=NodeKind(kind),
                placement=Placement(table, tag),
            )
            for path, kind, table, tag, prefixes, _ in level_rows
        ]
        for level, level_rows in enumerate(rows)
    ]
    for level, level_rows in enumerate(rows):
        for node, row in zip(levels[level], level_rows):
            node.children = {slot: _node_ref(levels, level + 1, child) for slot, child in row[5]}
    tables = [
        {
            NodeKind(kind): [_decode_super_table(levels, level, NodeKind(kind), plan.strides[level], d) for d in docs]
            for kind, docs in by_kind.items()
        }
        for level, by_kind in enumerate(body["tables"])
    ]
    return MashupStructure(
        family,
        plan,
        hop_bits,
        levels[0][0],
        tables,
        default_hop,
        _routes_from(family, body["routes"]),
        body["tcam_factor"],
        body["tcam_budget"],
        body["sram_budget"],
    )


def encode_structure(structure: Any) -> Dict[str, Any]:
    """JSON-ready dict for a RESAIL, BSIC or MashUp structure."""
    name = scheme_name(structure)
    body = {"resail": _encode_resail, "bsic": _encode_bsic, "mashup": _encode_mashup}[name](structure)
    return {
        "format": ARTIFACT_FORMAT,
        "tool": "cramlookup",
        "version": __version__,
        "scheme": name,
        "family": structure.family.name,
        "width": structure.family.width,
        "hop_bits": structure.hop_bits,
        "default_hop": structure.default_hop,
        "structure": body,
    }


def decode_structure(data: Dict[str, Any]) -> Any:
    """Rebuild a structure from :func:`encode_structure` output.

    Raises:
        ArtifactError: If the document is not a structure artifact or is malformed
    """
    if not isinstance(data, dict) or data.get("format") != ARTIFACT_FORMAT:
        raise ArtifactError(f"not a {ARTIFACT_FORMAT} document")
    decoders = {"resail": _decode_resail, "bsic": _decode_bsic, "mashup": _decode_mashup}
    scheme = data.get("scheme")
    if scheme not in decoders:
        raise ArtifactError(f"unknown scheme {scheme!r} in artifact")
    try:
        family = Family.by_name(data["family"])
        if family.width != data["width"]:
            raise ArtifactError(f"artifact width {data['width']} does not match family {family.name}")
        structure = decoders[scheme](family, data["hop_bits"], data["default_hop"], data["structure"])
    except ArtifactError:
        raise
    except (KeyError, IndexError, TypeError, ValueError, PrefixError, BuildError) as e:
        raise ArtifactError(f"malformed {scheme} artifact: {e}") from e
    logger.debug(f"Decoded {scheme} artifact for {family.name}")
    return structure


def write_artifact(structure: Any, stream: TextIO) -> None:
    json.dump(encode_structure(structure), stream)
    stream.write("\n")


def read_artifact(path: str) -> Any:
    """
    Raises:
        ArtifactError: If the file is missing, not JSON or not a structure artifact
    """
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except OSError as e:
        raise ArtifactError(f"cannot read artifact {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ArtifactError(f"artifact {path} is not JSON: {e}") from e
    return decode_structure(data)
