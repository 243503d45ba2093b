"""
Command bodies behind the cramlookup subcommands.

Each function takes a :class:`~cramlookup.config.Config`, does its work and
returns the process exit code. Errors are raised as
:class:`~cramlookup.errors.CramLookupError` subclasses and turned into exit
codes by ``main``.
"""

import csv
import io
import json
import logging
import sys
from dataclasses import dataclass
from typing import Any, Dict, List, Sequence

from . import __version__
from .config import ChipSpec, Config, ConfigError, load_chip
from .cram import NOTE_DEFAULT_VALUES, evaluate, program_from_report, program_report, to_units
from .errors import ArtifactError, CramLookupError, FibParseError, MappingError, StructureCorruptError
from .fib import Family, Fib
from .oracle import build_trie, oracle_lookup, sample_addresses, scan_lookup
from .parsers.artifacts import read_artifact, write_artifact
from .parsers.fib_text import Fixture, parse_address, read_fib, serialize_fib
from .rmt import (
    NOTE_SAIL_CHUNKS,
    PLACEMENT_RULE,
    cram_units_row,
    logical_tcam_cost,
    map_program,
    sail_cost_model,
)
from .scaling import K_SWEEP_COLUMNS, SWEEP_COLUMNS, k_sweep, multiverse_scale, scale_by_length, sweep
from .schemes import SCHEMES, SchemeParams, build_scheme, scheme_lookup, scheme_name, scheme_program
from .schemes.bsic import BsicStructure, dump_bst, dump_ranges, find_tree
from .schemes.mashup import MashupStructure, dump_trie, route_placements
from .schemes.resail import ResailStructure, dump_resail
from .utils.tables import render_table

logger = logging.getLogger(__name__)

EXIT_INFEASIBLE = 4
EXIT_MISMATCH = 5
MAX_EXHAUSTIVE_BITS = 24
MAX_SCAN_WORK = 50_000_000
SHOWN_MISMATCHES = 10
FORMATS = ("table", "json", "csv")
COMPARE_COLUMNS = [
    "scheme",
    "tcam_bits",
    "sram_bits",
    "steps",
    "tcam_blocks",
    "sram_pages",
    "stages",
    "feasible",
    "error",
]
MAPPING_COLUMNS = ["step", "first_stage", "last_stage"]
DISPLAY_NAMES = {"resail": "RESAIL", "bsic": "BSIC", "mashup": "MashUp"}


@dataclass
class Mismatch:
    address: str
    expected: str
    got: str


def _load_fib(cfg: Config) -> Fixture:
    """Read ``cfg.fib_path`` as FIB text or a toy fixture.

    Raises:
        FibParseError: If the file cannot be opened or parsed
    """
    if not cfg.fib_path:
        raise ConfigError("a routing table path is required")
    family = None if cfg.fixture else Family.by_name(cfg.family)
    try:
        fixture = read_fib(cfg.fib_path, family, cfg.fixture, cfg.hop_bits)
    except OSError as e:
        raise FibParseError(f"cannot read {cfg.fib_path}: {e}") from e
    logger.info(f"Loaded {len(fixture.fib)} {fixture.fib.family.name} routes from {cfg.fib_path}")
    return fixture


def _params(cfg: Config, fib: Fib) -> SchemeParams:
    return SchemeParams.resolve(fib.family, cfg.pivot, cfg.min_bmp, cfg.k, cfg.strides, cfg.seed)


def _header(cfg: Config, chip: ChipSpec, notes: Sequence[str]) -> Dict[str, Any]:
    return {
        "tool": "cramlookup",
        "version": __version__,
        "seed": cfg.seed,
        "chip_digest": chip.digest(),
        "notes": list(dict.fromkeys(notes)),
    }


def render_report(report: Dict[str, Any], columns: List[str], rows: List[Dict[str, Any]], fmt: str) -> str:
    """Report text: the full JSON document, CSV of ``rows``, or a markdown table with a notes footer.

    Raises:
        ConfigError: On an unknown format
    """
    if fmt == "json":
        return json.dumps({**report, "rows": rows}, indent=2, sort_keys=False) + "\n"
    if fmt == "csv":
        buffer = io.StringIO()
        writer = csv.DictWriter(buffer, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        return buffer.getvalue()
    if fmt == "table":
        text = render_table(columns, [[row.get(c) for c in columns] for row in rows])
        notes = "".join(f"- {note}\n" for note in report.get("notes", []))
        return text + (f"\nNotes:\n{notes}" if notes else "")
    raise ConfigError(f"unknown report format {fmt!r}; choose from {', '.join(FORMATS)}")


def _emit(text: str, path: str = "") -> None:
    if path:
        with open(path, "w", encoding="utf-8") as f:
            f.write(text)
        logger.info(f"Wrote {path}")
    else:
        sys.stdout.write(text)


def dump_structure(structure: Any, fixture: Fixture) -> str:
    """Human-readable contents of a built structure, hops shown with fixture labels."""
    label = fixture.label_of
    if isinstance(structure, ResailStructure):
        return dump_resail(structure, label)
    if isinstance(structure, BsicStructure):
        parts = []
        for slice_value, ranges in sorted(structure.groups.items()):
            parts.append(f"Slice {slice_value:0{structure.config.k}b}")
            parts.append(dump_ranges(ranges, label))
            root = find_tree(structure, slice_value)
            if root is not None:
                parts.append(dump_bst(structure, root, label))
        return "\n".join(parts)
    if isinstance(structure, MashupStructure):
        rows = route_placements(structure, label)
        return dump_trie(structure) + "\n" + render_table(["Level", "Path", "Local prefix", "Next hop"], rows)
    raise ArtifactError(f"cannot dump {type(structure).__name__}")


def build_structure(cfg: Config) -> int:
    """Build one scheme, write its artifact and program report, print its metrics.

    Args:
        cfg: Config with scheme, fib_path and scheme parameters; ``out`` names
            the artifact file and ``report_path`` the program report file

    Returns:
        int: 0, or 4 if the program does not fit the chip's stages
    """
    fixture = _load_fib(cfg)
    fib = fixture.fib
    chip = load_chip(cfg)
    structure = build_scheme(cfg.scheme, fib, _params(cfg, fib), chip)
    program = scheme_program(structure)
    metrics = evaluate(program)
    mapping = map_program(program, chip)

    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8") as f:
            write_artifact(structure, f)
        logger.info(f"Wrote {cfg.scheme} artifact to {cfg.out}")
    if cfg.report_path:
        _emit(json.dumps(program_report(program), indent=2) + "\n", cfg.report_path)
    if cfg.verbose:
        logger.info("\n" + dump_structure(structure, fixture))

    units = to_units(metrics, chip)
    report = _header(cfg, chip, [NOTE_DEFAULT_VALUES, *program.notes, f"placement rule {PLACEMENT_RULE}"])
    report.update(
        {
            "scheme": cfg.scheme,
            "routes": len(fib),
            "metrics": {"tcam_bits": metrics.tcam_bits, "sram_bits": metrics.sram_bits, "steps": metrics.steps},
            "units": {"tcam_blocks": units.tcam_blocks, "sram_pages": units.sram_pages},
            "mapping": mapping.as_dict(),
        }
    )
    rows = cram_units_row(metrics, mapping, chip)
    _emit(render_report(report, ["model", "tcam_blocks", "sram_pages", "latency"], rows, cfg.format))
    if not mapping.feasible:
        logger.warning(f"{cfg.scheme} needs {mapping.stages} stages, the chip has {chip.stage_count}")
        return EXIT_INFEASIBLE
    return 0


def _addresses(cfg: Config, fib: Fib) -> List[int]:
    family = fib.family
    if cfg.exhaustive:
        if family.width > MAX_EXHAUSTIVE_BITS:
            raise ConfigError(f"exhaustive verification is limited to {MAX_EXHAUSTIVE_BITS}-bit families")
        return list(range(1 << family.width))
    if cfg.addresses_path:
        try:
            with open(cfg.addresses_path, "r", encoding="utf-8") as f:
                lines = [line.split("#", 1)[0].strip() for line in f]
        except OSError as e:
            raise FibParseError(f"cannot read {cfg.addresses_path}: {e}") from e
        return [parse_address(line, family) for line in lines if line]
    return sample_addresses(fib, cfg.count, cfg.seed)


def find_mismatches(structure: Any, fixture: Fixture, addresses: List[int]) -> List[Mismatch]:
    """Addresses where the structure disagrees with the trie oracle or the scan oracle.

    The scan oracle covers a prefix of ``addresses`` bounded by table size.
    """
    fib = fixture.fib
    family = fib.family
    label = fixture.label_of
    trie = build_trie(fib)
    scanned = MAX_SCAN_WORK // max(len(fib), 1)
    if scanned < len(addresses):
        logger.info(f"Scan oracle limited to the first {scanned} of {len(addresses)} addresses")
    mismatches = []
    for i, addr in enumerate(addresses):
        expected = oracle_lookup(trie, addr)
        if i < scanned:
            second = scan_lookup(fib, addr)
            if second != expected:
                raise StructureCorruptError(f"oracles disagree at {family.format_address(addr)}")
        try:
            got = label(scheme_lookup(structure, addr))
        except StructureCorruptError as e:
            got = f"error: {e}"
        if got != label(expected):
            mismatches.append(Mismatch(family.format_address(addr), label(expected), got))
    return mismatches


def verify_structure(cfg: Config) -> int:
    """Compare an artifact's lookups with both oracles.

    Returns:
        int: 0 when every address agrees, 5 otherwise (the first mismatches are printed)

    Raises:
        ArtifactError: If the artifact is unreadable or its family differs from the table's
    """
    if not cfg.artifact_path:
        raise ConfigError("an artifact path is required")
    structure = read_artifact(cfg.artifact_path)
    fixture = _load_fib(cfg)
    fib = fixture.fib
    if structure.family != fib.family:
        raise ArtifactError(f"artifact is {structure.family.name}, table is {fib.family.name}")
    addresses = _addresses(cfg, fib)
    mismatches = find_mismatches(structure, fixture, addresses)
    name = scheme_name(structure)
    if mismatches:
        rows = [[m.address, m.expected, m.got] for m in mismatches[:SHOWN_MISMATCHES]]
        sys.stdout.write(render_table(["Address", "Expected", "Got"], rows))
        logger.error(f"{name}: {len(mismatches)} of {len(addresses)} addresses disagree with the oracle")
        return EXIT_MISMATCH
    logger.info(f"{name}: all {len(addresses)} addresses agree with both oracles")
    print(f"PASS {name} {len(addresses)} addresses")
    return 0


def map_report(cfg: Config) -> int:
    """Map a program report onto the chip.

    Returns:
        int: 0, or 4 if the program needs more stages than the chip has
    """
    if not cfg.report_path:
        raise ConfigError("a program report path is required")
    try:
        with open(cfg.report_path, "r", encoding="utf-8") as f:
            program = program_from_report(json.load(f))
    except OSError as e:
        raise ArtifactError(f"cannot read {cfg.report_path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ArtifactError(f"{cfg.report_path} is not JSON: {e}") from e
    chip = load_chip(cfg)
    mapping = map_program(program, chip)
    report = _header(cfg, chip, [NOTE_DEFAULT_VALUES, *program.notes, f"placement rule {PLACEMENT_RULE}"])
    report["program"] = program.name
    report["mapping"] = mapping.as_dict()
    rows = [{"step": s.step_id, "first_stage": s.first_stage, "last_stage": s.last_stage} for s in mapping.steps]
    _emit(render_report(report, MAPPING_COLUMNS, rows, cfg.format), cfg.out)
    logger.info(
        f"{program.name}: {mapping.total_blocks} blocks, {mapping.total_pages} pages, {mapping.stages} stages"
    )
    return 0 if mapping.feasible else EXIT_INFEASIBLE


def _scheme_row(name: str, fib: Fib, params: SchemeParams, chip: ChipSpec) -> Dict[str, Any]:
    program = scheme_program(build_scheme(name, fib, params, chip))
    metrics = evaluate(program)
    mapping = map_program(program, chip)
    return {
        "scheme": DISPLAY_NAMES[name],
        "tcam_bits": metrics.tcam_bits,
        "sram_bits": metrics.sram_bits,
        "steps": metrics.steps,
        "tcam_blocks": mapping.total_blocks,
        "sram_pages": mapping.total_pages,
        "stages": mapping.stages,
        "feasible": mapping.feasible,
    }


def compare_rows(fib: Fib, params: SchemeParams, chip: ChipSpec) -> List[Dict[str, Any]]:
    """One row per scheme and baseline; a failing row records its error and the rest still run."""
    rows = []
    for name in SCHEMES:
        try:
            rows.append(_scheme_row(name, fib, params, chip))
        except CramLookupError as e:
            logger.error(f"{DISPLAY_NAMES[name]} failed: {e}")
            rows.append({"scheme": DISPLAY_NAMES[name], "error": str(e)})
    tcam = logical_tcam_cost(fib, chip)
    rows.append(
        {
            "scheme": "Logical TCAM",
            "tcam_blocks": tcam.blocks,
            "sram_pages": 0,
            "stages": tcam.stages,
            "feasible": tcam.blocks <= chip.total_blocks,
        }
    )
    try:
        sail = sail_cost_model(fib, chip)
        rows.append(
            {
                "scheme": "SAIL",
                "tcam_blocks": 0,
                "sram_pages": sail.pages,
                "stages": sail.stages,
                "feasible": sail.feasible,
            }
        )
    except MappingError as e:
        rows.append({"scheme": "SAIL", "error": str(e)})
    return rows


def compare_schemes(cfg: Config) -> int:
    """Side-by-side costs of all schemes and baselines on one table."""
    fixture = _load_fib(cfg)
    fib = fixture.fib
    chip = load_chip(cfg)
    rows = compare_rows(fib, _params(cfg, fib), chip)
    notes = [NOTE_DEFAULT_VALUES, f"placement rule {PLACEMENT_RULE}", NOTE_SAIL_CHUNKS]
    report = _header(cfg, chip, notes)
    report["routes"] = len(fib)
    _emit(render_report(report, COMPARE_COLUMNS, rows, cfg.format), cfg.out)
    return 0


def sweep_report(cfg: Config) -> int:
    """Size sweep (or BSIC k-sweep with ``k_values``) as CSV, JSON or a table."""
    fixture = _load_fib(cfg)
    fib = fixture.fib
    chip = load_chip(cfg)
    report = _header(cfg, chip, [NOTE_DEFAULT_VALUES, f"placement rule {PLACEMENT_RULE}"])
    if cfg.k_values:
        rows = [row.as_dict() for row in k_sweep(fib, cfg.k_values, chip, cfg.seed)]
        columns = K_SWEEP_COLUMNS
        report["scheme"] = "bsic"
    else:
        if not cfg.scheme:
            raise ConfigError("sweep needs --scheme or --k-values")
        sizes = cfg.sizes or [len(fib)]
        rows = [row.as_dict() for row in sweep(cfg.scheme, fib, sizes, chip, cfg.method, cfg.seed, _params(cfg, fib))]
        columns = SWEEP_COLUMNS
        report["scheme"] = cfg.scheme
        report["method"] = cfg.method
    _emit(render_report(report, columns, rows, cfg.format), cfg.out)
    return 0


def scale_fib(cfg: Config) -> int:
    """Write a synthetic table grown by length scaling or multiverse cloning."""
    fixture = _load_fib(cfg)
    if cfg.method == "multiverse":
        scaled = multiverse_scale(fixture.fib, cfg.universes)
    elif cfg.method == "length":
        scaled = scale_by_length(fixture.fib, cfg.factor, cfg.seed)
    else:
        raise ConfigError(f"unknown scaling method {cfg.method!r}")
    _emit(serialize_fib(scaled, fixture.labels or None), cfg.out)
    return 0

