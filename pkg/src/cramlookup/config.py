import hashlib
import json
import logging
import math
from dataclasses import asdict, dataclass, field, fields
from typing import List, Optional

from .errors import CramLookupError

logger = logging.getLogger(__name__)


class ConfigError(CramLookupError):
    """Raised when a configuration file or option is invalid."""

    exit_code = 2


class Model:
    """Base class for dataclass objects. Provides as_dict"""

    def as_dict(self):
        """Get a dictionary containg object properties"""
        return asdict(self)


@dataclass
class Config(Model):
    """Data class for Config.

    Attributes:
        command: Subcommand being run (build, verify, map, compare, sweep, scale)
        scheme: Lookup scheme name (resail, bsic, mashup)
        fib_path: Routing table file (FIB text, or a toy fixture with ``fixture``)
        fixture: Treat ``fib_path`` as a W-bit toy fixture instead of v4/v6 text
        family: Address family of ``fib_path`` (v4 or v6)
        hop_bits: Next-hop id width d in bits
        min_bmp: RESAIL smallest bitmap level (None selects the family default)
        pivot: RESAIL pivot level (None selects the family default)
        k: BSIC initial slice size (None selects the family default)
        strides: MashUp stride plan such as "16-4-4-8" (empty selects the family default)
        chip_path: Optional key=value chip configuration file
        tofino: Use the 50% SRAM utilization chip preset
        seed: Seed for hashing, address sampling and synthesis
        out: Output path for artifacts, reports or synthetic tables
        format: Report format (json, csv, table)
        artifact_path: Structure artifact read by verify
        report_path: Program report read by map
        exhaustive: Verify every address of the family (toy widths only)
        count: Number of random addresses for verify
        addresses_path: File of addresses (one per line) for verify
        sizes: Database sizes for sweep
        k_values: Slice sizes for a BSIC k-sweep
        method: Scaling method (length or multiverse)
        factor: Length-scaling factor for scale
        universes: Universe count for multiverse scaling
        verbose: Enable verbose output logging
        debug: Enable debug mode with detailed output
    """

    command: str = ""
    scheme: str = ""
    fib_path: str = ""
    fixture: bool = False
    family: str = "v4"
    hop_bits: int = 8
    min_bmp: Optional[int] = None
    pivot: Optional[int] = None
    k: Optional[int] = None
    strides: str = ""
    chip_path: str = ""
    tofino: bool = False
    seed: int = 0
    out: str = ""
    format: str = "table"
    artifact_path: str = ""
    report_path: str = ""
    exhaustive: bool = False
    count: int = 10000
    addresses_path: str = ""
    sizes: List[int] = field(default_factory=list)
    k_values: List[int] = field(default_factory=list)
    method: str = "length"
    factor: float = 1.0
    universes: int = 1
    verbose: bool = False
    debug: bool = False


@dataclass(frozen=True)
class ChipSpec(Model):
    """Memory geometry and stage budget of an RMT-style chip.

    Defaults describe the ideal RMT chip: Tofino-2 block and page sizes,
    pipe totals of 480 TCAM blocks and 1600 SRAM pages spread over 20 stages,
    and full SRAM utilization.
    """

    tcam_block_width: int = 44
    tcam_block_depth: int = 512
    sram_page_width: int = 128
    sram_page_depth: int = 1024
    blocks_per_stage: int = 24
    pages_per_stage: int = 80
    stage_count: int = 20
    sram_utilization: float = 1.0

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) <= 0:
                raise ConfigError(f"chip parameter {f.name} must be positive")
        if self.sram_utilization > 1.0:
            raise ConfigError("sram_utilization must be in (0, 1]")

    @property
    def tcam_block_bits(self) -> int:
        return self.tcam_block_width * self.tcam_block_depth

    @property
    def sram_page_bits(self) -> int:
        return self.sram_page_width * self.sram_page_depth

    @property
    def total_blocks(self) -> int:
        return self.blocks_per_stage * self.stage_count

    @property
    def total_pages(self) -> int:
        return self.pages_per_stage * self.stage_count

    def pages_for_bits(self, bits: int) -> int:
        """SRAM pages needed to hold ``bits`` at the configured utilization."""
        if bits <= 0:
            return 0
        return math.ceil(bits / (self.sram_page_bits * self.sram_utilization))

    def digest(self) -> str:
        """Short stable hash of the chip parameters, embedded in reports."""
        canonical = json.dumps(self.as_dict(), sort_keys=True)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]

    @classmethod
    def tofino2(cls) -> "ChipSpec":
        """Tofino-2 like preset: action bits cap SRAM utilization at 50%."""
        return cls(sram_utilization=0.5)

    @classmethod
    def from_text(cls, text: str) -> "ChipSpec":
        """Parse ``key = value`` lines; ``#`` starts a comment.

        Examples:
            >>> ChipSpec.from_text("stage_count = 12").stage_count
            12
        """
        known = {f.name: f.type for f in fields(cls)}
        values = {}
        for line_number, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"chip config line {line_number}: expected key = value")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in known:
                raise ConfigError(f"chip config line {line_number}: unknown key {key!r}")
            try:
                values[key] = float(value) if key == "sram_utilization" else int(value)
            except ValueError as e:
                raise ConfigError(f"chip config line {line_number}: bad value {value!r}") from e
        return cls(**values)

    @classmethod
    def from_file(cls, path: str) -> "ChipSpec":
        with open(path, "r", encoding="utf-8") as f:
            chip = cls.from_text(f.read())
        logger.debug(f"Loaded chip spec {chip.digest()} from {path}")
        return chip


def load_chip(cfg: Config) -> ChipSpec:
    """Resolve the chip for a run: config file, Tofino preset, or the ideal chip."""
    if cfg.chip_path:
        return ChipSpec.from_file(cfg.chip_path)
    if cfg.tofino:
        return ChipSpec.tofino2()
    return ChipSpec()
