"""
Command-line interface for the cramlookup toolkit.
"""

import argparse
import logging
import os
import sys
from typing import List

from .config import Config
from .errors import CramLookupError
from .runner import build_structure, compare_schemes, map_report, scale_fib, sweep_report, verify_structure
from .schemes import SCHEMES


def debug_except_hook(type, value, tb):
    print("Godzilla hates {0}".format(type.__name__))
    print(str(type))
    import pdb
    import traceback

    traceback.print_exception(type, value, tb)
    pdb.post_mortem(tb)


debug = os.environ.get("CRAMLOOKUP_DEBUG", False)
level = logging.INFO
if debug:
    sys.excepthook = debug_except_hook
    level = logging.DEBUG
log_format = "%(asctime)s %(name)s:%(lineno)d:[%(levelname)s] %(message)s"
logging.basicConfig(stream=sys.stderr, level=level, format=log_format)
logger = logging.getLogger(__name__)


def _int_list(text: str) -> List[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from e


def add_table_arguments(parser: argparse.ArgumentParser) -> None:
    """Routing table input, chip, output and logging options shared by every subcommand."""
    parser.add_argument("fib_path", action="store", help="Routing table file (FIB text, or a fixture with --fixture)")
    parser.add_argument(
        "--family",
        dest="family",
        action="store",
        default="v4",
        choices=["v4", "v6"],
        help="Address family of the routing table",
    )
    parser.add_argument(
        "--fixture",
        dest="fixture",
        action="store_true",
        default=False,
        help="Read the table as a 'width W' toy fixture",
    )
    parser.add_argument(
        "--hop-bits",
        dest="hop_bits",
        action="store",
        type=int,
        default=8,
        help="Next-hop id width in bits",
    )
    parser.add_argument("--chip", dest="chip_path", action="store", default="", help="Chip config file (key = value)")
    parser.add_argument(
        "--tofino",
        dest="tofino",
        action="store_true",
        default=False,
        help="Use the Tofino-2 preset (50%% SRAM utilization)",
    )
    parser.add_argument("--seed", dest="seed", action="store", type=int, default=0, help="Hashing and sampling seed")
    parser.add_argument("--out", dest="out", action="store", default="", help="Output file (default: stdout)")
    parser.add_argument(
        "--format",
        dest="format",
        action="store",
        default="table",
        choices=["table", "json", "csv"],
        help="Report format",
    )
    parser.add_argument("--verbose", dest="verbose", action="store_true", default=False, help="enable verbose output")
    parser.add_argument("--debug", dest="debug", action="store_true", default=False, help="Turn debug on")


def add_scheme_arguments(parser: argparse.ArgumentParser) -> None:
    """Scheme parameters; unset values take the family defaults."""
    parser.add_argument("--min-bmp", dest="min_bmp", action="store", type=int, default=None, help="RESAIL min_bmp")
    parser.add_argument("--pivot", dest="pivot", action="store", type=int, default=None, help="RESAIL pivot level")
    parser.add_argument("--k", dest="k", action="store", type=int, default=None, help="BSIC initial slice size")
    parser.add_argument("--strides", dest="strides", action="store", default="", help="MashUp strides, e.g. 16-4-4-8")


class CmdLine(object):
    """Command-line interface dispatcher for cramlookup.

    Uses dispatch pattern to route commands to appropriate methods.
    """

    def __init__(self):
        """Parse the first argument as the subcommand and invoke the method of that name.

        Raises:
            SystemExit: With the subcommand's exit code, or 1 on an unrecognized command
        """
        parser = argparse.ArgumentParser(
            description="CRAM cost model and CAM+RAM IP lookup schemes",
            usage="""cramlookup <command> [<args>]

            cramlookup commands are:
                build       Build a lookup structure, write its artifact and report its cost
                verify      Check an artifact against the longest-prefix-match oracles
                map         Map a program report onto an RMT chip
                compare     Compare all schemes and baselines on one table
                sweep       Cost curve over database sizes or BSIC slice sizes
                scale       Write a synthetic, scaled routing table
            """,
            epilog="""
                Examples:
                cramlookup build rib.txt --scheme resail --out resail.json --report-file resail.program.json
                cramlookup verify rib.txt --artifact resail.json --count 100000
                cramlookup build tests/testdata/eight_routes.fib --fixture --scheme bsic --verbose
                cramlookup map --report-file resail.program.json --tofino
                cramlookup compare rib.txt --format csv
                cramlookup sweep rib6.txt --family v6 --scheme bsic --method multiverse --sizes 200000,400000
                cramlookup scale rib.txt --factor 2.42 --out rib-scaled.txt
            """,
        )

        parser.add_argument("command", help="Subcommand to run")
        # parse_args defaults to [1:] for args, but you need to
        # exclude the rest of the args too, or validation will fail
        args = parser.parse_args(sys.argv[1:2])
        if not hasattr(self, args.command):
            logger.error("Unrecognized command")
            parser.print_help()
            sys.exit(1)
        # use dispatch pattern to invoke method with same name
        code = getattr(self, args.command)()
        if code:
            sys.exit(code)

    def _run(self, parser: argparse.ArgumentParser, command: str, runner) -> int:
        args = parser.parse_args(sys.argv[2:])
        info = vars(args)
        info["command"] = command
        cfg = Config(**info)
        if cfg.debug:
            logging.getLogger().setLevel(logging.DEBUG)
        elif not cfg.verbose:
            logging.getLogger("cramlookup").setLevel(logging.WARNING)
        return runner(cfg)

    def build(self) -> int:
        """Build one scheme from a routing table.

        Supported options:
            --scheme NAME: resail, bsic or mashup
            --min-bmp/--pivot/--k/--strides: Scheme parameters
            --out FILE: Structure artifact (JSON)
            --report-file FILE: CRAM program report consumed by ``map``
            --verbose: Also log a dump of the built tables

        Returns:
            int: 0, or 4 if the structure does not fit the chip
        """
        parser = argparse.ArgumentParser(description="Build a CAM+RAM lookup structure\n")
        parser.add_argument("--scheme", dest="scheme", action="store", required=True, choices=SCHEMES, help="Scheme")
        parser.add_argument(
            "--report-file",
            dest="report_path",
            action="store",
            default="",
            help="Write the CRAM program report here",
        )
        add_scheme_arguments(parser)
        add_table_arguments(parser)
        return self._run(parser, "build", build_structure)

    def verify(self) -> int:
        """Compare an artifact's lookups with both oracles.

        Supported options:
            --artifact FILE: Structure artifact written by ``build``
            --count N: Number of seeded random addresses
            --addresses FILE: Addresses to check, one per line
            --exhaustive: Every address of a toy family

        Returns:
            int: 0 on agreement, 5 on any mismatch
        """
        parser = argparse.ArgumentParser(description="Verify a structure artifact\n")
        parser.add_argument("--artifact", dest="artifact_path", action="store", required=True, help="Artifact file")
        parser.add_argument("--count", dest="count", action="store", type=int, default=10000, help="Random addresses")
        parser.add_argument(
            "--addresses",
            dest="addresses_path",
            action="store",
            default="",
            help="File of addresses to check, one per line",
        )
        parser.add_argument(
            "--exhaustive",
            dest="exhaustive",
            action="store_true",
            default=False,
            help="Check every address (toy widths only)",
        )
        add_table_arguments(parser)
        return self._run(parser, "verify", verify_structure)

    def map(self) -> int:
        """Map a program report onto the chip.

        Returns:
            int: 0, or 4 if the program needs more stages than the chip has
        """
        parser = argparse.ArgumentParser(description="Map a CRAM program onto an RMT chip\n")
        parser.add_argument("--report-file", dest="report_path", action="store", required=True, help="Program report")
        parser.add_argument("--chip", dest="chip_path", action="store", default="", help="Chip config file")
        parser.add_argument("--tofino", dest="tofino", action="store_true", default=False, help="Tofino-2 preset")
        parser.add_argument("--seed", dest="seed", action="store", type=int, default=0, help="Seed recorded in report")
        parser.add_argument("--out", dest="out", action="store", default="", help="Output file (default: stdout)")
        parser.add_argument(
            "--format",
            dest="format",
            action="store",
            default="table",
            choices=["table", "json", "csv"],
            help="Report format",
        )
        parser.add_argument("--verbose", dest="verbose", action="store_true", default=False, help="verbose output")
        parser.add_argument("--debug", dest="debug", action="store_true", default=False, help="Turn debug on")
        return self._run(parser, "map", map_report)

    def compare(self) -> int:
        """Build every scheme and baseline on one table and tabulate their costs."""
        parser = argparse.ArgumentParser(description="Compare schemes and baselines\n")
        add_scheme_arguments(parser)
        add_table_arguments(parser)
        return self._run(parser, "compare", compare_schemes)

    def sweep(self) -> int:
        """Cost curve over scaled database sizes, or a BSIC k-sweep with ``--k-values``."""
        parser = argparse.ArgumentParser(description="Scaling and slice-size sweeps\n")
        parser.add_argument("--scheme", dest="scheme", action="store", default="", choices=["", *SCHEMES])
        parser.add_argument(
            "--sizes",
            dest="sizes",
            action="store",
            type=_int_list,
            default=[],
            help="Ascending sizes, e.g. 100000,200000",
        )
        parser.add_argument(
            "--k-values",
            dest="k_values",
            action="store",
            type=_int_list,
            default=[],
            help="BSIC slice sizes, e.g. 12,16,20,24",
        )
        parser.add_argument(
            "--method",
            dest="method",
            action="store",
            default="length",
            choices=["length", "multiverse"],
            help="Scaling method",
        )
        add_scheme_arguments(parser)
        add_table_arguments(parser)
        return self._run(parser, "sweep", sweep_report)

    def scale(self) -> int:
        """Write a scaled table: ``--factor`` for length scaling, ``--universes`` for multiverse."""
        parser = argparse.ArgumentParser(description="Generate a synthetic routing table\n")
        parser.add_argument(
            "--method",
            dest="method",
            action="store",
            default="length",
            choices=["length", "multiverse"],
            help="Scaling method",
        )
        parser.add_argument("--factor", dest="factor", action="store", type=float, default=1.0, help="Length factor")
        parser.add_argument("--universes", dest="universes", action="store", type=int, default=1, help="Universes")
        add_table_arguments(parser)
        return self._run(parser, "scale", scale_fib)


def main() -> int:
    """Entry point for the cramlookup command-line application.

    Returns:
        int: Return code (0 on success, the error's exit code otherwise)

    Examples:
        >>> # Run via command line:
        >>> # cramlookup build rib.txt --scheme resail --out resail.json
        >>> # cramlookup verify rib.txt --artifact resail.json
    """
    try:
        CmdLine()
        return 0
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 1
    except CramLookupError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return e.exit_code
    except Exception as e:
        logger.error(f"Fatal error: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
