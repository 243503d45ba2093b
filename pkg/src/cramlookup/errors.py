"""Exception hierarchy shared by every cramlookup module.

Each exception carries the process exit code the command line front end
reports when it escapes a subcommand.
"""

from typing import Optional


class CramLookupError(Exception):
    """Base class for all cramlookup errors."""

    exit_code = 1


class FibParseError(CramLookupError):
    """Raised when a routing table line cannot be parsed."""

    exit_code = 2

    def __init__(self, message: str, line_number: Optional[int] = None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class ArtifactError(CramLookupError):
    """Raised when a serialized structure artifact is unreadable or inconsistent."""

    exit_code = 2


class PrefixError(CramLookupError):
    """Raised for prefixes that violate their family's width rules."""

    exit_code = 3


class ProgramError(CramLookupError):
    """Raised for malformed CRAM programs or table specifications."""

    exit_code = 3


class DagError(ProgramError):
    """Raised when a program's step graph contains a cycle."""


class BuildError(CramLookupError):
    """Raised when a lookup structure cannot be built from a routing table."""

    exit_code = 3


class DLeftOverflowError(BuildError):
    """Raised when the d-left hash table cannot place a key after all retries."""

    def __init__(self, message: str, load_factor: float):
        self.load_factor = load_factor
        super().__init__(f"{message} (load factor {load_factor:.3f})")


class UpdateError(CramLookupError):
    """Raised when an incremental update cannot be applied."""

    exit_code = 3


class StructureCorruptError(CramLookupError):
    """Raised when a lookup walks into an inconsistent structure."""

    exit_code = 5


class MappingError(CramLookupError):
    """Raised when a program cannot be mapped onto the chip at all."""

    exit_code = 4


class ScalingError(CramLookupError):
    """Raised when a synthetic database cannot be generated."""

    exit_code = 3
