"""
Prefix and routing table domain types shared by every lookup scheme.
"""

import ipaddress
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterator, List, Tuple

from .errors import PrefixError, UpdateError
from .utils.bits import bit_string, prefix_mask

logger = logging.getLogger(__name__)

# Sentinel next hop: no covering route and no default route.
NO_ROUTE = -1
DEFAULT_HOP_BITS = 8


@dataclass(frozen=True, order=True)
class Family:
    """Address family: a name and the width of its address container in bits."""

    name: str
    width: int

    def __post_init__(self):
        if not 1 <= self.width <= 64:
            raise PrefixError(f"family width must be in 1..64, got {self.width}")

    @classmethod
    def toy(cls, width: int) -> "Family":
        """W-bit universe used by fixtures and exhaustive tests."""
        return cls(f"toy{width}", width)

    @classmethod
    def by_name(cls, name: str) -> "Family":
        if name == "v4":
            return V4
        if name == "v6":
            return V6
        if name.startswith("toy") and name[3:].isdigit():
            return cls.toy(int(name[3:]))
        raise PrefixError(f"unknown address family {name!r}")

    @property
    def is_toy(self) -> bool:
        return self.name.startswith("toy")

    def format_address(self, addr: int) -> str:
        """Render a full-width address in the family's usual notation."""
        if self == V4:
            return str(ipaddress.IPv4Address(addr))
        if self == V6:
            return str(ipaddress.IPv6Address(addr << 64))
        return bit_string(addr, self.width)


V4 = Family("v4", 32)
# Only the upper 64 bits of an IPv6 address take part in global routing.
V6 = Family("v6", 64)


@dataclass(frozen=True, order=True)
class IpPrefix:
    """A family-tagged prefix with its value left-aligned in the address container.

    Attributes:
        family: Address family the prefix belongs to
        length: Number of significant leading bits
        value: Container value; every bit past ``length`` is zero

    Raises:
        PrefixError: If length exceeds the family width or host bits are set

    Examples:
        >>> p = IpPrefix.from_bits(Family.toy(8), 0b011, 3)
        >>> bin(p.value), p.bits()
        ('0b1100000', 3)
    """

    family: Family
    length: int
    value: int

    def __post_init__(self):
        width = self.family.width
        if not 0 <= self.length <= width:
            raise PrefixError(f"prefix length {self.length} outside 0..{width} for {self.family.name}")
        if self.value < 0 or self.value >> width:
            raise PrefixError(f"prefix value {self.value:#x} does not fit {width} bits")
        if self.value & ~prefix_mask(self.length, width):
            raise PrefixError(f"prefix value {self.value:#x} has bits set beyond length {self.length}")

    @classmethod
    def from_bits(cls, family: Family, bits: int, length: int) -> "IpPrefix":
        """Build a prefix from its ``length`` significant bits given right-aligned."""
        if length < 0 or length > family.width:
            raise PrefixError(f"prefix length {length} outside 0..{family.width} for {family.name}")
        if bits >> length:
            raise PrefixError(f"bits {bits:#x} do not fit in {length} bits")
        return cls(family, length, bits << (family.width - length))

    @classmethod
    def of_address(cls, family: Family, addr: int, length: int) -> "IpPrefix":
        """The length-bit prefix covering ``addr``."""
        return cls(family, length, addr & prefix_mask(length, family.width))

    def bits(self) -> int:
        """Significant bits of the prefix as a right-aligned integer."""
        return self.value >> (self.family.width - self.length)

    def mask(self) -> int:
        return prefix_mask(self.length, self.family.width)

    def covers(self, addr: int) -> bool:
        return (addr & self.mask()) == self.value

    def slice(self, start: int, count: int) -> int:
        """Bits ``start .. start+count`` of the container, counted from the left."""
        width = self.family.width
        return (self.value >> (width - start - count)) & ((1 << count) - 1)

    def last_address(self) -> int:
        return self.value | (((1 << self.family.width) - 1) & ~self.mask())

    def __str__(self) -> str:
        if self.family == V4:
            return f"{ipaddress.IPv4Address(self.value)}/{self.length}"
        if self.family == V6:
            return f"{ipaddress.IPv6Address(self.value << 64)}/{self.length}"
        return bit_string(self.bits(), self.length) + "*" * (self.family.width - self.length)


@dataclass(frozen=True)
class Fib:
    """Deduplicated set of routes for one address family.

    Attributes:
        family: Address family of every route
        routes: Mapping prefix to next-hop id
        default_hop: Hop returned when no route covers an address (NO_ROUTE if none)
        hop_bits: Next-hop id width d; every id is below 2**d

    Raises:
        PrefixError: If a route has another family or a hop id does not fit ``hop_bits``
    """

    family: Family
    routes: Dict[IpPrefix, int] = field(default_factory=dict)
    default_hop: int = NO_ROUTE
    hop_bits: int = DEFAULT_HOP_BITS

    def __post_init__(self):
        if self.hop_bits < 1:
            raise PrefixError(f"hop width must be positive, got {self.hop_bits}")
        limit = 1 << self.hop_bits
        for prefix, hop in self.routes.items():
            if prefix.family != self.family:
                raise PrefixError(f"route {prefix} is {prefix.family.name}, table is {self.family.name}")
            if not 0 <= hop < limit:
                raise PrefixError(f"next hop {hop} of {prefix} does not fit {self.hop_bits} bits")
        if self.default_hop != NO_ROUTE and not 0 <= self.default_hop < limit:
            raise PrefixError(f"default hop {self.default_hop} does not fit {self.hop_bits} bits")

    def __len__(self) -> int:
        return len(self.routes)

    def __iter__(self) -> Iterator[Tuple[IpPrefix, int]]:
        return iter(self.sorted_routes())

    def __contains__(self, prefix: IpPrefix) -> bool:
        return prefix in self.routes

    def sorted_routes(self) -> List[Tuple[IpPrefix, int]]:
        """Routes ordered by (length, value)."""
        return sorted(self.routes.items(), key=lambda item: (item[0].length, item[0].value))

    def hops(self) -> List[int]:
        return sorted(set(self.routes.values()))

    def with_route(self, prefix: IpPrefix, hop: int) -> "Fib":
        routes = dict(self.routes)
        routes[prefix] = hop
        return Fib(self.family, routes, self.default_hop, self.hop_bits)

    def without_route(self, prefix: IpPrefix) -> "Fib":
        if prefix not in self.routes:
            raise UpdateError(f"route {prefix} is not in the table")
        routes = dict(self.routes)
        del routes[prefix]
        return Fib(self.family, routes, self.default_hop, self.hop_bits)


@dataclass
class LengthHistogram:
    """Per-length route counts, index 0 through the family width."""

    counts: List[int]

    @property
    def total(self) -> int:
        return sum(self.counts)

    def lengths(self) -> List[int]:
        """Lengths holding at least one route."""
        return [length for length, count in enumerate(self.counts) if count]


class UpdateOp(Enum):
    INSERT = "insert"
    DELETE = "delete"
    CHANGE = "change"


def expand_prefix(p: IpPrefix, target_len: int) -> List[IpPrefix]:
    """Expand a prefix into the 2**(target_len - length) prefixes covering its range.

    Args:
        p: Prefix to expand
        target_len: Length of every produced prefix

    Returns:
        List[IpPrefix]: Prefixes in ascending value order

    Raises:
        PrefixError: If target_len is shorter than p or wider than the family

    Examples:
        >>> toy = Family.toy(8)
        >>> [str(q) for q in expand_prefix(IpPrefix.from_bits(toy, 0b011, 3), 4)]
        ['0110****', '0111****']
    """
    width = p.family.width
    if target_len > width:
        raise PrefixError(f"cannot expand {p} to {target_len} bits, family width is {width}")
    if target_len < p.length:
        raise PrefixError(f"cannot expand {p} to a shorter length {target_len}")
    extra = target_len - p.length
    step = 1 << (width - target_len)
    return [IpPrefix(p.family, target_len, p.value + i * step) for i in range(1 << extra)]


def length_histogram(fib: Fib) -> LengthHistogram:
    counts = [0] * (fib.family.width + 1)
    for prefix in fib.routes:
        counts[prefix.length] += 1
    return LengthHistogram(counts)


def apply_update(fib: Fib, op: UpdateOp, prefix: IpPrefix, hop: int = NO_ROUTE) -> Fib:
    """Apply one insert, delete or change to an immutable table.

    Raises:
        UpdateError: Inserting a present route, or deleting/changing an absent one
    """
    if op is UpdateOp.INSERT:
        if prefix in fib.routes:
            raise UpdateError(f"route {prefix} already exists")
        return fib.with_route(prefix, hop)
    if op is UpdateOp.DELETE:
        return fib.without_route(prefix)
    if prefix not in fib.routes:
        raise UpdateError(f"cannot change missing route {prefix}")
    return fib.with_route(prefix, hop)
