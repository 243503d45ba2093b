"""
Readers and writers for routing table text.

Two formats are understood:

* FIB text: ``<address>/<length> <nexthop-id>`` per line, dotted-quad for v4
  and hex-colon for v6, plus an optional ``default <nexthop-id>`` line.
* Toy fixtures: a ``width <W>`` header followed by ``<bits>/<length> <label>``
  lines. Labels are mapped to ids in sorted label order.

``#`` starts a comment in both formats; blank lines are skipped.
"""

import ipaddress
import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, TextIO, Union

from ..errors import FibParseError, PrefixError
from ..fib import DEFAULT_HOP_BITS, NO_ROUTE, V4, V6, Family, Fib, IpPrefix

logger = logging.getLogger(__name__)

DEFAULT_KEYWORD = "default"
WIDTH_KEYWORD = "width"


@dataclass
class Fixture:
    """A toy routing table together with its hop label map."""

    fib: Fib
    labels: Dict[str, int] = field(default_factory=dict)

    def label_of(self, hop: int) -> str:
        """Label for a hop id; ``-`` for the sentinel."""
        for label, value in self.labels.items():
            if value == hop:
                return label
        return "-" if hop == NO_ROUTE else str(hop)

    def hop_of(self, label: str) -> int:
        return self.labels[label]


def _content_lines(stream: Union[TextIO, Iterable[str]]):
    for line_number, raw in enumerate(stream, start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield line_number, line


def _parse_hop(text: str, hop_bits: int, line_number: int) -> int:
    try:
        hop = int(text)
    except ValueError as e:
        raise FibParseError(f"next hop {text!r} is not an integer", line_number) from e
    if not 0 <= hop < (1 << hop_bits):
        raise FibParseError(f"next hop {hop} does not fit {hop_bits} bits", line_number)
    return hop


def parse_prefix_text(text: str, family: Family) -> IpPrefix:
    """Parse ``address/length`` in v4 or v6 notation.

    Host bits past the length are cleared. v6 prefixes longer than 64 bits
    are rejected rather than clipped.

    Raises:
        PrefixError: On a malformed prefix or a length out of range
    """
    try:
        network = ipaddress.ip_network(text, strict=False)
    except ValueError as e:
        raise PrefixError(f"malformed prefix {text!r}: {e}") from e
    if family == V4:
        if network.version != 4:
            raise PrefixError(f"{text!r} is not an IPv4 prefix")
        return IpPrefix(V4, network.prefixlen, int(network.network_address))
    if family == V6:
        if network.version != 6:
            raise PrefixError(f"{text!r} is not an IPv6 prefix")
        if network.prefixlen > V6.width:
            raise PrefixError(f"IPv6 prefix {text!r} is longer than {V6.width} bits")
        return IpPrefix(V6, network.prefixlen, int(network.network_address) >> 64)
    raise PrefixError(f"family {family.name} has no address notation; use a fixture")


def parse_address(text: str, family: Family) -> int:
    """Parse one full-width address: dotted-quad, hex-colon or a W-bit 0/1 string."""
    text = text.strip()
    if family.is_toy:
        if len(text) != family.width or set(text) - {"0", "1"}:
            raise PrefixError(f"address {text!r} is not a {family.width}-bit string")
        return int(text, 2)
    try:
        addr = ipaddress.ip_address(text)
    except ValueError as e:
        raise PrefixError(f"malformed address {text!r}") from e
    if family == V4 and addr.version == 4:
        return int(addr)
    if family == V6 and addr.version == 6:
        return int(addr) >> 64
    raise PrefixError(f"address {text!r} is not {family.name}")


def parse_fib(stream: Union[TextIO, Iterable[str]], family: Family, hop_bits: int = DEFAULT_HOP_BITS) -> Fib:
    """Parse FIB text into a deduplicated table.

    Args:
        stream: Lines of FIB text
        family: V4 or V6
        hop_bits: Next-hop id width d

    Returns:
        Fib: Routes with later duplicates overriding earlier ones

    Raises:
        FibParseError: On a malformed line (with its line number)

    Examples:
        >>> fib = parse_fib(["10.0.0.0/8 1", "10.0.0.0/8 2"], V4)
        >>> list(fib.routes.values())
        [2]
    """
    routes: Dict[IpPrefix, int] = {}
    default_hop = NO_ROUTE
    duplicates = 0
    for line_number, line in _content_lines(stream):
        parts = line.split()
        if len(parts) != 2:
            raise FibParseError(f"expected '<prefix> <nexthop>', got {line!r}", line_number)
        if parts[0] == DEFAULT_KEYWORD:
            default_hop = _parse_hop(parts[1], hop_bits, line_number)
            continue
        if "/" not in parts[0]:
            raise FibParseError(f"prefix {parts[0]!r} has no length", line_number)
        try:
            prefix = parse_prefix_text(parts[0], family)
        except PrefixError as e:
            raise FibParseError(str(e), line_number) from e
        if prefix in routes:
            duplicates += 1
        routes[prefix] = _parse_hop(parts[1], hop_bits, line_number)
    if duplicates:
        logger.info(f"Replaced {duplicates} duplicate prefix lines, last line wins")
    return Fib(family, routes, default_hop, hop_bits)


def _fixture_prefix(text: str, family: Family, line_number: int) -> IpPrefix:
    bits, _, length_text = text.partition("/")
    try:
        length = int(length_text)
    except ValueError as e:
        raise FibParseError(f"bad prefix length in {text!r}", line_number) from e
    bits = bits.rstrip("*")
    if len(bits) != length or set(bits) - {"0", "1"}:
        raise FibParseError(f"prefix {text!r} must spell exactly {length} bits", line_number)
    try:
        return IpPrefix.from_bits(family, int(bits, 2) if bits else 0, length)
    except PrefixError as e:
        raise FibParseError(str(e), line_number) from e


def load_fixture(stream: Union[TextIO, Iterable[str]], hop_bits: int = DEFAULT_HOP_BITS) -> Fixture:
    """Read a ``width <W>`` headed toy table.

    Raises:
        FibParseError: On a missing header or a malformed line
    """
    family: Optional[Family] = None
    rows: List[tuple] = []
    default_label = None
    for line_number, line in _content_lines(stream):
        parts = line.split()
        if len(parts) != 2:
            raise FibParseError(f"expected two fields, got {line!r}", line_number)
        if family is None:
            if parts[0] != WIDTH_KEYWORD or not parts[1].isdigit():
                raise FibParseError("fixture must start with 'width <W>'", line_number)
            try:
                family = Family.toy(int(parts[1]))
            except PrefixError as e:
                raise FibParseError(str(e), line_number) from e
            continue
        if parts[0] == DEFAULT_KEYWORD:
            default_label = parts[1]
            continue
        rows.append((_fixture_prefix(parts[0], family, line_number), parts[1], line_number))
    if family is None:
        raise FibParseError("fixture has no 'width <W>' header")

    names = sorted({label for _, label, _ in rows} | ({default_label} if default_label else set()))
    if len(names) > (1 << hop_bits):
        raise FibParseError(f"{len(names)} labels do not fit {hop_bits} hop bits")
    labels = {name: i for i, name in enumerate(names)}
    routes = {prefix: labels[label] for prefix, label, _ in rows}
    default_hop = labels[default_label] if default_label else NO_ROUTE
    logger.debug(f"Loaded {len(routes)} fixture routes over {family.width} bits with labels {names}")
    return Fixture(Fib(family, routes, default_hop, hop_bits), labels)


def serialize_fib(fib: Fib, labels: Optional[Dict[str, int]] = None) -> str:
    """Write a table back out in the format it is read from.

    Toy families produce fixture text; ``labels`` restores hop names.
    """
    lines = []
    if fib.family.is_toy:
        names = {hop: name for name, hop in (labels or {}).items()}
        lines.append(f"{WIDTH_KEYWORD} {fib.family.width}")
        if fib.default_hop != NO_ROUTE:
            lines.append(f"{DEFAULT_KEYWORD} {names.get(fib.default_hop, fib.default_hop)}")
        for prefix, hop in fib.sorted_routes():
            bits = format(prefix.bits(), f"0{prefix.length}b") if prefix.length else ""
            lines.append(f"{bits}/{prefix.length} {names.get(hop, hop)}")
    else:
        if fib.default_hop != NO_ROUTE:
            lines.append(f"{DEFAULT_KEYWORD} {fib.default_hop}")
        for prefix, hop in fib.sorted_routes():
            lines.append(f"{prefix} {hop}")
    return "\n".join(lines) + "\n"


def read_fib(path: str, family: Family, fixture: bool = False, hop_bits: int = DEFAULT_HOP_BITS) -> Fixture:
    """Open a table file; plain FIB text comes back with an empty label map."""
    with open(path, "r", encoding="utf-8") as f:
        if fixture:
            return load_fixture(f, hop_bits)
        return Fixture(parse_fib(f, family, hop_bits))
