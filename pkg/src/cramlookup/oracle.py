"""
Reference longest-prefix match.

Two independent oracles: a unibit binary trie and a linear scan over the
routes. Every scheme's lookup is checked against both.
"""

import logging
from typing import List, Optional

import numpy as np

from .fib import NO_ROUTE, Family, Fib, IpPrefix

logger = logging.getLogger(__name__)


class TrieNode:
    __slots__ = ("children", "hop")

    def __init__(self):
        self.children: List[Optional["TrieNode"]] = [None, None]
        self.hop = NO_ROUTE


class BinaryTrie:
    """Unibit trie; the path to a hop-bearing node spells one stored prefix."""

    def __init__(self, family: Family, default_hop: int = NO_ROUTE):
        self.family = family
        self.default_hop = default_hop
        self.root = TrieNode()
        self.route_count = 0

    def _bit(self, value: int, depth: int) -> int:
        return (value >> (self.family.width - 1 - depth)) & 1

    def insert(self, prefix: IpPrefix, hop: int) -> None:
        node = self.root
        for depth in range(prefix.length):
            bit = self._bit(prefix.value, depth)
            if node.children[bit] is None:
                node.children[bit] = TrieNode()
            node = node.children[bit]
        if node.hop == NO_ROUTE:
            self.route_count += 1
        node.hop = hop

    def delete(self, prefix: IpPrefix) -> bool:
        """Remove a prefix and prune nodes left without hops or children.

        Returns:
            bool: False if the prefix was not stored
        """
        path = [self.root]
        node = self.root
        for depth in range(prefix.length):
            node = node.children[self._bit(prefix.value, depth)]
            if node is None:
                return False
            path.append(node)
        if node.hop == NO_ROUTE:
            return False
        node.hop = NO_ROUTE
        self.route_count -= 1
        for depth in range(prefix.length, 0, -1):
            child = path[depth]
            if child.hop != NO_ROUTE or child.children[0] is not None or child.children[1] is not None:
                break
            path[depth - 1].children[self._bit(prefix.value, depth - 1)] = None
        return True

    def lookup(self, addr: int) -> int:
        best = self.root.hop
        node = self.root
        for depth in range(self.family.width):
            node = node.children[self._bit(addr, depth)]
            if node is None:
                break
            if node.hop != NO_ROUTE:
                best = node.hop
        return self.default_hop if best == NO_ROUTE else best

    def node_count(self) -> int:
        count = 0
        stack = [self.root]
        while stack:
            node = stack.pop()
            count += 1
            stack.extend(child for child in node.children if child is not None)
        return count


def build_trie(fib: Fib) -> BinaryTrie:
    trie = BinaryTrie(fib.family, fib.default_hop)
    for prefix, hop in fib.routes.items():
        trie.insert(prefix, hop)
    logger.debug(f"Built oracle trie: {trie.route_count} routes, {trie.node_count()} nodes")
    return trie


def oracle_lookup(trie: BinaryTrie, addr: int) -> int:
    return trie.lookup(addr)


def scan_lookup(fib: Fib, addr: int) -> int:
    """Longest match by scanning every route."""
    best_length = -1
    best_hop = NO_ROUTE
    for prefix, hop in fib.routes.items():
        if prefix.length > best_length and prefix.covers(addr):
            best_length = prefix.length
            best_hop = hop
    return fib.default_hop if best_hop == NO_ROUTE else best_hop


def random_addresses(rng: np.random.Generator, width: int, count: int) -> List[int]:
    """``count`` uniform width-bit integers drawn from ``rng``."""
    if width <= 32:
        return [int(x) for x in rng.integers(0, 1 << width, size=count, dtype=np.int64)]
    high = rng.integers(0, 1 << (width - 32), size=count, dtype=np.uint64)
    low = rng.integers(0, 1 << 32, size=count, dtype=np.uint64)
    return [(int(h) << 32) | int(lo) for h, lo in zip(high, low)]


def sample_addresses(fib: Fib, count: int, seed: int = 0) -> List[int]:
    """Seeded test addresses: half inside random routes, half uniform over the family."""
    rng = np.random.default_rng(seed)
    width = fib.family.width
    routes = list(fib.routes)
    inside = count // 2 if routes else 0
    addresses = random_addresses(rng, width, count - inside)
    if inside:
        picks = rng.integers(0, len(routes), size=inside)
        hosts = random_addresses(rng, width, inside)
        for pick, host in zip(picks, hosts):
            prefix = routes[int(pick)]
            addresses.append(prefix.value | (host & ~prefix.mask() & ((1 << width) - 1)))
    return addresses
