"""
Prefix-masked ternary table with length priority.

Shared by the RESAIL look-aside table, the BSIC initial table and MashUp
TCAM nodes. Masks are always prefix masks, so an entry is identified by its
(value, length) and matching tries the longest stored length first.
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, Generic, List, Optional, Tuple, TypeVar

from ..utils.bits import prefix_mask

logger = logging.getLogger(__name__)

T = TypeVar("T")


@dataclass(frozen=True)
class TernaryEntry(Generic[T]):
    """One TCAM row: value v_e, mask m_e, priority p_e and the action payload."""

    value: int
    mask: int
    priority: int
    payload: T


class PriorityTcam(Generic[T]):
    """Ternary table over ``key_bits``-wide keys; priority equals prefix length."""

    def __init__(self, key_bits: int):
        self.key_bits = key_bits
        self._by_length: Dict[int, Dict[int, T]] = {}
        self._lengths: List[int] = []

    def __len__(self) -> int:
        return sum(len(rows) for rows in self._by_length.values())

    def _normalize(self, value: int, length: int) -> int:
        if not 0 <= length <= self.key_bits:
            raise ValueError(f"length {length} outside 0..{self.key_bits}")
        return value & prefix_mask(length, self.key_bits)

    def put(self, value: int, length: int, payload: T) -> None:
        """Insert or overwrite the entry for a left-aligned ``value`` of ``length`` bits."""
        value = self._normalize(value, length)
        if length not in self._by_length:
            self._by_length[length] = {}
            self._lengths = sorted(self._by_length, reverse=True)
        self._by_length[length][value] = payload

    def get(self, value: int, length: int) -> Optional[T]:
        return self._by_length.get(length, {}).get(self._normalize(value, length))

    def remove(self, value: int, length: int) -> Optional[T]:
        rows = self._by_length.get(length)
        if rows is None:
            return None
        payload = rows.pop(self._normalize(value, length), None)
        if not rows:
            del self._by_length[length]
            self._lengths = sorted(self._by_length, reverse=True)
        return payload

    def match(self, key: int) -> Optional[Tuple[int, T]]:
        """Highest-priority entry matching ``key`` as (length, payload)."""
        for length in self._lengths:
            payload = self._by_length[length].get(key & prefix_mask(length, self.key_bits))
            if payload is not None:
                return length, payload
        return None

    def entries(self) -> List[TernaryEntry[T]]:
        """Rows in first-match order: descending priority, then ascending value."""
        rows = []
        for length in self._lengths:
            mask = prefix_mask(length, self.key_bits)
            for value in sorted(self._by_length[length]):
                rows.append(TernaryEntry(value, mask, length, self._by_length[length][value]))
        return rows

    def items(self) -> List[Tuple[int, int, Any]]:
        """(value, length, payload) triples in first-match order."""
        return [(e.value, e.priority, e.payload) for e in self.entries()]
