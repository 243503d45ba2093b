"""
d-left hash table with one slot per bucket.

Keys go to the leftmost empty candidate among the ``ways`` subtables. When
every candidate is taken a bounded relocation walk moves residents to their
other candidates; if that fails the table rotates its seeds and rehashes.
"""

import logging
import math
from typing import Dict, Iterable, List, Optional, Tuple

from ..errors import DLeftOverflowError
from ..utils.bits import mix64

logger = logging.getLogger(__name__)

DEFAULT_WAYS = 4
MAX_LOAD = 0.8
MAX_WALK = 500
MAX_RESEEDS = 8

Slot = Optional[Tuple[int, int]]


def _way_sizes(capacity: int, ways: int) -> List[int]:
    base, extra = divmod(capacity, ways)
    return [base + (1 if i < extra else 0) for i in range(ways)]


class DLeftTable:
    """Exact-match table mapping integer keys to integer values.

    Args:
        capacity: Total slot count across all subtables (at least ``ways``)
        ways: Number of subtables
        load: Target load factor; the table grows to keep entries/capacity at or below it
        seed: Base seed of the hash family
    """

    def __init__(self, capacity: int, ways: int = DEFAULT_WAYS, load: float = MAX_LOAD, seed: int = 0):
        if ways < 1:
            raise ValueError("d-left table needs at least one way")
        if not 0 < load <= MAX_LOAD:
            raise ValueError(f"load factor must be in (0, {MAX_LOAD}]")
        self.ways = ways
        self.load = load
        self.seed = seed
        self.generation = 0
        self.sizes = _way_sizes(max(capacity, ways), ways)
        self.slots: List[List[Slot]] = [[None] * size for size in self.sizes]
        self._shadow: Dict[int, int] = {}

    @classmethod
    def build(
        cls, items: Iterable[Tuple[int, int]], ways: int = DEFAULT_WAYS, load: float = MAX_LOAD, seed: int = 0
    ) -> "DLeftTable":
        """Size a table for ``items`` at the target load and insert them all.

        Raises:
            DLeftOverflowError: If no seed rotation places every key
        """
        items = dict(items)
        table = cls(math.ceil(len(items) / load), ways, load, seed)
        table._shadow = items
        table._rehash(table.sizes)
        logger.debug(f"d-left table: {len(table)} keys in {table.capacity} slots, generation {table.generation}")
        return table

    @classmethod
    def from_slots(cls, slots: List[List[Slot]], load: float, seed: int, generation: int) -> "DLeftTable":
        """Restore a table exactly as laid out, e.g. from an artifact."""
        table = cls(sum(len(way) for way in slots), len(slots), load, seed)
        table.generation = generation
        table.sizes = [len(way) for way in slots]
        table.slots = [list(way) for way in slots]
        table._shadow = {slot[0]: slot[1] for way in slots for slot in way if slot is not None}
        return table

    def __len__(self) -> int:
        return len(self._shadow)

    def __contains__(self, key: int) -> bool:
        return self.get(key) is not None

    @property
    def capacity(self) -> int:
        return sum(self.sizes)

    @property
    def load_factor(self) -> float:
        return len(self) / self.capacity if self.capacity else 0.0

    def _seeds(self, generation: int) -> List[int]:
        return [mix64(generation * self.ways + way, self.seed) for way in range(self.ways)]

    @staticmethod
    def _index(key: int, seed: int, size: int) -> int:
        return mix64(key, seed) % size

    def get(self, key: int) -> Optional[int]:
        seeds = self._seeds(self.generation)
        for way in range(self.ways):
            slot = self.slots[way][self._index(key, seeds[way], self.sizes[way])]
            if slot is not None and slot[0] == key:
                return slot[1]
        return None

    def _place(self, slots: List[List[Slot]], seeds: List[int], sizes: List[int], item: Tuple[int, int]) -> Slot:
        """Insert ``item``; returns the entry left homeless if the walk gives up."""
        last_way = self.ways - 1
        for _ in range(MAX_WALK):
            indexes = [self._index(item[0], seeds[w], sizes[w]) for w in range(self.ways)]
            for way, index in enumerate(indexes):
                if slots[way][index] is None:
                    slots[way][index] = item
                    return None
            way = (last_way + 1) % self.ways
            slots[way][indexes[way]], item = item, slots[way][indexes[way]]
            last_way = way
        return item

    def _rehash(self, sizes: List[int]) -> None:
        for attempt in range(MAX_RESEEDS):
            generation = self.generation + attempt
            seeds = self._seeds(generation)
            slots: List[List[Slot]] = [[None] * size for size in sizes]
            if all(self._place(slots, seeds, sizes, item) is None for item in sorted(self._shadow.items())):
                if attempt:
                    logger.warning(f"d-left table reseeded {attempt} time(s) to place {len(self._shadow)} keys")
                self.generation, self.sizes, self.slots = generation, sizes, slots
                return
        raise DLeftOverflowError(
            f"d-left table cannot place {len(self._shadow)} keys after {MAX_RESEEDS} seed rotations",
            len(self._shadow) / sum(sizes),
        )

    def put(self, key: int, value: int) -> None:
        """Insert or overwrite a key, growing or reseeding the table when needed.

        Raises:
            DLeftOverflowError: If the key cannot be placed; the table is left unchanged
        """
        seeds = self._seeds(self.generation)
        for way in range(self.ways):
            index = self._index(key, seeds[way], self.sizes[way])
            slot = self.slots[way][index]
            if slot is not None and slot[0] == key:
                self.slots[way][index] = (key, value)
                self._shadow[key] = value
                return
        self._shadow[key] = value
        needed = math.ceil(len(self._shadow) / self.load)
        try:
            if needed > self.capacity:
                logger.info(f"Growing d-left table from {self.capacity} to {needed} slots")
                self._rehash(_way_sizes(needed, self.ways))
                return
            slots = [list(way) for way in self.slots]
            if self._place(slots, seeds, self.sizes, (key, value)) is None:
                self.slots = slots
            else:
                self._rehash(self.sizes)
        except DLeftOverflowError:
            del self._shadow[key]
            raise

    def remove(self, key: int) -> Optional[int]:
        seeds = self._seeds(self.generation)
        for way in range(self.ways):
            index = self._index(key, seeds[way], self.sizes[way])
            slot = self.slots[way][index]
            if slot is not None and slot[0] == key:
                self.slots[way][index] = None
                del self._shadow[key]
                return slot[1]
        return None

    def items(self) -> List[Tuple[int, int]]:
        return sorted(self._shadow.items())
