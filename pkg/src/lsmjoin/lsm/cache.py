"""LRU cache for decoded data blocks, with a hard byte budget.

Entries are keyed by (file path, block offset) and charged at the block's
on-disk size. A zero budget disables caching entirely, which must never
change probe results, only I/O counters.
"""

from __future__ import annotations

from collections import OrderedDict


class BlockCache:
    def __init__(self, capacity_bytes: int):
        if capacity_bytes < 0:
            raise ValueError("capacity_bytes must be >= 0")
        self.capacity_bytes = capacity_bytes
        self._entries: OrderedDict[tuple[str, int], tuple[object, int]] = OrderedDict()
        self._used = 0

    def __len__(self) -> int:
        return len(self._entries)

    @property
    def used_bytes(self) -> int:
        return self._used

    def get(self, key: tuple[str, int]):
        entry = self._entries.get(key)
        if entry is None:
            return None
        self._entries.move_to_end(key)
        return entry[0]

    def put(self, key: tuple[str, int], block, size: int) -> None:
        if size > self.capacity_bytes:
            return
        old = self._entries.pop(key, None)
        if old is not None:
            self._used -= old[1]
        self._entries[key] = (block, size)
        self._used += size
        while self._used > self.capacity_bytes:
            _, (_, evicted_size) = self._entries.popitem(last=False)
            self._used -= evicted_size

    def drop_file(self, path: str) -> None:
        """Invalidate every cached block of a deleted file."""
        stale = [k for k in self._entries if k[0] == path]
        for k in stale:
            _, size = self._entries.pop(k)
            self._used -= size
