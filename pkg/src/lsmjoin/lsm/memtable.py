"""In-memory write buffer with ordered-map semantics.

The active table takes appends until it reaches its entry budget, then it
is frozen (read-only) and replaced. Keys iterate in ascending byte order;
within a key, tuples keep insertion (= seq) order.
"""

from __future__ import annotations

from ..errors import StorageError

StoredTuple = tuple[int, int, bytes]  # (seq, ts, payload)


class MemTable:
    __slots__ = ("entries", "entry_count", "frozen")

    def __init__(self):
        self.entries: dict[bytes, list[StoredTuple]] = {}
        self.entry_count = 0
        self.frozen = False

    def insert(self, key: bytes, item: StoredTuple) -> None:
        if self.frozen:
            raise StorageError("insert into frozen memtable")
        bucket = self.entries.get(key)
        if bucket is None:
            self.entries[key] = [item]
        else:
            bucket.append(item)
        self.entry_count += 1

    def freeze(self) -> None:
        self.frozen = True

    def get(self, key: bytes) -> list[StoredTuple]:
        return self.entries.get(key, [])

    def sorted_items(self) -> list[tuple[bytes, list[StoredTuple]]]:
        return sorted(self.entries.items())
