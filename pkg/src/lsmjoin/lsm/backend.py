"""Per-stream persistent multimap: memory tier over leveled run files.

Write path:  insert -> active table -> (rotation at capacity) -> frozen
             -> flush -> level-0 file -> compaction into deeper levels.
Read path:   probe gathers matching tuples from *every* tier - active,
             frozen tables, and all files on all levels - because a key's
             tuples may be spread across the whole tree. This is a
             multimap union, not a first-hit lookup.

A backend has exactly one logical writer; probes may run concurrently
with each other but never with a mutating call.
"""

from __future__ import annotations

import logging
import os
import time
from dataclasses import dataclass, field, replace

from ..errors import StorageError
from . import sst
from .cache import BlockCache
from .memtable import MemTable, StoredTuple

logger = logging.getLogger(__name__)


def _wall_ms() -> int:
    return int(time.time() * 1000)


@dataclass
class BackendConfig:
    memtable_capacity_entries: int = 1024
    block_cache_bytes: int = 1 << 20
    block_bytes: int = 4096
    l0_file_trigger: int = 4
    level_fanout: int = 10
    ttl_ms: int | None = None  # None = keep forever
    bloom_bits_per_key: int = 10
    bloom_hashes: int = 7

    def __post_init__(self):
        for name in (
            "memtable_capacity_entries",
            "block_bytes",
            "l0_file_trigger",
            "bloom_bits_per_key",
            "bloom_hashes",
        ):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")
        if self.block_cache_bytes < 0:
            raise ValueError("block_cache_bytes must be >= 0")
        if self.level_fanout < 2:
            raise ValueError("level_fanout must be >= 2")
        if self.ttl_ms is not None and self.ttl_ms <= 0:
            raise ValueError("ttl_ms must be strictly positive or None")


@dataclass
class BackendCounters:
    blocks_read_from_disk: int = 0
    cache_hits: int = 0
    cache_misses: int = 0
    bytes_written: int = 0
    flush_count: int = 0
    compaction_count: int = 0

    def snapshot(self) -> BackendCounters:
        return replace(self)

    def as_dict(self) -> dict[str, int]:
        return {
            "blocks_read_from_disk": self.blocks_read_from_disk,
            "cache_hits": self.cache_hits,
            "cache_misses": self.cache_misses,
            "bytes_written": self.bytes_written,
            "flush_count": self.flush_count,
            "compaction_count": self.compaction_count,
        }


@dataclass
class _Level:
    files: list[sst.SstFile] = field(default_factory=list)

    @property
    def entry_count(self) -> int:
        return sum(f.entry_count for f in self.files)


class LsmBackend:
    def __init__(self, directory: str, config: BackendConfig | None = None, clock=None):
        self.directory = directory
        self.config = config or BackendConfig()
        self.clock = clock or _wall_ms
        os.makedirs(directory, exist_ok=True)
        self.active = MemTable()
        self.frozen: list[MemTable] = []  # oldest first
        self.levels: list[_Level] = [_Level()]
        self.cache = BlockCache(self.config.block_cache_bytes)
        self.counters = BackendCounters()
        self._last_seq = -1
        self._file_seq = 0
        self._closed = False

    # -- write path ---------------------------------------------------------

    def insert(self, key: bytes, item: StoredTuple) -> None:
        seq = item[0]
        if seq <= self._last_seq:
            raise ValueError(f"seq {seq} not greater than last inserted {self._last_seq}")
        self._last_seq = seq
        self.active.insert(key, item)
        if self.active.entry_count >= self.config.memtable_capacity_entries:
            self.active.freeze()
            self.frozen.append(self.active)
            self.active = MemTable()

    @property
    def frozen_count(self) -> int:
        return len(self.frozen)

    def flush(self) -> None:
        """Write the oldest frozen table as a new level-0 file (no-op if none).

        On I/O failure the frozen table is kept so the flush can be retried.
        """
        if not self.frozen:
            return
        table = self.frozen[0]
        path = self._new_file_path(0)
        size = sst.write_sst(
            path,
            0,
            table.sorted_items(),
            self.config.block_bytes,
            self.config.bloom_bits_per_key,
            self.config.bloom_hashes,
        )
        reader = sst.SstFile(path, self._file_seq)
        reader.entry_count = table.entry_count
        self._file_seq += 1
        self.levels[0].files.append(reader)
        self.frozen.pop(0)
        self.counters.bytes_written += size
        self.counters.flush_count += 1
        if len(self.levels[0].files) >= self.config.l0_file_trigger:
            self.compact(0)

    def compact(self, level: int) -> None:
        """Merge every file at `level` with every file at `level + 1`.

        Equal keys get their tuple lists concatenated in seq order; tuples
        past the retention threshold are dropped. Old files are deleted only
        after the replacement file is durable, so a failed compaction leaves
        the previous files authoritative. Cascades while the target level
        exceeds its size budget.
        """
        if level < 0:
            raise ValueError("level must be >= 0")
        if level >= len(self.levels):
            raise ValueError(f"level {level} does not exist (deepest is {len(self.levels) - 1})")
        while True:
            if level + 1 >= len(self.levels):
                self.levels.append(_Level())
            src = self.levels[level]
            dst = self.levels[level + 1]
            inputs = src.files + dst.files
            if not src.files or not inputs:
                return
            merged: dict[bytes, list[StoredTuple]] = {}
            for f in inputs:
                # merge reads bypass the block cache; count them as disk reads
                self.counters.blocks_read_from_disk += len(f.index)
                for key, tuples in f.scan():
                    merged.setdefault(key, []).extend(tuples)
            now = self.clock()
            items = []
            entry_count = 0
            for key in sorted(merged):
                tuples = sorted(merged[key], key=lambda t: t[0])
                tuples = [t for t in tuples if not self._expired(t[1], now)]
                if tuples:
                    items.append((key, tuples))
                    entry_count += len(tuples)
            new_files: list[sst.SstFile] = []
            if items:
                path = self._new_file_path(level + 1)
                size = sst.write_sst(
                    path,
                    level + 1,
                    items,
                    self.config.block_bytes,
                    self.config.bloom_bits_per_key,
                    self.config.bloom_hashes,
                )
                reader = sst.SstFile(path, self._file_seq)
                reader.entry_count = entry_count
                self._file_seq += 1
                new_files.append(reader)
                self.counters.bytes_written += size
            for f in inputs:
                f.close()
                self.cache.drop_file(f.path)
                try:
                    os.unlink(f.path)
                except OSError as exc:
                    raise StorageError(f"removing {f.path}: {exc}") from exc
            src.files = []
            dst.files = new_files
            self.counters.compaction_count += 1
            level += 1
            if self.levels[level].entry_count <= self._level_target_entries(level):
                return

    def _level_target_entries(self, level: int) -> int:
        base = self.config.memtable_capacity_entries * self.config.l0_file_trigger
        return base * self.config.level_fanout ** (level - 1)

    # -- read path ----------------------------------------------------------

    def probe(self, key: bytes, now_ms: int | None = None) -> list[StoredTuple]:
        """All live tuples stored under `key`, across every tier, seq order."""
        if now_ms is None:
            now_ms = self.clock()
        out: list[StoredTuple] = []
        out += self.active.get(key)
        for table in reversed(self.frozen):
            out += table.get(key)
        for f in reversed(self.levels[0].files):
            out += self._probe_file(f, key)
        for lvl in self.levels[1:]:
            for f in lvl.files:
                out += self._probe_file(f, key)
        if self.config.ttl_ms is not None:
            out = [t for t in out if not self._expired(t[1], now_ms)]
        out.sort(key=lambda t: t[0])
        return out

    def _probe_file(self, f: sst.SstFile, key: bytes) -> list[StoredTuple]:
        loc = f.block_for_key(key)
        if loc is None:
            return []
        offset, length = loc
        cache_key = (f.path, offset)
        block = self.cache.get(cache_key)
        if block is None:
            self.counters.cache_misses += 1
            self.counters.blocks_read_from_disk += 1
            block = f.read_block(offset, length)
            self.cache.put(cache_key, block, length)
        else:
            self.counters.cache_hits += 1
        return block.get(key, [])

    def _expired(self, ts: int, now_ms: int) -> bool:
        ttl = self.config.ttl_ms
        return ttl is not None and ts + ttl < now_ms

    # -- bookkeeping --------------------------------------------------------

    def snapshot_counters(self) -> BackendCounters:
        return self.counters.snapshot()

    def sst_paths(self) -> list[str]:
        return [f.path for lvl in self.levels for f in lvl.files]

    def total_entries(self) -> int:
        mem = self.active.entry_count + sum(t.entry_count for t in self.frozen)
        return mem + sum(lvl.entry_count for lvl in self.levels)

    def _new_file_path(self, level: int) -> str:
        return os.path.join(self.directory, f"L{level}-{self._file_seq}.sst")

    def close(self) -> None:
        if self._closed:
            return
        for lvl in self.levels:
            for f in lvl.files:
                f.close()
        self._closed = True

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
