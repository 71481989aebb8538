"""Immutable sorted-run files: sequential writer and random-access reader.

A file holds one record per key (the key's full tuple list for this file),
so a lookup touches at most one data block. The index and bloom blocks are
loaded once at open and kept in memory; only data blocks go through the
shared block cache.
"""

from __future__ import annotations

import os
from bisect import bisect_left

from ..errors import CorruptionError, StorageError
from . import blocks
from .bloom import BloomFilter

StoredTuple = tuple[int, int, bytes]


def write_sst(
    path: str,
    level: int,
    items: list[tuple[bytes, list[StoredTuple]]],
    block_bytes: int,
    bloom_bits_per_key: int,
    bloom_hashes: int,
) -> int:
    """Write sorted (key, tuples) items as one run file; returns bytes written.

    `items` must be key-sorted with unique keys. The file is written to a
    temporary sibling first and renamed into place so a failed write never
    leaves a readable partial file.
    """
    if not items:
        raise ValueError("refusing to write an empty run file")
    tmp = path + ".tmp"
    bloom = BloomFilter.for_keys(len(items), bloom_bits_per_key, bloom_hashes)
    index_entries: list[tuple[bytes, int, int]] = []
    try:
        with open(tmp, "wb") as f:
            offset = 0
            body = bytearray()
            block_last_key = b""
            for key, tuples in items:
                bloom.add(key)
                body += blocks.encode_record(key, tuples)
                block_last_key = key
                if len(body) >= block_bytes:
                    raw = blocks.seal_block(bytes(body))
                    f.write(raw)
                    index_entries.append((block_last_key, offset, len(raw)))
                    offset += len(raw)
                    body = bytearray()
            if body:
                raw = blocks.seal_block(bytes(body))
                f.write(raw)
                index_entries.append((block_last_key, offset, len(raw)))
                offset += len(raw)
            index_raw = blocks.encode_index(index_entries)
            bloom_raw = bloom.to_bytes()
            f.write(index_raw)
            f.write(bloom_raw)
            footer = blocks.Footer(
                index_offset=offset,
                index_len=len(index_raw),
                bloom_offset=offset + len(index_raw),
                bloom_len=len(bloom_raw),
                level=level,
            )
            f.write(footer.pack())
            f.flush()
            os.fsync(f.fileno())
        os.rename(tmp, path)
    except OSError as exc:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise StorageError(f"writing {path}: {exc}") from exc
    return offset + len(index_raw) + len(bloom_raw) + blocks.FOOTER_SIZE


class SstFile:
    """Reader over one immutable run file."""

    def __init__(self, path: str, file_seq: int):
        self.path = path
        self.file_seq = file_seq
        try:
            self._fh = open(path, "rb")
            self._fh.seek(0, os.SEEK_END)
            size = self._fh.tell()
            if size < blocks.FOOTER_SIZE:
                raise CorruptionError(path, "file shorter than footer")
            self._fh.seek(size - blocks.FOOTER_SIZE)
            footer = blocks.Footer.unpack(self._fh.read(blocks.FOOTER_SIZE), path)
            self.level = footer.level
            self._fh.seek(footer.index_offset)
            self.index = blocks.decode_index(self._fh.read(footer.index_len))
            self._fh.seek(footer.bloom_offset)
            self.bloom = BloomFilter.from_bytes(self._fh.read(footer.bloom_len))
        except OSError as exc:
            raise StorageError(f"opening {path}: {exc}") from exc
        self._last_keys = [e[0] for e in self.index]
        self.min_key = self._read_first_key()
        self.max_key = self._last_keys[-1] if self._last_keys else b""
        self.entry_count = 0  # filled by the backend from its bookkeeping

    def _read_first_key(self) -> bytes:
        if not self.index:
            return b""
        _, offset, length = self.index[0]
        records = self._read_block_raw(offset, length)
        return records[0][0]

    def _read_block_raw(self, offset: int, length: int):
        try:
            self._fh.seek(offset)
            raw = self._fh.read(length)
        except OSError as exc:
            raise StorageError(f"reading {self.path}: {exc}") from exc
        if len(raw) != length:
            raise CorruptionError(self.path, "short block read")
        records = blocks.decode_block(raw, self.path)
        return records

    def block_for_key(self, key: bytes) -> tuple[int, int] | None:
        """Locate the (offset, length) of the single block that may hold `key`."""
        if not self.index or key < self.min_key or key > self.max_key:
            return None
        if not self.bloom.may_contain(key):
            return None
        i = bisect_left(self._last_keys, key)
        if i >= len(self.index):
            return None
        _, offset, length = self.index[i]
        return offset, length

    def read_block(self, offset: int, length: int) -> dict[bytes, list[StoredTuple]]:
        """Fetch and decode one data block as a key -> tuples mapping."""
        return dict(self._read_block_raw(offset, length))

    def scan(self):
        """Yield every (key, tuples) record in key order (compaction path)."""
        for _, offset, length in self.index:
            yield from self._read_block_raw(offset, length)

    def close(self) -> None:
        self._fh.close()
