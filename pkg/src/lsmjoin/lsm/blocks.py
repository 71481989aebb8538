"""On-disk layout of a sorted-run file (all integers little-endian).

    ┌───────────────────────────────────────────────┐
    │  data block 0 … data block B-1                │
    ├───────────────────────────────────────────────┤
    │  index block                                  │
    ├───────────────────────────────────────────────┤
    │  bloom block                                  │
    ├───────────────────────────────────────────────┤
    │  footer (40 bytes)                            │
    └───────────────────────────────────────────────┘

data block   repeated records, then crc32:u32 of the record bytes:
             key_len:u32, key, tuple_count:u32,
             ( seq:u64, ts:u64, payload_len:u32, payload )*
             A block is closed once its body reaches the target size, so
             the final record may push a block past the target.
index block  count:u32, ( last_key_len:u32, last_key, offset:u64, length:u32 )*
             `length` covers the whole block including its trailing crc32.
bloom block  bit_len:u32, bits, hash_count:u32
footer       index_offset:u64, index_len:u32, bloom_offset:u64, bloom_len:u32,
             level:u32, version:u32 = 1, magic:u64 = 0x554D4A4F494E5353
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass

from ..errors import CorruptionError

MAGIC = 0x554D4A4F494E5353
VERSION = 1

_U32 = struct.Struct("<I")
_REC_HDR = struct.Struct("<QQI")  # seq, ts, payload_len
_FOOTER = struct.Struct("<QIQIIIQ")
FOOTER_SIZE = _FOOTER.size  # 40


@dataclass(frozen=True)
class Footer:
    index_offset: int
    index_len: int
    bloom_offset: int
    bloom_len: int
    level: int
    version: int = VERSION

    def pack(self) -> bytes:
        return _FOOTER.pack(
            self.index_offset,
            self.index_len,
            self.bloom_offset,
            self.bloom_len,
            self.level,
            self.version,
            MAGIC,
        )

    @classmethod
    def unpack(cls, data: bytes, path="") -> Footer:
        if len(data) != FOOTER_SIZE:
            raise CorruptionError(path, "short footer")
        idx_off, idx_len, bl_off, bl_len, level, version, magic = _FOOTER.unpack(data)
        if magic != MAGIC:
            raise CorruptionError(path, f"bad magic {magic:#x}")
        if version != VERSION:
            raise CorruptionError(path, f"unsupported version {version}")
        return cls(idx_off, idx_len, bl_off, bl_len, level, version)


def encode_record(key: bytes, tuples: list[tuple[int, int, bytes]]) -> bytes:
    """One record: a key plus all of its (seq, ts, payload) tuples in the file."""
    parts = [_U32.pack(len(key)), key, _U32.pack(len(tuples))]
    for seq, ts, payload in tuples:
        parts.append(_REC_HDR.pack(seq, ts, len(payload)))
        parts.append(payload)
    return b"".join(parts)


def seal_block(body: bytes) -> bytes:
    return body + _U32.pack(zlib.crc32(body))


def decode_block(raw: bytes, path="") -> list[tuple[bytes, list[tuple[int, int, bytes]]]]:
    """Verify the checksum and decode a data block into (key, tuples) records."""
    if len(raw) < 4:
        raise CorruptionError(path, "truncated block")
    body, (stored_crc,) = raw[:-4], _U32.unpack(raw[-4:])
    if zlib.crc32(body) != stored_crc:
        raise CorruptionError(path, "checksum mismatch")
    records = []
    i = 0
    n = len(body)
    while i < n:
        (key_len,) = _U32.unpack_from(body, i)
        i += 4
        key = body[i : i + key_len]
        i += key_len
        (count,) = _U32.unpack_from(body, i)
        i += 4
        tuples = []
        for _ in range(count):
            seq, ts, plen = _REC_HDR.unpack_from(body, i)
            i += _REC_HDR.size
            tuples.append((seq, ts, body[i : i + plen]))
            i += plen
        records.append((key, tuples))
    return records


def encode_index(entries: list[tuple[bytes, int, int]]) -> bytes:
    """Index block over data blocks: (last_key, offset, length) per block."""
    parts = [_U32.pack(len(entries))]
    for last_key, offset, length in entries:
        parts.append(_U32.pack(len(last_key)))
        parts.append(last_key)
        parts.append(struct.pack("<QI", offset, length))
    return b"".join(parts)


def decode_index(data: bytes) -> list[tuple[bytes, int, int]]:
    (count,) = _U32.unpack_from(data, 0)
    i = 4
    entries = []
    for _ in range(count):
        (klen,) = _U32.unpack_from(data, i)
        i += 4
        key = data[i : i + klen]
        i += klen
        offset, length = struct.unpack_from("<QI", data, i)
        i += 12
        entries.append((key, offset, length))
    return entries
