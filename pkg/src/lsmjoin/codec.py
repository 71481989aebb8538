"""Byte encodings for join keys, tuple payloads and canonical result rows.

Key encoding is order-preserving and injective for the supported scalar
types (int, str): comparing encoded keys as raw bytes gives the same order
as comparing the original values. Multi-field keys compare field by field.

Layout per key field:

    int  ->  0x69 ('i') + 8-byte big-endian offset-binary (value + 2^63)
    str  ->  0x73 ('s') + UTF-8 with 0x00 escaped as 0x00 0xFF, then 0x00 0x01

The string terminator 0x00 0x01 sorts below any escaped or ordinary byte
that can follow a shared prefix, so prefix-freedom and order both hold.
"""

from __future__ import annotations

import struct

_INT_TAG = 0x69
_STR_TAG = 0x73
_INT_OFFSET = 1 << 63
_U64_BE = struct.Struct(">Q")
_U32_LE = struct.Struct("<I")

KeyValue = int | str


def encode_key(values: tuple[KeyValue, ...] | list[KeyValue]) -> bytes:
    """Encode one or more key field values into comparable bytes."""
    out = bytearray()
    for v in values:
        if isinstance(v, bool):
            raise TypeError("bool is not a supported key type")
        if isinstance(v, int):
            out.append(_INT_TAG)
            out += _U64_BE.pack(v + _INT_OFFSET)
        elif isinstance(v, str):
            out.append(_STR_TAG)
            out += v.encode("utf-8").replace(b"\x00", b"\x00\xff")
            out += b"\x00\x01"
        else:
            raise TypeError(f"unsupported key type: {type(v).__name__}")
    return bytes(out)


def decode_key(data: bytes) -> tuple[KeyValue, ...]:
    """Inverse of :func:`encode_key`. Mainly for diagnostics and tests."""
    values: list[KeyValue] = []
    i = 0
    n = len(data)
    while i < n:
        tag = data[i]
        i += 1
        if tag == _INT_TAG:
            (raw,) = _U64_BE.unpack_from(data, i)
            values.append(raw - _INT_OFFSET)
            i += 8
        elif tag == _STR_TAG:
            chunk = bytearray()
            while True:
                b = data[i]
                if b == 0x00:
                    nxt = data[i + 1]
                    i += 2
                    if nxt == 0x01:
                        break
                    if nxt == 0xFF:
                        chunk.append(0x00)
                        continue
                    raise ValueError("bad string escape in key")
                chunk.append(b)
                i += 1
            values.append(chunk.decode("utf-8"))
        else:
            raise ValueError(f"bad key tag {tag:#x}")
    return tuple(values)


def encode_fields(values: tuple | list) -> bytes:
    """Encode a tuple's field values as a length-prefixed byte payload.

    Every field is rendered to text first (ints keep their decimal form),
    so the encoding round-trips the CSV-level view of a tuple.
    """
    out = bytearray()
    for v in values:
        b = str(v).encode("utf-8")
        out += _U32_LE.pack(len(b))
        out += b
    return bytes(out)


def decode_fields(data: bytes) -> tuple[str, ...]:
    """Decode a payload back into its text field values."""
    fields: list[str] = []
    i = 0
    n = len(data)
    while i < n:
        (length,) = _U32_LE.unpack_from(data, i)
        i += 4
        fields.append(data[i : i + length].decode("utf-8"))
        i += length
    return tuple(fields)


def encode_row(payloads: tuple[bytes, ...] | list[bytes]) -> bytes:
    """Canonical encoding of a joined row: length-prefixed component payloads
    concatenated in stream order. Used for multiset comparison and dumps."""
    out = bytearray()
    for p in payloads:
        out += _U32_LE.pack(len(p))
        out += p
    return bytes(out)


def decode_row(data: bytes) -> tuple[bytes, ...]:
    """Split a canonical row back into its per-stream payloads."""
    parts: list[bytes] = []
    i = 0
    n = len(data)
    while i < n:
        (length,) = _U32_LE.unpack_from(data, i)
        i += 4
        parts.append(data[i : i + length])
        i += length
    return tuple(parts)
