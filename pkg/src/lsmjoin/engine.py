"""Join operators: multi-way insert-then-probe, two-way tree nodes, stores.

The multi-way operator keeps one state store per input stream. Processing
an event always inserts the new tuple into its own stream's store first,
then probes the remaining streams in ascending stream order, skipping its
own; the first empty probe aborts the loop because the cross product is
already known to be empty. Inserting before probing means a tuple never
joins with itself (its own stream is skipped) and no match can be lost:
streams that arrived earlier already contain their increments.

The two-way node is the building block of the binary-join-tree baseline:
same backends, same insert-then-probe discipline, n = 2, with every match
forwarded upward as a new event (the materialized intermediate state the
multi-way operator avoids).
"""

from __future__ import annotations

import logging
import struct
from dataclasses import dataclass, field
from enum import Enum

from . import codec
from ._kernels import collect_rows, count_rows
from .errors import ConfigError, OutOfMemory
from .lsm import BackendConfig, LsmBackend

logger = logging.getLogger(__name__)

StoredTuple = tuple[int, int, bytes]  # (seq, ts, payload)


class EngineMode(str, Enum):
    UMJOIN = "umjoin"
    BJT = "bjt"
    CAPPED_HASH = "capped_hash"


@dataclass
class StreamDef:
    stream_index: int
    name: str
    schema: list[tuple[str, str]]  # (field name, "int" | "str")
    key_fields: list[str]

    def __post_init__(self):
        if not self.key_fields:
            raise ConfigError(f"stream {self.name}: key_fields must be non-empty")
        names = [f for f, _ in self.schema]
        for kf in self.key_fields:
            if kf not in names:
                raise ConfigError(f"stream {self.name}: key field {kf!r} not in schema")
        self.key_positions = tuple(names.index(kf) for kf in self.key_fields)


@dataclass(frozen=True)
class InputEvent:
    stream_index: int
    values: tuple
    ts: int


@dataclass(frozen=True)
class JoinedRow:
    payloads: tuple[bytes, ...]  # one per stream, stream order
    provenance: tuple[tuple[int, int], ...]  # (stream_index, seq) per component

    def fields(self) -> tuple[tuple[str, ...], ...]:
        return tuple(codec.decode_fields(p) for p in self.payloads)


# -- state stores -------------------------------------------------------------


class LsmStore:
    """LSM backend adapter; drains frozen tables right after each insert,
    so spills happen between tuples, never inside a probe."""

    def __init__(self, backend: LsmBackend):
        self.backend = backend

    def insert(self, key: bytes, item: StoredTuple) -> None:
        self.backend.insert(key, item)
        while self.backend.frozen_count:
            self.backend.flush()

    def probe(self, key: bytes, now_ms: int) -> list[StoredTuple]:
        return self.backend.probe(key, now_ms)

    def close(self) -> None:
        self.backend.close()


class MemoryBudget:
    """Byte accountant shared by all streams of a capped operator."""

    def __init__(self, cap_bytes: int):
        if cap_bytes <= 0:
            raise ConfigError("cap_bytes must be strictly positive")
        self.cap_bytes = cap_bytes
        self.used = 0

    def charge(self, n: int) -> None:
        self.used += n
        if self.used > self.cap_bytes:
            raise OutOfMemory(
                f"state size {self.used} exceeds cap {self.cap_bytes} bytes"
            )


class CappedHashStore:
    """Plain in-memory multimap with a hard byte budget.

    Accounting is payload bytes + key bytes + a fixed 48-byte per-entry
    overhead estimate; only the full-versus-partial distinction matters.
    """

    ENTRY_OVERHEAD = 48

    def __init__(self, budget: MemoryBudget):
        self.budget = budget
        self.entries: dict[bytes, list[StoredTuple]] = {}

    def insert(self, key: bytes, item: StoredTuple) -> None:
        self.budget.charge(len(key) + len(item[2]) + self.ENTRY_OVERHEAD)
        self.entries.setdefault(key, []).append(item)

    def probe(self, key: bytes, now_ms: int) -> list[StoredTuple]:
        return self.entries.get(key, [])

    def close(self) -> None:
        self.entries.clear()


# -- sinks --------------------------------------------------------------------


class CountingSink:
    """Black-hole sink: counts emitted rows without materializing them."""

    def __init__(self):
        self.count = 0

    def emit(self, key: bytes, components: list[list[StoredTuple]]) -> int:
        n = count_rows(components)
        self.count += n
        return n


class CollectSink:
    """Materializes every joined row; for small runs and the process() API."""

    def __init__(self):
        self.rows: list[JoinedRow] = []
        self.count = 0

    def emit(self, key: bytes, components: list[list[StoredTuple]]) -> int:
        emitted = collect_rows(components)
        for payloads, seqs in emitted:
            self.rows.append(
                JoinedRow(
                    payloads=payloads,
                    provenance=tuple((i, s) for i, s in enumerate(seqs)),
                )
            )
        self.count += len(emitted)
        return len(emitted)


class CheckerSink:
    """Feeds every emitted row through an exact join verifier."""

    def __init__(self, checker):
        self.checker = checker
        self.count = 0

    def emit(self, key: bytes, components: list[list[StoredTuple]]) -> int:
        n = self.checker.observe(key, components)
        self.count += n
        return n


class FileSink:
    """Writes the canonical sorted multiset dump of all joined rows."""

    def __init__(self, path: str, project_columns: list[int] | None = None):
        self.path = path
        self.count = 0
        self._lines: list[str] = []
        self._project = project_columns

    def emit(self, key: bytes, components: list[list[StoredTuple]]) -> int:
        emitted = collect_rows(components)
        for payloads, _ in emitted:
            fields: list[str] = []
            for p in payloads:
                fields.extend(codec.decode_fields(p))
            if self._project is not None:
                fields = [fields[i] for i in self._project]
            self._lines.append("\t".join(fields))
        self.count += len(emitted)
        return len(emitted)

    def close(self) -> None:
        self._lines.sort()
        with open(self.path, "w", encoding="utf-8") as f:
            for line in self._lines:
                f.write(line + "\n")


# -- multi-way operator --------------------------------------------------------


class MultiwayJoinOperator:
    """n-way streaming equi-join with one state store per input stream."""

    def __init__(self, streams: list[StreamDef], stores: list):
        if len(streams) < 2:
            raise ConfigError("need at least two streams")
        if len(streams) != len(stores):
            raise ConfigError("one store per stream required")
        self.streams = sorted(streams, key=lambda s: s.stream_index)
        for i, s in enumerate(self.streams):
            if s.stream_index != i:
                raise ConfigError("stream_index values must be 0..n-1")
        self.stores = stores
        self.n = len(streams)
        self.seq = 0  # global event counter; per-store seq is monotone
        self.probe_counts = [0] * self.n
        self.short_circuits = 0
        self.rejected_events = 0
        self.last_probe_trace: list[int] = []

    def extract_key(self, stream: StreamDef, values: tuple) -> bytes | None:
        if len(values) != len(stream.schema):
            return None
        try:
            parts = tuple(values[p] for p in stream.key_positions)
        except IndexError:
            return None
        if any(v is None for v in parts):
            return None
        return codec.encode_key(parts)

    def process_into(self, event: InputEvent, now_ms: int, sink) -> int:
        """Insert the event's tuple, probe the other streams, emit matches.

        Returns the number of rows handed to the sink (0 on short-circuit
        or rejection). Malformed events are counted and skipped.
        """
        i = event.stream_index
        if not 0 <= i < self.n:
            raise ConfigError(f"stream index {i} out of range")
        stream = self.streams[i]
        key = self.extract_key(stream, event.values)
        if key is None:
            self.rejected_events += 1
            logger.warning("rejected event on stream %s: unextractable key", stream.name)
            return 0
        seq = self.seq
        self.seq += 1
        item = (seq, event.ts, codec.encode_fields(event.values))
        self.stores[i].insert(key, item)
        components: list[list[StoredTuple]] = []
        trace: list[int] = []
        for j in range(self.n):
            if j == i:
                components.append([item])
                continue
            trace.append(j)
            self.probe_counts[j] += 1
            matches = self.stores[j].probe(key, now_ms)
            if not matches:
                self.short_circuits += 1
                self.last_probe_trace = trace
                return 0
            components.append(matches)
        self.last_probe_trace = trace
        return sink.emit(key, components)

    def process(self, event: InputEvent, now_ms: int) -> list[JoinedRow]:
        """Materializing variant: returns the emitted rows for one event."""
        sink = CollectSink()
        self.process_into(event, now_ms, sink)
        return sink.rows

    def close(self) -> None:
        for store in self.stores:
            store.close()


# -- two-way tree node (binary join tree baseline) ------------------------------

# stored payloads in tree nodes wrap the original per-stream components:
#   count:u32, ( stream:u32, seq:u64, payload_len:u32, payload )*
_ENV_HDR = struct.Struct("<IQI")
_U32 = struct.Struct("<I")

Component = tuple[int, int, bytes]  # (orig stream, orig seq, payload)


def encode_envelope(components: list[Component]) -> bytes:
    parts = [_U32.pack(len(components))]
    for stream, seq, payload in components:
        parts.append(_ENV_HDR.pack(stream, seq, len(payload)))
        parts.append(payload)
    return b"".join(parts)


def decode_envelope(data: bytes) -> list[Component]:
    (count,) = _U32.unpack_from(data, 0)
    i = 4
    out = []
    for _ in range(count):
        stream, seq, plen = _ENV_HDR.unpack_from(data, i)
        i += _ENV_HDR.size
        out.append((stream, seq, data[i : i + plen]))
        i += plen
    return out


class TwoWayJoinNode:
    """One node of a binary join tree: two stores, insert one side, probe
    the other, forward concatenated matches to the parent."""

    def __init__(
        self,
        name: str,
        left_store,
        right_store,
        left_key,  # list of (orig stream, field pos, type) triples
        right_key,
    ):
        self.name = name
        self.stores = {"left": left_store, "right": right_store}
        self.keys = {"left": left_key, "right": right_key}
        self.seqs = {"left": 0, "right": 0}
        self.emitted = 0

    def _key_of(self, side: str, components: list[Component]) -> bytes | None:
        parts = []
        for stream, pos, typ in self.keys[side]:
            payload = next((p for s, _, p in components if s == stream), None)
            if payload is None:
                return None
            fields = codec.decode_fields(payload)
            if pos >= len(fields):
                return None
            text = fields[pos]
            parts.append(int(text) if typ == "int" else text)
        return codec.encode_key(parts)

    def process(self, side: str, components: list[Component], ts: int, now_ms: int):
        """Insert into `side`, probe the opposite side; yields joined
        component lists (left components first)."""
        key = self._key_of(side, components)
        if key is None:
            return
        seq = self.seqs[side]
        self.seqs[side] = seq + 1
        self.stores[side].insert(key, (seq, ts, encode_envelope(components)))
        other = "right" if side == "left" else "left"
        matches = self.stores[other].probe(key, now_ms)
        for _, _, envelope in matches:
            other_components = decode_envelope(envelope)
            if side == "left":
                merged = components + other_components
            else:
                merged = other_components + components
            self.emitted += 1
            yield merged

    def close(self) -> None:
        self.stores["left"].close()
        self.stores["right"].close()
