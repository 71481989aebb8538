"""Pure-Python kernels: cross-product row emission and join verification.

This is the fallback for environments without the compiled extension and
the behavioural reference the extension is tested against. Semantics of
both implementations are identical; only throughput differs.
"""

from __future__ import annotations

from itertools import product

from ..errors import IntegrityError


def collect_rows(components):
    """Materialize the cross product of per-stream candidate tuples.

    `components` holds one list of (seq, ts, payload) entries per stream, in
    stream order. Returns (payloads, seqs) pairs, one per joined row, with
    components ordered by stream.
    """
    if not components or any(not c for c in components):
        return []
    rows = []
    for combo in product(*components):
        rows.append((tuple(c[2] for c in combo), tuple(c[0] for c in combo)))
    return rows


class _KeyState:
    __slots__ = ("seq_to_pos", "payloads", "strides", "bits", "total")

    def __init__(self, per_stream):
        counts = [len(s) for s in per_stream]
        self.seq_to_pos = []
        self.payloads = []
        for stream_tuples in per_stream:
            self.seq_to_pos.append({seq: i for i, (seq, _) in enumerate(stream_tuples)})
            self.payloads.append([payload for _, payload in stream_tuples])
        self.strides = [0] * len(counts)
        stride = 1
        for i in range(len(counts) - 1, -1, -1):
            self.strides[i] = stride
            stride *= counts[i]
        self.total = stride if all(counts) else 0
        self.bits = bytearray((self.total + 7) // 8) if self.total else bytearray()


class JoinChecker:
    """Exact multiset verifier for an n-way equi-join result.

    The expected result of an equi-join factorizes per key into the cross
    product of the per-stream tuple lists that share the key. The checker
    holds those factors plus one bit per expected output row; every observed
    row must name a valid, previously unseen combination and carry exactly
    the expected payload bytes. Observing each expected row exactly once is
    therefore equivalent to multiset equality with the batch join result.
    """

    def __init__(self, expected):
        """`expected`: key bytes -> per-stream list of (seq, payload) pairs."""
        self._keys = {}
        self._expected_total = 0
        for key, per_stream in expected.items():
            state = _KeyState([sorted(s, key=lambda t: t[0]) for s in per_stream])
            self._keys[key] = state
            self._expected_total += state.total
        self._observed = 0

    @property
    def expected_total(self):
        return self._expected_total

    @property
    def observed(self):
        return self._observed

    def remaining(self):
        return self._expected_total - self._observed

    def observe(self, key, components):
        """Verify and mark every row of the cross product of `components`.

        `components` holds one list of (seq, ts, payload) entries per stream.
        Returns the number of rows marked; raises IntegrityError on any row
        that is unknown, repeated, or carries unexpected payload bytes.
        """
        state = self._keys.get(key)
        if state is None:
            raise IntegrityError(f"output row for unexpected key {key.hex()}")
        pos_lists = []
        for i, comp in enumerate(components):
            seq_to_pos = state.seq_to_pos[i]
            payloads = state.payloads[i]
            positions = []
            for item in comp:
                pos = seq_to_pos.get(item[0])
                if pos is None:
                    raise IntegrityError(f"unknown tuple seq {item[0]} on stream {i}")
                if payloads[pos] != item[2]:
                    raise IntegrityError(f"payload mismatch for seq {item[0]} on stream {i}")
                positions.append(pos)
            if not positions:
                return 0
            pos_lists.append(positions)
        bits = state.bits
        strides = state.strides
        count = 0
        for combo in product(*pos_lists):
            idx = 0
            for p, s in zip(combo, strides):
                idx += p * s
            mask = 1 << (idx & 7)
            if bits[idx >> 3] & mask:
                raise IntegrityError(f"duplicate output row (key {key.hex()})")
            bits[idx >> 3] |= mask
            count += 1
        self._observed += count
        return count

    def mark_box(self, key, ranges):
        """Mark a full box of combinations, one (start, stop) range per stream.

        Used to account for a batch increment whose contribution is a
        product of position ranges rather than explicit rows.
        """
        state = self._keys.get(key)
        if state is None:
            raise IntegrityError(f"box for unexpected key {key.hex()}")
        for i, (start, stop) in enumerate(ranges):
            if start < 0 or stop > len(state.payloads[i]):
                raise IntegrityError(f"box range out of bounds on stream {i}")
        bits = state.bits
        strides = state.strides
        count = 0
        for combo in product(*(range(a, b) for a, b in ranges)):
            idx = 0
            for p, s in zip(combo, strides):
                idx += p * s
            mask = 1 << (idx & 7)
            if bits[idx >> 3] & mask:
                raise IntegrityError(f"duplicate box row (key {key.hex()})")
            bits[idx >> 3] |= mask
            count += 1
        self._observed += count
        return count

    def finish(self):
        """Raise unless exactly the expected multiset has been observed."""
        if self._observed != self._expected_total:
            raise IntegrityError(
                f"observed {self._observed} rows, expected {self._expected_total}"
            )
