# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: cross-product row emission and join verification.

Mirrors `_pure` exactly; see that module for the semantic contract.
"""

from cpython.bytes cimport PyBytes_AS_STRING, PyBytes_GET_SIZE
from libc.stdlib cimport calloc, free, malloc
from libc.string cimport memcmp

from ..errors import IntegrityError

DEF MAX_STREAMS = 16


def collect_rows(components):
    """Materialize the cross product of per-stream candidate tuples."""
    cdef list comps = list(components)
    cdef Py_ssize_t n = len(comps)
    cdef Py_ssize_t i, dim
    cdef Py_ssize_t[MAX_STREAMS] sizes
    cdef Py_ssize_t[MAX_STREAMS] cursor
    if n == 0 or n > MAX_STREAMS:
        if n == 0:
            return []
        raise ValueError("too many streams")
    for i in range(n):
        if not isinstance(comps[i], list):
            comps[i] = list(comps[i])
        sizes[i] = len(<list> comps[i])
        if sizes[i] == 0:
            return []
        cursor[i] = 0
    cdef list rows = []
    cdef tuple item
    cdef list payloads
    cdef list seqs
    while True:
        payloads = []
        seqs = []
        for i in range(n):
            item = <tuple> (<list> comps[i])[cursor[i]]
            seqs.append(item[0])
            payloads.append(item[2])
        rows.append((tuple(payloads), tuple(seqs)))
        dim = n - 1
        while dim >= 0:
            cursor[dim] += 1
            if cursor[dim] < sizes[dim]:
                break
            cursor[dim] = 0
            dim -= 1
        if dim < 0:
            break
    return rows


cdef class _KeyState:
    cdef int n
    cdef Py_ssize_t* counts
    cdef Py_ssize_t* offs            # prefix sums over counts, n+1 entries
    cdef long long* strides
    cdef unsigned long long* seqs    # flat, per-stream slices sorted ascending
    cdef char** pay_ptr
    cdef Py_ssize_t* pay_len
    cdef unsigned char* bits
    cdef unsigned long long total
    cdef list refs                   # keeps payload bytes objects alive

    def __cinit__(self, per_stream):
        cdef int n = len(per_stream)
        if n == 0 or n > MAX_STREAMS:
            raise ValueError("stream count out of range")
        self.n = n
        self.counts = <Py_ssize_t*> malloc(n * sizeof(Py_ssize_t))
        self.offs = <Py_ssize_t*> malloc((n + 1) * sizeof(Py_ssize_t))
        self.strides = <long long*> malloc(n * sizeof(long long))
        if not self.counts or not self.offs or not self.strides:
            raise MemoryError()
        cdef Py_ssize_t i, j, m, flat
        flat = 0
        self.offs[0] = 0
        for i in range(n):
            m = len(<list> per_stream[i])
            self.counts[i] = m
            flat += m
            self.offs[i + 1] = flat
        self.seqs = <unsigned long long*> malloc(max(flat, 1) * sizeof(unsigned long long))
        self.pay_ptr = <char**> malloc(max(flat, 1) * sizeof(char*))
        self.pay_len = <Py_ssize_t*> malloc(max(flat, 1) * sizeof(Py_ssize_t))
        if not self.seqs or not self.pay_ptr or not self.pay_len:
            raise MemoryError()
        self.refs = []
        cdef tuple pair
        cdef bytes payload
        cdef Py_ssize_t base
        for i in range(n):
            base = self.offs[i]
            for j in range(self.counts[i]):
                pair = <tuple> (<list> per_stream[i])[j]
                self.seqs[base + j] = <unsigned long long> pair[0]
                payload = <bytes> pair[1]
                self.refs.append(payload)
                self.pay_ptr[base + j] = PyBytes_AS_STRING(payload)
                self.pay_len[base + j] = PyBytes_GET_SIZE(payload)
        cdef unsigned long long stride = 1
        for i in range(n - 1, -1, -1):
            self.strides[i] = <long long> stride
            stride *= <unsigned long long> self.counts[i]
        cdef bint empty = False
        for i in range(n):
            if self.counts[i] == 0:
                empty = True
        self.total = 0 if empty else stride
        if self.total > (<unsigned long long> 1) << 43:
            raise ValueError("expected result too large to track")
        if self.total:
            self.bits = <unsigned char*> calloc((self.total + 7) // 8, 1)
            if not self.bits:
                raise MemoryError()
        else:
            self.bits = NULL

    def __dealloc__(self):
        free(self.counts)
        free(self.offs)
        free(self.strides)
        free(self.seqs)
        free(self.pay_ptr)
        free(self.pay_len)
        free(self.bits)

    cdef Py_ssize_t find_pos(self, int stream, unsigned long long seq) nogil:
        cdef Py_ssize_t lo = self.offs[stream]
        cdef Py_ssize_t hi = self.offs[stream + 1]
        cdef Py_ssize_t mid
        while lo < hi:
            mid = (lo + hi) >> 1
            if self.seqs[mid] < seq:
                lo = mid + 1
            else:
                hi = mid
        if lo < self.offs[stream + 1] and self.seqs[lo] == seq:
            return lo - self.offs[stream]
        return -1


cdef class JoinChecker:
    """Exact multiset verifier for an n-way equi-join result."""

    cdef dict _keys
    cdef object _expected_total
    cdef unsigned long long _observed
    cdef Py_ssize_t* _scratch
    cdef Py_ssize_t _scratch_cap

    def __cinit__(self, expected):
        self._keys = {}
        self._expected_total = 0
        self._observed = 0
        self._scratch = NULL
        self._scratch_cap = 0
        cdef _KeyState state
        for key, per_stream in expected.items():
            prepared = [
                sorted(((s, p) for s, p in stream), key=lambda t: t[0])
                for stream in per_stream
            ]
            state = _KeyState(prepared)
            self._keys[key] = state
            self._expected_total += state.total

    def __dealloc__(self):
        free(self._scratch)

    @property
    def expected_total(self):
        return self._expected_total

    @property
    def observed(self):
        return self._observed

    def remaining(self):
        return self._expected_total - self._observed

    cdef Py_ssize_t* _ensure_scratch(self, Py_ssize_t need) except NULL:
        cdef Py_ssize_t* grown
        if need <= self._scratch_cap:
            return self._scratch
        grown = <Py_ssize_t*> malloc(need * sizeof(Py_ssize_t))
        if not grown:
            raise MemoryError()
        free(self._scratch)
        self._scratch = grown
        self._scratch_cap = need
        return grown

    def observe(self, key, components):
        """Verify and mark every row of the cross product of `components`."""
        cdef _KeyState ks
        state = self._keys.get(key)
        if state is None:
            raise IntegrityError(f"output row for unexpected key {key.hex()}")
        ks = <_KeyState> state
        cdef list comps = <list> components if isinstance(components, list) else list(components)
        cdef int n = len(comps)
        if n != ks.n:
            raise IntegrityError(f"expected {ks.n} components, got {n}")
        cdef Py_ssize_t[MAX_STREAMS] sizes
        cdef Py_ssize_t[MAX_STREAMS] starts
        cdef Py_ssize_t need = 0
        cdef int i
        cdef Py_ssize_t j, m
        for i in range(n):
            if not isinstance(comps[i], list):
                comps[i] = list(comps[i])
            m = len(<list> comps[i])
            if m == 0:
                return 0
            sizes[i] = m
            starts[i] = need
            need += m
        cdef Py_ssize_t* pos = self._ensure_scratch(need)
        cdef tuple item
        cdef bytes payload
        cdef Py_ssize_t p
        cdef Py_ssize_t flat
        cdef unsigned long long seq
        for i in range(n):
            for j in range(sizes[i]):
                item = <tuple> (<list> comps[i])[j]
                seq = <unsigned long long> item[0]
                p = ks.find_pos(i, seq)
                if p < 0:
                    raise IntegrityError(f"unknown tuple seq {seq} on stream {i}")
                payload = <bytes> item[2]
                flat = ks.offs[i] + p
                if (
                    ks.pay_len[flat] != PyBytes_GET_SIZE(payload)
                    or memcmp(ks.pay_ptr[flat], PyBytes_AS_STRING(payload), ks.pay_len[flat]) != 0
                ):
                    raise IntegrityError(f"payload mismatch for seq {seq} on stream {i}")
                pos[starts[i] + j] = p
        # odometer over component combinations, index updated incrementally
        cdef Py_ssize_t[MAX_STREAMS] cursor
        cdef long long idx = 0
        for i in range(n):
            cursor[i] = 0
            idx += pos[starts[i]] * ks.strides[i]
        cdef unsigned long long marked = 0
        cdef unsigned char mask
        cdef int dim
        cdef unsigned char* bits = ks.bits
        while True:
            mask = <unsigned char> (1 << (idx & 7))
            if bits[idx >> 3] & mask:
                raise IntegrityError(f"duplicate output row (key {key.hex()})")
            bits[idx >> 3] = bits[idx >> 3] | mask
            marked += 1
            dim = n - 1
            while dim >= 0:
                cursor[dim] += 1
                if cursor[dim] < sizes[dim]:
                    idx += (
                        pos[starts[dim] + cursor[dim]] - pos[starts[dim] + cursor[dim] - 1]
                    ) * ks.strides[dim]
                    break
                idx -= (pos[starts[dim] + sizes[dim] - 1] - pos[starts[dim]]) * ks.strides[dim]
                cursor[dim] = 0
                dim -= 1
            if dim < 0:
                break
        self._observed += marked
        return marked

    def mark_box(self, key, ranges):
        """Mark a full box of combinations, one (start, stop) range per stream."""
        cdef _KeyState ks
        state = self._keys.get(key)
        if state is None:
            raise IntegrityError(f"box for unexpected key {key.hex()}")
        ks = <_KeyState> state
        cdef list rng = <list> ranges if isinstance(ranges, list) else list(ranges)
        cdef int n = len(rng)
        if n != ks.n:
            raise IntegrityError(f"expected {ks.n} ranges, got {n}")
        cdef Py_ssize_t[MAX_STREAMS] lo
        cdef Py_ssize_t[MAX_STREAMS] m
        cdef int i
        cdef Py_ssize_t a, b
        cdef long long idx = 0
        for i in range(n):
            a = rng[i][0]
            b = rng[i][1]
            if a < 0 or b > ks.counts[i]:
                raise IntegrityError(f"box range out of bounds on stream {i}")
            if b <= a:
                return 0
            lo[i] = a
            m[i] = b - a
            idx += a * ks.strides[i]
        cdef Py_ssize_t[MAX_STREAMS] cursor
        for i in range(n):
            cursor[i] = 0
        cdef unsigned long long marked = 0
        cdef unsigned char mask
        cdef int dim
        cdef unsigned char* bits = ks.bits
        while True:
            mask = <unsigned char> (1 << (idx & 7))
            if bits[idx >> 3] & mask:
                raise IntegrityError(f"duplicate box row (key {key.hex()})")
            bits[idx >> 3] = bits[idx >> 3] | mask
            marked += 1
            dim = n - 1
            while dim >= 0:
                cursor[dim] += 1
                if cursor[dim] < m[dim]:
                    idx += ks.strides[dim]
                    break
                idx -= ks.strides[dim] * (m[dim] - 1)
                cursor[dim] = 0
                dim -= 1
            if dim < 0:
                break
        self._observed += marked
        return marked

    def finish(self):
        """Raise unless exactly the expected multiset has been observed."""
        if self._observed != self._expected_total:
            raise IntegrityError(
                f"observed {self._observed} rows, expected {self._expected_total}"
            )
