# Compiled scan kernel: walks the flattened multi-pattern automaton over a
# code-point array.  Two passes (count, then fill) so the hot loop runs
# without the GIL; corpus-level detection can therefore scan in parallel
# threads.

import numpy as np

cimport numpy as cnp

COMPILED = True


cdef class _KernelState:
    cdef cnp.int64_t[::1] trans_offsets
    cdef cnp.uint32_t[::1] trans_chars
    cdef cnp.int64_t[::1] trans_targets
    cdef cnp.int64_t[::1] fail
    cdef cnp.int64_t[::1] out_offsets
    cdef cnp.int64_t[::1] out_pids
    cdef cnp.int64_t[::1] pattern_lengths


def prepare(flat):
    cdef _KernelState st = _KernelState()
    st.trans_offsets = np.ascontiguousarray(flat.trans_offsets, dtype=np.int64)
    st.trans_chars = np.ascontiguousarray(flat.trans_chars, dtype=np.uint32)
    st.trans_targets = np.ascontiguousarray(flat.trans_targets, dtype=np.int64)
    st.fail = np.ascontiguousarray(flat.fail, dtype=np.int64)
    st.out_offsets = np.ascontiguousarray(flat.out_offsets, dtype=np.int64)
    st.out_pids = np.ascontiguousarray(flat.out_pids, dtype=np.int64)
    st.pattern_lengths = np.ascontiguousarray(flat.pattern_lengths, dtype=np.int64)
    return st


cdef inline long _step(_KernelState st, long s, unsigned int code) nogil:
    cdef long lo, hi, mid
    cdef unsigned int c
    while True:
        lo = st.trans_offsets[s]
        hi = st.trans_offsets[s + 1]
        # binary search for code within this state's sorted transition slice
        while lo < hi:
            mid = (lo + hi) // 2
            c = st.trans_chars[mid]
            if c == code:
                return st.trans_targets[mid]
            elif c < code:
                lo = mid + 1
            else:
                hi = mid
        if s == 0:
            return 0
        s = st.fail[s]


def scan(_KernelState st, const cnp.uint32_t[::1] codes):
    """Return (starts, ends, pattern_ids) for every pattern occurrence."""
    cdef Py_ssize_t n = codes.shape[0]
    cdef Py_ssize_t pos
    cdef long s = 0
    cdef long total = 0
    with nogil:
        for pos in range(n):
            s = _step(st, s, codes[pos])
            total += st.out_offsets[s + 1] - st.out_offsets[s]
    starts = np.empty(total, dtype=np.int64)
    ends = np.empty(total, dtype=np.int64)
    pids = np.empty(total, dtype=np.int64)
    cdef cnp.int64_t[::1] starts_v = starts
    cdef cnp.int64_t[::1] ends_v = ends
    cdef cnp.int64_t[::1] pids_v = pids
    cdef long k = 0, i, pid
    s = 0
    with nogil:
        for pos in range(n):
            s = _step(st, s, codes[pos])
            for i in range(st.out_offsets[s], st.out_offsets[s + 1]):
                pid = st.out_pids[i]
                starts_v[k] = pos + 1 - st.pattern_lengths[pid]
                ends_v[k] = pos + 1
                pids_v[k] = pid
                k += 1
    return starts, ends, pids
