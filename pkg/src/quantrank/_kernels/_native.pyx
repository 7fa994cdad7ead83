# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled scoring kernels. Mirrors pure.py operation for operation.

Both backends call the platform libm exp and use plain IEEE double
arithmetic, so scores are bit-identical across them.
"""

from libc.math cimport exp, fabs

COND_EQ = 0
COND_LT = 1
COND_GT = 2


cdef inline double _phi(int cond, double vx, double vi) noexcept nogil:
    if cond == 0:
        return exp(-fabs(vx - vi))
    if cond == 1:
        if vi < vx:
            if vi > 0.0:
                return vi / vx
            return exp(-fabs(vx - vi))
        return 0.0
    if vi > vx:
        if vx > 0.0:
            return vx / vi
        return exp(-fabs(vx - vi))
    return 0.0


def phi_scalar(int cond, double vx, double vi):
    return _phi(cond, vx, vi)


def phi_batch(int cond, double vx, double[::1] values, double[::1] out):
    cdef Py_ssize_t i
    with nogil:
        for i in range(values.shape[0]):
            out[i] = _phi(cond, vx, values[i])


def qs_batch(int cond, double vx, int unit_id, double[::1] values,
             int[::1] unit_ids, long long[::1] offsets, double[::1] out):
    cdef Py_ssize_t i
    cdef long long j, start, end, count
    cdef double total
    with nogil:
        for i in range(out.shape[0]):
            start = offsets[i]
            end = offsets[i + 1]
            total = 0.0
            for j in range(start, end):
                if unit_ids[j] == unit_id:
                    total += _phi(cond, vx, values[j])
            count = end - start
            out[i] = total / count if count else 0.0


def bm25_accumulate(double idf, double k1p1, int[::1] doc_ords,
                    double[::1] tfs, double[::1] norms, double[::1] scores):
    cdef Py_ssize_t j
    cdef int d
    cdef double tf
    with nogil:
        for j in range(doc_ords.shape[0]):
            d = doc_ords[j]
            tf = tfs[j]
            scores[d] += idf * tf * k1p1 / (tf + norms[d])
