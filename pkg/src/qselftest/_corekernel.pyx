# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled correlation kernel: the inner loop of correlation evaluation.

Same contract as qselftest._pykernel.corr_table; avoids per-call numpy
dispatch overhead, which dominates for the small dense operators this
package works with.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def corr_table(const cnp.complex128_t[:, ::1] m not None,
               const cnp.complex128_t[:, :, ::1] a_ops not None,
               const cnp.complex128_t[:, :, ::1] b_ops not None):
    """Probability table t[a, b] = Re tr(M^H A_a M B_b^T)."""
    cdef Py_ssize_t na = a_ops.shape[0]
    cdef Py_ssize_t nb = b_ops.shape[0]
    cdef Py_ssize_t da = m.shape[0]
    cdef Py_ssize_t db = m.shape[1]
    if a_ops.shape[1] != da or a_ops.shape[2] != da:
        raise ValueError("alice operators do not match state dimension")
    if b_ops.shape[1] != db or b_ops.shape[2] != db:
        raise ValueError("bob operators do not match state dimension")

    out = np.zeros((na, nb))
    cdef double[:, ::1] ov = out
    tmp_arr = np.zeros((da, db), dtype=np.complex128)
    core_arr = np.zeros((db, db), dtype=np.complex128)
    cdef cnp.complex128_t[:, ::1] tmp = tmp_arr
    cdef cnp.complex128_t[:, ::1] core = core_arr
    cdef Py_ssize_t a, b, i, j, k, p, q
    cdef cnp.complex128_t acc

    for a in range(na):
        # tmp = A_a @ M
        for i in range(da):
            for j in range(db):
                acc = 0
                for k in range(da):
                    acc = acc + a_ops[a, i, k] * m[k, j]
                tmp[i, j] = acc
        # core = M^H @ tmp
        for p in range(db):
            for q in range(db):
                acc = 0
                for i in range(da):
                    acc = acc + m[i, p].conjugate() * tmp[i, q]
                core[p, q] = acc
        for b in range(nb):
            acc = 0
            for p in range(db):
                for q in range(db):
                    acc = acc + core[p, q] * b_ops[b, p, q]
            ov[a, b] = acc.real
    return out
