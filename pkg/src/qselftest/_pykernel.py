"""Pure-numpy implementation of the hot correlation kernel.

qselftest.kernels re-exports the compiled Cython version when available and
this module otherwise; both expose the same functions with identical
semantics (summation order may differ at the 1e-15 level).
"""

from __future__ import annotations

import numpy as np


def corr_table(m: np.ndarray, a_ops: np.ndarray, b_ops: np.ndarray) -> np.ndarray:
    """Probability table t[a, b] = Re tr(M^H A_a M B_b^T).

    ``m`` is the (dA, dB) coefficient matrix of the joint pure state,
    ``a_ops`` and ``b_ops`` are stacks of measurement operators for one
    question pair.  Equals <psi| A_a (x) B_b |psi> for psi = vec(m).
    """
    core = np.einsum("ip,aij,jq->apq", m.conj(), a_ops, m, optimize=True)
    return np.real(np.einsum("apq,bpq->ab", core, b_ops, optimize=True))
