"""Pure-Python (numpy/scipy) version of the power-iteration kernel.

Used when the compiled extension is unavailable or when the environment
variable ``CERTIMEASURE_PURE_PYTHON`` is set.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp


def powers_block(indptr, indices, data, V, k_max, hat, h, vnorm, wnorm, S):
    """Iterate ``v <- M v`` (plus ``v <- v - e h sum v`` when ``hat``) on the
    columns of ``V`` in place, ``k_max`` times.

    Fills ``vnorm[k, c]`` with the floating l1 norm (Ulam) or exact linf norm
    (hat) of column ``c`` after ``k`` steps, ``wnorm[k, c]`` with the linf
    norm of the uncorrected product (hat only) and adds ``sum_c |v_ic|`` into
    ``S[k, i]`` (hat only).  Row 0 of each output refers to the start block.
    """
    n, b = V.shape
    M = sp.csr_matrix((data, indices, indptr), shape=(n, n))
    _record(V, 0, hat, vnorm, S)
    for k in range(1, k_max + 1):
        W = M @ V
        if hat:
            wnorm[k] = np.max(np.abs(W), axis=0)
            t = _seq_sum(W) * h
            V = W - t
        else:
            V = W
        _record(V, k, hat, vnorm, S)


def _record(V, k, hat, vnorm, S):
    A = np.abs(V)
    if hat:
        vnorm[k] = np.max(A, axis=0)
        # column by column, the summation order of the compiled kernel
        for c in range(A.shape[1]):
            S[k] += A[:, c]
    else:
        vnorm[k] = _seq_sum(A)


def _seq_sum(A):
    """Column sums in row order; ``np.sum`` may switch to pairwise summation."""
    return np.cumsum(A, axis=0)[-1]
