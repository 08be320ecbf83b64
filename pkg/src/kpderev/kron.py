"""Kronecker-product filter algebra.

A length K = K1*K2 filter g is represented as a sum of P Kronecker
products of short factors,

    g = sum_p  g2_p (x) g1_p,      g[k2*K1 + k1] = sum_p g2_p[k2] g1_p[k1],

which is a rank-P factorization of g reshaped to a K1 x K2 matrix. The
stacked regressors let the two factor banks act on the shared history
without ever materializing length-K vectors: with S[k1, k2] equal to
history[k2*K1 + k1],

    s2 block p = S  conj(g2_p)          (length K1)
    s1 block p = S^T conj(g1_p)         (length K2)

so that g1^H s2 = g2^H s1 = g^H history exactly.
"""

import numpy as np


def _check_blocks(g1_blocks: np.ndarray, g2_blocks: np.ndarray):
    g1 = np.asarray(g1_blocks)
    g2 = np.asarray(g2_blocks)
    if g1.ndim != 2 or g2.ndim != 2:
        raise ValueError("factor banks must be 2-D: (P, K1) and (P, K2)")
    if g1.shape[0] != g2.shape[0]:
        raise ValueError(f"factor banks disagree on P: {g1.shape[0]} vs {g2.shape[0]}")
    return g1, g2


def kron_expand(g1_blocks: np.ndarray, g2_blocks: np.ndarray) -> np.ndarray:
    """Materialize the length K1*K2 filter from its factor banks."""
    g1, g2 = _check_blocks(g1_blocks, g2_blocks)
    return np.einsum("pa,pb->ab", g2, g1).reshape(-1)


def stacked_regressors(history: np.ndarray, g1_blocks: np.ndarray,
                       g2_blocks: np.ndarray, counter=None) -> tuple:
    """Project the shared history onto both factor banks.

    Returns (s2, s1) of lengths P*K1 and P*K2.
    """
    g1, g2 = _check_blocks(g1_blocks, g2_blocks)
    p, k1 = g1.shape
    k2 = g2.shape[1]
    history = np.asarray(history)
    if history.shape != (k1 * k2,):
        raise ValueError(f"history must have length {k1 * k2}, got {history.shape}")
    s_mat = history.reshape(k2, k1).T  # S[k1, k2]
    s2 = (g2.conj() @ s_mat.T).reshape(-1)
    s1 = (g1.conj() @ s_mat).reshape(-1)
    if counter is not None:
        counter.add_cc(2 * p * k1 * k2)
    return s2, s1
