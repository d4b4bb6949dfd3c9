"""Permutation-resolved dictionary error.

The model is identifiable only up to permuting chains and permuting the
non-shared columns within a chain, so the error between two dictionaries
is the Frobenius distance minimized over that group. Chain permutations
are enumerated exactly (K! is tiny at the guarded sizes) and the
within-chain matching is solved by the Hungarian method on squared
column distances. The shared column is pinned: it occupies the last slot
of every block and is never permuted.
"""

from itertools import permutations

import numpy as np
from scipy.optimize import linear_sum_assignment

from .exceptions import KTooLarge, ShapeMismatch

MAX_K_EXACT = 4


def _block_match_cost(block_hat, block_true):
    """Min-cost within-block matching of non-shared columns (squared).

    Distances are computed from explicit differences: the expanded-square
    form cancels catastrophically when the dictionaries agree to machine
    precision, which is exactly the regime exact-recovery tests sit in.
    """
    a = block_hat[:, :-1].T
    b = block_true[:, :-1].T
    cost = ((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=-1)
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].sum())


def dictionary_error(o_hat, o_true):
    """Frobenius distance minimized over block and within-block permutations."""
    if o_hat.shape != o_true.shape:
        raise ShapeMismatch(
            f"dictionaries have shapes {o_hat.shape} and {o_true.shape}"
        )
    K = o_hat.shape.K
    if K > MAX_K_EXACT:
        raise KTooLarge(f"exact permutation search is guarded at K <= {MAX_K_EXACT}")
    shared_cost = float(((o_hat.shared - o_true.shared) ** 2).sum()) * K
    pair_cost = np.zeros((K, K))
    for i in range(K):
        for j in range(K):
            pair_cost[i, j] = _block_match_cost(o_hat.blocks[i], o_true.blocks[j])
    best = np.inf
    for sigma in permutations(range(K)):
        best = min(best, sum(pair_cost[k, sigma[k]] for k in range(K)))
    return float(np.sqrt(best + shared_cost))


def normalized_dictionary_error(o_hat, o_true):
    """Dictionary error divided by the Frobenius norm of the true dictionary."""
    scale = float(np.linalg.norm(o_true.full))
    err = dictionary_error(o_hat, o_true)
    return err / scale if scale > 0 else err
