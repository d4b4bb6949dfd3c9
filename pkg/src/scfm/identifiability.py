"""Combination-matrix construction, rank analysis and coherence checks.

The standard factorial encoding enumerated over all combinations is rank
deficient (rank ``KM-(K-1)`` instead of ``KM``), which makes the emission
dictionary unrecoverable for ``K >= 2``; the shared-component encoding has
the same rank but only ``KM-(K-1)`` rows, hence full row rank. These
facts, and the incoherence conditions the recovery algorithm relies on,
are exposed here as executable checks.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import CombinatorialOverflow, NoWitness, NumericalFailure
from .types import (
    SHARED,
    STANDARD,
    CombinationMatrix,
    RankReport,
    _check_form,
    state_tuples,
)
from .validation import as_matrix, check_nonnegative

COMBINATION_GUARD = 10 ** 7


def build_combination_matrix(shape, form=SHARED):
    """Enumerate all M**K assignment columns in canonical (lexicographic) order.

    Parameters
    ----------
    shape : ModelShape
    form : {"standard", "shared"}
        Standard stacked one-hot columns, or the shared-component encoding
        with a final counting row.

    Raises
    ------
    CombinatorialOverflow
        If M**K exceeds the memory guard of 10**7 columns.
    """
    _check_form(form)
    n = shape.n_combinations
    if n > COMBINATION_GUARD:
        raise CombinatorialOverflow(
            f"M**K = {n} exceeds the guard of {COMBINATION_GUARD} columns"
        )
    tuples = state_tuples(shape)
    M, K = shape.M, shape.K
    if form == STANDARD:
        mat = np.zeros((M * K, n), dtype=int)
        for l, tup in enumerate(tuples):
            for k, m in enumerate(tup):
                mat[k * M + m, l] = 1
    else:
        w = M - 1
        mat = np.zeros((w * K + 1, n), dtype=int)
        for l, tup in enumerate(tuples):
            off = 0
            for k, m in enumerate(tup):
                if m < w:
                    mat[k * w + m, l] = 1
                else:
                    off += 1
            mat[w * K, l] = off
    return CombinationMatrix(shape=shape, form=form, matrix=mat, column_index=tuples)


def numerical_rank(matrix, tolerance=0.0):
    """Rank by singular-value thresholding.

    ``tolerance=0`` selects the relative default
    ``max(m, n) * eps * sigma_max``. The returned ``nullspace_dim`` is the
    left-nullspace dimension (rows minus rank).
    """
    arr = as_matrix(matrix, "matrix", dtype=float)
    check_nonnegative(tolerance, "tolerance")
    try:
        svals = np.linalg.svd(arr, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"SVD did not converge: {exc}") from exc
    smax = float(svals[0]) if svals.size else 0.0
    tol = float(tolerance)
    if tol == 0.0:
        tol = max(arr.shape) * np.finfo(arr.dtype).eps * smax
    rank = int(np.sum(svals > tol))
    return RankReport(
        numerical_rank=rank,
        nullspace_dim=arr.shape[0] - rank,
        tolerance=tol,
        singular_values=svals,
    )


def verify_identifiability(shape, tolerance=0.0):
    """Rank-based identifiability verdicts for both encodings.

    The standard encoding is identifiable iff its combination matrix has
    full row rank KM (true only for K = 1); the shared-component encoding
    is identifiable iff its rank equals KM-(K-1) (always true).
    """
    std = build_combination_matrix(shape, STANDARD)
    shr = build_combination_matrix(shape, SHARED)
    std_rank = numerical_rank(std.matrix, tolerance).numerical_rank
    shr_rank = numerical_rank(shr.matrix, tolerance).numerical_rank
    return {
        "standard_rank": std_rank,
        "shared_rank": shr_rank,
        "standard_identifiable": std_rank == shape.n_standard_rows,
        "shared_identifiable": shr_rank == shape.n_shared_rows,
    }


def nullspace_witness(shape):
    """Explicit integer vector alpha with alpha @ R_combinations == 0.

    Constant +1 over the first block, -1 over the second, zero elsewhere;
    every standard combination column has exactly one 1 per block, so the
    product telescopes to the sum of the block constants, which is zero.

    Raises
    ------
    NoWitness
        If K = 1 (the left nullspace is trivial).
    """
    if shape.K < 2:
        raise NoWitness("the standard combination matrix has full row rank for K = 1")
    alpha = np.zeros(shape.M * shape.K, dtype=int)
    alpha[: shape.M] = 1
    alpha[shape.M: 2 * shape.M] = -1
    return alpha


@dataclass(frozen=True)
class IncoherenceReport:
    """Outcome of the shared-component incoherence conditions.

    ``worst_margin`` is the smallest slack over all inequality instances
    (negative means violated); exact ties are reported in the margin but
    do not count as violations. ``degenerate`` flags a shared component
    with no magnitude, which fails the conditions outright.
    """

    holds: bool
    worst_margin: float
    violations: list
    degenerate: bool


def incoherence_check(emission):
    """Check that the shared component is the least correlated column.

    Two conditions over the non-shared columns ``mu``: every ``<mu, s>``
    is at most every inner product between two distinct non-shared
    columns, and at most ``<s, s>``. Inequalities are non-strict; an
    all-zero shared component is flagged degenerate and never passes.
    """
    W = emission.nonshared
    s = emission.shared
    n = W.shape[1]
    M = emission.shape.M
    labels = [(k, m) for k in range(emission.shape.K) for m in range(M - 1)]

    gram = W.T @ W
    sprod = W.T @ s
    ss = float(s @ s)

    scale = max(ss, float(np.abs(gram).max()) if gram.size else 0.0)
    degenerate = ss <= np.finfo(float).eps * max(scale, 1.0)

    violations = []
    worst = np.inf
    for c in range(n):
        lhs = sprod[c]
        for a in range(n):
            for b in range(a + 1, n):
                slack = gram[a, b] - lhs
                worst = min(worst, slack)
                if slack < 0:
                    violations.append(
                        {"condition": "cross", "shared_pair": labels[c],
                         "pair": (labels[a], labels[b]), "slack": float(slack)}
                    )
        slack = ss - lhs
        worst = min(worst, slack)
        if slack < 0:
            violations.append(
                {"condition": "magnitude", "shared_pair": labels[c], "slack": float(slack)}
            )
    if degenerate:
        violations.append({"condition": "degenerate-shared", "slack": -0.0})
    worst = float(worst) if np.isfinite(worst) else float(ss)
    holds = not violations
    return IncoherenceReport(
        holds=holds, worst_margin=worst, violations=violations, degenerate=degenerate
    )
