"""Dictionary recovery from the combination-value matrix.

Given the ``L x M**K`` matrix of (estimated) noiseless combination values,
the emission dictionary is read off from sorted pairwise correlations, with
no alternating minimization:

1. the column whose smallest ``(M-1)**K`` correlations have the least sum
   is K times the shared component;
2. in that column's sorted correlation vector, the ``(M-1)K`` largest
   entries below the maximum (the maximum is the column's correlation with
   itself) identify the combinations with exactly one active non-shared
   component; subtracting ``(K-1) s`` from those yields the non-shared
   columns;
3. the ``(M-1)**K`` smallest entries identify the all-active combinations,
   and sparse regression of those onto the non-shared columns reveals
   which columns never co-occur, i.e. belong to the same chain.

Requires more than two states per chain: with M = 2 the shared-locating
argmin has multiple minimizers and the method is undefined here.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .exceptions import (
    AmbiguousSharedWarning,
    GroupingInconsistent,
    IndexCollision,
    ShapeMismatch,
    SortTieWarning,
    UnsupportedM2,
)
from .lasso import LassoOptions, lasso_matrix
from .types import EmissionMatrix
from .validation import as_matrix, as_vector, check_positive

TIE_RTOL = 1e-9
PARTITION_ENUM_CAP = 100_000


@dataclass
class RecoveryOptions:
    lam: float = None  # None resolves per column, see lasso.LassoOptions
    binarize_threshold: float = 0.5
    lasso_max_iters: int = 1000
    lasso_tol: float = 1e-8

    def __post_init__(self):
        if self.lam is not None:
            check_positive(self.lam, "lam")
        check_positive(self.binarize_threshold, "binarize_threshold")


@dataclass
class CorrelationProfile:
    """Gram matrix of combination values, with row-sorted view.

    ``shared_index`` and ``v`` (the sorted row of the shared column) are
    filled in by :func:`locate_shared`; ``b1`` / ``bk`` by
    :func:`extract_components`.
    """

    C: np.ndarray
    C_sorted: np.ndarray
    xc: np.ndarray = field(repr=False)
    shared_index: int = None
    v: np.ndarray = None
    tie_margin: float = None
    b1: np.ndarray = None
    bk: np.ndarray = None
    sort_margins: dict = None


@dataclass
class RecoveredDictionary:
    """Recovery output: shared component, ungrouped columns, grouping, dictionary."""

    s_hat: np.ndarray
    W_hat: np.ndarray
    H_hat: np.ndarray
    O_hat: EmissionMatrix
    provenance: dict


def correlation_matrix(xc):
    """Gram matrix of the combination-value columns (exact inner products)."""
    xc = as_matrix(xc, "combination values")
    C = xc.T @ xc
    C = (C + C.T) / 2.0  # exact symmetry regardless of BLAS rounding
    return CorrelationProfile(C=C, C_sorted=np.sort(C, axis=1), xc=xc)


def locate_shared(profile, shape):
    """Find the all-shared column and the shared component estimate.

    The shared column minimizes the sum of its ``(M-1)**K`` smallest
    correlations; ties break to the lowest index with a warning, since a
    tie means the incoherence margin is gone.

    Returns ``(index, s_hat)`` and records them on the profile.
    """
    if shape.M <= 2:
        raise UnsupportedM2(
            "shared-component location requires M > 2; the argmin has multiple "
            "minimizers for M = 2"
        )
    n = shape.n_combinations
    if profile.C.shape != (n, n):
        raise ShapeMismatch(f"profile holds {profile.C.shape[0]} columns, expected {n}")
    q = (shape.M - 1) ** shape.K
    sums = profile.C_sorted[:, :q].sum(axis=1)
    istar = int(np.argmin(sums))
    order = np.argsort(sums, kind="stable")
    margin = float(sums[order[1]] - sums[order[0]]) if n > 1 else np.inf
    scale = max(1.0, float(np.abs(sums).max()))
    if margin <= TIE_RTOL * scale:
        warnings.warn(
            f"shared-column argmin decided by a tie (margin {margin:.3e}); "
            "incoherence margin is degenerate",
            AmbiguousSharedWarning,
            stacklevel=2,
        )
    s_hat = profile.xc[:, istar] / shape.K
    profile.shared_index = istar
    profile.v = profile.C_sorted[istar].copy()
    profile.tie_margin = margin
    return istar, s_hat


def extract_components(profile, xc, s_hat, shape):
    """Split the sorted correlation row into component index sets.

    ``b1`` holds the columns at the ``(M-1)K`` largest sorted positions
    below the top one (the top is the shared column's self-correlation);
    ``bk`` the ``(M-1)**K`` smallest. Returns
    ``(W_hat, Y_hat)``: the non-shared columns (shared part subtracted)
    and the shared-free combination sums.

    Raises
    ------
    IndexCollision
        If the two blocks meet at equal correlation values (K >= 2), which
        makes the membership ambiguous (broken incoherence or clustering
        failure upstream).
    """
    if profile.shared_index is None:
        raise ValueError("locate_shared must run before extract_components")
    xc = as_matrix(xc, "combination values")
    s_hat = as_vector(s_hat, "s_hat")
    n = shape.n_combinations
    p = (shape.M - 1) * shape.K
    q = (shape.M - 1) ** shape.K
    row = profile.C[profile.shared_index]
    order = np.argsort(row, kind="stable")
    v = row[order]

    bk = np.sort(order[:q])
    b1 = np.sort(order[n - p - 1:n - 1])
    scale = max(1.0, float(np.abs(v).max()))
    if shape.K >= 2 and v[q - 1] >= v[n - p - 1] - TIE_RTOL * scale:
        raise IndexCollision(
            "smallest-correlation block reaches the largest-correlation block: "
            "component index sets overlap"
        )
    margins = {
        "top_gap": float(v[n - 1] - v[n - 2]) if n >= 2 else np.inf,
        "b1_lower_gap": float(v[n - p - 1] - v[n - p - 2]) if n - p - 2 >= 0 else np.inf,
        "bk_upper_gap": float(v[q] - v[q - 1]) if q < n else np.inf,
    }
    for name, gap in margins.items():
        if gap <= TIE_RTOL * scale and np.isfinite(gap):
            warnings.warn(
                f"sorted-correlation boundary {name} decided by a tie (gap {gap:.3e})",
                SortTieWarning,
                stacklevel=2,
            )
    W_hat = xc[:, b1] - (shape.K - 1) * s_hat[:, None]
    Y_hat = xc[:, bk]
    profile.b1 = b1
    profile.bk = bk
    profile.sort_margins = margins
    return W_hat, Y_hat


def _unique_partition(n_cols, groups_of, n_groups, co_occur):
    """Partition columns into groups that never co-occur; must be unique.

    Enumerates partitions of ``range(n_cols)`` into ``n_groups`` groups of
    size ``groups_of`` whose members are pairwise non-co-occurring,
    anchoring each group at its lowest remaining index so group order is
    canonical. Returns the single valid partition.
    """
    from itertools import combinations

    found = []
    visited = [0]

    def rec(remaining, acc):
        visited[0] += 1
        if visited[0] > PARTITION_ENUM_CAP:
            raise GroupingInconsistent("grouping search exceeded the enumeration cap")
        if len(found) > 1:
            return
        if not remaining:
            found.append(list(acc))
            return
        anchor = remaining[0]
        rest = remaining[1:]
        for extra in combinations(rest, groups_of - 1):
            grp = (anchor,) + extra
            if any(co_occur[a, b] for i, a in enumerate(grp) for b in grp[i + 1:]):
                continue
            left = [v for v in rest if v not in extra]
            rec(left, acc + [grp])
            if len(found) > 1:
                return

    rec(list(range(n_cols)), [])
    if len(found) != 1:
        raise GroupingInconsistent(
            f"co-occurrence pattern admits {len(found)}{'+' if len(found) > 1 else ''} "
            f"partitions into {n_groups} groups of {groups_of}; expected exactly one"
        )
    return found[0]


def group_components(W_hat, Y_hat, s_hat, shape, opts=None):
    """Group the non-shared columns into per-chain blocks via sparse codes.

    Every column of ``Y_hat`` is (approximately) a sum of one non-shared
    column per chain, so two columns of ``W_hat`` that co-occur in a code
    belong to different chains. The complement relation is required to
    determine the K blocks uniquely; blocks are ordered by their smallest
    column index and the shared component is appended to each.

    Returns ``(H_hat, O_hat, groups)`` with ``H_hat`` the binarized code
    matrix and ``groups`` the recovered column indices per chain.
    """
    opts = opts or RecoveryOptions()
    W_hat = as_matrix(W_hat, "W_hat")
    Y_hat = as_matrix(Y_hat, "Y_hat")
    s_hat = as_vector(s_hat, "s_hat")
    p = (shape.M - 1) * shape.K
    if W_hat.shape[1] != p:
        raise ShapeMismatch(f"W_hat must have {p} columns, got {W_hat.shape[1]}")
    lopts = LassoOptions(
        lam=opts.lam, max_iters=opts.lasso_max_iters, tol=opts.lasso_tol, nonnegative=True
    )
    H = lasso_matrix(Y_hat, W_hat, lopts).H
    H_bin = (H >= opts.binarize_threshold).astype(int)

    co_occur = np.zeros((p, p), dtype=bool)
    for t in range(H_bin.shape[1]):
        active = np.flatnonzero(H_bin[:, t])
        for i in active:
            for j in active:
                if i != j:
                    co_occur[i, j] = True
    groups = _unique_partition(p, shape.M - 1, shape.K, co_occur)
    groups = sorted((tuple(sorted(g)) for g in groups), key=min)

    blocks = [
        np.column_stack([W_hat[:, list(g)], s_hat]) for g in groups
    ]
    o_hat = EmissionMatrix.from_blocks(blocks)
    return H_bin, o_hat, groups


def learn_emissions(xc, shape, opts=None):
    """Full dictionary recovery from the combination-value matrix.

    Composes :func:`correlation_matrix`, :func:`locate_shared`,
    :func:`extract_components` and :func:`group_components`; the returned
    provenance records the shared index, both component index sets, the
    grouping, and the tie/sort margins for downstream reports.
    """
    opts = opts or RecoveryOptions()
    xc = as_matrix(xc, "combination values")
    n = shape.n_combinations
    if xc.shape != (shape.L, n):
        raise ShapeMismatch(
            f"combination values have shape {xc.shape}, expected {(shape.L, n)}"
        )
    profile = correlation_matrix(xc)
    istar, s_hat = locate_shared(profile, shape)
    W_hat, Y_hat = extract_components(profile, xc, s_hat, shape)
    H_hat, o_hat, groups = group_components(W_hat, Y_hat, s_hat, shape, opts)
    provenance = {
        "shared_index": istar,
        "b1": [int(i) for i in profile.b1],
        "bk": [int(i) for i in profile.bk],
        "groups": [list(map(int, g)) for g in groups],
        "tie_margin": profile.tie_margin,
        "sort_margins": profile.sort_margins,
    }
    return RecoveredDictionary(
        s_hat=s_hat, W_hat=W_hat, H_hat=H_hat, O_hat=o_hat, provenance=provenance
    )
