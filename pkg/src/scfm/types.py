"""Core domain types for shared-component factorial models.

Conventions used throughout the package:

* data matrices are ``L x T`` (columns are observations),
* chain states are zero-based ``0 .. M-1`` and the *last* state ``M-1``
  selects the shared component ("off" state),
* the standard encoding stacks K one-hot blocks of length M; the
  shared-component encoding stacks K blocks of length ``M-1`` (one-hot or
  all-zero) plus a final counting row equal to the number of chains that
  are off.
"""

from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .exceptions import ShapeMismatch
from .validation import as_matrix, as_vector, check_positive_int

STANDARD = "standard"
SHARED = "shared"
_FORMS = (STANDARD, SHARED)


@dataclass(frozen=True)
class ModelShape:
    """Factorial model dimensions: observation dim L, M states per chain, K chains."""

    L: int
    M: int
    K: int

    def __post_init__(self):
        object.__setattr__(self, "L", check_positive_int(self.L, "L", 1))
        object.__setattr__(self, "M", check_positive_int(self.M, "M", 2))
        object.__setattr__(self, "K", check_positive_int(self.K, "K", 1))

    @property
    def n_combinations(self):
        """Number of joint state combinations M**K."""
        return self.M ** self.K

    @property
    def n_standard_rows(self):
        return self.M * self.K

    @property
    def n_shared_rows(self):
        """Row count of the shared-component encoding, K(M-1)+1 = KM-(K-1)."""
        return (self.M - 1) * self.K + 1

    def to_dict(self):
        return {"L": self.L, "M": self.M, "K": self.K}


def _check_form(form):
    if form not in _FORMS:
        raise ValueError(f"form must be one of {_FORMS}, got {form!r}")
    return form


@dataclass(frozen=True)
class EmissionMatrix:
    """Dictionary of K blocks of L x M columns whose last column is shared.

    ``blocks[k][:, m]`` is the mean vector of chain k in state m; column
    ``M-1`` of every block equals ``shared``.
    """

    shape: ModelShape
    blocks: tuple
    shared: np.ndarray

    @classmethod
    def from_blocks(cls, blocks, atol=0.0):
        """Build from K full ``L x M`` blocks, checking the tied last column."""
        blocks = tuple(as_matrix(b, f"block {k}") for k, b in enumerate(blocks))
        L, M = blocks[0].shape
        shared = blocks[0][:, M - 1].copy()
        for k, b in enumerate(blocks):
            if b.shape != (L, M):
                raise ShapeMismatch(f"block {k} has shape {b.shape}, expected {(L, M)}")
            if not np.allclose(b[:, M - 1], shared, atol=atol, rtol=0.0):
                raise ShapeMismatch(f"block {k} last column differs from the shared component")
        shape = ModelShape(L=L, M=M, K=len(blocks))
        return cls(shape=shape, blocks=blocks, shared=shared)

    @classmethod
    def from_nonshared(cls, nonshared, shared, shape):
        """Build from the ``L x (M-1)K`` non-shared columns plus shared vector."""
        W = as_matrix(nonshared, "nonshared")
        s = as_vector(shared, "shared")
        if W.shape != (shape.L, (shape.M - 1) * shape.K) or s.shape[0] != shape.L:
            raise ShapeMismatch("nonshared/shared dimensions disagree with the model shape")
        return cls.from_compact(np.column_stack([W, s]), shape)

    @classmethod
    def from_compact(cls, compact, shape):
        """Build from the ``L x (K(M-1)+1)`` compact matrix ``[W^1 .. W^K s]``."""
        compact = as_matrix(compact, "compact emission")
        if compact.shape != (shape.L, shape.n_shared_rows):
            raise ShapeMismatch(
                f"compact emission has shape {compact.shape}, expected "
                f"{(shape.L, shape.n_shared_rows)}"
            )
        s = compact[:, -1].copy()
        w = shape.M - 1
        blocks = tuple(
            np.column_stack([compact[:, k * w:(k + 1) * w], s]) for k in range(shape.K)
        )
        return cls(shape=shape, blocks=blocks, shared=s)

    @classmethod
    def from_full(cls, full, M, K):
        """Build from the ``L x KM`` standard-form matrix."""
        full = as_matrix(full, "emission matrix")
        if full.shape[1] != M * K:
            raise ShapeMismatch(f"expected {M * K} columns, got {full.shape[1]}")
        blocks = [full[:, k * M:(k + 1) * M] for k in range(K)]
        return cls.from_blocks(blocks, atol=0.0)

    @property
    def full(self):
        """Standard-form ``L x KM`` matrix (shared column repeated per block)."""
        return np.hstack(self.blocks)

    @property
    def nonshared(self):
        """``L x (M-1)K`` matrix of the non-shared columns, block order."""
        return np.hstack([b[:, :-1] for b in self.blocks])

    @property
    def compact(self):
        """``L x (K(M-1)+1)`` matrix ``[W^1 .. W^K s]`` matching the shared encoding."""
        return np.column_stack([self.nonshared, self.shared])

    def block_ranks(self, tolerance=0.0):
        """Numerical rank of each block; full column rank M is the model assumption."""
        from .identifiability import numerical_rank

        return [numerical_rank(b, tolerance).numerical_rank for b in self.blocks]


@dataclass(frozen=True)
class AssignmentMatrix:
    """Sparse indicator-structured assignment matrix, one column per step."""

    shape: ModelShape
    form: str
    matrix: np.ndarray

    def __post_init__(self):
        _check_form(self.form)

    @classmethod
    def from_states(cls, states, shape, form=SHARED):
        """Encode a ``K x T`` integer state array (states ``0..M-1``)."""
        states = np.asarray(states, dtype=int)
        if states.ndim != 2 or states.shape[0] != shape.K:
            raise ShapeMismatch(f"states must be K x T with K={shape.K}")
        if states.size and (states.min() < 0 or states.max() >= shape.M):
            raise ValueError("states must lie in 0..M-1")
        _check_form(form)
        T = states.shape[1]
        M, K = shape.M, shape.K
        if form == STANDARD:
            mat = np.zeros((M * K, T), dtype=int)
            for k in range(K):
                mat[k * M + states[k], np.arange(T)] = 1
        else:
            w = M - 1
            mat = np.zeros((w * K + 1, T), dtype=int)
            for k in range(K):
                on = states[k] < w
                cols = np.flatnonzero(on)
                mat[k * w + states[k, cols], cols] = 1
            mat[-1] = (states == M - 1).sum(axis=0)
        return cls(shape=shape, form=form, matrix=mat)

    @property
    def n_samples(self):
        return self.matrix.shape[1]

    @property
    def states(self):
        """Decode back to a ``K x T`` integer state array."""
        M, K, T = self.shape.M, self.shape.K, self.n_samples
        out = np.full((K, T), M - 1, dtype=int)
        if self.form == STANDARD:
            for k in range(K):
                out[k] = np.argmax(self.matrix[k * M:(k + 1) * M], axis=0)
        else:
            w = M - 1
            for k in range(K):
                block = self.matrix[k * w:(k + 1) * w]
                active = block.sum(axis=0) > 0
                out[k, active] = np.argmax(block[:, active], axis=0)
        return out

    def to_form(self, form):
        _check_form(form)
        if form == self.form:
            return self
        return AssignmentMatrix.from_states(self.states, self.shape, form)

    def validate(self):
        """Check the column structure invariants of the chosen encoding."""
        M, K = self.shape.M, self.shape.K
        mat = self.matrix
        if self.form == STANDARD:
            if mat.shape[0] != M * K:
                raise ShapeMismatch("standard form must have KM rows")
            if not np.isin(mat, (0, 1)).all():
                raise ValueError("standard form entries must be 0/1")
            for k in range(K):
                if not np.all(mat[k * M:(k + 1) * M].sum(axis=0) == 1):
                    raise ValueError(f"chain {k} columns are not one-hot")
        else:
            w = M - 1
            if mat.shape[0] != w * K + 1:
                raise ShapeMismatch("shared form must have K(M-1)+1 rows")
            if np.any(mat < 0):
                raise ValueError("shared form entries must be nonnegative integers")
            active = np.zeros(mat.shape[1], dtype=int)
            for k in range(K):
                colsum = mat[k * w:(k + 1) * w].sum(axis=0)
                if not np.isin(colsum, (0, 1)).all():
                    raise ValueError(f"chain {k} blocks must be one-hot or zero")
                active += colsum
            if not np.array_equal(mat[-1], K - active):
                raise ValueError("counting row does not equal K minus active chains")
        return self


@dataclass(frozen=True)
class CombinationMatrix:
    """Enumeration of every possible assignment column, one per combination.

    Columns follow the canonical lexicographic order over state tuples
    ``(m_1, ..., m_K)``; ``column_index[l]`` is the tuple for column l.
    """

    shape: ModelShape
    form: str
    matrix: np.ndarray
    column_index: tuple

    def index_of(self, states):
        """Column index of a state tuple (inverse of ``column_index``)."""
        tup = tuple(int(m) for m in states)
        M, K = self.shape.M, self.shape.K
        if len(tup) != K or any(m < 0 or m >= M for m in tup):
            raise ValueError(f"state tuple must have K={K} entries in 0..{M - 1}")
        idx = 0
        for m in tup:
            idx = idx * M + m
        return idx

    @property
    def all_shared_index(self):
        """Column index of the all-off combination (every chain shared)."""
        return self.index_of((self.shape.M - 1,) * self.shape.K)


def state_tuples(shape):
    """Canonical lexicographic enumeration of all M**K state tuples."""
    return tuple(product(range(shape.M), repeat=shape.K))


@dataclass(frozen=True)
class RankReport:
    """Numerical rank summary of a matrix at a singular-value threshold.

    ``nullspace_dim`` is the dimension of the *left* nullspace, so
    ``numerical_rank + nullspace_dim`` equals the row count (rank-nullity
    for the transposed system).
    """

    numerical_rank: int
    nullspace_dim: int
    tolerance: float
    singular_values: np.ndarray = field(repr=False)

    def to_dict(self):
        return {
            "numerical_rank": int(self.numerical_rank),
            "nullspace_dim": int(self.nullspace_dim),
            "tolerance": float(self.tolerance),
            "singular_values": [float(s) for s in self.singular_values],
        }
