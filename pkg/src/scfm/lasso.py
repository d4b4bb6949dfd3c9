"""l1-regularized least squares by cyclic coordinate descent.

Solves ``min_h ||y - W h||_2^2 + lam * ||h||_1`` (optionally with
``h >= 0``) one column at a time. Problem sizes here are tiny (the
number of variables is the count of non-shared dictionary columns), so a
dependency-free coordinate descent with exact soft-threshold updates is
both simple and fast.

The objective squares the residual norm: unlike the unsquared form it
admits closed-form coordinate updates, and for the small residuals that
matter here the two share their minimizer structure.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import ShapeMismatch
from .types import SHARED, AssignmentMatrix
from .validation import as_matrix, as_vector, check_positive, check_positive_int

AUTO_LAMBDA_SCALE = 0.1


@dataclass
class LassoOptions:
    """Solver settings.

    ``lam=None`` resolves per column to ``0.1 * max|W.T y|`` (a relative
    regularization scale; the objective's natural weight is arbitrary
    under data rescaling). ``nonnegative`` defaults on because the codes
    being recovered are {0,1}-valued.
    """

    lam: float = None
    max_iters: int = 1000
    tol: float = 1e-8
    nonnegative: bool = True

    def __post_init__(self):
        if self.lam is not None:
            check_positive(self.lam, "lam")
        check_positive_int(self.max_iters, "max_iters", 1)
        check_positive(self.tol, "tol")


@dataclass
class LassoResult:
    coef: np.ndarray
    n_iter: int
    converged: bool
    kkt_residual: float


def _resolve_lambda(y, W, opts):
    if opts.lam is not None:
        return float(opts.lam)
    scale = float(np.abs(W.T @ y).max()) if W.size else 1.0
    return AUTO_LAMBDA_SCALE * max(scale, np.finfo(float).tiny)


def _objective(y, W, h, lam):
    r = y - W @ h
    return float(r @ r + lam * np.abs(h).sum())


def _kkt_residual(r, W, h, norms, lam, nonnegative):
    """Largest coordinate move a further update could make (0 at a fixed point)."""
    worst = 0.0
    for i in range(W.shape[1]):
        if norms[i] == 0.0:
            continue
        rho = W[:, i] @ r + norms[i] * h[i]
        if nonnegative:
            target = max(0.0, rho - lam / 2.0) / norms[i]
        else:
            target = np.sign(rho) * max(0.0, abs(rho) - lam / 2.0) / norms[i]
        worst = max(worst, abs(target - h[i]))
    return worst


def lasso_column(y, W, opts=None):
    """Solve one penalized column problem.

    Returns a :class:`LassoResult`; ``converged`` is False when the
    coordinate updates were still moving after ``max_iters`` passes (the
    best iterate is returned regardless). The reported ``kkt_residual``
    is the largest move a further coordinate update could make.
    """
    opts = opts or LassoOptions()
    W = as_matrix(W, "W", allow_empty=True)
    y = as_vector(y, "y")
    if y.shape[0] != W.shape[0]:
        raise ShapeMismatch(f"y has length {y.shape[0]}, W has {W.shape[0]} rows")
    n = W.shape[1]
    lam = _resolve_lambda(y, W, opts)
    norms = (W ** 2).sum(axis=0)
    h = np.zeros(n)
    r = y.copy()
    prev_obj = _objective(y, W, h, lam)
    n_iter = 0
    converged = False
    kkt = _kkt_residual(r, W, h, norms, lam, opts.nonnegative)
    for n_iter in range(1, opts.max_iters + 1):
        for i in range(n):
            if norms[i] == 0.0:
                continue
            old = h[i]
            rho = W[:, i] @ r + norms[i] * old
            if opts.nonnegative:
                new = max(0.0, rho - lam / 2.0) / norms[i]
            else:
                new = np.sign(rho) * max(0.0, abs(rho) - lam / 2.0) / norms[i]
            if new != old:
                h[i] = new
                r += W[:, i] * (old - new)
        obj = _objective(y, W, h, lam)
        # each coordinate update minimizes the objective exactly in that
        # coordinate, so a full pass can never increase it
        assert obj <= prev_obj + 1e-9 * max(1.0, abs(prev_obj)), "objective increased"
        prev_obj = obj
        # converge on the optimality residual, not the last pass's moves:
        # on correlated designs coordinates keep nudging each other long
        # after individual updates fall below any fixed size
        kkt = _kkt_residual(r, W, h, norms, lam, opts.nonnegative)
        if kkt <= opts.tol:
            converged = True
            break
    return LassoResult(coef=h, n_iter=n_iter, converged=converged, kkt_residual=kkt)


@dataclass
class LassoMatrixResult:
    H: np.ndarray
    converged: np.ndarray
    kkt_residuals: np.ndarray


def lasso_matrix(Y, W, opts=None):
    """Columnwise :func:`lasso_column` over Y; columns are independent."""
    opts = opts or LassoOptions()
    W = as_matrix(W, "W", allow_empty=True)
    Y = as_matrix(Y, "Y", allow_empty=True)
    if Y.shape[0] != W.shape[0]:
        raise ShapeMismatch(f"Y has {Y.shape[0]} rows, W has {W.shape[0]} rows")
    n_cols = Y.shape[1]
    H = np.zeros((W.shape[1], n_cols))
    converged = np.ones(n_cols, dtype=bool)
    kkt = np.zeros(n_cols)
    for t in range(n_cols):
        res = lasso_column(Y[:, t], W, opts)
        H[:, t] = res.coef
        converged[t] = res.converged
        kkt[t] = res.kkt_residual
    return LassoMatrixResult(H=H, converged=converged, kkt_residuals=kkt)


@dataclass
class AssignmentInference:
    """Inferred assignments plus per-column solver and projection diagnostics."""

    assignments: AssignmentMatrix
    raw_codes: np.ndarray
    converged: np.ndarray
    rejection_rate: float
    all_shared_fraction: float
    high_rejection: bool


def infer_assignments(emission, X, opts=None, binarize_threshold=0.5):
    """Decode assignments by columnwise sparse regression on the dictionary.

    Each observation column is coded against the compact design (the
    non-shared columns plus the shared column); coefficients at or above
    ``binarize_threshold`` mark a chain active (ties to the largest
    coefficient within the chain), and the counting row is recomputed so
    every output column is a valid shared-component assignment.
    """
    opts = opts or LassoOptions()
    X = as_matrix(X, "X")
    shape = emission.shape
    if X.shape[0] != shape.L:
        raise ShapeMismatch(f"X has {X.shape[0]} rows, dictionary has {shape.L}")
    design = emission.compact
    w = shape.M - 1
    T = X.shape[1]
    codes = lasso_matrix(X, design, opts)
    states = np.full((shape.K, T), shape.M - 1, dtype=int)
    rejected = 0
    positives = 0
    for t in range(T):
        code = codes.H[:, t]
        for k in range(shape.K):
            block = code[k * w:(k + 1) * w]
            pos = block > 0
            positives += int(pos.sum())
            super_thr = block >= binarize_threshold
            if super_thr.any():
                states[k, t] = int(np.argmax(np.where(super_thr, block, -np.inf)))
                rejected += int(pos.sum() - super_thr.sum())
            else:
                rejected += int(pos.sum())
    assignments = AssignmentMatrix.from_states(states, shape, SHARED)
    rejection_rate = rejected / positives if positives else 0.0
    all_shared = float(np.mean((states == shape.M - 1).all(axis=0))) if T else 0.0
    return AssignmentInference(
        assignments=assignments,
        raw_codes=codes.H,
        converged=codes.converged,
        rejection_rate=rejection_rate,
        all_shared_fraction=all_shared,
        high_rejection=rejection_rate > 0.5,
    )
