"""Auxiliary parameter estimation from decoded assignments.

Mixture priors and HMM transition matrices are estimated by counting
state occurrences in the (binary, structure-valid) assignment matrix; the
noise covariance by the usual estimator on reconstruction residuals.

The raw transition counting formula yields joint frequencies whose
columns need not be stochastic, so columns are normalized after counting
(zero-count columns fall back to uniform with a warning) and both forms
are returned.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .exceptions import InsufficientData, ShapeMismatch, ZeroCountWarning
from .types import SHARED
from .validation import as_matrix


@dataclass
class EstimatedParams:
    """Estimated hidden-state parameters plus noise covariance.

    Exactly one of ``priors`` (i.i.d. mode, K x M rows on the simplex) and
    ``transitions`` (Markov mode, K x M x M column-stochastic) is set;
    ``transitions_raw`` keeps the unnormalized joint frequencies.
    """

    priors: np.ndarray = None
    transitions: np.ndarray = None
    transitions_raw: np.ndarray = None
    covariance: np.ndarray = None


def estimate_priors(assignments):
    """Empirical state frequencies per chain; state M-1 is shared/off."""
    states = assignments.states
    M = assignments.shape.M
    T = assignments.n_samples
    priors = np.zeros((assignments.shape.K, M))
    for k in range(assignments.shape.K):
        priors[k] = np.bincount(states[k], minlength=M) / T
    return priors


def estimate_transitions(assignments):
    """Count one-step transitions per chain and normalize columns.

    Returns ``(transitions, raw)``: the column-stochastic estimate (the
    entry ``[k, i, j]`` is the probability of moving to state i from
    state j) and the raw joint frequencies with the ``1/(T-1)`` weight.
    """
    states = assignments.states
    M, K = assignments.shape.M, assignments.shape.K
    T = assignments.n_samples
    if T < 2:
        raise InsufficientData("transition estimation requires T >= 2")
    raw = np.zeros((K, M, M))
    for k in range(K):
        np.add.at(raw[k], (states[k, 1:], states[k, :-1]), 1.0)
    raw /= T - 1
    transitions = raw.copy()
    zero_cols = []
    for k in range(K):
        colsum = transitions[k].sum(axis=0)
        empty = colsum == 0
        if empty.any():
            zero_cols.extend((k, int(j)) for j in np.flatnonzero(empty))
            transitions[k][:, empty] = 1.0 / M
            colsum = transitions[k].sum(axis=0)
        transitions[k] /= colsum
    if zero_cols:
        warnings.warn(
            f"states never left: {zero_cols}; their transition columns were "
            "set to uniform",
            ZeroCountWarning,
            stacklevel=2,
        )
    return transitions, raw


def estimate_covariance(X, emission, assignments):
    """Residual covariance ``(X - O R)(X - O R)^T / (T - 1)``.

    Symmetric positive semidefinite by construction (symmetrized against
    accumulation rounding).
    """
    X = as_matrix(X, "X")
    if emission.shape != assignments.shape:
        raise ShapeMismatch("emission and assignment shapes disagree")
    T = assignments.n_samples
    if X.shape != (emission.shape.L, T):
        raise ShapeMismatch(
            f"X has shape {X.shape}, expected {(emission.shape.L, T)}"
        )
    if T < 2:
        raise InsufficientData("covariance estimation requires T >= 2")
    design = emission.compact if assignments.form == SHARED else emission.full
    resid = X - design @ assignments.matrix
    cov = resid @ resid.T / (T - 1)
    return (cov + cov.T) / 2.0
