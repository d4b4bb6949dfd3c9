"""Exact EM baseline over all M**K state combinations.

The mixture has one spherical Gaussian per combination, with means tied
through the shared-component dictionary: the mean of combination l is the
dictionary times the l-th combination column, so the M-step solves a
single weighted least-squares system for the ``K(M-1)+1`` free columns
(shared column included once). Combination weights are parameterized
directly on the M**K-simplex, which keeps the M-step closed form; chain
priors are recovered by marginalizing at the end.

Feasible at the model scales of interest (M**K in the tens); this is the
strongest tractable baseline rather than a variational approximation.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .exceptions import InvalidConfig
from .types import SHARED, EmissionMatrix
from .identifiability import build_combination_matrix
from .validation import as_matrix, check_positive, check_positive_int

SIGMA2_FLOOR = 1e-12


@dataclass
class EMConfig:
    restarts: int = 10
    max_iters: int = 200
    rel_tol: float = 1e-6
    init_perturbation: float = 0.1
    seed: int = 0
    store_responsibilities: bool = False

    def __post_init__(self):
        check_positive_int(self.restarts, "restarts", 1)
        check_positive_int(self.max_iters, "max_iters", 1)
        check_positive(self.rel_tol, "rel_tol")
        check_positive(self.init_perturbation, "init_perturbation")


@dataclass
class EMResult:
    """Best-restart EM fit.

    ``loglik_trace`` is the per-iteration log-likelihood of the winning
    restart; ``restart_traces`` keeps every restart's trace (each is
    nondecreasing up to numerical slack). ``priors`` are the chain
    marginals of the combination ``weights``.
    """

    emission: EmissionMatrix
    weights: np.ndarray
    priors: np.ndarray
    sigma2: float
    loglik: float
    loglik_trace: list
    best_restart: int
    restart_traces: list = field(repr=False)
    responsibilities: np.ndarray = field(repr=False, default=None)
    ridge_used: bool = False


def _log_gaussian_grid(X, means, sigma2):
    """(T, n) log N(x_t | mean_l, sigma2 I) via the expanded square."""
    L = X.shape[0]
    d2 = (
        (X ** 2).sum(axis=0)[:, None]
        - 2.0 * X.T @ means
        + (means ** 2).sum(axis=0)[None, :]
    )
    d2 = np.maximum(d2, 0.0)
    return -0.5 * d2 / sigma2 - 0.5 * L * np.log(2.0 * np.pi * sigma2)


def loglik(X, emission, weights, sigma2):
    """Mixture log-likelihood over combinations, log-sum-exp stabilized."""
    X = as_matrix(X, "X", allow_empty=True)
    if X.size == 0 or X.shape[1] == 0:
        return 0.0
    combos = build_combination_matrix(emission.shape, SHARED).matrix.astype(float)
    means = emission.compact @ combos
    weights = np.asarray(weights, dtype=float)
    logpdf = _log_gaussian_grid(X, means, max(float(sigma2), SIGMA2_FLOOR))
    return float(logsumexp(logpdf, axis=1, b=weights[None, :]).sum())


def _responsibilities(X, means, weights, sigma2):
    logpdf = _log_gaussian_grid(X, means, sigma2)
    with np.errstate(divide="ignore"):
        logw = np.log(weights)[None, :]
    joint = logpdf + logw
    norm = logsumexp(joint, axis=1, keepdims=True)
    resp = np.exp(joint - norm)
    return resp, float(norm.sum())


def marginal_priors(weights, shape):
    """Chain-state marginals of a combination weight vector."""
    combos = build_combination_matrix(shape, SHARED)
    priors = np.zeros((shape.K, shape.M))
    for l, tup in enumerate(combos.column_index):
        for k, m in enumerate(tup):
            priors[k, m] += weights[l]
    return priors


def combination_weights(priors, shape):
    """Product combination weights from independent chain priors."""
    combos = build_combination_matrix(shape, SHARED)
    w = np.ones(shape.n_combinations)
    for l, tup in enumerate(combos.column_index):
        for k, m in enumerate(tup):
            w[l] *= priors[k][m]
    return w


def _m_step_dictionary(X, resp, combos):
    """Weighted least squares for the free dictionary columns.

    Solves ``O (C diag(g) C^T) = X resp C^T`` with g the responsibility
    masses; a scaled ridge of 1e-8 is added if the normal matrix is
    singular (flagged to the caller).
    """
    g = resp.sum(axis=0)
    G = (combos * g[None, :]) @ combos.T
    B = X @ resp @ combos.T
    try:
        return np.linalg.solve(G, B.T).T, False
    except np.linalg.LinAlgError:
        ridge = 1e-8 * max(1.0, np.trace(G) / G.shape[0])
        return np.linalg.solve(G + ridge * np.eye(G.shape[0]), B.T).T, True


def _run_single(X, shape, config, rng, init):
    L, T = X.shape
    combos = build_combination_matrix(shape, SHARED).matrix.astype(float)
    n = combos.shape[1]
    if init is not None:
        O = init[0].copy()
        sigma2 = init[1]
        weights = init[2].copy()
    else:
        xbar = X.mean(axis=1)
        scale = config.init_perturbation * float(X.std())
        O = xbar[:, None] + rng.normal(0.0, max(scale, np.finfo(float).tiny),
                                       size=(L, shape.n_shared_rows))
        sigma2 = max(float(((X - xbar[:, None]) ** 2).mean()), SIGMA2_FLOOR)
        weights = np.full(n, 1.0 / n)

    trace = []
    resp = None
    ridge_used = False
    converged = False
    for _ in range(config.max_iters):
        means = O @ combos
        resp, ll = _responsibilities(X, means, weights, sigma2)
        trace.append(ll)
        if len(trace) >= 2:
            prev = trace[-2]
            if abs(ll - prev) <= config.rel_tol * max(1.0, abs(prev)):
                converged = True
                break
        O, flag = _m_step_dictionary(X, resp, combos)
        ridge_used = ridge_used or flag
        weights = resp.sum(axis=0) / T
        means = O @ combos
        d2 = (
            (X ** 2).sum(axis=0)[:, None]
            - 2.0 * X.T @ means
            + (means ** 2).sum(axis=0)[None, :]
        )
        sigma2 = max(float((resp * np.maximum(d2, 0.0)).sum() / (L * T)), SIGMA2_FLOOR)
    if not converged:
        # the cap cut the loop after an M-step: evaluate once more so the
        # reported log-likelihood matches the returned parameters
        resp, ll = _responsibilities(X, O @ combos, weights, sigma2)
        trace.append(ll)
    return O, weights, sigma2, trace, resp, ridge_used


def em_fit(X, shape, config=None, init_emission=None, init_sigma2=None, init_weights=None):
    """Fit the combination mixture by EM with restarts.

    Each restart initializes every dictionary column at the data mean plus
    a Gaussian perturbation scaled by ``init_perturbation`` times the data
    standard deviation; the restart with the highest final log-likelihood
    wins. Passing ``init_emission`` overrides initialization (used for
    fixed-point checks); the explicit init is then shared by all restarts.
    """
    config = config or EMConfig()
    X = as_matrix(X, "X")
    if X.shape[0] != shape.L:
        raise InvalidConfig(f"X has {X.shape[0]} rows, expected L={shape.L}")
    T = X.shape[1]
    if T < shape.n_combinations:
        warnings.warn(
            f"T={T} is below the number of combinations {shape.n_combinations}; "
            "the mixture is underdetermined",
            UserWarning,
            stacklevel=2,
        )
    init = None
    if init_emission is not None:
        sigma2 = float(init_sigma2) if init_sigma2 is not None else max(
            float(X.var()), SIGMA2_FLOOR
        )
        weights = (
            np.asarray(init_weights, dtype=float)
            if init_weights is not None
            else np.full(shape.n_combinations, 1.0 / shape.n_combinations)
        )
        init = (init_emission.compact, max(sigma2, SIGMA2_FLOOR), weights)

    seeds = np.random.SeedSequence(config.seed).spawn(config.restarts)
    best = None
    traces = []
    for r in range(config.restarts):
        rng = np.random.default_rng(seeds[r])
        O, weights, sigma2, trace, resp, ridge_used = _run_single(
            X, shape, config, rng, init
        )
        traces.append(trace)
        if best is None or trace[-1] > best[0]:
            best = (trace[-1], r, O, weights, sigma2, trace, resp, ridge_used)

    ll, r, O, weights, sigma2, trace, resp, ridge_used = best
    emission = EmissionMatrix.from_compact(O, shape)
    return EMResult(
        emission=emission,
        weights=weights,
        priors=marginal_priors(weights, shape),
        sigma2=sigma2,
        loglik=ll,
        loglik_trace=trace,
        best_restart=r,
        restart_traces=traces,
        responsibilities=resp if config.store_responsibilities else None,
        ridge_used=ridge_used,
    )
