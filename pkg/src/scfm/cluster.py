"""Estimation of the combination matrix (all distinct noiseless values).

k-means over the observation columns with greedy farthest-point (max-min)
seeding and multiple restarts, keeping the lowest-distortion run. Max-min
seeding directly exploits the separation the model guarantees between the
M**K combination means, which is what makes recovery of the exact
combination set plausible here. Restart 0 starts from the point farthest
from the data mean (so the outcome is invariant to column order);
subsequent restarts use seeded random starting points.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .exceptions import InsufficientData, MixingWeightWarning, ShapeMismatch
from .validation import as_matrix, check_nonnegative, check_positive_int


@dataclass
class ClusterOptions:
    restarts: int = 20
    max_iter: int = 100
    seed: int = 0

    def __post_init__(self):
        check_positive_int(self.restarts, "restarts", 1)
        check_positive_int(self.max_iter, "max_iter", 1)


@dataclass
class ClusterDiagnostics:
    """Separation and noise summary of a clustering run.

    ``concentration_ok`` holds when the smallest pairwise center distance
    exceeds ``sigma_hat * sqrt(L)`` (the separation sufficient for
    high-dimensional recovery of the true combination set);
    ``separation_ratio`` is that distance divided by the same threshold.
    """

    min_center_separation: float
    noise_shell_radius: float
    separation_ratio: float
    concentration_ok: bool
    sigma_hat: float
    distortion: float
    missing_combinations: int
    best_restart: int
    n_iter: int


@dataclass
class ClusteredCombinations:
    """Estimated combination values (centers, arbitrary column order)."""

    centers: np.ndarray
    counts: np.ndarray
    labels: np.ndarray
    quality: ClusterDiagnostics = field(repr=False)


def _wcss(points, centers, labels):
    return float(((points - centers[labels]) ** 2).sum())


def _maxmin_seed(points, n_centers, start):
    """Greedy farthest-point center indices beginning at ``start``."""
    chosen = [start]
    d2 = ((points - points[start]) ** 2).sum(axis=1)
    for _ in range(n_centers - 1):
        nxt = int(np.argmax(d2))
        chosen.append(nxt)
        d2 = np.minimum(d2, ((points - points[nxt]) ** 2).sum(axis=1))
    return np.array(chosen)


def _assign(points, centers):
    d2 = (
        (points ** 2).sum(axis=1)[:, None]
        - 2.0 * points @ centers.T
        + (centers ** 2).sum(axis=1)[None, :]
    )
    return np.argmin(d2, axis=1)


def _lloyd(points, centers, max_iter):
    labels = _assign(points, centers)
    prev = _wcss(points, centers, labels)
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        new_centers = centers.copy()
        for j in range(centers.shape[0]):
            members = labels == j
            if members.any():
                new_centers[j] = points[members].mean(axis=0)
            else:
                # relocate an empty center onto the worst-served point;
                # that point's cost drops to zero, so WCSS still decreases
                worst = int(np.argmax(((points - new_centers[labels]) ** 2).sum(axis=1)))
                new_centers[j] = points[worst]
        new_labels = _assign(points, new_centers)
        cur = _wcss(points, new_centers, new_labels)
        assert cur <= prev + 1e-9 * max(1.0, prev), "k-means distortion increased"
        moved = not np.array_equal(new_labels, labels)
        centers, labels, prev = new_centers, new_labels, cur
        if not moved:
            break
    return centers, labels, prev, n_iter


def estimate_combinations(X, shape, opts=None):
    """Cluster observations into M**K centers estimating the combination values.

    Deterministic given ``opts.seed``; restarts are independent and the
    lowest-distortion run wins (ties to the lowest restart index).

    Raises
    ------
    InsufficientData
        If there are fewer observations than combinations.
    """
    opts = opts or ClusterOptions()
    X = as_matrix(X, "X")
    if X.shape[0] != shape.L:
        raise ShapeMismatch(f"X has {X.shape[0]} rows, expected L={shape.L}")
    n_centers = shape.n_combinations
    T = X.shape[1]
    if T < n_centers:
        raise InsufficientData(f"T={T} observations cannot populate {n_centers} centers")
    points = X.T.copy()

    mean = points.mean(axis=0)
    far_start = int(np.argmax(((points - mean) ** 2).sum(axis=1)))
    rng = np.random.default_rng(opts.seed)
    starts = [far_start] + list(rng.integers(0, T, size=opts.restarts - 1))

    best = None
    for r, start in enumerate(starts):
        centers = points[_maxmin_seed(points, n_centers, start)].astype(float)
        centers, labels, distortion, n_iter = _lloyd(points, centers, opts.max_iter)
        if best is None or distortion < best[0]:
            best = (distortion, r, centers, labels, n_iter)
    distortion, best_r, centers, labels, n_iter = best

    counts = np.bincount(labels, minlength=n_centers)
    missing = int((counts == 0).sum())
    sigma_hat = float(np.sqrt(distortion / (T * shape.L)))

    diffs = centers[:, None, :] - centers[None, :, :]
    d2 = (diffs ** 2).sum(axis=-1)
    np.fill_diagonal(d2, np.inf)
    min_sep = float(np.sqrt(d2.min())) if n_centers > 1 else np.inf
    threshold = sigma_hat * np.sqrt(shape.L)
    quality = ClusterDiagnostics(
        min_center_separation=min_sep,
        noise_shell_radius=float(np.sqrt(2.0 * shape.L) * sigma_hat),
        separation_ratio=float(min_sep / threshold) if threshold > 0 else np.inf,
        concentration_ok=bool(min_sep > threshold),
        sigma_hat=sigma_hat,
        distortion=distortion,
        missing_combinations=missing,
        best_restart=best_r,
        n_iter=n_iter,
    )
    floor = 0.5 / n_centers
    if counts.min() / T < floor:
        warnings.warn(
            f"smallest empirical combination weight {counts.min() / T:.4g} is below "
            f"the expected floor {floor:.4g}",
            MixingWeightWarning,
            stacklevel=2,
        )
    return ClusteredCombinations(
        centers=centers.T.copy(), counts=counts, labels=labels, quality=quality
    )


@dataclass
class ConcentrationReport:
    """Empirical check of the pairwise-distance concentration bound.

    For observation pairs with centers c_i, c_j, the squared deviation
    ``||(x_i - x_j) - (c_i - c_j)||^2`` concentrates around ``2 sigma^2 L``;
    the theoretical tail bound at relative width c is ``2 exp(-L c^2 / 24)``.
    Display-only diagnostic: the fractions are reported next to the bound,
    nothing is enforced.
    """

    constants: tuple
    empirical_fractions: tuple
    bounds: tuple
    n_pairs: int


def concentration_diagnostic(X, centers, sigma_hat, constants=(0.5, 1.0), max_points=400):
    """Compare empirical pairwise-distance deviations to the Gaussian bound."""
    X = as_matrix(X, "X")
    centers = as_matrix(centers, "centers")
    check_nonnegative(sigma_hat, "sigma_hat")
    L, T = X.shape
    if centers.shape[0] != L:
        raise ShapeMismatch("centers row count differs from X")
    labels = _assign(X.T, centers.T)
    if T > max_points:
        keep = np.unique(np.linspace(0, T - 1, max_points).astype(int))
    else:
        keep = np.arange(T)
    pts = X[:, keep].T
    ctr = centers[:, labels[keep]].T
    resid = pts - ctr
    ii, jj = np.triu_indices(len(keep), k=1)
    dev2 = ((resid[ii] - resid[jj]) ** 2).sum(axis=1)
    expected = 2.0 * sigma_hat ** 2 * L
    # absolute slack absorbs accumulation rounding in the exactly
    # noiseless case, where the threshold would otherwise be zero
    slack = np.sqrt(np.finfo(float).eps) * max(1.0, float((pts ** 2).sum(axis=1).max()))
    fractions = []
    bounds = []
    for c in constants:
        exceed = np.abs(dev2 - expected) > c * expected + slack
        fractions.append(float(np.mean(exceed)) if dev2.size else 0.0)
        bounds.append(float(2.0 * np.exp(-L * c ** 2 / 24.0)))
    return ConcentrationReport(
        constants=tuple(constants),
        empirical_fractions=tuple(fractions),
        bounds=tuple(bounds),
        n_pairs=int(dev2.size),
    )
