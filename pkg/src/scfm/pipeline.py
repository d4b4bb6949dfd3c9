"""End-to-end learning pipeline: cluster, recover, decode, estimate.

Stage failures are re-raised with a ``stage`` attribute so callers can
attribute them; clustering that leaves combinations unpopulated stops the
pipeline (the recovery index arithmetic assumes the full combination set)
unless ``force`` is set.
"""

import time
from dataclasses import dataclass, field

from .cluster import ClusterOptions, estimate_combinations
from .estimate import (
    EstimatedParams,
    estimate_covariance,
    estimate_priors,
    estimate_transitions,
)
from .exceptions import DegenerateClusters, ScfmError
from .generate import IID, MARKOV
from .lasso import LassoOptions, infer_assignments
from .recovery import RecoveryOptions, learn_emissions
from .validation import as_matrix


@dataclass
class PipelineOptions:
    mode: str = IID
    cluster: ClusterOptions = field(default_factory=ClusterOptions)
    recovery: RecoveryOptions = field(default_factory=RecoveryOptions)
    assign_lam: float = None
    binarize_threshold: float = 0.5
    force: bool = False

    def __post_init__(self):
        if self.mode not in (IID, MARKOV):
            raise ValueError(f"mode must be '{IID}' or '{MARKOV}'")


@dataclass
class PipelineResult:
    clusters: object
    dictionary: object
    assignments: object
    params: EstimatedParams
    timings: dict


def _staged(stage, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except ScfmError as exc:
        exc.stage = stage
        raise


def run_pipeline(X, shape, opts=None):
    """Cluster combinations, learn the dictionary, decode states, estimate.

    Returns a :class:`PipelineResult` with per-stage wall-clock timings
    under keys ``cluster``, ``recover``, ``infer`` and ``estimate``.
    """
    opts = opts or PipelineOptions()
    X = as_matrix(X, "X")
    timings = {}

    t0 = time.perf_counter()
    clusters = _staged("clustering", estimate_combinations, X, shape, opts.cluster)
    if clusters.quality.missing_combinations > 0 and not opts.force:
        exc = DegenerateClusters(
            f"{clusters.quality.missing_combinations} of {shape.n_combinations} "
            "combinations are missing from the clustering; pass force=True to "
            "attempt recovery anyway"
        )
        exc.stage = "clustering"
        raise exc
    timings["cluster"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    dictionary = _staged("recovery", learn_emissions, clusters.centers, shape, opts.recovery)
    timings["recover"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    lopts = LassoOptions(
        lam=opts.assign_lam,
        max_iters=opts.recovery.lasso_max_iters,
        tol=opts.recovery.lasso_tol,
        nonnegative=True,
    )
    inference = _staged(
        "inference", infer_assignments, dictionary.O_hat, X, lopts,
        opts.binarize_threshold,
    )
    timings["infer"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    params = EstimatedParams()
    if opts.mode == IID:
        params.priors = _staged("estimation", estimate_priors, inference.assignments)
    else:
        params.transitions, params.transitions_raw = _staged(
            "estimation", estimate_transitions, inference.assignments
        )
    params.covariance = _staged(
        "estimation", estimate_covariance, X, dictionary.O_hat, inference.assignments
    )
    timings["estimate"] = time.perf_counter() - t0

    return PipelineResult(
        clusters=clusters,
        dictionary=dictionary,
        assignments=inference.assignments,
        params=params,
        timings=timings,
    )
