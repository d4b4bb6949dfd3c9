"""scikit-learn style estimators wrapping the functional pipeline.

Both classes follow the standard estimator contract (``fit`` returns
``self``, learned state lives in trailing-underscore attributes,
``get_params``/``set_params`` come from ``BaseEstimator``), so they
compose with pipelines, grid search and ``clone``. Data is accepted in
the sklearn orientation (``n_samples x n_features``) and transposed at
the boundary; the functional core works column-wise.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .cluster import ClusterOptions
from .em import EMConfig, em_fit, _log_gaussian_grid
from .generate import IID
from .identifiability import build_combination_matrix
from .pipeline import PipelineOptions, run_pipeline
from .recovery import RecoveryOptions
from .types import SHARED, ModelShape
from .validation import as_matrix


def _check_fitted(estimator, attr):
    if not hasattr(estimator, attr):
        raise NotFittedError(
            f"this {type(estimator).__name__} instance is not fitted yet; "
            "call fit first"
        )


class SharedComponentDictionaryLearner(TransformerMixin, BaseEstimator):
    """Dictionary learner for shared-component factorial data.

    Fitting clusters the samples into all ``n_states ** n_chains``
    combination values, reads the dictionary columns off sorted pairwise
    correlations, decodes per-sample chain states by sparse regression,
    and estimates priors (or transition matrices) and the noise
    covariance from the decoded states.

    Parameters
    ----------
    n_states : int
        States per chain, > 2 (the last state selects the shared component).
    n_chains : int
        Number of latent chains.
    mode : {"iid", "markov"}
        Whether chain parameters are mixture priors or transition matrices.
    restarts : int
        Clustering restarts (lowest distortion wins).
    lam : float or None
        Grouping/decoding l1 weight; None picks a relative default per column.
    binarize_threshold : float
        Activation threshold on decoded codes.
    force : bool
        Proceed even if some combinations are missing after clustering.
    random_state : int
        Seed for the clustering restarts.

    Attributes
    ----------
    emission_ : EmissionMatrix
        Learned dictionary (blocks share their last column).
    components_ : ndarray of shape (n_chains*(n_states-1)+1, n_features)
        Compact dictionary, one atom per row (shared atom last).
    priors_ / transitions_ : ndarray
        Chain parameters, depending on ``mode``.
    covariance_ : ndarray
        Residual covariance estimate.
    assignments_ : AssignmentMatrix
        Decoded training assignments.
    """

    def __init__(self, n_states=3, n_chains=2, *, mode=IID, restarts=20,
                 lam=None, binarize_threshold=0.5, force=False, random_state=0):
        self.n_states = n_states
        self.n_chains = n_chains
        self.mode = mode
        self.restarts = restarts
        self.lam = lam
        self.binarize_threshold = binarize_threshold
        self.force = force
        self.random_state = random_state

    def _options(self):
        return PipelineOptions(
            mode=self.mode,
            cluster=ClusterOptions(restarts=self.restarts, seed=self.random_state),
            recovery=RecoveryOptions(
                lam=self.lam, binarize_threshold=self.binarize_threshold
            ),
            assign_lam=self.lam,
            binarize_threshold=self.binarize_threshold,
            force=self.force,
        )

    def fit(self, X, y=None):
        X = as_matrix(X, "X")
        shape = ModelShape(L=X.shape[1], M=self.n_states, K=self.n_chains)
        result = run_pipeline(X.T, shape, self._options())
        self.model_shape_ = shape
        self.n_features_in_ = X.shape[1]
        self.emission_ = result.dictionary.O_hat
        self.components_ = result.dictionary.O_hat.compact.T.copy()
        self.shared_component_ = result.dictionary.s_hat
        self.assignments_ = result.assignments
        self.clusters_ = result.clusters
        self.recovery_report_ = result.dictionary.provenance
        self.covariance_ = result.params.covariance
        if self.mode == IID:
            self.priors_ = result.params.priors
        else:
            self.transitions_ = result.params.transitions
            self.transitions_raw_ = result.params.transitions_raw
        self.timings_ = result.timings
        return self

    def transform(self, X):
        """Decode shared-component assignment codes, one row per sample."""
        _check_fitted(self, "emission_")
        from .lasso import LassoOptions, infer_assignments

        X = as_matrix(X, "X")
        inference = infer_assignments(
            self.emission_, X.T, LassoOptions(lam=self.lam),
            self.binarize_threshold,
        )
        return inference.assignments.matrix.T.astype(float)

    def inverse_transform(self, codes):
        """Reconstruct sample means from assignment codes."""
        _check_fitted(self, "emission_")
        codes = as_matrix(codes, "codes")
        return codes @ self.components_

    def predict(self, X):
        """Combination index per sample (lexicographic state-tuple order)."""
        _check_fitted(self, "emission_")
        codes = self.transform(X)
        from .types import AssignmentMatrix

        assignments = AssignmentMatrix(
            shape=self.model_shape_, form=SHARED, matrix=codes.T.astype(int)
        )
        states = assignments.states
        M = self.n_states
        idx = np.zeros(states.shape[1], dtype=int)
        for k in range(self.n_chains):
            idx = idx * M + states[k]
        return idx


class FactorialMixtureEM(BaseEstimator):
    """Exact EM over all state combinations with a tied shared column.

    The reference baseline: a spherical Gaussian mixture with one
    component per combination, means constrained through the
    shared-component dictionary, best of ``restarts`` seeded runs.
    """

    def __init__(self, n_states=3, n_chains=2, *, restarts=10, max_iter=200,
                 tol=1e-6, init_perturbation=0.1, random_state=0):
        self.n_states = n_states
        self.n_chains = n_chains
        self.restarts = restarts
        self.max_iter = max_iter
        self.tol = tol
        self.init_perturbation = init_perturbation
        self.random_state = random_state

    def _config(self):
        return EMConfig(
            restarts=self.restarts,
            max_iters=self.max_iter,
            rel_tol=self.tol,
            init_perturbation=self.init_perturbation,
            seed=self.random_state,
        )

    def fit(self, X, y=None):
        X = as_matrix(X, "X")
        shape = ModelShape(L=X.shape[1], M=self.n_states, K=self.n_chains)
        result = em_fit(X.T, shape, self._config())
        self.model_shape_ = shape
        self.n_features_in_ = X.shape[1]
        self.emission_ = result.emission
        self.weights_ = result.weights
        self.priors_ = result.priors
        self.sigma2_ = result.sigma2
        self.loglik_ = result.loglik
        self.loglik_trace_ = result.loglik_trace
        self.best_restart_ = result.best_restart
        return self

    def _log_joint(self, X):
        combos = build_combination_matrix(self.model_shape_, SHARED).matrix.astype(float)
        means = self.emission_.compact @ combos
        logpdf = _log_gaussian_grid(X.T, means, self.sigma2_)
        with np.errstate(divide="ignore"):
            return logpdf + np.log(self.weights_)[None, :]

    def predict_proba(self, X):
        """Posterior responsibility of every combination, rows sum to one."""
        _check_fitted(self, "emission_")
        X = as_matrix(X, "X")
        joint = self._log_joint(X)
        joint -= joint.max(axis=1, keepdims=True)
        resp = np.exp(joint)
        return resp / resp.sum(axis=1, keepdims=True)

    def predict(self, X):
        """Most likely combination index per sample."""
        _check_fitted(self, "emission_")
        X = as_matrix(X, "X")
        return np.argmax(self._log_joint(X), axis=1)

    def score(self, X, y=None):
        """Mean per-sample log-likelihood."""
        _check_fitted(self, "emission_")
        from .em import loglik

        X = as_matrix(X, "X")
        return loglik(X.T, self.emission_, self.weights_, self.sigma2_) / X.shape[0]
