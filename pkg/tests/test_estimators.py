"""scikit-learn estimator contract for the two model classes."""

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import Pipeline

from scfm import (
    FactorialMixtureEM,
    GeneratorConfig,
    ModelShape,
    SharedComponentDictionaryLearner,
    dictionary_error,
    generate_dataset,
)


@pytest.fixture(scope="module")
def data():
    return generate_dataset(
        GeneratorConfig(shape=ModelShape(L=40, M=3, K=2), T=180,
                        noise_variance=0.0, seed=5)
    )


def test_fit_learns_dictionary(data):
    est = SharedComponentDictionaryLearner(n_states=3, n_chains=2, restarts=8)
    est.fit(data.X.T)
    assert est.n_features_in_ == 40
    assert est.components_.shape == (5, 40)
    assert est.priors_.shape == (2, 3)
    assert est.covariance_.shape == (40, 40)
    assert dictionary_error(est.emission_, data.emission) <= 1e-6


def test_transform_and_inverse(data):
    est = SharedComponentDictionaryLearner(n_states=3, n_chains=2, restarts=8)
    codes = est.fit(data.X.T).transform(data.X.T)
    assert codes.shape == (180, 5)
    recon = est.inverse_transform(codes)
    assert np.allclose(recon, data.X.T, rtol=0, atol=1e-8)


def test_predict_combination_indices(data):
    est = SharedComponentDictionaryLearner(n_states=3, n_chains=2, restarts=8)
    idx = est.fit(data.X.T).predict(data.X.T)
    assert idx.shape == (180,)
    assert idx.min() >= 0 and idx.max() < 9


def test_markov_mode(data):
    est = SharedComponentDictionaryLearner(n_states=3, n_chains=2, mode="markov")
    est.fit(data.X.T)
    assert est.transitions_.shape == (2, 3, 3)
    assert np.allclose(est.transitions_.sum(axis=1), 1.0)


def test_not_fitted_errors(data):
    with pytest.raises(NotFittedError):
        SharedComponentDictionaryLearner().transform(data.X.T)
    with pytest.raises(NotFittedError):
        FactorialMixtureEM().predict(data.X.T)


def test_get_params_clone_roundtrip():
    est = SharedComponentDictionaryLearner(n_states=4, n_chains=3, lam=0.2)
    cloned = clone(est)
    assert cloned.get_params()["n_states"] == 4
    assert cloned.get_params()["lam"] == 0.2
    est.set_params(restarts=5)
    assert est.restarts == 5


def test_sklearn_pipeline_composition(data):
    pipe = Pipeline([
        ("codes", SharedComponentDictionaryLearner(n_states=3, n_chains=2,
                                                   restarts=6)),
    ])
    codes = pipe.fit_transform(data.X.T)
    assert codes.shape == (180, 5)


def test_em_estimator(data):
    em = FactorialMixtureEM(n_states=3, n_chains=2, restarts=3, max_iter=50,
                            random_state=1)
    em.fit(data.X.T)
    assert em.weights_.shape == (9,)
    assert em.priors_.shape == (2, 3)
    proba = em.predict_proba(data.X.T[:11])
    assert proba.shape == (11, 9)
    assert np.allclose(proba.sum(axis=1), 1.0)
    labels = em.predict(data.X.T[:11])
    assert np.array_equal(labels, np.argmax(proba, axis=1))
    assert np.isfinite(em.score(data.X.T))


def test_em_estimator_deterministic(data):
    a = FactorialMixtureEM(restarts=2, max_iter=30, random_state=7).fit(data.X.T)
    b = FactorialMixtureEM(restarts=2, max_iter=30, random_state=7).fit(data.X.T)
    assert a.loglik_ == b.loglik_
    assert np.array_equal(a.emission_.full, b.emission_.full)
