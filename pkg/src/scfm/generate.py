"""Synthetic data generation for shared-component factorial models.

Dictionaries are sampled entrywise Gaussian and resampled until the
incoherence conditions hold (the recovery guarantee is vacuous without
them); chains are i.i.d. or first-order Markov; observations are the
chain-selected column sums plus spherical Gaussian noise.

All sampling is driven by an explicit ``numpy.random.Generator`` derived
from the config seed, never global state, so identical configs produce
bit-identical datasets.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .exceptions import IncoherenceUnsatisfiable, InvalidConfig, ShapeMismatch
from .identifiability import incoherence_check
from .types import SHARED, AssignmentMatrix, EmissionMatrix, ModelShape
from .validation import (
    check_column_stochastic,
    check_nonnegative,
    check_positive_int,
    check_simplex_rows,
)

IID = "iid"
MARKOV = "markov"


@dataclass
class GeneratorConfig:
    """Sampling configuration for one synthetic dataset.

    ``priors`` (K x M, rows on the simplex) applies to i.i.d. chains and
    ``transitions`` (K x M x M, column-stochastic: ``A[k][i, j]`` is the
    probability of moving to state i from state j) to Markov chains;
    ``None`` means uniform. Markov chains start from the uniform
    distribution. State ``M-1`` is the shared/off state.
    """

    shape: ModelShape
    dictionary_variance: float = 10.0
    noise_variance: float = 0.5
    T: int = 200
    chain_type: str = IID
    priors: np.ndarray = None
    transitions: np.ndarray = None
    seed: int = 0
    require_incoherence: bool = True
    max_retries: int = 1000

    def __post_init__(self):
        if not isinstance(self.shape, ModelShape):
            self.shape = ModelShape(**self.shape)
        check_nonnegative(self.dictionary_variance, "dictionary_variance")
        check_nonnegative(self.noise_variance, "noise_variance")
        check_positive_int(self.T, "T", 1)
        check_positive_int(self.max_retries, "max_retries", 1)
        if self.chain_type not in (IID, MARKOV):
            raise InvalidConfig(f"chain_type must be '{IID}' or '{MARKOV}'")
        M, K = self.shape.M, self.shape.K
        if self.priors is None:
            self.priors = np.full((K, M), 1.0 / M)
        else:
            self.priors = check_simplex_rows(self.priors, "priors")
            if self.priors.shape != (K, M):
                raise InvalidConfig(f"priors must be K x M = {(K, M)}")
        if self.transitions is None:
            self.transitions = np.full((K, M, M), 1.0 / M)
        else:
            self.transitions = check_column_stochastic(self.transitions, "transitions")
            if self.transitions.shape != (K, M, M):
                raise InvalidConfig(f"transitions must be K x M x M = {(K, M, M)}")

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            raw = json.load(fh)
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw):
        raw = dict(raw)
        unknown = set(raw) - {
            "shape", "dictionary_variance", "noise_variance", "T", "chain_type",
            "priors", "transitions", "seed", "require_incoherence", "max_retries",
        }
        if unknown:
            raise InvalidConfig(f"unknown generator config keys: {sorted(unknown)}")
        if "shape" not in raw:
            raise InvalidConfig("generator config requires a 'shape' object with L, M, K")
        raw["shape"] = ModelShape(**raw["shape"])
        for key in ("priors", "transitions"):
            if raw.get(key) is not None:
                raw[key] = np.asarray(raw[key], dtype=float)
        return cls(**raw)

    def to_dict(self):
        return {
            "shape": self.shape.to_dict(),
            "dictionary_variance": self.dictionary_variance,
            "noise_variance": self.noise_variance,
            "T": self.T,
            "chain_type": self.chain_type,
            "priors": self.priors.tolist(),
            "transitions": self.transitions.tolist(),
            "seed": self.seed,
            "require_incoherence": self.require_incoherence,
            "max_retries": self.max_retries,
        }


def sample_dictionary(config, rng=None):
    """Draw an emission matrix; resample until the incoherence check holds.

    Returns ``(emission, retries)`` where retries counts rejected draws.

    Raises
    ------
    IncoherenceUnsatisfiable
        After ``config.max_retries`` rejected draws (e.g. zero variance,
        or dimensions that make the conditions improbable).
    """
    rng = np.random.default_rng(config.seed if rng is None else rng)
    shape = config.shape
    sd = np.sqrt(config.dictionary_variance)
    n_nonshared = (shape.M - 1) * shape.K
    for attempt in range(config.max_retries + 1):
        W = rng.normal(0.0, sd, size=(shape.L, n_nonshared))
        s = rng.normal(0.0, sd, size=shape.L)
        emission = EmissionMatrix.from_compact(np.column_stack([W, s]), shape)
        if not config.require_incoherence:
            return emission, attempt
        if incoherence_check(emission).holds:
            return emission, attempt
    raise IncoherenceUnsatisfiable(
        f"no incoherence-passing draw in {config.max_retries} retries "
        f"(L={shape.L}, M={shape.M}, K={shape.K}, "
        f"variance={config.dictionary_variance})"
    )


def sample_assignments(config, rng=None):
    """Sample chain states (i.i.d. or Markov) in shared-component encoding."""
    rng = np.random.default_rng(config.seed if rng is None else rng)
    shape = config.shape
    M, K, T = shape.M, shape.K, config.T
    states = np.empty((K, T), dtype=int)
    if config.chain_type == IID:
        for k in range(K):
            states[k] = rng.choice(M, size=T, p=config.priors[k])
    else:
        for k in range(K):
            A = config.transitions[k]
            cur = rng.integers(0, M)
            states[k, 0] = cur
            for t in range(1, T):
                cur = rng.choice(M, p=A[:, cur])
                states[k, t] = cur
    return AssignmentMatrix.from_states(states, shape, SHARED)


def emit_observations(emission, assignments, noise_variance, seed=None):
    """Emit ``X = O R + noise`` with spherical N(0, sigma^2 I) columns.

    ``noise_variance = 0`` returns the exact noiseless product.
    """
    check_nonnegative(noise_variance, "noise_variance")
    if emission.shape != assignments.shape:
        raise ShapeMismatch(
            f"emission shape {emission.shape} differs from assignment shape "
            f"{assignments.shape}"
        )
    design = emission.compact if assignments.form == SHARED else emission.full
    X = design @ assignments.matrix
    if noise_variance > 0:
        rng = np.random.default_rng(seed)
        X = X + rng.normal(0.0, np.sqrt(noise_variance), size=X.shape)
    return X


@dataclass
class GeneratedData:
    """One synthetic draw: dictionary, chain assignments and observations."""

    emission: EmissionMatrix
    assignments: AssignmentMatrix
    X: np.ndarray
    retries: int
    config: GeneratorConfig = field(repr=False, default=None)


def generate_dataset(config):
    """Sample dictionary, assignments and observations from one seeded stream."""
    rng = np.random.default_rng(config.seed)
    emission, retries = sample_dictionary(config, rng)
    assignments = sample_assignments(config, rng)
    X = emit_observations(emission, assignments, config.noise_variance, rng)
    return GeneratedData(
        emission=emission, assignments=assignments, X=X, retries=retries, config=config
    )
