"""Permutation-resolved dictionary error."""

import numpy as np
import pytest

from conftest import brute_force_dictionary_error, passing_dictionary

from scfm import EmissionMatrix, ModelShape, dictionary_error, normalized_dictionary_error
from scfm.exceptions import KTooLarge, ShapeMismatch


def shuffled_copy(emission, rng):
    """Same dictionary with blocks and within-block columns permuted."""
    M = emission.shape.M
    blocks = [b.copy() for b in emission.blocks]
    rng.shuffle(blocks)
    out = []
    for b in blocks:
        perm = rng.permutation(M - 1)
        out.append(np.column_stack([b[:, perm], b[:, M - 1]]))
    return EmissionMatrix.from_blocks(out)


def test_zero_on_permutation_equivalent():
    rng = np.random.default_rng(0)
    emission = passing_dictionary(seed=1, L=20, M=3, K=2)
    assert dictionary_error(shuffled_copy(emission, rng), emission) == 0.0


def test_perturbation_identity():
    rng = np.random.default_rng(1)
    emission = passing_dictionary(seed=2, L=15, M=3, K=2)
    noise = 1e-3 * rng.normal(size=(15, 6))
    full = emission.full + noise
    # re-tie the shared column so the perturbed matrix is well formed
    shared = full[:, 2].copy()
    full[:, 5] = shared
    perturbed = EmissionMatrix.from_full(full, 3, 2)
    expected = float(np.linalg.norm(perturbed.full - emission.full))
    got = dictionary_error(perturbed, emission)
    assert got == pytest.approx(expected, rel=1e-9)


def test_matches_brute_force_enumeration():
    rng = np.random.default_rng(7)
    shape = ModelShape(L=10, M=3, K=2)
    for _ in range(10):
        a = EmissionMatrix.from_compact(rng.normal(size=(10, 5)), shape)
        b = EmissionMatrix.from_compact(rng.normal(size=(10, 5)), shape)
        assert dictionary_error(a, b) == pytest.approx(
            brute_force_dictionary_error(a, b), rel=1e-12
        )


def test_symmetry():
    rng = np.random.default_rng(9)
    shape = ModelShape(L=8, M=4, K=2)
    a = EmissionMatrix.from_compact(rng.normal(size=(8, 7)), shape)
    b = EmissionMatrix.from_compact(rng.normal(size=(8, 7)), shape)
    assert dictionary_error(a, b) == pytest.approx(dictionary_error(b, a), rel=1e-12)


def test_triangle_inequality_sampled():
    rng = np.random.default_rng(21)
    shape = ModelShape(L=7, M=3, K=2)
    for _ in range(10):
        a, b, c = (
            EmissionMatrix.from_compact(rng.normal(size=(7, 5)), shape)
            for _ in range(3)
        )
        assert dictionary_error(a, c) <= (
            dictionary_error(a, b) + dictionary_error(b, c) + 1e-9
        )


def test_shared_column_is_pinned():
    # a dictionary whose shared column moved should register that distance
    # even when non-shared columns match after permutation
    shape = ModelShape(L=6, M=3, K=2)
    rng = np.random.default_rng(3)
    compact = rng.normal(size=(6, 5))
    a = EmissionMatrix.from_compact(compact, shape)
    moved = compact.copy()
    moved[:, -1] += 1.0
    b = EmissionMatrix.from_compact(moved, shape)
    # shared appears in both blocks: squared distance K * ||delta||^2
    assert dictionary_error(a, b) == pytest.approx(np.sqrt(2 * 6.0), rel=1e-12)


def test_shape_mismatch():
    a = passing_dictionary(seed=1, L=10, M=3, K=2)
    b = passing_dictionary(seed=1, L=10, M=3, K=3)
    with pytest.raises(ShapeMismatch):
        dictionary_error(a, b)


def test_k_guard():
    shape = ModelShape(L=4, M=3, K=5)
    rng = np.random.default_rng(5)
    a = EmissionMatrix.from_compact(rng.normal(size=(4, 11)), shape)
    with pytest.raises(KTooLarge):
        dictionary_error(a, a)


def test_normalized_variant():
    emission = passing_dictionary(seed=4, L=12, M=3, K=2)
    rng = np.random.default_rng(11)
    assert normalized_dictionary_error(shuffled_copy(emission, rng), emission) == 0.0
    other = passing_dictionary(seed=5, L=12, M=3, K=2)
    expected = dictionary_error(other, emission) / np.linalg.norm(emission.full)
    assert normalized_dictionary_error(other, emission) == pytest.approx(expected)
