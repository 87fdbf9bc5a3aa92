import numpy as np
import pytest

from polarawgn import polar_transform, polar_inverse
from polarawgn.transform import transform_rows


def kron_power_matrix(n):
    base = np.array([[1, 0], [1, 1]], dtype=np.uint8)
    G = np.array([[1]], dtype=np.uint8)
    while G.shape[0] < n:
        G = np.kron(base, G)
    return G


def test_two_bit_words():
    assert polar_transform([1, 0]).tolist() == [1, 0]
    assert polar_transform([0, 1]).tolist() == [1, 1]
    assert polar_transform([1, 1]).tolist() == [0, 1]
    assert polar_inverse([1, 1]).tolist() == [0, 1]


def test_four_bit_words():
    assert polar_transform([1, 0, 0, 0]).tolist() == [1, 0, 0, 0]
    assert polar_inverse([1, 1, 1, 1]).tolist() == [0, 0, 0, 1]


def test_zero_word_maps_to_zero():
    assert polar_transform(np.zeros(8, dtype=np.uint8)).tolist() == [0] * 8


def test_involution_round_trip():
    u = np.array([1, 1, 0, 1, 0, 0, 1, 0], dtype=np.uint8)
    assert np.array_equal(polar_inverse(polar_transform(u)), u)


def test_single_bit_word_is_identity():
    assert polar_transform([1]).tolist() == [1]
    assert polar_transform([0]).tolist() == [0]


@pytest.mark.parametrize("n", [2, 4, 8, 16, 32, 64])
def test_matches_explicit_matrix_product(n):
    rng = np.random.default_rng(100 + n)
    G = kron_power_matrix(n)
    u = rng.integers(0, 2, (200, n), dtype=np.uint8)
    assert np.array_equal(transform_rows(u), (u @ G) % 2)


def test_involution_and_linearity_random():
    rng = np.random.default_rng(7)
    for n in (2, 8, 64, 256, 1024):
        u = rng.integers(0, 2, (100, n), dtype=np.uint8)
        v = rng.integers(0, 2, (100, n), dtype=np.uint8)
        assert np.array_equal(transform_rows(transform_rows(u)), u)
        assert np.array_equal(
            transform_rows(u ^ v), transform_rows(u) ^ transform_rows(v)
        )


def test_rejects_bad_lengths_and_values():
    with pytest.raises(ValueError):
        polar_transform([1, 0, 1])
    with pytest.raises(ValueError):
        polar_transform([])
    with pytest.raises(ValueError):
        polar_transform([0, 2])
    with pytest.raises(ValueError):
        polar_transform(np.zeros((2, 2), dtype=np.uint8))
