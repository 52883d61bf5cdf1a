import itertools

import numpy as np
import pytest

from pitchguard.core.errors import EmptySequenceError, InputError, TooLargeError
from pitchguard.services.dtw import accumulated_matrix, dtw_bruteforce, dtw_distance, prefix_distances


def test_small_example_distance_and_path():
    result = dtw_distance([1, 2, 3], [2, 3])
    assert result.distance == 1.0
    assert result.path == [(1, 1), (2, 1), (3, 2)]


def test_single_points():
    result = dtw_distance([4.0], [1.5])
    assert result.distance == 2.5
    assert result.path == [(1, 1)]


def test_identity_and_symmetry():
    rng = np.random.default_rng(0)
    for _ in range(20):
        a = rng.uniform(0, 90, size=rng.integers(1, 12))
        b = rng.uniform(0, 90, size=rng.integers(1, 12))
        assert dtw_distance(a, a).distance == 0.0
        assert dtw_distance(a, b).distance == pytest.approx(dtw_distance(b, a).distance, abs=1e-9)
        assert dtw_distance(a, b).distance >= 0.0


def test_symmetry_on_real_valued_series():
    rng = np.random.default_rng(17)
    for _ in range(25):
        a = rng.normal(40.0, 25.0, size=rng.integers(20, 120)) * np.pi
        b = rng.normal(45.0, 20.0, size=rng.integers(20, 120)) / 3.0
        assert dtw_distance(a, b).distance == dtw_distance(b, a).distance
        np.testing.assert_allclose(accumulated_matrix(a, b), accumulated_matrix(b, a).T, rtol=1e-12)


def test_path_is_monotone_and_sums_to_distance():
    rng = np.random.default_rng(1)
    a = rng.uniform(0, 10, size=9)
    b = rng.uniform(0, 10, size=6)
    result = dtw_distance(a, b)
    assert result.path[0] == (1, 1)
    assert result.path[-1] == (9, 6)
    for (i, j), (k, l) in zip(result.path, result.path[1:]):
        assert (k - i, l - j) in {(1, 1), (1, 0), (0, 1)}
    cost = sum(abs(a[i - 1] - b[j - 1]) for i, j in result.path)
    assert cost == pytest.approx(result.distance, abs=1e-9)


def test_matches_bruteforce_on_all_short_sequences():
    alphabet = (0.0, 1.0, 3.0)
    sequences = [seq for length in (1, 2, 3) for seq in itertools.product(alphabet, repeat=length)]
    for a in sequences:
        for b in sequences:
            assert dtw_distance(a, b).distance == pytest.approx(dtw_bruteforce(a, b), abs=1e-12)


def test_matches_bruteforce_on_random_sequences():
    rng = np.random.default_rng(42)
    for _ in range(200):
        a = rng.integers(0, 90, size=rng.integers(1, 6)).astype(float)
        b = rng.integers(0, 90, size=rng.integers(1, 6)).astype(float)
        assert dtw_distance(a, b).distance == pytest.approx(dtw_bruteforce(a, b), abs=1e-9)


def test_prefix_distances_match_direct_computation():
    rng = np.random.default_rng(3)
    r = rng.uniform(0, 60, size=8)
    l = rng.uniform(0, 60, size=5)
    by_r, by_l = prefix_distances(r, l)
    assert by_r.shape == (8,) and by_l.shape == (5,)
    for k in range(1, 9):
        assert by_r[k - 1] == pytest.approx(dtw_distance(r[:k], l).distance, abs=1e-9)
    for k in range(1, 6):
        assert by_l[k - 1] == pytest.approx(dtw_distance(r, l[:k]).distance, abs=1e-9)


def test_accumulated_matrix_boundaries():
    acc = accumulated_matrix([1, 2], [1, 2, 3])
    assert acc.shape == (3, 4)
    assert acc[0, 0] == 0.0
    assert np.isinf(acc[0, 1:]).all() and np.isinf(acc[1:, 0]).all()
    assert acc[1, 1] == 0.0


@pytest.mark.parametrize("a, b", [([], [1.0]), ([1.0], [])])
def test_empty_sequence(a, b):
    with pytest.raises(EmptySequenceError):
        dtw_distance(a, b)


def test_non_finite_values():
    with pytest.raises(InputError):
        dtw_distance([1.0, np.nan], [1.0])


def test_bruteforce_size_limit():
    with pytest.raises(TooLargeError):
        dtw_bruteforce(range(7), range(6))
