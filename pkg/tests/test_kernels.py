import math

import numpy as np
import pytest

from pitchguard.core.errors import InputKindMismatchError
from pitchguard.models.kernel import Constant, DtwRbf, ExposureAvg, Polynomial, Rbf
from pitchguard.services.dtw import dtw_distance
from pitchguard.services.kernels import (
    GramMatrix,
    cross_gram,
    eigendecompose,
    exposure_distances,
    gram,
    kernel_eval,
    pairwise_dtw,
    psd_probe,
)


def _series(seed, count=6):
    rng = np.random.default_rng(seed)
    return [rng.integers(0, 90, size=rng.integers(3, 15)).astype(float) for _ in range(count)]


def _records(record_factory, seed, count=5):
    rng = np.random.default_rng(seed)
    records = []
    for index in range(count):
        length = int(rng.integers(5, 20))
        records.append(
            record_factory(
                f"P{index}",
                rng.integers(0, 90, size=length),
                rng.choice([0, 0, 0, 90], size=length),
                injury_day=length,
            )
        )
    return records


def test_kernel_forms():
    assert kernel_eval(Constant(c=2.5), [1.0], [7.0]) == 2.5
    assert kernel_eval(Rbf(sigma=0.5), [1.0, 2.0], [2.0, 4.0]) == pytest.approx(math.exp(-2.5))
    assert kernel_eval(Polynomial(sigma=2.0, degree=3), [1.0, 1.0], [1.0, 2.0]) == pytest.approx(216.0)
    assert kernel_eval(DtwRbf(gamma=0.1), [1, 2, 3], [2, 3]) == pytest.approx(math.exp(-0.1))


def test_polynomial_kernel_scales_inner_product():
    # (1 * 2)^2, при сдвиге (x^T y + sigma)^d было бы 9
    assert kernel_eval(Polynomial(sigma=1.0, degree=2), [1.0, 1.0], [2.0, 0.0]) == pytest.approx(4.0)
    assert kernel_eval(Polynomial(sigma=0.5, degree=1), [3.0], [-4.0]) == pytest.approx(-6.0)


def test_kernel_input_mismatch(record_factory):
    with pytest.raises(InputKindMismatchError):
        kernel_eval(Rbf(sigma=1.0), [1.0, 2.0], [1.0])
    record = record_factory("P1", [1, 2, 3])
    with pytest.raises(InputKindMismatchError):
        kernel_eval(ExposureAvg(gamma=0.1), [1.0, 2.0], record)
    with pytest.raises(InputKindMismatchError):
        kernel_eval(Rbf(sigma=1.0), record, record)


def test_dtw_gram_unit_diagonal_and_symmetric():
    g = gram(DtwRbf(gamma=0.01), _series(0), jobs=1)
    np.testing.assert_array_equal(np.diag(g.entries), np.ones(6))
    np.testing.assert_array_equal(g.entries, g.entries.T)
    assert ((g.entries > 0) & (g.entries <= 1)).all()


def test_gram_independent_of_workers():
    series = _series(1)
    serial = gram(DtwRbf(gamma=0.02), series, jobs=1)
    parallel = gram(DtwRbf(gamma=0.02), series, jobs=2)
    np.testing.assert_array_equal(serial.entries, parallel.entries)


def test_psd_probe_on_indefinite_matrix():
    probe = psd_probe(GramMatrix(entries=np.array([[1.0, 2.0], [2.0, 1.0]])))
    assert not probe.psd
    assert probe.min_eigenvalue == pytest.approx(-1.0)
    assert psd_probe(GramMatrix(entries=np.eye(3))).psd


def test_eigendecompose_reconstructs_matrix():
    g = gram(Rbf(sigma=0.3), [[0.0], [1.0], [2.5], [4.0]], jobs=1)
    values, vectors = eigendecompose(g)
    assert np.all(np.diff(values) >= 0)
    np.testing.assert_allclose(vectors @ np.diag(values) @ vectors.T, g.entries, atol=1e-12)


def test_pairwise_dtw_matches_direct_distances():
    series = _series(2, count=4)
    distances = pairwise_dtw(series, jobs=1)
    for i in range(4):
        assert distances[i, i] == 0.0
        for j in range(4):
            assert distances[i, j] == pytest.approx(dtw_distance(series[i], series[j]).distance)


def test_exposure_gram_equals_distance_kernel(record_factory):
    records = _records(record_factory, 5)
    gamma = 0.003
    direct = gram(ExposureAvg(gamma=gamma), records, jobs=1)
    from_distances = exposure_distances(records, jobs=1).kernel(gamma)
    np.testing.assert_allclose(direct.entries, from_distances, rtol=1e-12)
    np.testing.assert_allclose(np.diag(direct.entries), 1.0)


def test_cross_gram_shape(record_factory):
    records = _records(record_factory, 6)
    block = cross_gram(ExposureAvg(gamma=0.01), records[:2], records)
    assert block.shape == (2, 5)
    assert block[0, 0] == pytest.approx(1.0)
    assert block[1, 0] == pytest.approx(kernel_eval(ExposureAvg(gamma=0.01), records[1], records[0]))


def test_pair_context_in_gram_error():
    inputs = [[1.0, 2.0], [1.0, 2.0], [3.0]]
    with pytest.raises(InputKindMismatchError) as excinfo:
        gram(Rbf(sigma=1.0), inputs, jobs=1)
    assert excinfo.value.i == 0
    assert excinfo.value.j == 2
