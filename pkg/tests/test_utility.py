import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from pyramid_sim.utility import (
    compute_utility_vector,
    normalize_bandwidths,
    sample_bandwidths,
    sample_storage,
    utility_score,
)


def test_worked_example():
    uv = compute_utility_vector([0.5, 1.0], 0.8, 1)
    assert np.allclose(uv, [0.2, 0.4])
    assert utility_score(uv) == pytest.approx(np.sqrt(0.2))


def test_zero_bandwidth_gives_zero_vector():
    assert np.all(compute_utility_vector(np.full(24, 0.7), 0.0, 0) == 0)


def test_zero_availability_gives_zero_score():
    assert utility_score(compute_utility_vector(np.zeros(24), 0.9, 2)) == 0


def test_matrix_broadcast_matches_rows():
    rng = np.random.default_rng(0)
    p = rng.random((5, 24))
    bw, load = rng.random(5), rng.integers(0, 3, 5)
    M = compute_utility_vector(p, bw, load)
    for i in range(5):
        assert np.allclose(M[i], compute_utility_vector(p[i], bw[i], load[i]))
    assert np.allclose(utility_score(M), [utility_score(M[i]) for i in range(5)])


@given(arrays(float, 24, elements=st.floats(0, 1)), st.floats(0, 1), st.integers(0, 3), st.integers(0, 3))
def test_more_load_never_raises_utility(p, bw, load, extra):
    a = compute_utility_vector(p, bw, load)
    b = compute_utility_vector(p, bw, load + extra)
    assert np.all(b <= a + 1e-15)
    assert np.all((a >= 0) & (a <= 1))


def test_bandwidth_sampling_mean_and_cap():
    bw = sample_bandwidths(200_000, 2000.0, np.random.default_rng(1), bw_max=20_000.0)
    assert bw.mean() == pytest.approx(2000, rel=0.02)
    assert bw.max() <= 20_000
    with pytest.raises(ValueError):
        sample_bandwidths(5, 0.0, np.random.default_rng(0))


def test_normalize_clips_to_unit_interval():
    assert np.allclose(normalize_bandwidths(np.array([0.0, 10.0, 40.0]), 20.0), [0, 0.5, 1])


def test_storage_range_and_mean():
    s = sample_storage(100_000, np.random.default_rng(2))
    assert set(np.unique(s)) == {1, 2, 3}
    assert s.mean() == pytest.approx(2.0, rel=0.01)
    with pytest.raises(ValueError):
        sample_storage(0, np.random.default_rng(0))


@given(arrays(float, 24, elements=st.floats(0, 1)), st.floats(0, 1), st.integers(0, 5))
def test_one_more_replica_rescales_vector(p, bw, load):
    a = compute_utility_vector(p, bw, load)
    b = compute_utility_vector(p, bw, load + 1)
    # atol only covers subnormal inputs, where relative precision is lost
    assert np.allclose(b, a * (load + 1) / (load + 2), rtol=1e-12, atol=1e-300)


@given(arrays(float, (2, 24), elements=st.floats(0, 1)), st.floats(0, 1), st.floats(0, 1))
def test_monotone_in_availability_and_bandwidth(p, bw1, bw2):
    lo_p, hi_p = np.minimum(p[0], p[1]), np.maximum(p[0], p[1])
    lo_b, hi_b = min(bw1, bw2), max(bw1, bw2)
    assert np.all(compute_utility_vector(lo_p, lo_b, 1) <= compute_utility_vector(hi_p, hi_b, 1))


def test_storage_histogram_is_flat():
    s = sample_storage(100_000, np.random.default_rng(7))
    freq = np.bincount(s, minlength=4)[1:] / len(s)
    assert np.all(np.abs(freq - 1 / 3) <= 0.02 / 3)
