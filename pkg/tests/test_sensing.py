import numpy as np
import pytest
from hypothesis import given, strategies as st

from recsparse.sensing import (NoiseSpec, gen_bounded_uniform_noise, gen_gaussian_unit_columns, measure,
                               noise_bound, stream)


def test_unit_columns():
    A = gen_gaussian_unit_columns(57, 200, 1)
    assert A.shape == (57, 200)
    assert np.allclose(np.linalg.norm(A, axis=0), 1.0)


def test_streams_are_reproducible_and_keyed():
    a = gen_gaussian_unit_columns(5, 7, (1, 2, 3))
    assert np.array_equal(a, gen_gaussian_unit_columns(5, 7, (1, 2, 3)))
    assert not np.array_equal(a, gen_gaussian_unit_columns(5, 7, (1, 2, 4)))
    assert stream(1, 2).integers(1 << 30) == stream(1, 2).integers(1 << 30)


@given(st.integers(1, 300), st.floats(0, 10), st.integers(0, 1000))
def test_noise_within_bound(n, c, seed):
    w = gen_bounded_uniform_noise(n, c, seed)
    assert np.abs(w).max() <= c
    assert np.linalg.norm(w) <= noise_bound(c, n) * (1 + 1e-12)


def test_noise_bound_value():
    assert noise_bound(0.1266, 57) == pytest.approx(0.1266 * np.sqrt(57))


def test_measure_epsilon_rules():
    A = np.eye(3)
    x = np.array([1.0, 0.0, -2.0])
    w = np.array([0.1, -0.1, 0.05])
    f = measure(A, x, w, t=4, c=0.1)
    assert f.t == 4 and f.n_t == 3
    assert np.allclose(f.y, x + w)
    assert f.epsilon == pytest.approx(0.1 * np.sqrt(3))
    assert measure(A, x, w).epsilon == pytest.approx(np.linalg.norm(w))
    with pytest.raises(ValueError):
        measure(A, x, np.array([1.0, 0, 0]), c=0.1)
    with pytest.raises(ValueError):
        measure(A, x[:2], w)


def test_noise_spec_rejects_negative():
    with pytest.raises(ValueError):
        NoiseSpec(-1.0)
