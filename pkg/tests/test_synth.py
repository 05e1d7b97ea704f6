import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from conftest import random_expansion, random_points, random_rotations
from so3radon.radon import radon_exact
from so3radon.so3_core import fourier_inverse, max_abs_diff
from so3radon.synth import OdfModel, make_measurements, make_odf, random_nodes, realify


def _max_imag(F, rng):
    return float(np.max(np.abs(fourier_inverse(F, random_rotations(rng, 100)).imag)))


def test_constant_zonal_mixture(rng):
    F = make_odf(OdfModel("zonal_mixture", bandwidth=3, centers=[[0, 0, 0, 1]], profile=[1.0]))
    assert_allclose(fourier_inverse(F, random_rotations(rng, 10)), 1.0, atol=1e-14)


def test_deterministic_per_seed():
    for kind in ("random_bandlimited", "zonal_mixture"):
        a = make_odf(OdfModel(kind, bandwidth=4, seed=11))
        b = make_odf(OdfModel(kind, bandwidth=4, seed=11))
        c = make_odf(OdfModel(kind, bandwidth=4, seed=12))
        assert max_abs_diff(a, b) == 0.0
        assert max_abs_diff(a, c) > 0.0


@settings(max_examples=15, deadline=None)
@given(st.sampled_from(["random_bandlimited", "zonal_mixture"]), st.integers(0, 8), st.integers(0, 10**6))
def test_realness(kind, K, seed):
    F = make_odf(OdfModel(kind, bandwidth=K, seed=seed))
    assert F.bandwidth == K
    assert _max_imag(F, np.random.default_rng(seed)) < 1e-10


def test_realify_takes_real_part(rng):
    F = random_expansion(rng, 4)
    g = random_rotations(rng, 50)
    assert_allclose(fourier_inverse(realify(F), g), fourier_inverse(F, g).real, atol=1e-11)


def test_zonal_mixture_peaks_at_center():
    q = [0.2, -0.1, 0.4, 0.888819]
    F = make_odf(OdfModel("zonal_mixture", bandwidth=8, centers=[q]))
    from scipy.spatial.transform import Rotation
    c = Rotation.from_quat(q)
    peak = fourier_inverse(F, c).real
    others = fourier_inverse(F, random_rotations(np.random.default_rng(1), 200)).real
    assert peak > others.max()


def test_model_validation():
    with pytest.raises(ValueError):
        OdfModel("gaussian")
    with pytest.raises(ValueError):
        OdfModel("zonal_mixture", bandwidth=1, profile=[1, 1, 1])
    with pytest.raises(ValueError):
        OdfModel("zonal_mixture", centers=[[0, 0, 0, 1]], weights=[1, 2])
    with pytest.raises(ValueError):
        OdfModel.from_dict({"kind": "zonal_mixture", "sharpness": 3})
    m = OdfModel("zonal_mixture", bandwidth=2, centers=[[0, 0, 0, 1]], weights=[1.0], profile=[1, 0.5])
    assert OdfModel.from_dict(m.to_dict()) == m


def test_noiseless_measurements_exact(rng):
    F = make_odf(OdfModel(bandwidth=3, seed=2))
    x, y = random_points(rng, 20), random_points(rng, 20)
    m = make_measurements(F, x, y)
    assert np.array_equal(m.values, radon_exact(F)(m.x, m.y))


def test_noisy_measurements_reproducible():
    F = make_odf(OdfModel(bandwidth=2, seed=2))
    x, y = random_nodes(50, seed=4)
    a = make_measurements(F, x, y, sigma=0.1, seed=9)
    b = make_measurements(F, x, y, sigma=0.1, seed=9)
    assert np.array_equal(a.values, b.values)


def test_noise_statistics():
    F = make_odf(OdfModel(bandwidth=2, seed=2))
    x, y = random_nodes(10_000, seed=4)
    sigma = 0.25
    noise = make_measurements(F, x, y, sigma, seed=3).values - make_measurements(F, x, y).values
    assert abs(noise.real.std() / sigma - 1) < 0.05
    assert not np.any(noise.imag)
    with pytest.raises(ValueError):
        make_measurements(F, x, y, sigma=-1.0)
