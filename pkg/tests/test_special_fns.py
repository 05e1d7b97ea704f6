import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose
from scipy import special
from scipy.spatial.transform import Rotation

from conftest import random_points, random_rotations
from so3radon.special_fns import (
    NORTH_POLE, flat_index, gegenbauer_half, legendre_all, same_rotation, spherical_harmonic,
    spherical_harmonics, spherical_harmonics_degree, wigner_matrix, wigner_small_d,
)


def _angles(p):
    return np.arccos(np.clip(p[..., 2], -1, 1)), np.arctan2(p[..., 1], p[..., 0])


def test_gegenbauer_examples():
    assert gegenbauer_half(0, 0.3) == 1.0
    assert gegenbauer_half(5, 1.0) == 1.0
    x = 0.0
    assert_allclose(gegenbauer_half(2, x), (3 * x * x - 1) / 2, atol=1e-15)


def test_gegenbauer_matches_scipy():
    x = np.linspace(-1, 1, 201)
    for k in range(12):
        assert_allclose(gegenbauer_half(k, x), special.eval_gegenbauer(k, 0.5, x), atol=1e-13)


def test_gegenbauer_endpoints_exact():
    for k in range(40):
        assert gegenbauer_half(k, 1.0) == 1.0
        assert gegenbauer_half(k, -1.0) == (-1.0) ** k


def test_gegenbauer_domain():
    assert gegenbauer_half(3, 1 + 5e-13) == 1.0
    with pytest.raises(ValueError):
        gegenbauer_half(3, 1.01)


def test_legendre_bound_on_grid():
    x = np.linspace(-1, 1, 10_000)
    P = legendre_all(64, x)
    assert np.max(np.abs(P)) <= 1 + 1e-12


def test_constant_harmonic():
    xi = np.array([0.3, -0.2, 0.9])
    assert_allclose(spherical_harmonic(0, 1, xi), 1 / math.sqrt(4 * math.pi))


def test_degree_sum_rule():
    xi = random_points(np.random.default_rng(1), 1)[0]
    Y = spherical_harmonics_degree(3, xi)
    assert_allclose(np.sum(np.abs(Y) ** 2), 7 / (4 * math.pi), rtol=1e-13)


def test_harmonics_match_scipy(rng):
    pts = random_points(rng, 50)
    theta, phi = _angles(pts)
    Y = spherical_harmonics(10, pts)
    for k in range(11):
        for m in range(-k, k + 1):
            ref = special.sph_harm_y(k, m, theta, phi)
            assert_allclose(Y[:, flat_index(k, m)], ref, atol=1e-12)


def test_conjugate_order_relation(rng):
    xi = random_points(rng, 5)
    for m in (-1, 0, 1):
        i, i_neg = m + 2, -m + 2
        lhs = np.conj(spherical_harmonic(1, i, xi))
        assert_allclose(lhs, (-1) ** m * spherical_harmonic(1, i_neg, xi), atol=1e-15)
        # direct associated-Legendre oracle for degree 1
        theta, phi = _angles(xi)
        ref = special.sph_harm_y(1, m, theta, phi)
        assert_allclose(spherical_harmonic(1, i, xi), ref, atol=1e-14)


def test_index_range():
    with pytest.raises(IndexError):
        spherical_harmonic(2, 6, NORTH_POLE)
    with pytest.raises(IndexError):
        spherical_harmonic(2, 0, NORTH_POLE)


def test_orthonormality_quadrature():
    K = 16
    x, w = np.polynomial.legendre.leggauss(K + 2)
    nphi = 2 * K + 2
    phi = 2 * np.pi * np.arange(nphi) / nphi
    ct, pp = np.meshgrid(x, phi, indexing="ij")
    st_ = np.sqrt(1 - ct**2)
    pts = np.stack([st_ * np.cos(pp), st_ * np.sin(pp), ct], -1).reshape(-1, 3)
    weights = np.repeat(w, nphi) * (2 * np.pi / nphi)
    Y = spherical_harmonics(K, pts)
    gram = (Y.conj().T * weights) @ Y
    assert_allclose(gram, np.eye(gram.shape[0]), atol=1e-10)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 16), st.integers(0, 2**32 - 1))
def test_addition_theorem(k, seed):
    r = np.random.default_rng(seed)
    xi, eta = random_points(r, 2)
    Yx = spherical_harmonics_degree(k, xi)
    Ye = spherical_harmonics_degree(k, eta)
    lhs = 4 * math.pi / (2 * k + 1) * np.sum(Yx * Ye.conj())
    assert abs(lhs - gegenbauer_half(k, float(np.clip(xi @ eta, -1, 1)))) < 1e-10


def test_wigner_identity():
    for k in range(6):
        assert_allclose(wigner_matrix(k, Rotation.identity()), np.eye(2 * k + 1), atol=1e-14)


def test_wigner_unitarity_inverse(rng):
    g = random_rotations(rng, 1)[0]
    T = wigner_matrix(1, g) @ wigner_matrix(1, g.inv())
    assert_allclose(T, np.eye(3), atol=1e-12)


def test_small_d_degree_one():
    # closed-form d^1 matrix, rows and columns ordered by m = -1, 0, 1
    b = 0.7
    c, s = math.cos(b), math.sin(b)
    ref = np.array([
        [(1 + c) / 2, s / math.sqrt(2), (1 - c) / 2],
        [-s / math.sqrt(2), c, s / math.sqrt(2)],
        [(1 - c) / 2, -s / math.sqrt(2), (1 + c) / 2],
    ])
    assert_allclose(wigner_small_d(1, b), ref, atol=1e-14)


def test_column_relation(rng):
    for g in random_rotations(rng, 5):
        for k in (1, 2, 5):
            col = wigner_matrix(k, g)[:, k]
            ref = math.sqrt(4 * math.pi / (2 * k + 1)) * spherical_harmonics_degree(k, g.apply(NORTH_POLE))
            assert_allclose(col, ref, atol=1e-10)


def test_homomorphism_and_unitarity(rng):
    g1, g2 = random_rotations(rng, 2)
    for k in range(17):
        T1, T2 = wigner_matrix(k, g1), wigner_matrix(k, g2)
        assert_allclose(wigner_matrix(k, g1 * g2), T1 @ T2, atol=1e-10)
        assert_allclose(T1 @ T1.conj().T, np.eye(2 * k + 1), atol=1e-10)


def test_wigner_batched_matches_single(rng):
    g = random_rotations(rng, 4)
    batch = wigner_matrix(3, g)
    for n in range(4):
        assert_allclose(batch[n], wigner_matrix(3, g[n]), atol=1e-14)


def test_same_rotation_sign():
    g = Rotation.from_quat([0.1, 0.2, 0.3, 0.9])
    h = Rotation.from_quat(-g.as_quat())
    assert same_rotation(g, h)
    assert not same_rotation(g, Rotation.identity())
