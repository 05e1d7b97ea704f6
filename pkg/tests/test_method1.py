import numpy as np
import pytest
from numpy.testing import assert_allclose

from conftest import random_expansion, random_points, random_rotations
from so3radon.method1 import (
    DuplicateNodeError, MeasurementSet, choose_bandwidth, degree_weights, find_duplicate_nodes,
    gram_so3, gram_so3_bruteforce, gram_so3_single_cosine, gram_so3_zonal_of_product, gram_tail,
    invert_method1, measurement_residual, method1_basis, spline_wigner_coefficients,
)
from so3radon.radon import lift, radon_exact
from so3radon.so3_core import WignerExpansion, fourier_inverse, sobolev_norm_so3
from so3radon.special_fns import NORTH_POLE, legendre_all
from so3radon.spline import spline_coefficients, solve_gram


def _measure(F, x, y):
    return MeasurementSet(x, y, radon_exact(F)(x, y))


def test_gram_diagonal_partial_sum(rng):
    x, y = random_points(rng, 4), random_points(rng, 4)
    G = gram_so3(x, y, 2.0, 10)
    assert_allclose(np.diag(G), sum((1.0 + k * (k + 1)) ** -2 for k in range(11)), rtol=1e-14)


def test_gram_orthogonal_x_example():
    x = np.array([[1.0, 0, 0], [0, 1.0, 0]])
    y = np.array([[0, 0, 1.0], [0, 0, 1.0]])
    G = gram_so3(x, y, 2.0, 1)
    assert_allclose(G[0, 1], 1.0, atol=1e-15)
    assert_allclose(gram_so3_bruteforce(x, y, 2.0, 1)[0, 1], 1.0, atol=1e-14)


def test_gram_closed_form_vs_bruteforce(rng):
    x, y = random_points(rng, 5), random_points(rng, 5)
    for K in (0, 3, 6):
        assert np.max(np.abs(gram_so3(x, y, 2.0, K) - gram_so3_bruteforce(x, y, 2.0, K))) < 1e-10


def test_gram_equals_product_of_zonal_factors(rng):
    # pi_11 of x_nu^{-1} x_mu and of y_mu^{-1} y_nu, each evaluated through the lifts
    x, y = random_points(rng, 4), random_points(rng, 4)
    K, t = 5, 2.0
    w = degree_weights(t, K)
    xl, yl = [lift(p) for p in x], [lift(p) for p in y]
    G = np.empty((4, 4))
    for a in range(4):
        for b in range(4):
            cx = (xl[a].inv() * xl[b]).apply(NORTH_POLE)[2]
            cy = (yl[b].inv() * yl[a]).apply(NORTH_POLE)[2]
            G[a, b] = np.sum(w * legendre_all(K, cx) * legendre_all(K, cy))
    assert_allclose(G, gram_so3_bruteforce(x, y, t, K).real, atol=1e-12)


def test_single_cosine_and_single_zonal_forms_differ(rng):
    x, y = random_points(rng, 6), random_points(rng, 6)
    ref = gram_so3_bruteforce(x, y, 2.0, 6).real
    assert np.max(np.abs(gram_so3_single_cosine(x, y, 2.0, 6) - ref)) > 1e-2
    assert np.max(np.abs(gram_so3_zonal_of_product(x, y, 2.0, 6) - ref)) > 1e-2
    # the single-cosine form depends on each node only through x.y, so its rank is at most K+1
    assert np.linalg.matrix_rank(gram_so3_single_cosine(x, y, 2.0, 2)) <= 3


def test_coefficients_match_generic_engine(rng):
    x, y = random_points(rng, 7), random_points(rng, 7)
    K, t = 3, 2.0
    basis = method1_basis(x, y, K)
    sol = solve_gram(gram_so3(x, y, t, K), rng.normal(size=7), t)
    generic = spline_coefficients(sol, basis)
    blocks = spline_wigner_coefficients(x, y, sol.alpha, t, K)
    flat = np.concatenate([b.ravel() for b in blocks])
    assert_allclose(flat, generic, atol=1e-13)


def test_interpolation_residual(rng):
    F = random_expansion(rng, 5)
    x, y = random_points(rng, 150), random_points(rng, 150)
    m = _measure(F, x, y)
    S, sol = invert_method1(m, 2.0, 16)
    assert measurement_residual(S, m) < 1e-8
    assert sol.residual < 1e-8


def test_exact_recovery(rng):
    K = 2
    F = random_expansion(rng, K)
    n = sum((2 * k + 1) ** 2 for k in range(K + 1)) + 10
    m = _measure(F, random_points(rng, n), random_points(rng, n))
    S, _ = invert_method1(m, 2.0, K)
    assert sobolev_norm_so3(S - F, 0) / sobolev_norm_so3(F, 0) < 1e-6


def test_zero_data(rng):
    x, y = random_points(rng, 10), random_points(rng, 10)
    S, _ = invert_method1(MeasurementSet(x, y, np.zeros(10)), 2.0, 6)
    assert all(not np.any(b) for b in S.blocks)


def test_single_node_scaled_fundamental_solution(rng):
    x, y = random_points(rng, 1), random_points(rng, 1)
    K, t = 6, 2.5
    S, _ = invert_method1(MeasurementSet(x, y, [1.0]), t, K)
    basis = method1_basis(x, y, K)
    A = basis.evaluations[0]
    E = basis.weights(t) * A.conj()  # fundamental solution coefficients
    flat = np.concatenate([c.ravel() for c in S.wigner_coefficients()])
    assert_allclose(flat, E / np.sum(E * A), atol=1e-13)
    assert_allclose(radon_exact(S)(x[0], y[0]), 1.0, atol=1e-13)


def test_rotation_equivariance(rng):
    x, y = random_points(rng, 30), random_points(rng, 30)
    v = rng.normal(size=30)
    R, Rp = random_rotations(rng, 2)
    S, _ = invert_method1(MeasurementSet(x, y, v), 2.0, 8)
    S_rot, _ = invert_method1(MeasurementSet(R.apply(x), Rp.apply(y), v), 2.0, 8)
    g = random_rotations(rng, 20)
    assert_allclose(fourier_inverse(S_rot, g), fourier_inverse(S, R.inv() * g * Rp), atol=1e-9)


def test_duplicate_nodes(rng):
    x, y = random_points(rng, 5), random_points(rng, 5)
    assert find_duplicate_nodes(x, y) is None
    x2 = np.vstack([x, -x[2]])
    y2 = np.vstack([y, -y[2]])
    assert find_duplicate_nodes(x2, y2) == (2, 5)
    with pytest.raises(DuplicateNodeError):
        invert_method1(MeasurementSet(x2, y2, np.ones(6)))
    x3, y3 = np.vstack([x, x[0]]), np.vstack([y, y[0]])
    assert find_duplicate_nodes(x3, y3) == (0, 5)


def test_order_threshold(rng):
    x, y = random_points(rng, 3), random_points(rng, 3)
    with pytest.raises(ValueError):
        invert_method1(MeasurementSet(x, y, np.ones(3)), t=1.5)


def test_measurement_set_io(tmp_path, rng):
    m = MeasurementSet(random_points(rng, 4), random_points(rng, 4), rng.normal(size=4) + 1j, {"a": 1})
    path = tmp_path / "m.json"
    m.save(path)
    back = MeasurementSet.load(path)
    assert np.array_equal(back.x, m.x) and np.array_equal(back.values, m.values)
    assert back.meta == {"a": 1}
    with pytest.raises(ValueError):
        MeasurementSet.from_dict({"nodes": []})
    with pytest.raises(ValueError):
        MeasurementSet(np.zeros((2, 3)) + 1, np.ones((3, 3)), [1, 2])


def test_bandwidth_choice():
    K = choose_bandwidth(2.0, 1e-12)
    assert gram_tail(2.0, K) <= 1e-12 < gram_tail(2.0, K - 1)
    # the tail bound dominates the actual tail
    w = degree_weights(3.0, 400)
    assert np.sum(w[21:]) <= gram_tail(3.0, 20)


def test_constant_function_recovered(rng):
    F = WignerExpansion([np.array([[1.0]])])
    x, y = random_points(rng, 20), random_points(rng, 20)
    S, _ = invert_method1(_measure(F, x, y), 2.0, 0)
    assert_allclose(S.blocks[0], [[1.0]], atol=1e-12)
