"""Legendre polynomials, complex spherical harmonics and Wigner matrices.

Conventions
-----------
* Spherical harmonics are orthonormal on the unit sphere with its standard
  surface measure (total mass 4*pi) and carry the Condon-Shortley phase.
* Degree-k objects are indexed by ``i = 1 .. 2k+1`` with order ``m = i - (k+1)``.
  Flattened arrays over all degrees ``k <= K`` use position ``k**2 + m + k``.
* ``wigner_matrix(k, g)`` returns ``T^k(g)``, a unitary representation with
  ``T^k(g1 g2) = T^k(g1) T^k(g2)`` whose zonal (m = 0) column is
  ``sqrt(4 pi / (2k+1)) Y_k^i(g . e_z)``.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.spatial.transform import Rotation

NORTH_POLE = np.array([0.0, 0.0, 1.0])
_DOMAIN_SLACK = 1e-12


def dim(k: int) -> int:
    """Dimension 2k+1 of the degree-k representation."""
    if k < 0:
        raise ValueError(f"degree must be non-negative, got {k}")
    return 2 * k + 1


def order(k: int, i: int) -> int:
    """Order m belonging to the 1-based index i of degree k."""
    if not 1 <= i <= 2 * k + 1:
        raise IndexError(f"index {i} out of range 1..{2 * k + 1} for degree {k}")
    return i - (k + 1)


def flat_index(k: int, m: int) -> int:
    return k * k + m + k


def unit(x) -> np.ndarray:
    """Normalize a 3-vector (or a stack of them) onto the unit sphere."""
    x = np.asarray(x, dtype=float)
    nrm = np.linalg.norm(x, axis=-1, keepdims=True)
    if np.any(nrm == 0):
        raise ValueError("zero vector cannot be placed on the sphere")
    return x / nrm


def _check_cosine(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1 + _DOMAIN_SLACK):
        raise ValueError("argument outside [-1, 1]")
    return np.clip(x, -1.0, 1.0)


def legendre_all(K: int, x) -> np.ndarray:
    """Values P_0(x) .. P_K(x), stacked along the last axis."""
    x = _check_cosine(x)
    out = np.empty(x.shape + (K + 1,))
    out[..., 0] = 1.0
    if K >= 1:
        out[..., 1] = x
    for k in range(1, K):
        out[..., k + 1] = ((2 * k + 1) * x * out[..., k] - k * out[..., k - 1]) / (k + 1)
    return out


def gegenbauer_half(k: int, x):
    """Gegenbauer polynomial C_k^{1/2}(x), i.e. the Legendre polynomial P_k."""
    if k < 0:
        raise ValueError(f"degree must be non-negative, got {k}")
    vals = legendre_all(k, x)[..., k]
    return float(vals) if np.ndim(vals) == 0 else vals


def _angles(points) -> tuple[np.ndarray, np.ndarray]:
    p = unit(points)
    cos_theta = np.clip(p[..., 2], -1.0, 1.0)
    phi = np.arctan2(p[..., 1], p[..., 0])
    return cos_theta, phi


def spherical_harmonics(K: int, points) -> np.ndarray:
    """All Y_k^m for k <= K at ``points`` (shape (..., 3)).

    Returns a complex array of shape ``(..., (K+1)**2)`` in flat ordering.
    Uses the fully normalized associated Legendre recurrence, which stays
    stable well beyond the degrees used here.
    """
    cos_theta, phi = _angles(points)
    sin_theta = np.sqrt(np.maximum(0.0, 1.0 - cos_theta**2))
    shape = cos_theta.shape
    plm = np.zeros(shape + ((K + 1) ** 2,))
    # plm[flat_index(k, m)] holds the normalized P_k^m for m >= 0
    pmm = np.full(shape, 1.0 / np.sqrt(4.0 * np.pi))
    for m in range(K + 1):
        if m > 0:
            pmm = -np.sqrt((2 * m + 1) / (2.0 * m)) * sin_theta * pmm
        plm[..., flat_index(m, m)] = pmm
        if m + 1 <= K:
            p_prev2 = pmm
            p_prev = np.sqrt(2 * m + 3.0) * cos_theta * pmm
            plm[..., flat_index(m + 1, m)] = p_prev
            for k in range(m + 2, K + 1):
                a = np.sqrt((4.0 * k * k - 1) / (k * k - m * m))
                b = np.sqrt(((k - 1.0) ** 2 - m * m) / (4.0 * (k - 1) ** 2 - 1))
                p_cur = a * (cos_theta * p_prev - b * p_prev2)
                plm[..., flat_index(k, m)] = p_cur
                p_prev2, p_prev = p_prev, p_cur
    out = np.zeros(shape + ((K + 1) ** 2,), dtype=complex)
    for m in range(K + 1):
        phase = np.exp(1j * m * phi)
        for k in range(m, K + 1):
            val = plm[..., flat_index(k, m)] * phase
            out[..., flat_index(k, m)] = val
            if m > 0:
                out[..., flat_index(k, -m)] = (-1) ** m * np.conj(val)
    return out


def spherical_harmonics_degree(k: int, points) -> np.ndarray:
    """Y_k^i for i = 1..2k+1 at ``points``; shape (..., 2k+1)."""
    return spherical_harmonics(k, points)[..., k * k:(k + 1) ** 2]


def spherical_harmonic(k: int, i: int, xi):
    """Single complex spherical harmonic Y_k^i(xi)."""
    m = order(k, i)
    vals = spherical_harmonics(k, xi)[..., flat_index(k, m)]
    return complex(vals) if np.ndim(vals) == 0 else vals


@lru_cache(maxsize=None)
def _jy_eigen(k: int) -> tuple[np.ndarray, np.ndarray]:
    m = np.arange(-k, k + 1, dtype=float)
    # <m+1| J_+ |m>
    jplus = np.diag(np.sqrt(k * (k + 1) - m[:-1] * (m[:-1] + 1)), -1)
    jy = (jplus - jplus.T) / 2j
    vals, vecs = np.linalg.eigh(jy)
    return vals, vecs


def wigner_small_d(k: int, beta) -> np.ndarray:
    """Wigner small-d matrices d^k_{m'm}(beta) = <m'| exp(-i beta J_y) |m>.

    Computed from the eigen-decomposition of J_y; ``beta`` may be an array,
    the result then has shape ``beta.shape + (2k+1, 2k+1)``.
    """
    beta = np.asarray(beta, dtype=float)
    vals, vecs = _jy_eigen(k)
    phase = np.exp(-1j * beta[..., None] * vals)
    d = np.einsum("ab,...b,cb->...ac", vecs, phase, vecs.conj())
    return d.real


def euler_zyz(g: Rotation) -> np.ndarray:
    """ZYZ Euler angles (alpha, beta, gamma) with g = Rz(alpha) Ry(beta) Rz(gamma)."""
    import warnings

    with warnings.catch_warnings():
        # gimbal lock only affects the split between alpha and gamma
        warnings.simplefilter("ignore", UserWarning)
        return g.as_euler("ZYZ")


def wigner_from_euler(k: int, alpha, beta, gamma) -> np.ndarray:
    """T^k_{m'm} = exp(i m' alpha) d^k_{m'm}(beta) exp(i m gamma), vectorized."""
    alpha = np.asarray(alpha, dtype=float)
    gamma = np.asarray(gamma, dtype=float)
    m = np.arange(-k, k + 1)
    left = np.exp(1j * alpha[..., None] * m)
    right = np.exp(1j * gamma[..., None] * m)
    return left[..., :, None] * wigner_small_d(k, beta) * right[..., None, :]


def wigner_matrix(k: int, g: Rotation) -> np.ndarray:
    """Wigner matrix T^k(g); batched if ``g`` holds several rotations."""
    ang = euler_zyz(g)
    return wigner_from_euler(k, ang[..., 0], ang[..., 1], ang[..., 2])


def same_rotation(g1: Rotation, g2: Rotation, tol: float = 1e-12) -> bool:
    """Equality of rotations; q and -q are the same element."""
    q1, q2 = g1.as_quat(), g2.as_quat()
    return bool(min(np.max(np.abs(q1 - q2)), np.max(np.abs(q1 + q2))) <= tol)


def rotation_from_euler(alpha: float, beta: float, gamma: float) -> Rotation:
    return Rotation.from_euler("ZYZ", [alpha, beta, gamma])
