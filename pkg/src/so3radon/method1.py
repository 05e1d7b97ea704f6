"""Spline inversion on SO(3) from great-circle integrals (first algorithm).

The spline is expanded over the Wigner functions themselves (not their
L2-normalized versions), with weights (1 + k(k+1))^{-t}.  Its Gram matrix
then collapses, via the addition theorem, to

    G[mu, nu] = sum_{k<=K} (1 + k(k+1))^{-t} P_k(x_mu . x_nu) P_k(y_mu . y_nu).

The coefficient of T^k_{ij} in the spline is

    c^k_ij = 4 pi / ((2k+1) (1 + k(k+1))^t) sum_nu alpha_nu conj(Y_k^i(x_nu)) Y_k^j(y_nu).

The conjugate sits on the x-harmonic: this placement is the one for which
R s reproduces the data (checked in the test suite).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .radon import lift, radon_exact
from .so3_core import WignerExpansion
from .special_fns import spherical_harmonics, unit
from .spline import SpectralBasis, SplineSolution, check_order, solve_gram

SO3_DIM = 3
NODE_TOL = 1e-10
DEFAULT_ORDER = 2.0


class DuplicateNodeError(ValueError):
    def __init__(self, nu: int, mu: int):
        super().__init__(f"nodes {nu} and {mu} describe the same great circle")
        self.pair = (nu, mu)


@dataclass
class MeasurementSet:
    """Great-circle integrals v_nu = R f(x_nu, y_nu)."""

    x: np.ndarray
    y: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.x = unit(np.atleast_2d(self.x))
        self.y = unit(np.atleast_2d(self.y))
        self.values = np.asarray(self.values, dtype=complex).ravel()
        n = self.values.size
        if n == 0:
            raise ValueError("measurement set is empty")
        if self.x.shape != (n, 3) or self.y.shape != (n, 3):
            raise ValueError("x, y must be (N, 3) arrays matching the number of values")

    def __len__(self) -> int:
        return self.values.size

    def to_dict(self) -> dict:
        return {
            "nodes": [
                {"x": xi.tolist(), "y": yi.tolist(), "v_re": float(v.real), "v_im": float(v.imag)}
                for xi, yi, v in zip(self.x, self.y, self.values)
            ],
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "MeasurementSet":
        nodes = doc["nodes"]
        if not nodes:
            raise ValueError("measurement set is empty")
        x = [n["x"] for n in nodes]
        y = [n["y"] for n in nodes]
        v = [complex(n.get("v_re", 0.0), n.get("v_im", 0.0)) for n in nodes]
        return cls(np.array(x, float), np.array(y, float), np.array(v), dict(doc.get("meta", {})))

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def load(cls, path) -> "MeasurementSet":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def find_duplicate_nodes(x, y, tol: float = NODE_TOL) -> tuple[int, int] | None:
    """First pair of nodes with equal circles; (x, y) and (-x, -y) coincide."""
    x, y = np.atleast_2d(x), np.atleast_2d(y)
    n = len(x)
    pts = np.vstack([np.hstack([x, y]), -np.hstack([x, y])])
    pairs = cKDTree(pts).query_pairs(tol)
    hits = sorted({tuple(sorted((a % n, b % n))) for a, b in pairs if a % n != b % n})
    return hits[0] if hits else None


def zonal_product_sum(cx: np.ndarray, cy: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """sum_k weights[k] P_k(cx) P_k(cy), elementwise, by the three-term recurrence."""
    cx = np.clip(cx, -1.0, 1.0)
    cy = np.clip(cy, -1.0, 1.0)
    px0, py0 = np.ones_like(cx), np.ones_like(cy)
    out = weights[0] * px0 * py0
    if weights.size == 1:
        return out
    px1, py1 = cx.copy(), cy.copy()
    out += weights[1] * px1 * py1
    for k in range(1, weights.size - 1):
        px0, px1 = px1, ((2 * k + 1) * cx * px1 - k * px0) / (k + 1)
        py0, py1 = py1, ((2 * k + 1) * cy * py1 - k * py0) / (k + 1)
        out += weights[k + 1] * px1 * py1
    return out


def degree_weights(t: float, K: int) -> np.ndarray:
    k = np.arange(K + 1)
    return (1.0 + k * (k + 1.0)) ** (-t)


def gram_so3(x, y, t: float, K: int) -> np.ndarray:
    """Closed-form Gram matrix of the great-circle functionals."""
    check_order(t, SO3_DIM)
    x, y = unit(np.atleast_2d(x)), unit(np.atleast_2d(y))
    return zonal_product_sum(x @ x.T, y @ y.T, degree_weights(t, K))


def method1_basis(x, y, K: int) -> SpectralBasis:
    """Wigner-function basis with A[nu, (k,i,j)] = R T^k_ij(x_nu, y_nu)."""
    x, y = unit(np.atleast_2d(x)), unit(np.atleast_2d(y))
    Yx = spherical_harmonics(K, x)
    Yy = spherical_harmonics(K, y)
    cols, lams, labels = [], [], []
    for k in range(K + 1):
        sl = slice(k * k, (k + 1) ** 2)
        blk = (4 * math.pi / (2 * k + 1)) * Yx[:, sl, None] * Yy[:, None, sl].conj()
        cols.append(blk.reshape(len(x), -1))
        lams.append(np.full((2 * k + 1) ** 2, float(k * (k + 1))))
        labels.extend((k, i, j) for i in range(1, 2 * k + 2) for j in range(1, 2 * k + 2))
    return SpectralBasis(np.concatenate(lams), np.hstack(cols), labels)


def gram_so3_bruteforce(x, y, t: float, K: int) -> np.ndarray:
    """Un-simplified double sum over i, j of products of Radon-transformed Wigner functions."""
    basis = method1_basis(x, y, K)
    A = basis.evaluations
    return (A * basis.weights(t)) @ A.conj().T


def gram_so3_single_cosine(x, y, t: float, K: int) -> np.ndarray:
    """The single-cosine form sum_k w_k P_k(x_nu . y_nu) P_k(x_mu . y_mu).

    Kept only to document that it differs from the double-sum definition
    (it has rank <= K+1 and is not the Gram matrix of the functionals).
    """
    x, y = unit(np.atleast_2d(x)), unit(np.atleast_2d(y))
    c = np.sum(x * y, axis=1)
    return zonal_product_sum(c[:, None] * np.ones_like(c)[None, :],
                             c[None, :] * np.ones_like(c)[:, None], degree_weights(t, K))


def gram_so3_zonal_of_product(x, y, t: float, K: int) -> np.ndarray:
    """Zonal entry pi_11 of the single group element y_nu x_nu^{-1} x_mu y_mu^{-1} (lifted)."""
    x, y = unit(np.atleast_2d(x)), unit(np.atleast_2d(y))
    xl = [lift(v) for v in x]
    yl = [lift(v) for v in y]
    n = len(x)
    cos_b = np.empty((n, n))
    for a in range(n):
        for b in range(n):
            g = yl[a] * xl[a].inv() * xl[b] * yl[b].inv()
            cos_b[a, b] = g.apply([0.0, 0.0, 1.0])[2]
    return zonal_product_sum(cos_b, np.ones_like(cos_b), degree_weights(t, K))


def spline_wigner_coefficients(x, y, alpha, t: float, K: int) -> list[np.ndarray]:
    """Coefficients c^k_ij of the spline from the node weights alpha."""
    Yx = spherical_harmonics(K, x)
    Yy = spherical_harmonics(K, y)
    w = degree_weights(t, K)
    out = []
    for k in range(K + 1):
        sl = slice(k * k, (k + 1) ** 2)
        scale = 4 * math.pi / (2 * k + 1) * w[k]
        out.append(scale * (Yx[:, sl].conj().T * alpha) @ Yy[:, sl])
    return out


def invert_method1(
    m: MeasurementSet, t: float = DEFAULT_ORDER, K: int = 16
) -> tuple[WignerExpansion, SplineSolution]:
    """Minimal-norm SO(3) expansion whose great-circle integrals match ``m``."""
    notes = check_order(t, SO3_DIM)
    pair = find_duplicate_nodes(m.x, m.y)
    if pair is not None:
        raise DuplicateNodeError(*pair)
    G = gram_so3(m.x, m.y, t, K)
    sol = solve_gram(G, m.values, t, check_duplicates=False)
    sol.notes = notes + sol.notes
    F = WignerExpansion.from_wigner_coefficients(spline_wigner_coefficients(m.x, m.y, sol.alpha, t, K))
    return F, sol


def measurement_residual(F: WignerExpansion, m: MeasurementSet) -> float:
    """max_nu |R F(x_nu, y_nu) - v_nu|."""
    vals = radon_exact(F)(m.x, m.y)
    return float(np.max(np.abs(vals - m.values)))


def gram_tail(t: float, K: int) -> float:
    """Bound on sum_{k>K} (1 + k(k+1))^{-t}, the truncation error of every Gram entry."""
    if t <= 0.5:
        return math.inf
    return (K + 0.5) ** (1 - 2 * t) / (2 * t - 1)


def choose_bandwidth(t: float, tol: float = 1e-12, k_max: int = 100000) -> int:
    """Smallest K whose Gram tail bound is below ``tol``."""
    lo, hi = 0, k_max
    if gram_tail(t, hi) > tol:
        return hi
    while lo < hi:
        mid = (lo + hi) // 2
        if gram_tail(t, mid) <= tol:
            hi = mid
        else:
            lo = mid + 1
    return lo
