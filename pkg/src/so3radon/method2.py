"""Spline inversion through S^2 x S^2 (second algorithm).

Samples of R f on a product lattice are interpolated by a variational spline
on S^2 x S^2 (basis Y_k^i(x) conj(Y_l^j(y)), eigenvalue of 1 - 2 Laplacian
equal to 1 + 2(k(k+1) + l(l+1))), the spline is projected onto the Darboux
range by dropping the off-diagonal blocks, and the result is mapped back to
SO(3) with the spectral inverse.
"""
from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass

import numpy as np

from .lattice import ProductLattice, product_lattice
from .radon import ProductExpansion, offdiagonal_energy, radon_exact, radon_inverse
from .so3_core import WignerExpansion, sobolev_norm_so3
from .special_fns import legendre_all, spherical_harmonics, unit
from .spline import SpectralBasis, SplineSolution, check_order, solve_gram

PRODUCT_DIM = 4


class DuplicatePairError(ValueError):
    def __init__(self, nu: int, mu: int):
        super().__init__(f"sample pairs {nu} and {mu} coincide")
        self.pair = (nu, mu)


def tau_from_schedule(m: int, t: float) -> float:
    """Spline order 2^(m+2) + t used by the sampling estimates."""
    return 2.0 ** (m + 2) + t


def product_weights(tau: float, K: int) -> np.ndarray:
    """w[k, l] = (1 + 2(k(k+1) + l(l+1)))^(-tau)."""
    a = np.arange(K + 1) * (np.arange(K + 1) + 1.0)
    return (1.0 + 2.0 * (a[:, None] + a[None, :])) ** (-tau)


def _zonal_kernels(points: np.ndarray, K: int) -> np.ndarray:
    """Z[k] = (2k+1)/(4 pi) P_k(p_a . p_b), shape (K+1, n, n)."""
    c = np.clip(points @ points.T, -1.0, 1.0)
    P = np.moveaxis(legendre_all(K, c), -1, 0)
    return P * ((2 * np.arange(K + 1) + 1) / (4 * math.pi))[:, None, None]


def gram_product(x, y, tau: float, K: int) -> np.ndarray:
    """Closed-form Gram matrix for point evaluations at pairs (x_nu, y_nu)."""
    check_order(tau, PRODUCT_DIM)
    x, y = unit(np.atleast_2d(x)), unit(np.atleast_2d(y))
    cx = np.clip(x @ x.T, -1.0, 1.0)
    cy = np.clip(y @ y.T, -1.0, 1.0)
    w = product_weights(tau, K)
    Px = legendre_all(K, cx)
    G = np.zeros_like(cx)
    py0 = py1 = None
    for l in range(K + 1):
        if l == 0:
            pl = np.ones_like(cy)
        elif l == 1:
            pl = cy
        else:
            pl = ((2 * l - 1) * cy * py1 - (l - 1) * py0) / l
        py0, py1 = py1, pl
        inner = Px @ (w[:, l] * (2 * np.arange(K + 1) + 1) / (4 * math.pi))
        G += inner * pl * (2 * l + 1) / (4 * math.pi)
    return G


def gram_product_lattice(lattice: ProductLattice, tau: float, K: int) -> np.ndarray:
    """Gram matrix on a product lattice, assembled as sum_l H_l (x) Z_l."""
    check_order(tau, PRODUCT_DIM)
    Zx = _zonal_kernels(lattice.first.points, K)
    Zy = Zx if lattice.second is lattice.first else _zonal_kernels(lattice.second.points, K)
    w = product_weights(tau, K)
    a, b = lattice.shape
    G = np.zeros((a * b, a * b))
    G4 = G.reshape(a, b, a, b)
    for l in range(K + 1):
        H = np.tensordot(w[:, l], Zx, axes=1)
        for i in range(a):
            G4[i] += H[i][None, :, None] * Zy[l][:, None, :]
    return G


def product_basis(x, y, K: int) -> SpectralBasis:
    """Eigenbasis Y_k^i conj(Y_l^j) evaluated at the pairs; eigenvalue 2(k(k+1)+l(l+1))."""
    x, y = unit(np.atleast_2d(x)), unit(np.atleast_2d(y))
    Yx = spherical_harmonics(K, x)
    Yy = spherical_harmonics(K, y).conj()
    cols, lams, labels = [], [], []
    for k in range(K + 1):
        for l in range(K + 1):
            sx, sy = slice(k * k, (k + 1) ** 2), slice(l * l, (l + 1) ** 2)
            cols.append((Yx[:, sx, None] * Yy[:, None, sy]).reshape(len(x), -1))
            lams.append(np.full((2 * k + 1) * (2 * l + 1), 2.0 * (k * (k + 1) + l * (l + 1))))
            labels.extend((k, l, i, j) for i in range(1, 2 * k + 2) for j in range(1, 2 * l + 2))
    return SpectralBasis(np.concatenate(lams), np.hstack(cols), labels)


def gram_product_bruteforce(x, y, tau: float, K: int) -> np.ndarray:
    basis = product_basis(x, y, K)
    A = basis.evaluations
    return (A * basis.weights(tau)) @ A.conj().T


def _blocks_from_full(C: np.ndarray, w: np.ndarray, K: int) -> dict:
    blocks = {}
    for k in range(K + 1):
        for l in range(K + 1):
            blk = w[k, l] * C[k * k:(k + 1) ** 2, l * l:(l + 1) ** 2]
            blocks[(k, l)] = blk
    return blocks


def _pairs_of(where) -> tuple[np.ndarray, np.ndarray, ProductLattice | None]:
    if isinstance(where, ProductLattice):
        x, y = where.pairs
        return x, y, where
    x, y = where
    return unit(np.atleast_2d(x)), unit(np.atleast_2d(y)), None


def interpolate_on_product(samples, where, tau: float, K: int) -> tuple[ProductExpansion, SplineSolution]:
    """Spline on S^2 x S^2 through ``samples`` at a ProductLattice or at pairs (x, y)."""
    notes = check_order(tau, PRODUCT_DIM)
    x, y, lat = _pairs_of(where)
    samples = np.asarray(samples, dtype=complex).ravel()
    if samples.size != len(x):
        raise ValueError(f"{samples.size} samples for {len(x)} pairs")
    if lat is None:
        # point evaluations: only exact coincidence of pairs is degenerate
        pts = np.hstack([x, y])
        d = np.linalg.norm(pts[:, None] - pts[None], axis=-1) if len(x) <= 4000 else None
        if d is not None:
            np.fill_diagonal(d, np.inf)
            hit = np.argwhere(d < 1e-10)
            if hit.size:
                raise DuplicatePairError(*sorted(hit[0].tolist()))
        G = gram_product(x, y, tau, K)
    else:
        # certified separation rules out coincident pairs
        G = gram_product_lattice(lat, tau, K)
    sol = solve_gram(G, samples, tau, check_duplicates=lat is None and len(x) <= 4000, overwrite=True)
    sol.notes = notes + sol.notes
    del G
    w = product_weights(tau, K)
    if lat is None:
        Yx = spherical_harmonics(K, x)
        Yy = spherical_harmonics(K, y)
        C = (Yx.conj().T * sol.alpha) @ Yy
    else:
        Yx = spherical_harmonics(K, lat.first.points)
        Yy = spherical_harmonics(K, lat.second.points)
        C = Yx.conj().T @ sol.alpha.reshape(lat.shape) @ Yy
    return ProductExpansion(K, _blocks_from_full(C, w, K)), sol


def project_to_range(P: ProductExpansion) -> tuple[ProductExpansion, float]:
    """Orthogonal projection onto the Darboux range and the discarded energy fraction."""
    off, tot = offdiagonal_energy(P)
    kept = {(k, l): b.copy() for (k, l), b in P.blocks.items() if k == l}
    return ProductExpansion(P.bandwidth, kept), (off / tot if tot > 0 else 0.0)


def invert_method2(samples, where, tau: float, K: int) -> WignerExpansion:
    P, _ = interpolate_on_product(samples, where, tau, K)
    return radon_inverse(project_to_range(P)[0])


def sample_radon(F: WignerExpansion, where) -> np.ndarray:
    """Exact values of R F at a ProductLattice or pairs."""
    x, y, _ = _pairs_of(where)
    return np.asarray(radon_exact(F)(x, y))


@dataclass
class StudyRow:
    rho: float
    n_pairs: int
    l2_rel_err: float
    weighted_err: float
    offdiag_frac: float
    seconds: float


def relative_error(S: WignerExpansion, f: WignerExpansion, order: float = 0.0) -> float:
    return sobolev_norm_so3(S - f, order) / sobolev_norm_so3(f, order)


def convergence_study(f: WignerExpansion, rho_sequence, tau: float, K: int, m: int = 0) -> list[StudyRow]:
    """Reconstruct f from exact samples on certified product lattices of decreasing rho.

    ``weighted_err`` uses the SO(3) Sobolev order t - 1/4 with t = tau - 2^(m+2),
    clipped at zero.
    """
    order = max(tau - 2.0 ** (m + 2) - 0.25, 0.0)
    rows = []
    for rho in rho_sequence:
        start = time.perf_counter()
        lat = product_lattice(rho)
        P, _ = interpolate_on_product(sample_radon(f, lat), lat, tau, K)
        proj, frac = project_to_range(P)
        S = radon_inverse(proj)
        rows.append(StudyRow(
            rho, len(lat), relative_error(S, f), relative_error(S, f, order), frac,
            time.perf_counter() - start,
        ))
    return rows


def rate_fit(rows: list[StudyRow]) -> float:
    """Slope of log(l2 error) against log(rho); an empirical convergence order."""
    r = np.array([[row.rho, row.l2_rel_err] for row in rows if row.l2_rel_err > 0])
    if len(r) < 2:
        return float("nan")
    return float(np.polyfit(np.log(r[:, 0]), np.log(r[:, 1]), 1)[0])


STUDY_HEADER = ("rho", "n_pairs", "l2_rel_err", "weighted_err", "offdiag_frac", "seconds")


def write_study_csv(path, rows: list[StudyRow]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(STUDY_HEADER)
        for r in rows:
            w.writerow([repr(r.rho), r.n_pairs, repr(r.l2_rel_err), repr(r.weighted_err),
                        repr(r.offdiag_frac), repr(r.seconds)])
