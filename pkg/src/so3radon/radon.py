"""Radon transform SO(3) -> S^2 x S^2 and its spectral inverse.

The transform integrates f over the great circle x' SO(2) y'^{-1}, where
x', y' are any rotations carrying the north pole to x and y.  On Wigner
functions it acts as

    R T^k_{ij}(x, y) = 4 pi / (2k+1) Y_k^i(x) conj(Y_k^j(y)),

so functions on S^2 x S^2 are stored as a :class:`ProductExpansion` over the
basis ``Y_k^i(x) conj(Y_l^j(y))``.

Measure conventions.  SO(3) always carries normalized Haar measure.  The
product space carries either the standard surface measure on each sphere
(``"standard_s2"``, the default) or the normalized one (``"normalized"``).
Under the first the basis above is orthonormal; under the second every
basis function has norm 1/(4 pi).  The only place the choice shows up is
the factor ``basis_norm`` below, so the isometry constant
``||R f||_{1/2} / |||f|||_0`` equals 4 pi or 1 respectively.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.spatial.transform import Rotation

from .so3_core import WignerExpansion, sobolev_norm_so3
from .special_fns import NORTH_POLE, spherical_harmonics, unit

CONVENTIONS = ("standard_s2", "normalized")
DEFAULT_CONVENTION = "standard_s2"
RANGE_TOL = 1e-10


class NotInRangeError(ValueError):
    """Product expansion violates the Darboux condition."""


def basis_norm(convention: str = DEFAULT_CONVENTION) -> float:
    """L2 norm of Y_k^i(x) conj(Y_l^j(y)) under the chosen product measure."""
    if convention == "standard_s2":
        return 1.0
    if convention == "normalized":
        return 1.0 / (4 * math.pi)
    raise ValueError(f"unknown measure convention {convention!r}; expected one of {CONVENTIONS}")


def isometry_constant(convention: str = DEFAULT_CONVENTION) -> float:
    return 4 * math.pi * basis_norm(convention)


@dataclass
class ProductExpansion:
    """Function on S^2 x S^2 as blocks c(k, l) of shape (2k+1, 2l+1)."""

    bandwidth: int
    blocks: dict[tuple[int, int], np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for (k, l), b in self.blocks.items():
            if k > self.bandwidth or l > self.bandwidth or k < 0 or l < 0:
                raise ValueError(f"block ({k}, {l}) outside bandwidth {self.bandwidth}")
            b = np.asarray(b, dtype=complex)
            if b.shape != (2 * k + 1, 2 * l + 1):
                raise ValueError(f"block ({k}, {l}) has shape {b.shape}")
            clean[(int(k), int(l))] = b
        self.blocks = clean

    def block(self, k: int, l: int) -> np.ndarray:
        b = self.blocks.get((k, l))
        return np.zeros((2 * k + 1, 2 * l + 1), dtype=complex) if b is None else b

    def is_diagonal(self) -> bool:
        return all(k == l or not np.any(b) for (k, l), b in self.blocks.items())

    def __call__(self, x, y):
        return evaluate_product(self, x, y)

    def __sub__(self, other: "ProductExpansion") -> "ProductExpansion":
        K = max(self.bandwidth, other.bandwidth)
        keys = set(self.blocks) | set(other.blocks)
        return ProductExpansion(K, {kl: self.block(*kl) - other.block(*kl) for kl in keys})

    def to_dict(self) -> dict:
        return {
            "bandwidth": self.bandwidth,
            "blocks": [
                {"k": k, "l": l, "re": b.real.tolist(), "im": b.imag.tolist()}
                for (k, l), b in sorted(self.blocks.items())
            ],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ProductExpansion":
        blocks = {
            (int(b["k"]), int(b["l"])): np.asarray(b["re"], float) + 1j * np.asarray(b["im"], float)
            for b in doc["blocks"]
        }
        return cls(int(doc["bandwidth"]), blocks)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "ProductExpansion":
        return cls.from_dict(json.loads(text))


def evaluate_product(P: ProductExpansion, x, y):
    """Values of P at paired points x[n], y[n] (or a single pair)."""
    x, y = unit(x), unit(y)
    single = x.ndim == 1
    x, y = np.atleast_2d(x), np.atleast_2d(y)
    K = P.bandwidth
    Yx = spherical_harmonics(K, x)
    Yy = spherical_harmonics(K, y).conj()
    out = np.zeros(x.shape[0], dtype=complex)
    for (k, l), b in P.blocks.items():
        out += np.einsum(
            "ni,ij,nj->n", Yx[:, k * k:(k + 1) ** 2], b, Yy[:, l * l:(l + 1) ** 2]
        )
    return complex(out[0]) if single else out


@dataclass(frozen=True)
class CircleQuadrature:
    """Trapezoidal rule with n nodes on SO(2), weights 1/n."""

    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("circle quadrature needs at least one node")

    @property
    def angles(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.n) / self.n


def lift(x) -> Rotation:
    """Minimal-angle rotation taking the north pole to x.

    At the antipode the rotation by pi about the first coordinate axis is used.
    """
    x = unit(x)
    axis = np.cross(NORTH_POLE, x)
    s = np.linalg.norm(axis)
    c = float(np.dot(NORTH_POLE, x))
    if s < 1e-15:
        if c > 0:
            return Rotation.identity()
        return Rotation.from_rotvec([np.pi, 0.0, 0.0])
    return Rotation.from_rotvec(axis / s * math.atan2(s, c))


def great_circle(x, y, quad: CircleQuadrature, x_lift: Rotation | None = None,
                 y_lift: Rotation | None = None) -> Rotation:
    """Quadrature nodes x' h y'^{-1} of the great circle through (x, y)."""
    xl = lift(x) if x_lift is None else x_lift
    yl = lift(y) if y_lift is None else y_lift
    h = Rotation.from_rotvec(np.outer(quad.angles, NORTH_POLE))
    return xl * h * yl.inv()


def radon_quadrature(f: Callable[[Rotation], np.ndarray], x, y, quad: CircleQuadrature,
                     x_lift: Rotation | None = None, y_lift: Rotation | None = None):
    """Trapezoidal approximation of R f(x, y).

    ``f`` takes the n circle nodes as one batched Rotation and returns an
    array of leading length n; trailing axes (e.g. a whole Wigner matrix)
    are integrated componentwise.
    """
    vals = np.asarray(f(great_circle(x, y, quad, x_lift, y_lift)), dtype=complex)
    out = vals.mean(axis=0)
    return complex(out) if out.ndim == 0 else out


def radon_exact(F: WignerExpansion) -> ProductExpansion:
    """Spectral Radon transform: c(k, k) = 4 pi fhat(k)^T."""
    return ProductExpansion(
        F.bandwidth, {(k, k): 4 * math.pi * b.T for k, b in enumerate(F.blocks)}
    )


def offdiagonal_energy(P: ProductExpansion) -> tuple[float, float]:
    """(off-diagonal, total) squared coefficient energy."""
    off = tot = 0.0
    for (k, l), b in P.blocks.items():
        e = float(np.sum(np.abs(b) ** 2))
        tot += e
        if k != l:
            off += e
    return off, tot


def radon_inverse(P: ProductExpansion, tol: float = RANGE_TOL) -> WignerExpansion:
    """Invert on the range: fhat(k) = c(k, k)^T / (4 pi).

    Equivalently the coefficient of T^k_{ij} is (2k+1)/(4 pi) c(k, k)_{ij}.
    """
    off, tot = offdiagonal_energy(P)
    if math.sqrt(off) > tol * max(1.0, math.sqrt(tot)):
        raise NotInRangeError(
            f"off-diagonal coefficient norm {math.sqrt(off):.3e} exceeds tolerance {tol:.1e}"
        )
    return WignerExpansion([P.block(k, k).T / (4 * math.pi) for k in range(P.bandwidth + 1)])


def _weighted_norm(P: ProductExpansion, weight, convention: str) -> float:
    mu = basis_norm(convention)
    total = 0.0
    for (k, l), b in P.blocks.items():
        total += weight(k, l) * float(np.sum(np.abs(b) ** 2))
    return math.sqrt(total) * mu


def darboux_residual(P: ProductExpansion, convention: str = DEFAULT_CONVENTION) -> float:
    """L2 norm of (Laplacian_x - Laplacian_y) P."""
    return _weighted_norm(P, lambda k, l: float(k * (k + 1) - l * (l + 1)) ** 2, convention)


def product_eigenvalue(k: int, l: int) -> float:
    """Eigenvalue of 1 - 2 Laplacian on Y_k conj(Y_l)."""
    return 1.0 + 2.0 * (k * (k + 1) + l * (l + 1))


def sobolev_norm_product(P: ProductExpansion, t: float, convention: str = DEFAULT_CONVENTION) -> float:
    """||(1 - 2 Laplacian)^{t/2} P|| on S^2 x S^2."""
    return _weighted_norm(P, lambda k, l: product_eigenvalue(k, l) ** t, convention)


def range_isometry_ratio(F: WignerExpansion, convention: str = DEFAULT_CONVENTION) -> float:
    """||R F||_{1/2} / |||F|||_0; constant in F (see :func:`isometry_constant`)."""
    return sobolev_norm_product(radon_exact(F), 0.5, convention) / sobolev_norm_so3(F, 0.0)


def pole_figure_grid(P: ProductExpansion, eta, n_theta: int = 19, n_phi: int = 36) -> np.ndarray:
    """Rows (theta, phi, re, im) of P(xi, eta) over a polar grid in xi."""
    theta = np.linspace(0, np.pi, n_theta)
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    tt, pp = np.meshgrid(theta, phi, indexing="ij")
    xi = np.stack([np.sin(tt) * np.cos(pp), np.sin(tt) * np.sin(pp), np.cos(tt)], -1).reshape(-1, 3)
    vals = evaluate_product(P, xi, np.broadcast_to(unit(eta), xi.shape))
    return np.column_stack([tt.ravel(), pp.ravel(), vals.real, vals.imag])


def write_pole_figure_csv(path, rows: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["theta", "phi", "re", "im"])
        for r in rows:
            w.writerow([repr(float(v)) for v in r])
