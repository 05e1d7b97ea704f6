"""Fourier analysis on SO(3): expansions, Haar quadrature, Laplacian, Sobolev norms.

A :class:`WignerExpansion` stores the Fourier coefficients

    fhat(k) = int f(g) T^k(g)^* dg        (normalized Haar measure)

and synthesizes ``f(g) = sum_k (2k+1) trace(T^k(g) fhat(k))``.  The
coefficient multiplying the Wigner function ``T^k_{ij}`` is therefore
``(2k+1) * fhat(k)[j, i]``; :meth:`WignerExpansion.wigner_coefficients`
returns that transposed, scaled view.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.spatial.transform import Rotation

from .special_fns import euler_zyz, wigner_from_euler, wigner_small_d


class QuadratureError(ValueError):
    """Quadrature rule is not exact for the requested bandwidth."""


def max_degree(omega: float) -> int:
    """Largest k with k(k+1) <= omega (bandlimit of E_omega)."""
    if omega < 0:
        raise ValueError("omega must be non-negative")
    k = int(math.floor((-1 + math.sqrt(1 + 4 * omega)) / 2))
    while (k + 1) * (k + 2) <= omega:
        k += 1
    while k * (k + 1) > omega:
        k -= 1
    return k


@dataclass
class WignerExpansion:
    """Bandlimited function on SO(3) given by blocks fhat(0) .. fhat(K)."""

    blocks: list[np.ndarray]

    def __post_init__(self):
        self.blocks = [np.asarray(b, dtype=complex) for b in self.blocks]
        for k, b in enumerate(self.blocks):
            if b.shape != (2 * k + 1, 2 * k + 1):
                raise ValueError(f"block {k} has shape {b.shape}, expected {(2*k+1, 2*k+1)}")

    @property
    def bandwidth(self) -> int:
        return len(self.blocks) - 1

    @classmethod
    def zeros(cls, K: int) -> "WignerExpansion":
        return cls([np.zeros((2 * k + 1, 2 * k + 1), dtype=complex) for k in range(K + 1)])

    @classmethod
    def wigner_function(cls, k: int, i: int, j: int, K: int | None = None) -> "WignerExpansion":
        """Expansion of the single Wigner function T^k_{ij} (1-based i, j)."""
        F = cls.zeros(k if K is None else K)
        F.blocks[k][j - 1, i - 1] = 1.0 / (2 * k + 1)
        return F

    @classmethod
    def from_wigner_coefficients(cls, coeffs: Sequence[np.ndarray]) -> "WignerExpansion":
        """Build from c^k_{ij}, the multipliers of T^k_{ij}."""
        return cls([np.asarray(c).T / (2 * k + 1) for k, c in enumerate(coeffs)])

    def wigner_coefficients(self) -> list[np.ndarray]:
        return [(2 * k + 1) * b.T for k, b in enumerate(self.blocks)]

    def padded(self, K: int) -> "WignerExpansion":
        if K < self.bandwidth:
            return WignerExpansion([b.copy() for b in self.blocks[: K + 1]])
        extra = WignerExpansion.zeros(K).blocks[self.bandwidth + 1:]
        return WignerExpansion([b.copy() for b in self.blocks] + extra)

    def _binary(self, other: "WignerExpansion", op) -> "WignerExpansion":
        K = max(self.bandwidth, other.bandwidth)
        a, b = self.padded(K), other.padded(K)
        return WignerExpansion([op(x, y) for x, y in zip(a.blocks, b.blocks)])

    def __add__(self, other):
        return self._binary(other, np.add)

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __mul__(self, scalar):
        return WignerExpansion([scalar * b for b in self.blocks])

    __rmul__ = __mul__

    def __call__(self, g: Rotation):
        return fourier_inverse(self, g)

    def allclose(self, other: "WignerExpansion", atol: float = 1e-12) -> bool:
        return max_abs_diff(self, other) <= atol

    def to_dict(self) -> dict:
        return {
            "bandwidth": self.bandwidth,
            "blocks": [
                {"k": k, "re": b.real.tolist(), "im": b.imag.tolist()}
                for k, b in enumerate(self.blocks)
            ],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "WignerExpansion":
        K = int(doc["bandwidth"])
        F = cls.zeros(K)
        for blk in doc["blocks"]:
            k = int(blk["k"])
            if k > K:
                raise ValueError(f"block degree {k} exceeds bandwidth {K}")
            F.blocks[k] = np.asarray(blk["re"], dtype=float) + 1j * np.asarray(blk["im"], dtype=float)
        WignerExpansion(F.blocks)  # shape validation
        return F

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "WignerExpansion":
        return cls.from_dict(json.loads(text))


def max_abs_diff(a: WignerExpansion, b: WignerExpansion) -> float:
    d = a - b
    return max(float(np.max(np.abs(x))) for x in d.blocks)


@dataclass
class SO3Quadrature:
    """Product rule on ZYZ Euler angles, normalized Haar weights.

    Integrates every function of bandwidth <= ``exactness`` exactly: uniform
    nodes in alpha and gamma, Gauss-Legendre nodes in cos(beta).  Flattened
    node arrays follow C order over the (alpha, beta, gamma) grid.
    """

    n_angle: int
    beta_nodes: np.ndarray
    beta_weights: np.ndarray
    exactness: int
    _rotation: Rotation | None = field(default=None, repr=False)

    @property
    def grid_shape(self) -> tuple[int, int, int]:
        return (self.n_angle, self.beta_nodes.size, self.n_angle)

    @property
    def size(self) -> int:
        return self.n_angle**2 * self.beta_nodes.size

    def _mesh(self):
        ang = 2 * np.pi * np.arange(self.n_angle) / self.n_angle
        return np.meshgrid(ang, self.beta_nodes, ang, indexing="ij")

    @property
    def alpha(self) -> np.ndarray:
        return self._mesh()[0].ravel()

    @property
    def beta(self) -> np.ndarray:
        return self._mesh()[1].ravel()

    @property
    def gamma(self) -> np.ndarray:
        return self._mesh()[2].ravel()

    @property
    def weights(self) -> np.ndarray:
        w = np.broadcast_to(self.beta_weights[None, :, None], self.grid_shape)
        return np.ascontiguousarray(w).ravel() / self.n_angle**2

    @property
    def rotations(self) -> Rotation:
        if self._rotation is None:
            angles = np.stack([self.alpha, self.beta, self.gamma], axis=-1)
            self._rotation = Rotation.from_euler("ZYZ", angles)
        return self._rotation


def haar_quadrature(exactness: int) -> SO3Quadrature:
    """Smallest product rule exact for bandwidth ``exactness``."""
    if exactness < 0:
        raise ValueError("exactness must be non-negative")
    x, wx = np.polynomial.legendre.leggauss(exactness // 2 + 1)
    return SO3Quadrature(exactness + 1, np.arccos(x), wx / 2, exactness)


def _euler_of(g: Rotation) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    ang = euler_zyz(g)
    return ang[..., 0], ang[..., 1], ang[..., 2]


def fourier_forward(
    f: Callable[[Rotation], np.ndarray], K: int, quad: SO3Quadrature | None = None
) -> WignerExpansion:
    """Fourier coefficients fhat(k) for k <= K by Haar quadrature.

    ``f`` is called once with a batched :class:`Rotation` holding all nodes.
    The alpha/gamma sums are done by FFT, so d^k(beta) is only needed at the
    Gauss nodes.
    """
    if quad is None:
        quad = haar_quadrature(2 * K)
    if quad.exactness < 2 * K:
        raise QuadratureError(
            f"quadrature exact to bandwidth {quad.exactness}, analysis at K={K} needs {2 * K}"
        )
    vals = np.asarray(f(quad.rotations), dtype=complex).reshape(quad.grid_shape)
    return analyze_grid(vals, K, quad)


def analyze_grid(vals: np.ndarray, K: int, quad: SO3Quadrature) -> WignerExpansion:
    """Analysis of samples already laid out on the quadrature grid."""
    n = quad.n_angle
    # G[p, b, q] = n^-2 sum f exp(-i p alpha) exp(-i q gamma)
    G = np.fft.fft2(vals, axes=(0, 2)) / n**2
    blocks = []
    for k in range(K + 1):
        m = np.arange(-k, k + 1) % n
        d = wigner_small_d(k, quad.beta_nodes)  # (b, row, col)
        Gk = G[np.ix_(m, np.arange(quad.beta_nodes.size), m)]  # (p, b, q)
        # fhat_ij = sum_b w_b d_ji(beta_b) G[m_j, b, m_i]
        blocks.append(np.einsum("b,bji,jbi->ij", quad.beta_weights, d, Gk))
    return WignerExpansion(blocks)


def synthesize_grid(F: WignerExpansion, quad: SO3Quadrature) -> np.ndarray:
    """Values of F at all quadrature nodes, flattened like ``quad.weights``."""
    n = quad.n_angle
    if n < 2 * F.bandwidth + 1:
        raise QuadratureError("angular grid too coarse for the expansion bandwidth")
    H = np.zeros(quad.grid_shape, dtype=complex)
    nb = quad.beta_nodes.size
    for k, b in enumerate(F.blocks):
        m = np.arange(-k, k + 1) % n
        d = wigner_small_d(k, quad.beta_nodes)
        # H[p, b, q] += (2k+1) d_pq(beta_b) fhat_qp
        H[np.ix_(m, np.arange(nb), m)] += (2 * k + 1) * np.einsum("bpq,qp->pbq", d, b)
    return (np.fft.ifft2(H, axes=(0, 2)) * n**2).ravel()


def fourier_inverse(F: WignerExpansion, g: Rotation):
    """Synthesize sum_k (2k+1) trace(T^k(g) fhat(k)) at one or many rotations."""
    alpha, beta, gamma = _euler_of(g)
    total = np.zeros(np.shape(alpha), dtype=complex)
    for k, b in enumerate(F.blocks):
        if not np.any(b):
            continue
        T = wigner_from_euler(k, alpha, beta, gamma)
        total = total + (2 * k + 1) * np.einsum("...ij,ji->...", T, b)
    return complex(total) if total.ndim == 0 else total


def laplace_eigenvalue(k: int) -> int:
    return -k * (k + 1)


def laplacian_apply(F: WignerExpansion) -> WignerExpansion:
    return WignerExpansion([laplace_eigenvalue(k) * b for k, b in enumerate(F.blocks)])


def l2_norm_so3(F: WignerExpansion) -> float:
    """L2 norm under normalized Haar measure (Parseval)."""
    return sobolev_norm_so3(F, 0.0)


def sobolev_norm_so3(F: WignerExpansion, t: float) -> float:
    """|||F|||_t = ||(1 - 4 Laplacian)^{t/2} F||, with 1 + 4k(k+1) = (2k+1)^2."""
    total = 0.0
    for k, b in enumerate(F.blocks):
        d = 2 * k + 1
        total += float(d) ** (2 * t) * d * float(np.sum(np.abs(b) ** 2))
    return math.sqrt(total)


def quadrature_l2_norm(f, quad: SO3Quadrature) -> float:
    """L2 norm by quadrature; ``f`` is a callable or a WignerExpansion."""
    if isinstance(f, WignerExpansion):
        vals = synthesize_grid(f, quad)
    else:
        vals = np.asarray(f(quad.rotations)).reshape(quad.size)
    return math.sqrt(float(np.sum(quad.weights * np.abs(vals) ** 2)))


def right_translate(F: WignerExpansion, a: Rotation) -> WignerExpansion:
    """Expansion of g -> f(g a): blocks become T^k(a) fhat(k)."""
    return WignerExpansion(
        [wigner_from_euler(k, *_euler_of(a)) @ b for k, b in enumerate(F.blocks)]
    )


def left_translate(F: WignerExpansion, a: Rotation) -> WignerExpansion:
    """Expansion of g -> f(a g): blocks become fhat(k) T^k(a)."""
    return WignerExpansion(
        [b @ wigner_from_euler(k, *_euler_of(a)) for k, b in enumerate(F.blocks)]
    )
