"""Synthetic orientation density functions and measurement sets.

Every generator takes an explicit seed and builds its own random generator,
so outputs are reproducible and no global state is touched.  Nonnegativity
of the synthesized ODFs is not enforced; nothing downstream needs it.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.transform import Rotation

from .method1 import MeasurementSet
from .radon import radon_exact
from .so3_core import WignerExpansion
from .special_fns import unit, wigner_matrix

MODEL_KINDS = ("random_bandlimited", "zonal_mixture")


def conjugation_signs(k: int) -> np.ndarray:
    """(-1)^(m' - m) over the (2k+1) x (2k+1) index grid."""
    m = np.arange(-k, k + 1)
    return (-1.0) ** (m[:, None] - m[None, :])


def real_part_coefficients(c: np.ndarray, k: int) -> np.ndarray:
    """Coefficients of Re(sum c_ij T^k_ij), using conj(T_{m',m}) = (-1)^(m'-m) T_{-m',-m}."""
    mirrored = conjugation_signs(k) * np.conj(c[::-1, ::-1])
    return 0.5 * (c + mirrored)


def realify(F: WignerExpansion) -> WignerExpansion:
    """Expansion of the real part of F."""
    return WignerExpansion.from_wigner_coefficients(
        [real_part_coefficients(c, k) for k, c in enumerate(F.wigner_coefficients())]
    )


@dataclass
class OdfModel:
    """Recipe for a synthetic ODF.

    ``random_bandlimited`` draws Gaussian Wigner coefficients with degree-k
    amplitude ``decay**k`` and mean value 1.  ``zonal_mixture`` sums
    sum_k a_k (2k+1) chi_k(g_c^{-1} g) over centers g_c (given as
    quaternions in scalar-last order), with characters chi_k.
    """

    kind: str = "random_bandlimited"
    bandwidth: int = 4
    seed: int = 0
    decay: float = 0.5
    centers: list = field(default_factory=list)
    weights: list = field(default_factory=list)
    profile: list = field(default_factory=list)

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ValueError(f"unknown ODF model {self.kind!r}; expected one of {MODEL_KINDS}")
        if self.bandwidth < 0:
            raise ValueError("bandwidth must be non-negative")
        if self.kind == "zonal_mixture":
            if self.weights and len(self.weights) != len(self.centers):
                raise ValueError("one weight per center is required")
            if any(a < 0 for a in self.profile):
                raise ValueError("degree profile must be non-negative")
            if len(self.profile) > self.bandwidth + 1:
                raise ValueError("degree profile longer than bandwidth + 1")

    @classmethod
    def from_dict(cls, doc: dict) -> "OdfModel":
        known = {"kind", "bandwidth", "seed", "decay", "centers", "weights", "profile"}
        extra = set(doc) - known
        if extra:
            raise ValueError(f"unknown model keys {sorted(extra)}")
        return cls(**doc)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind, "bandwidth": self.bandwidth, "seed": self.seed, "decay": self.decay,
            "centers": [list(map(float, c)) for c in self.centers],
            "weights": list(map(float, self.weights)), "profile": list(map(float, self.profile)),
        }


def _random_bandlimited(model: OdfModel) -> WignerExpansion:
    rng = np.random.default_rng(model.seed)
    coeffs = [np.ones((1, 1), dtype=complex)]
    for k in range(1, model.bandwidth + 1):
        d = 2 * k + 1
        c = (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))) * model.decay**k
        coeffs.append(real_part_coefficients(c, k))
    return WignerExpansion.from_wigner_coefficients(coeffs)


def _zonal_mixture(model: OdfModel) -> WignerExpansion:
    K = model.bandwidth
    if model.centers:
        centers = Rotation.from_quat(np.atleast_2d(model.centers))
    else:
        rng = np.random.default_rng(model.seed)
        centers = Rotation.random(3, random_state=rng)
    n = len(centers)
    weights = np.asarray(model.weights, float) if model.weights else np.full(n, 1.0 / n)
    profile = np.zeros(K + 1)
    if model.profile:
        profile[: len(model.profile)] = model.profile
    else:
        k = np.arange(K + 1)
        profile = np.exp(-0.1 * k * (k + 1))
    blocks = []
    for k in range(K + 1):
        b = np.zeros((2 * k + 1, 2 * k + 1), dtype=complex)
        for g, w in zip(centers, weights):
            # fhat(k) of g -> chi_k(g_c^{-1} g) is T^k(g_c)^H
            b += w * profile[k] * wigner_matrix(k, g).conj().T
        blocks.append(b)
    return WignerExpansion(blocks)


def make_odf(model: OdfModel) -> WignerExpansion:
    """Real-valued bandlimited ODF; deterministic in ``model.seed``."""
    if model.kind == "random_bandlimited":
        return _random_bandlimited(model)
    return _zonal_mixture(model)


def make_measurements(F: WignerExpansion, x, y, sigma: float = 0.0, seed: int = 0) -> MeasurementSet:
    """Great-circle integrals of F at (x_nu, y_nu) plus N(0, sigma^2) real noise."""
    if sigma < 0:
        raise ValueError("noise level must be non-negative")
    m = MeasurementSet(x, y, np.zeros(len(np.atleast_2d(x))), {"sigma": sigma, "seed": seed})
    m.values = np.asarray(radon_exact(F)(m.x, m.y), dtype=complex)
    if sigma > 0:
        m.values = m.values + np.random.default_rng(seed).normal(0.0, sigma, size=m.values.shape)
    return m


def random_nodes(n: int, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """n node pairs drawn uniformly on S^2 x S^2."""
    rng = np.random.default_rng(seed)
    return unit(rng.normal(size=(n, 3))), unit(rng.normal(size=(n, 3)))
