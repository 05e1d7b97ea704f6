"""Variational interpolating splines over a supplied spectral basis.

A basis is given as data: eigenvalues ``lam[j] >= 0`` of ``-L`` and the
evaluation matrix ``A[nu, j] = F_nu(phi_j)`` of N linear functionals on the
eigenfunctions.  The spline minimizes

    ||u||_t^2 = sum_j (1 + lam_j)^t |c_j|^2

subject to F_nu(u) = v_nu.  With ``w_j = (1 + lam_j)^{-t}`` the solution is

    c = w * (A^H alpha),   G alpha = v,   G = A diag(w) A^H.

``G[mu, nu]`` is the Gram entry ``beta_{nu mu}`` of the functional pair, so
``G`` is Hermitian positive semi-definite.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

log = logging.getLogger(__name__)

COND_LIMIT = 1e12
RIDGE_SCALE = 1e-12
DUPLICATE_TOL = 1e-13


class DuplicateFunctionalError(ValueError):
    """Two functionals coincide, so the Gram system is singular."""

    def __init__(self, nu: int, mu: int):
        super().__init__(f"functionals {nu} and {mu} coincide (duplicate nodes)")
        self.pair = (nu, mu)


class SplineSolverError(ArithmeticError):
    """The Gram system could not be solved."""


@dataclass
class SpectralBasis:
    eigenvalues: np.ndarray
    evaluations: np.ndarray
    labels: list | None = None

    def __post_init__(self):
        self.eigenvalues = np.asarray(self.eigenvalues, dtype=float)
        self.evaluations = np.atleast_2d(np.asarray(self.evaluations, dtype=complex))
        if np.any(self.eigenvalues < 0):
            raise ValueError("eigenvalues of -L must be non-negative")
        if self.evaluations.shape[1] != self.eigenvalues.size:
            raise ValueError(
                f"evaluation matrix has {self.evaluations.shape[1]} columns "
                f"for {self.eigenvalues.size} eigenfunctions"
            )

    @property
    def n_functionals(self) -> int:
        return self.evaluations.shape[0]

    def weights(self, t: float) -> np.ndarray:
        return (1.0 + self.eigenvalues) ** (-t)


@dataclass
class SplineProblem:
    basis: SpectralBasis
    t: float
    values: np.ndarray
    manifold_dim: int

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex).ravel()
        check_order(self.t, self.manifold_dim)
        if self.values.size != self.basis.n_functionals:
            raise ValueError("one value per functional required")


@dataclass
class SplineSolution:
    alpha: np.ndarray
    gram: np.ndarray | None
    values: np.ndarray
    t: float
    condition: float
    ridge: float = 0.0
    residual: float = 0.0
    notes: list[str] = field(default_factory=list)

    def report(self) -> dict:
        return {
            "t": self.t,
            "n": int(self.alpha.size),
            "condition": self.condition,
            "ridge": self.ridge,
            "gram_residual": self.residual,
            "alpha_re": self.alpha.real.tolist(),
            "alpha_im": self.alpha.imag.tolist(),
            "notes": list(self.notes),
        }


def check_order(t: float, manifold_dim: int) -> list[str]:
    """Reject t <= d/2; flag d/2 < t <= d, where absolute Gram convergence is not assured."""
    if t <= manifold_dim / 2:
        raise ValueError(f"smoothness t={t} must exceed d/2={manifold_dim / 2}")
    if t <= manifold_dim:
        return [f"t={t} <= d={manifold_dim}: Gram series convergence not absolute"]
    return []


def assemble_gram(basis: SpectralBasis, t: float) -> np.ndarray:
    A = basis.evaluations
    G = (A * basis.weights(t)) @ A.conj().T
    return 0.5 * (G + G.conj().T)


def find_duplicate(gram: np.ndarray, tol: float = DUPLICATE_TOL) -> tuple[int, int] | None:
    """First pair whose functionals agree in the native-space metric."""
    d = np.real(np.diag(gram))
    dist = d[:, None] + d[None, :] - 2 * gram.real
    np.fill_diagonal(dist, np.inf)
    hit = np.argwhere(dist <= tol * max(float(d.max(initial=0.0)), 1e-300))
    if hit.size == 0:
        return None
    nu, mu = sorted(hit[0].tolist())
    return nu, mu


def _one_norm(G: np.ndarray, chunk: int = 1024) -> float:
    best = 0.0
    for start in range(0, G.shape[1], chunk):
        best = max(best, float(np.abs(G[:, start:start + chunk]).sum(axis=0).max()))
    return best


def _pocon(cf, anorm: float) -> float:
    c, lower = cf
    fn = sla.lapack.zpocon if np.iscomplexobj(c) else sla.lapack.dpocon
    rcond, _ = fn(c, anorm, uplo="L" if lower else "U")
    return math.inf if rcond == 0 else 1.0 / rcond


def _mirror_upper_to_lower(a: np.ndarray, block: int = 512) -> None:
    """Rebuild the strict lower triangle of a Hermitian matrix from its upper triangle."""
    n = a.shape[0]
    for j0 in range(0, n, block):
        j1 = min(j0 + block, n)
        rows = np.arange(j0, n)[:, None]
        cols = np.arange(j0, j1)[None, :]
        below = rows > cols
        sub = a[j0:, j0:j1]
        sub[below] = a[j0:j1, j0:].conj().T[below]


def _upper_matvec(a: np.ndarray, diag: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Hermitian matvec from the strict upper triangle of ``a`` and a separate diagonal."""
    if np.iscomplexobj(a):
        y = sla.blas.zhemv(1.0, a, x, lower=0)
    else:
        y = sla.blas.dsymv(1.0, a, x.real, lower=0) + 1j * sla.blas.dsymv(1.0, a, x.imag, lower=0)
    return y + (diag - np.diag(a).real) * x


def solve_gram(gram: np.ndarray, values, t: float, *, check_duplicates: bool = True,
               overwrite: bool = False) -> SplineSolution:
    """Solve G alpha = v by Cholesky; ridge-regularize ill-conditioned systems.

    With ``overwrite=True`` the caller's matrix is used as workspace (its lower
    contents are destroyed) and the solution does not keep a reference to it.
    """
    G = np.asarray(gram)
    if np.iscomplexobj(G) and not np.any(G.imag):
        G = np.ascontiguousarray(G.real)
    v = np.asarray(values, dtype=complex).ravel()
    N = v.size
    if G.shape != (N, N):
        raise ValueError(f"Gram shape {G.shape} does not match {N} values")
    if check_duplicates:
        pair = find_duplicate(G)
        if pair is not None:
            raise DuplicateFunctionalError(*pair)
    anorm = _one_norm(G)
    diag = np.diag(G).copy()
    trace = float(np.real(diag.sum()))
    if overwrite and G.flags.f_contiguous:
        work = G
    elif overwrite and G.flags.c_contiguous and not np.iscomplexobj(G):
        work = G.T  # Fortran view of the same symmetric data
    else:
        work = np.array(G, order="F")
    ridge = 0.0
    notes = []
    try:
        cf = sla.cho_factor(work, lower=True, overwrite_a=True)
        cond = _pocon(cf, anorm)
    except sla.LinAlgError:
        cf, cond = None, math.inf
    if cf is None or cond > COND_LIMIT:
        ridge = RIDGE_SCALE * trace / N
        notes.append(f"ridge {ridge:.3e} applied (condition estimate {cond:.3e})")
        log.info(notes[-1])
        _mirror_upper_to_lower(work)
        work.flat[:: N + 1] = diag + ridge
        try:
            cf = sla.cho_factor(work, lower=True, overwrite_a=True)
        except sla.LinAlgError as exc:
            raise SplineSolverError("Gram matrix not positive definite after regularization") from exc
        cond = _pocon(cf, anorm + ridge)
    if np.iscomplexobj(work):
        alpha = sla.cho_solve(cf, v)
    else:
        # real factor: solve real and imaginary parts separately
        alpha = sla.cho_solve(cf, v.real) + 1j * sla.cho_solve(cf, v.imag)
    resid = float(np.max(np.abs(_upper_matvec(cf[0], diag, alpha) - v), initial=0.0))
    del work, cf
    return SplineSolution(alpha, None if overwrite else G, v, t, cond, ridge, resid, notes)


def solve_spline(problem: SplineProblem) -> SplineSolution:
    G = assemble_gram(problem.basis, problem.t)
    sol = solve_gram(G, problem.values, problem.t)
    sol.notes = check_order(problem.t, problem.manifold_dim) + sol.notes
    return sol


def spline_coefficients(solution: SplineSolution, basis: SpectralBasis) -> np.ndarray:
    """c_j = (1 + lam_j)^{-t} sum_nu alpha_nu conj(F_nu(phi_j))."""
    return basis.weights(solution.t) * (basis.evaluations.conj().T @ solution.alpha)


def native_inner(a: np.ndarray, b: np.ndarray, basis: SpectralBasis, t: float) -> complex:
    """<a, b>_t = sum_j (1 + lam_j)^t a_j conj(b_j)."""
    return complex(np.sum((1.0 + basis.eigenvalues) ** t * a * np.conj(b)))


def kernel_probes(basis: SpectralBasis, n_probes: int, rng: np.random.Generator) -> np.ndarray:
    """Random coefficient vectors annihilated by every functional; shape (n_probes, J)."""
    null = sla.null_space(basis.evaluations)
    if null.shape[1] == 0:
        return np.zeros((0, basis.eigenvalues.size), dtype=complex)
    z = rng.normal(size=(null.shape[1], n_probes)) + 1j * rng.normal(size=(null.shape[1], n_probes))
    probes = (null @ z).T
    return probes / np.linalg.norm(probes, axis=1, keepdims=True)


@dataclass
class VariationalReport:
    interpolation_residual: float
    orthogonality_defect: float
    pythagoras_defect: float
    n_probes: int

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def verify_variational(
    solution: SplineSolution,
    basis: SpectralBasis,
    n_probes: int = 50,
    rng: np.random.Generator | None = None,
    probes: np.ndarray | None = None,
) -> VariationalReport:
    """Interpolation, orthogonality to the kernel, and the minimal-norm identity.

    The defects (b) and (c) are scaled by the native norms involved, so they are
    dimensionless: |<s,h>| / (|s| |h|) and
    | |s+h|^2 - |s|^2 - |h|^2 | / (|s|^2 + |h|^2).
    """
    rng = np.random.default_rng(0) if rng is None else rng
    c = spline_coefficients(solution, basis)
    interp = float(np.max(np.abs(basis.evaluations @ c - solution.values), initial=0.0))
    if probes is None:
        probes = kernel_probes(basis, n_probes, rng)
    t = solution.t
    ss = native_inner(c, c, basis, t).real
    orth = pyth = 0.0
    for h in probes:
        hh = native_inner(h, h, basis, t).real
        sh = native_inner(c, h, basis, t)
        orth = max(orth, abs(sh) / math.sqrt(max(ss * hh, 1e-300)))
        full = native_inner(c + h, c + h, basis, t).real
        pyth = max(pyth, abs(full - ss - hh) / (ss + hh))
    return VariationalReport(interp, orth, pyth, len(probes))


def gram_tail_bound(basis: SpectralBasis, t: float, manifold_dim: int) -> float:
    """Estimated bound on the Gram entries' truncation error.

    Uses |F(phi_j)|^2 <= C (1 + lam_j)^{d/2} and the Weyl count
    #{lam_j <= x} ~ c x^{d/2}, both constants fitted to the supplied basis,
    giving tail <= C c (d/2) Lam^{d - t} / (t - d) beyond the largest
    eigenvalue Lam.  Infinite when t <= d.
    """
    d = manifold_dim
    if t <= d:
        return math.inf
    lam = basis.eigenvalues
    top = float(lam.max())
    if top <= 0:
        return math.inf
    growth = np.max(np.abs(basis.evaluations) ** 2, axis=0) / (1.0 + lam) ** (d / 2)
    C = float(growth.max())
    weyl = lam.size / top ** (d / 2)
    return C * weyl * (d / 2) * top ** (d - t) / (t - d)
