"""Radon transform on SO(3) and its inversion by variational splines."""
from .lattice import ProductLattice, SphereLattice, build_lattice, certify, product_lattice
from .method1 import MeasurementSet, gram_so3, invert_method1, measurement_residual
from .method2 import convergence_study, interpolate_on_product, invert_method2, project_to_range
from .radon import (
    ProductExpansion, darboux_residual, radon_exact, radon_inverse, radon_quadrature,
    range_isometry_ratio, sobolev_norm_product,
)
from .so3_core import (
    SO3Quadrature, WignerExpansion, fourier_forward, fourier_inverse, haar_quadrature,
    sobolev_norm_so3,
)
from .special_fns import gegenbauer_half, spherical_harmonic, wigner_matrix
from .spline import SpectralBasis, SplineProblem, SplineSolution, assemble_gram, solve_spline, verify_variational
from .synth import OdfModel, make_measurements, make_odf

__version__ = "0.1.0"
