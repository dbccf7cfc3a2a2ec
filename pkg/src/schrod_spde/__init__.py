"""Semidiscrete finite element approximation of the stochastic linear
Schrodinger equation with additive noise, plus the exact-law and Monte Carlo
machinery for measuring strong and weak convergence rates."""

from .fem import (DiscreteEigenSystem, FemField, FemMatrices, Mesh1D,
                  apply_discrete_group, assemble, discrete_convolution_law,
                  discrete_eigensystem, l2_project, sine_hat_overlap)
from .harness import (ErrorRecord, McResult, RateFit, TestFunctional,
                      cos_pairing, default_direction, deterministic_error,
                      exact_strong_error, exact_weak_error,
                      fd_check_functional, fit_rate, gauss_bump,
                      linear_pairing, mc_estimate)
from .noise import CovarianceSpec, DivergenceError, WienerSample, hs_check, \
    sample_increments
from .operators import hs_norm, operator_norm, trace, trace_norm
from .spectral import (EigenSystem1D, GaussianLaw, SpectralCoeffs, apply_group,
                       eigenvalues, gaussian_functional, hdot_norm, pair_norm,
                       parabola, project_function, stochastic_convolution_law)

__version__ = "0.1.0"
