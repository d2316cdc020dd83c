"""Sparse free deconvolution of random-matrix spectra.

Recovers a finitely supported signal spectrum from the eigenvalues of a
noisy matrix ``A + B`` (Wigner noise) or ``sqrt(A) W sqrt(A)`` (Wishart
noise), with known or estimated noise level.
"""
from .eigenmatrix import (
    ContourSamples,
    EigenmatrixConfig,
    KrylovDiagnostics,
    SparseMeasure,
    build_eigenmatrix,
    recover_measure,
)
from .errors import ConvergenceError, DomainError, RecoveryError
from .noise_estimation import LossLandscape, NoiseEstimate, estimate_noise
from .pipeline import EXAMPLES, RecoveryReport, deconvolve, run_recovery
from .spectra import SimulationConfig, limit_stieltjes, simulate
from .transforms import (
    ADDITIVE,
    MULTIPLICATIVE,
    ContourConfig,
    NoiseParameter,
    Spectrum,
    contour_samples,
    pivot,
)

__version__ = "0.1.0"
