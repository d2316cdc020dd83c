"""Empirical Stieltjes samples and the free-deconvolution pivots.

The additive pivot removes a semicircle component of variance ``sigma**2``
through the R-transform; the multiplicative pivot removes a
Marchenko-Pastur component of ratio ``q`` through the S-transform. Both map
samples ``(z_j, g_j)`` of the Stieltjes transform of the observed spectrum
to samples ``(z_j', g_j')`` of the Stieltjes transform of the signal.
"""
from dataclasses import dataclass

import numpy as np

from .eigenmatrix import ContourSamples
from .errors import DomainError

__all__ = [
    "Spectrum",
    "ContourConfig",
    "NoiseParameter",
    "ADDITIVE",
    "MULTIPLICATIVE",
    "empirical_stieltjes",
    "sample_contour",
    "contour_samples",
    "additive_pivot",
    "multiplicative_pivot",
    "pivot",
    "s_transform_samples",
]

ADDITIVE = "additive-sigma"
MULTIPLICATIVE = "multiplicative-q"

PIVOT_POLE_TOL = 1e-14
MIN_HALF_WIDTH = 1.0


@dataclass(frozen=True)
class Spectrum:
    """Sorted eigenvalues of a symmetric matrix."""

    eigenvalues: np.ndarray

    def __post_init__(self):
        ev = np.asarray(self.eigenvalues, dtype=float).ravel()
        if ev.size == 0:
            raise ValueError("spectrum must contain at least one eigenvalue")
        if not np.all(np.isfinite(ev)):
            raise ValueError("eigenvalues must be finite")
        object.__setattr__(self, "eigenvalues", np.sort(ev))

    def __len__(self):
        return self.eigenvalues.size

    @property
    def hull(self):
        return float(self.eigenvalues[0]), float(self.eigenvalues[-1])

    @property
    def half_width(self):
        lo, hi = self.hull
        return 0.5 * (hi - lo)


@dataclass(frozen=True)
class ContourConfig:
    """Elliptic contour around the spectrum.

    ``margin`` enlarges the horizontal semi-axis beyond the half-width of the
    spectrum; ``aspect`` is the ratio of vertical to horizontal semi-axis.
    """

    n_z: int = 64
    margin: float = 0.5
    aspect: float = 0.5

    def __post_init__(self):
        if self.n_z < 2 or self.n_z % 2:
            raise ValueError(f"n_z must be an even count >= 2, got {self.n_z}")
        if not self.margin > 0:
            raise ValueError("margin must be positive")
        if not self.aspect > 0:
            raise ValueError("aspect must be positive")


@dataclass(frozen=True)
class NoiseParameter:
    kind: str
    value: float

    def __post_init__(self):
        if self.kind not in (ADDITIVE, MULTIPLICATIVE):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if not self.value > 0:
            raise ValueError("noise level must be positive")

    @property
    def additive(self):
        return self.kind == ADDITIVE


def empirical_stieltjes(spectrum, z):
    """Stieltjes transform ``(1/N) sum_i 1 / (z - lambda_i)`` of a spectrum.

    ``z`` may be a scalar or an array; evaluation is an exact sum over all
    eigenvalues.
    """
    ev = spectrum.eigenvalues if isinstance(spectrum, Spectrum) else np.asarray(spectrum, float)
    z = np.asarray(z, dtype=complex)
    diff = z[..., None] - ev
    if np.any(diff == 0):
        raise DomainError("Stieltjes pole: z coincides with an eigenvalue")
    g = np.mean(1.0 / diff, axis=-1)
    return complex(g) if g.ndim == 0 else g


def _ellipse(lo, hi, config):
    center = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    a = (1.0 + config.margin) * half if half > 0 else MIN_HALF_WIDTH
    b = config.aspect * a
    half_n = config.n_z // 2
    theta = 2 * np.pi * (np.arange(half_n) + 0.5) / config.n_z
    upper = center + a * np.cos(theta) + 1j * b * np.sin(theta)
    # angle 2*pi - theta is the exact conjugate
    return np.concatenate([upper, upper[::-1].conj()])


def sample_contour(spectrum, config=ContourConfig()):
    """Points on an ellipse enclosing the spectrum.

    Angles are offset by half a step so no point is real and the set is
    closed under conjugation. ``spectrum`` may also be an interval
    ``(lo, hi)``.
    """
    if isinstance(spectrum, Spectrum):
        lo, hi = spectrum.hull
    else:
        lo, hi = (float(v) for v in spectrum)
    return _ellipse(lo, hi, config)


def contour_samples(spectrum, config=ContourConfig()):
    """Contour points together with the empirical Stieltjes values there."""
    points = sample_contour(spectrum, config)
    return ContourSamples(points, empirical_stieltjes(spectrum, points))


def additive_pivot(points, values, sigma):
    """Shift samples of the noisy spectrum to samples of the signal.

    ``z' = z - sigma**2 g`` with ``g`` unchanged.
    """
    points = np.asarray(points, dtype=complex)
    values = np.asarray(values, dtype=complex)
    if points.shape != values.shape:
        raise ValueError("points and values must have the same shape")
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    if sigma == 0:
        return ContourSamples(points.copy(), values.copy())
    return ContourSamples(points - sigma**2 * values, values)


def s_transform_samples(points, values):
    """Return ``(t, s)`` with ``t = z g - 1`` and ``s = (t + 1) / (t z)``."""
    points = np.asarray(points, dtype=complex)
    values = np.asarray(values, dtype=complex)
    t = points * values - 1.0
    bad = np.flatnonzero(np.abs(t) < PIVOT_POLE_TOL)
    if bad.size:
        raise DomainError(f"t = z g - 1 vanishes at sample {int(bad[0])}")
    return t, (t + 1.0) / (t * points)


def multiplicative_pivot(points, values, q):
    """Divide out a Marchenko-Pastur factor of ratio ``q``.

    With ``t = z g - 1`` and ``s = (t + 1)/(t z)``, sets ``s' = s (1 + q t)``,
    ``z' = (t + 1)/(t s')`` and ``g' = (t + 1)/z'``.

    Raises
    ------
    DomainError
        Naming the first sample where ``t`` or ``s'`` vanishes.
    """
    points = np.asarray(points, dtype=complex)
    values = np.asarray(values, dtype=complex)
    if points.shape != values.shape:
        raise ValueError("points and values must have the same shape")
    if q < 0:
        raise ValueError("q must be non-negative")
    if q == 0:
        return ContourSamples(points.copy(), values.copy())
    t, s = s_transform_samples(points, values)
    s_new = s * (1.0 + q * t)
    bad = np.flatnonzero(np.abs(s_new) < PIVOT_POLE_TOL)
    if bad.size:
        raise DomainError(f"s' = s (1 + q t) vanishes at sample {int(bad[0])}")
    z_new = (t + 1.0) / (t * s_new)
    return ContourSamples(z_new, (t + 1.0) / z_new)


def pivot(samples, noise):
    """Apply the pivot matching ``noise.kind`` to a :class:`ContourSamples`."""
    if noise.kind == ADDITIVE:
        return additive_pivot(samples.points, samples.values, noise.value)
    return multiplicative_pivot(samples.points, samples.values, noise.value)
