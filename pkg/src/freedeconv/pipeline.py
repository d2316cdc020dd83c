"""End-to-end deconvolution: samples -> (noise estimate) -> pivot -> recovery."""
import time
from dataclasses import dataclass

import numpy as np

from .eigenmatrix import ContourSamples, EigenmatrixConfig, SparseMeasure, recover_measure
from .errors import DomainError, RecoveryError
from .noise_estimation import default_search_range, estimate_noise, pivot_samples
from .spectra import limit_stieltjes, limit_support
from .transforms import (
    ADDITIVE,
    MULTIPLICATIVE,
    ContourConfig,
    NoiseParameter,
    Spectrum,
    contour_samples,
    sample_contour,
)

__all__ = [
    "EXAMPLES",
    "RecoveryReport",
    "spectrum_samples",
    "oracle_samples",
    "deconvolve",
]

_ADD_MEASURE = ((-1.0, 0.2, 1.0), (0.25, 0.5, 0.25))
_MUL_MEASURE = ((0.2, 0.6, 1.0), (1 / 3, 1 / 3, 1 / 3))

#: The six benchmark configurations: three Wigner levels, three Wishart ratios.
EXAMPLES = {
    "a1": {"kind": ADDITIVE, "noise": 0.25, "N": 1024, "measure": _ADD_MEASURE},
    "a2": {"kind": ADDITIVE, "noise": 0.75, "N": 1024, "measure": _ADD_MEASURE},
    "a3": {"kind": ADDITIVE, "noise": 1.25, "N": 1024, "measure": _ADD_MEASURE},
    "m1": {"kind": MULTIPLICATIVE, "noise": 0.25, "N": 1024, "measure": _MUL_MEASURE},
    "m2": {"kind": MULTIPLICATIVE, "noise": 0.5, "N": 1024, "measure": _MUL_MEASURE},
    "m3": {"kind": MULTIPLICATIVE, "noise": 0.75, "N": 1024, "measure": _MUL_MEASURE},
}


def example_measure(example_id):
    atoms, weights = EXAMPLES[example_id]["measure"]
    return SparseMeasure(atoms, weights)


@dataclass
class RecoveryReport:
    recovered_measure: SparseMeasure
    noise: object
    diagnostics: object
    config_echo: dict
    wall_time: float = 0.0

    def to_dict(self, include_wall_time=False):
        out = {
            "recovered_measure": self.recovered_measure.to_dict(),
            "noise": None if self.noise is None else self.noise.to_dict(),
            "diagnostics": self.diagnostics.to_dict(),
            "config_echo": self.config_echo,
        }
        if include_wall_time:
            out["wall_time"] = self.wall_time
        return out


def spectrum_samples(spectrum, contour=ContourConfig()):
    """Contour samples of an observed spectrum and the matching search interval.

    A spectrum with a single distinct value gets the interval ``c +/- 0.5``,
    inside the unit-width contour drawn around it.
    """
    lo, hi = spectrum.hull
    if not hi > lo:
        lo, hi = lo - 0.5, hi + 0.5
    return contour_samples(spectrum, contour), (lo, hi)


def oracle_samples(measure, noise, contour=ContourConfig()):
    """Large-N samples on a contour around the limit spectrum, and its interval."""
    interval = limit_support(measure, noise)
    points = sample_contour(interval, contour)
    return ContourSamples(points, limit_stieltjes(measure, noise, points)), interval


def deconvolve(samples, kind, n, config, noise=None, search_range=None, n_grid=30,
               workers=1, require_feasible_atoms=True):
    """Recover an ``n``-atom signal measure from Stieltjes samples of the data.

    With ``noise`` given, pivot at that level; otherwise estimate it first.

    Returns
    -------
    measure : SparseMeasure
    diagnostics : KrylovDiagnostics
    estimate : NoiseEstimate or None
    """
    estimate = None
    if noise is None:
        if search_range is None:
            search_range = default_search_range(kind, config.interval)
        estimate = estimate_noise(kind, samples, n, config, search_range, n_grid,
                                  workers=workers, require_feasible_atoms=require_feasible_atoms)
        noise = estimate.estimate
    try:
        pivoted = pivot_samples(samples, kind, noise)
    except DomainError as exc:
        raise RecoveryError(str(exc), stage="pivot") from exc
    measure, diag = recover_measure(pivoted, n, config)
    return measure, diag, estimate


def run_recovery(spectrum, kind, n, noise=None, contour=ContourConfig(), n_c=None, n_l=None,
                 norm_cap=10.0, svd_floor=1e-12, search_range=None, n_grid=30, echo=None):
    """Deconvolve an observed spectrum and package the result as a report."""
    start = time.perf_counter()
    samples, interval = spectrum_samples(spectrum, contour)
    config = EigenmatrixConfig(interval, n_c=n_c, n_l=n_l, norm_cap=norm_cap,
                               svd_floor=svd_floor)
    if noise is None and search_range is None:
        search_range = default_search_range(kind, interval)
    measure, diag, estimate = deconvolve(samples, kind, n, config, noise=noise,
                                         search_range=search_range, n_grid=n_grid)
    resolved = {
        "model": "additive" if kind == ADDITIVE else "multiplicative",
        "n": int(n),
        "noise": None if noise is None else float(noise),
        "contour": {"n_z": contour.n_z, "margin": contour.margin, "aspect": contour.aspect},
        "eigenmatrix": {
            "interval": [float(v) for v in interval],
            "n_c": config.resolve_n_c(len(samples)),
            "n_l": config.resolve_n_l(n, len(samples)),
            "norm_cap": float(norm_cap),
            "svd_floor": float(svd_floor),
        },
        "search": None if noise is not None else {
            "range": [float(v) for v in search_range], "grid": int(n_grid)},
    }
    if echo:
        resolved = {**echo, **resolved}
    return RecoveryReport(measure, estimate, diag, resolved, time.perf_counter() - start)


def noise_parameter(kind, value):
    return NoiseParameter(kind, float(value))


def as_spectrum(values):
    return values if isinstance(values, Spectrum) else Spectrum(np.asarray(values, float))
