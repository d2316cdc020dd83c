"""
Deconvolving a Wigner-perturbed spectrum at a known noise level
===============================================================

A diagonal signal matrix with three eigenvalues is perturbed by Wigner
noise. Knowing sigma, we map Stieltjes samples of the observed spectrum
back to samples of the signal and read off atoms and weights.
"""
import numpy as np

from freedeconv.eigenmatrix import EigenmatrixConfig, SparseMeasure, recover_measure
from freedeconv.pipeline import oracle_samples, spectrum_samples
from freedeconv.spectra import SimulationConfig, simulate
from freedeconv.transforms import ADDITIVE, NoiseParameter, pivot

signal = SparseMeasure([-1.0, 0.2, 1.0], [0.25, 0.5, 0.25])
noise = NoiseParameter(ADDITIVE, 0.75)

# %% Large-N limit: the pivoted samples are exactly those of a 3-atom measure
samples, interval = oracle_samples(signal, noise)
measure, diag = recover_measure(pivot(samples, noise), 3, EigenmatrixConfig(interval))
print("limit atoms  ", measure.atoms)
print("limit weights", measure.weights)
print("s4/s3        ", diag.singular_values[3] / diag.singular_values[2])

# %% Finite N: same pipeline on the eigenvalues of a 1024 x 1024 draw
spectrum = simulate(SimulationConfig(1024, 0, signal, noise))
print("hull of C    ", spectrum.hull)
samples, interval = spectrum_samples(spectrum)
measure, diag = recover_measure(pivot(samples, noise), 3, EigenmatrixConfig(interval))
print("atoms        ", np.round(measure.atoms, 4))
print("weights      ", np.round(measure.weights, 4))

# %% The singular values of the Krylov matrix show the rank drop after the third
print("log s_k      ", np.round(np.log(diag.singular_values), 2))
