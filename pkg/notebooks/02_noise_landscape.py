"""
Estimating the noise level from the rank of the Krylov matrix
=============================================================

When sigma is unknown, pivot at each candidate value and watch the
(n+1)-th singular value: it collapses at the true level. A coarse grid
finds the basin, golden-section search polishes the minimum.
"""
import numpy as np

from freedeconv.eigenmatrix import EigenmatrixConfig
from freedeconv.noise_estimation import estimate_noise
from freedeconv.pipeline import example_measure, oracle_samples, spectrum_samples
from freedeconv.spectra import SimulationConfig, simulate
from freedeconv.transforms import ADDITIVE, NoiseParameter

signal = example_measure("a2")
truth = NoiseParameter(ADDITIVE, 0.75)

# %% Large-N data: a sharp, deep minimum
samples, interval = oracle_samples(signal, truth)
est = estimate_noise(ADDITIVE, samples, 3, EigenmatrixConfig(interval))
land = est.landscape
# full_curves keeps log s4 even where the atoms came out complex
for theta, value, status in zip(land.parameter_grid, land.full_curves[3], land.status):
    print(f"sigma={theta:.3f}  log s4={value:7.2f}  " + "#" * int(max(0, -2 * value))
          + ("" if status == "ok" else f"  ({status})"))
print("estimate", est.estimate)

# %% Finite N: the minimum is shallower but still near the truth
spectrum = simulate(SimulationConfig(1024, 3, signal, truth))
samples, interval = spectrum_samples(spectrum)
est = estimate_noise(ADDITIVE, samples, 3, EigenmatrixConfig(interval))
print("grid guess", est.initial_guess, "refined", est.estimate)

# %% Skipped grid points keep their reason
print(sorted(set(est.landscape.status)))
print("valid points", int(np.sum(est.landscape.valid)), "of", est.landscape.valid.size)
