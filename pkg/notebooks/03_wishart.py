"""
Sample covariance: removing a Marchenko-Pastur factor
=====================================================

The observed matrix is sqrt(A) W sqrt(A) with W a white Wishart matrix of
ratio q = N / T. Here both q and the population spectrum are recovered.
"""
import numpy as np

from freedeconv.pipeline import example_measure, run_recovery
from freedeconv.spectra import SimulationConfig, limit_support, simulate
from freedeconv.transforms import MULTIPLICATIVE, NoiseParameter

population = example_measure("m3")
config = SimulationConfig(1024, 0, population, NoiseParameter(MULTIPLICATIVE, 0.75))
print("T =", config.sample_count, " realized q =", config.realized_noise)

spectrum = simulate(config)
print("observed hull", spectrum.hull)
print("limit bound  ", limit_support(population, config.noise))

# %% Recover with unknown q
report = run_recovery(spectrum, MULTIPLICATIVE, 3)
print("q estimate   ", report.noise.estimate)
print("atoms        ", np.round(report.recovered_measure.atoms, 4))
print("weights      ", np.round(report.recovered_measure.weights, 4))

# %% Everything needed to rerun the job is in the echo
print(sorted(report.config_echo))
