from .common import (DEFAULT_SNR_PAIRS, REFERENCE_SNR_PAIRS, ExperimentConfig, PhyConfig,
                     TrialBatch, binomial_ci, derive_rng, mean_ci, sample_users_disk,
                     sample_users_line, simulate_trial, write_outputs)
from .decoding import decompose, run_decoding_sweep, separation_sigmas
from .studies import (DensificationReport, NoiseCalibration, RateMap, band_probabilities,
                      calibrate_noise_power, calibrated_power, empirical_cdf,
                      run_densification, run_rate_comparison, run_rate_map, run_snr_cdf,
                      write_rate_map)

__all__ = [
    "DEFAULT_SNR_PAIRS", "REFERENCE_SNR_PAIRS", "ExperimentConfig", "PhyConfig", "TrialBatch",
    "binomial_ci", "derive_rng", "mean_ci", "sample_users_disk", "sample_users_line",
    "simulate_trial", "write_outputs", "decompose", "run_decoding_sweep", "separation_sigmas",
    "DensificationReport", "NoiseCalibration", "RateMap", "band_probabilities",
    "calibrate_noise_power", "calibrated_power", "empirical_cdf", "run_densification",
    "run_rate_comparison", "run_rate_map", "run_snr_cdf", "write_rate_map",
]
