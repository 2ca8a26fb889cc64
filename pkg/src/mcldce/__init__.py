"""Multi-class label-dependent centroid estimation for learning linear classifiers from noisy labels."""

__version__ = "0.1.0"

from .centroid import (CorrectionMatrix, CorrectionMode, compute_M, correct_centroid,
                       empirical_centroid, imputation_matrix)
from .data import (Dataset, GaussianMixtureSpec, Provenance, encode_one_hot, gen_gaussian_mixture,
                   load_csv, load_idx, mixture_spec, save_csv, standardize)
from .evaluation import ExperimentConfig, ExperimentReport, accuracy, emit_report, run_experiment
from .linalg import pseudo_inverse
from .noise import (NoiseSpec, estimate_priors, inject_noise, noisy_label_frequencies, pairflip_T,
                    symmetric_T)
from .risk import (LinearModel, RiskConfig, closed_form_solve, decomposed_risk, iterative_train,
                   naive_mse_risk, predict, risk_gradient)

__all__ = [
    "CorrectionMatrix", "CorrectionMode", "compute_M", "correct_centroid", "empirical_centroid",
    "imputation_matrix", "Dataset", "GaussianMixtureSpec", "Provenance", "encode_one_hot",
    "gen_gaussian_mixture", "load_csv", "load_idx", "mixture_spec", "save_csv", "standardize",
    "ExperimentConfig", "ExperimentReport", "accuracy", "emit_report", "run_experiment",
    "pseudo_inverse", "NoiseSpec", "estimate_priors", "inject_noise", "noisy_label_frequencies",
    "pairflip_T", "symmetric_T", "LinearModel", "RiskConfig", "closed_form_solve", "decomposed_risk",
    "iterative_train", "naive_mse_risk", "predict", "risk_gradient",
]
