"""Eigenvalue shrinkage, hard thresholding and Monte Carlo checks for spiked models."""

from .errors import ConfigError, ContractError, DomainError, NumericError, ShrinkError
from .estimators import EigenSystem, SpikeEstimate, SvdSystem, calibrate_noise, cov_shrink, estimate_spikes, wigner_denoise
from .shrinkage import LossSpec, Norm, RuleKind, ShrinkageRule, shrink_eigenvalue
from .spike_maps import CoordinateMaps, Framework, SpikeValue, cosine2, eigmap, eigmap_inv

__all__ = [
    "ShrinkError",
    "DomainError",
    "ContractError",
    "NumericError",
    "ConfigError",
    "EigenSystem",
    "SvdSystem",
    "SpikeEstimate",
    "calibrate_noise",
    "cov_shrink",
    "estimate_spikes",
    "wigner_denoise",
    "LossSpec",
    "Norm",
    "RuleKind",
    "ShrinkageRule",
    "shrink_eigenvalue",
    "CoordinateMaps",
    "Framework",
    "SpikeValue",
    "cosine2",
    "eigmap",
    "eigmap_inv",
]
