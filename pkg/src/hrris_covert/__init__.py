"""Covert-rate maximisation with a hybrid relay-reflecting intelligent surface."""
from .channel import (ArraySpec, ChannelSet, FadingSpec, SceneGeometry, build_channel_set,
                      dbm_to_watts, path_loss, rician_matrix, ula_steering, upa_steering,
                      watts_to_dbm)
from .metrics import (covert_rate, detection_report, kl_divergence, noise_covariance_bob,
                      rate_report, rate_upper_bound, signal_covariance_bob, willie_sinr)
from .optimizer import (AoSettings, OptimizationResult, build_element_context, optimize,
                        solve_pa, sole_nonzero_eigenvalue, sweep_elements, update_element)
from .params import SystemParams
from .surface import (PowerBudget, SurfaceCoefficients, amplitude_bound, relay_power,
                      residual_power, split)

__all__ = [
    "ArraySpec", "ChannelSet", "FadingSpec", "SceneGeometry", "build_channel_set",
    "dbm_to_watts", "path_loss", "rician_matrix", "ula_steering", "upa_steering", "watts_to_dbm",
    "covert_rate", "detection_report", "kl_divergence", "noise_covariance_bob", "rate_report",
    "rate_upper_bound", "signal_covariance_bob", "willie_sinr",
    "AoSettings", "OptimizationResult", "build_element_context", "optimize", "solve_pa",
    "sole_nonzero_eigenvalue", "sweep_elements", "update_element",
    "SystemParams",
    "PowerBudget", "SurfaceCoefficients", "amplitude_bound", "relay_power", "residual_power",
    "split",
]
__version__ = "0.1.0"
