"""Covert rate at Bob, its log-det upper bound, and Willie's detection statistics.

Rates are in bits per channel use (log2); the KL divergence is in nats so it can
be compared directly with the covertness threshold 2*eps**2.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet
from .surface import SurfaceCoefficients, split

PDET_RTOL = 1e-10


class MetricsError(ValueError):
    pass


@dataclass(frozen=True)
class RateReport:
    rate_bits: float
    rate_upper_bits: float
    noise_cov_logdet: float


@dataclass(frozen=True)
class DetectionReport:
    gamma_w: float
    d01: float
    eigenvalues_uw: np.ndarray
    eigenvalues_m: np.ndarray


def hermitian_part(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.conj().T)


def logdet_hermitian(m: np.ndarray) -> float:
    """Natural log-determinant of a Hermitian positive-definite matrix."""
    try:
        chol = np.linalg.cholesky(m)
        return float(2.0 * np.sum(np.log(np.real(np.diag(chol)))))
    except np.linalg.LinAlgError:
        w = np.linalg.eigvalsh(m)
        if np.any(w <= 0):
            raise MetricsError("matrix is not positive definite")
        return float(np.sum(np.log(w)))


def log_pdet(m: np.ndarray, rtol: float = PDET_RTOL) -> tuple[float, np.ndarray]:
    """Log pseudo-determinant of a Hermitian PSD matrix and its eigenvalues.

    Eigenvalues at or below `rtol` times the largest one are dropped; a zero matrix
    has log pseudo-determinant -inf.
    """
    w = np.linalg.eigvalsh(hermitian_part(m))
    top = w.max(initial=0.0)
    if top <= 0:
        return -np.inf, w
    kept = w[w > rtol * top]
    return float(np.sum(np.log(kept))), w


def effective_channel(coeffs: SurfaceCoefficients, h_r: np.ndarray, h_direct: np.ndarray,
                      h_ar: np.ndarray) -> np.ndarray:
    """h_r diag(theta) h_ar + h_direct."""
    return (h_r * coeffs.theta) @ h_ar + h_direct


def signal_covariance_bob(coeffs: SurfaceCoefficients, channels: ChannelSet) -> np.ndarray:
    g = effective_channel(coeffs, channels.h_rb, channels.h_ab, channels.h_ar)
    return hermitian_part(g @ g.conj().T)


def _relay_noise_covariance(coeffs, h_r, noise_ratio):
    _, psi = split(coeffs)
    hp = h_r * psi
    return np.eye(h_r.shape[0]) + noise_ratio * hermitian_part(hp @ hp.conj().T)


def noise_covariance_bob(coeffs: SurfaceCoefficients, channels: ChannelSet) -> np.ndarray:
    """I + H_rb Psi Psi^H H_rb^H, normalised by Bob's noise power."""
    return _relay_noise_covariance(coeffs, channels.h_rb,
                                   channels.sigma_r_sq / channels.sigma_b_sq)


def willie_noise_shaping(coeffs: SurfaceCoefficients, channels: ChannelSet) -> np.ndarray:
    return _relay_noise_covariance(coeffs, channels.h_rw,
                                   channels.sigma_r_sq / channels.sigma_w_sq)


def signal_covariance_willie(coeffs: SurfaceCoefficients, channels: ChannelSet) -> np.ndarray:
    g = effective_channel(coeffs, channels.h_rw, channels.h_aw, channels.h_ar)
    return hermitian_part(g @ g.conj().T)


def _check_power(pa):
    if not pa >= 0:
        raise MetricsError(f"transmit power must be non-negative, got {pa}")


def rate_report(coeffs: SurfaceCoefficients, channels: ChannelSet, pa: float) -> RateReport:
    _check_power(pa)
    rho = pa / channels.sigma_b_sq
    r = noise_covariance_bob(coeffs, channels)
    u = signal_covariance_bob(coeffs, channels)
    # whiten with R = L L^H so that the rate is log|I + rho L^-1 U L^-H| >= 0
    chol = np.linalg.cholesky(r)
    g = effective_channel(coeffs, channels.h_rb, channels.h_ab, channels.h_ar)
    gw = np.linalg.solve(chol, g)
    rate = logdet_hermitian(np.eye(r.shape[0]) + rho * hermitian_part(gw @ gw.conj().T))
    noise = 2.0 * float(np.sum(np.log(np.real(np.diag(chol)))))
    upper = logdet_hermitian(r + rho * u)
    ln2 = np.log(2.0)
    return RateReport(rate / ln2, upper / ln2, noise / ln2)


def covert_rate(coeffs: SurfaceCoefficients, channels: ChannelSet, pa: float) -> float:
    """Bob's rate log2|I + (P_a/sigma_b^2) U_b R^-1| in bits per channel use."""
    return rate_report(coeffs, channels, pa).rate_bits


def rate_upper_bound(coeffs: SurfaceCoefficients, channels: ChannelSet, pa: float) -> float:
    """f0 = log2|R + rho U_b|; exceeds the covert rate by log2|R|."""
    _check_power(pa)
    rho = pa / channels.sigma_b_sq
    r = noise_covariance_bob(coeffs, channels)
    u = signal_covariance_bob(coeffs, channels)
    return logdet_hermitian(r + rho * u) / np.log(2.0)


def willie_sinr(coeffs: SurfaceCoefficients, channels: ChannelSet, pa: float) -> float:
    """Determinant-ratio SINR pdet(U_w) P_a / (pdet(M) sigma_w^2)."""
    return detection_report(coeffs, channels, pa, 1).gamma_w


def detection_report(coeffs: SurfaceCoefficients, channels: ChannelSet, pa: float,
                     l: int) -> DetectionReport:
    _check_power(pa)
    lu, wu = log_pdet(signal_covariance_willie(coeffs, channels))
    lm, wm = log_pdet(willie_noise_shaping(coeffs, channels))
    if pa == 0 or lu == -np.inf:
        gamma = 0.0
    else:
        gamma = float(np.exp(lu - lm - np.log(channels.sigma_w_sq))) * pa
    return DetectionReport(gamma, kl_divergence(gamma, l), wu, wm)


def _kl_core(gamma: float) -> float:
    # ln(1+g) - g/(1+g); the series avoids cancellation for small g
    if gamma < 1e-2:
        k = np.arange(2, 12)
        return float(np.sum((-1.0) ** k * (k - 1) / k * gamma ** k))
    return float(np.log1p(gamma) - gamma / (1.0 + gamma))


def kl_divergence(gamma_w: float, l: int) -> float:
    """L * [ln(1+gamma) - gamma/(1+gamma)] in nats."""
    if not gamma_w >= 0:
        raise MetricsError(f"SINR must be non-negative, got {gamma_w}")
    if l < 1:
        raise MetricsError("number of channel uses must be >= 1")
    return l * _kl_core(float(gamma_w))


def kl_from_power(coeffs: SurfaceCoefficients, channels: ChannelSet, pa: float, l: int) -> float:
    return detection_report(coeffs, channels, pa, l).d01
