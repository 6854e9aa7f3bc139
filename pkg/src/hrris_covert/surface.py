"""Coefficient state of the hybrid surface and the power drawn by its active elements."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class SurfaceError(ValueError):
    pass


class BudgetError(SurfaceError):
    """The relay power budget is already exhausted by the other active elements."""


@dataclass(frozen=True, eq=False)
class SurfaceCoefficients:
    """Diagonal of the coefficient matrix plus the (0-based) active index set.

    Elements outside `active_set` are phase-only reflectors and must have unit
    modulus; active elements may have any amplitude.
    """
    theta: np.ndarray
    active_set: tuple[int, ...] = ()

    def __post_init__(self):
        theta = np.array(self.theta, dtype=complex).ravel()
        if not np.all(np.isfinite(theta)):
            raise SurfaceError("theta has non-finite entries")
        active = tuple(sorted(int(i) for i in self.active_set))
        if len(set(active)) != len(active):
            raise SurfaceError("active_set has repeated indices")
        if active and (active[0] < 0 or active[-1] >= theta.size):
            raise SurfaceError(f"active_set must lie in [0, {theta.size})")
        passive = np.ones(theta.size, dtype=bool)
        passive[list(active)] = False
        if not np.allclose(np.abs(theta[passive]), 1.0, rtol=0, atol=1e-12):
            raise SurfaceError("passive elements must have unit modulus")
        theta.setflags(write=False)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "active_set", active)

    @classmethod
    def from_phases(cls, phases, active_set=(), amplitudes=None) -> "SurfaceCoefficients":
        """Build from phases; `amplitudes` (length K) applies to active elements in order."""
        theta = np.exp(1j * np.asarray(phases, dtype=float))
        active = sorted(active_set)
        if amplitudes is not None:
            theta[active] *= np.asarray(amplitudes, dtype=float)
        return cls(theta, tuple(active))

    @property
    def n_elements(self) -> int:
        return self.theta.size

    @property
    def active_mask(self) -> np.ndarray:
        mask = np.zeros(self.theta.size, dtype=bool)
        mask[list(self.active_set)] = True
        return mask

    @property
    def amplitudes(self) -> np.ndarray:
        return np.abs(self.theta)

    @property
    def phases(self) -> np.ndarray:
        return np.mod(np.angle(self.theta), 2 * np.pi)

    def is_active(self, n: int) -> bool:
        return n in self.active_set

    def with_element(self, n: int, value: complex) -> "SurfaceCoefficients":
        theta = self.theta.copy()
        theta[n] = value
        return SurfaceCoefficients(theta, self.active_set)


@dataclass(frozen=True)
class PowerBudget:
    pa_max: float
    pr_max: float

    def __post_init__(self):
        if not (self.pa_max > 0 and self.pr_max > 0):
            raise SurfaceError("power budgets must be positive")


def split(coeffs: SurfaceCoefficients) -> tuple[np.ndarray, np.ndarray]:
    """Passive part phi and active part psi, with phi + psi == theta."""
    mask = coeffs.active_mask
    phi = np.where(mask, 0, coeffs.theta)
    psi = np.where(mask, coeffs.theta, 0)
    return phi, psi


def element_load(h_rb, pa, sigma_b_sq) -> np.ndarray:
    """Per-element power factor sigma_b^2 + P_a ||b_n||^2, b_n the n-th column of h_rb."""
    col_energy = np.sum(np.abs(np.asarray(h_rb)) ** 2, axis=0)
    return sigma_b_sq + pa * col_energy


def relay_power(coeffs: SurfaceCoefficients, h_rb, pa, sigma_b_sq) -> float:
    _, psi = split(coeffs)
    return float(np.sum(np.abs(psi) ** 2 * element_load(h_rb, pa, sigma_b_sq)))


def residual_power(coeffs: SurfaceCoefficients, h_rb, pa, sigma_b_sq, excluded: int) -> float:
    """Relay power of every active element except `excluded`."""
    if not coeffs.is_active(excluded):
        raise SurfaceError(f"element {excluded} is not active")
    _, psi = split(coeffs)
    terms = np.abs(psi) ** 2 * element_load(h_rb, pa, sigma_b_sq)
    terms[excluded] = 0.0
    return float(np.sum(terms))


def amplitude_bound(pr_max, residual, pa, b_n_norm_sq, sigma_b_sq) -> float:
    """Largest amplitude element n can take while the total relay power stays at `pr_max`."""
    headroom = pr_max - residual
    if headroom < 0:
        # Rounding in the residual sum can push a tight budget a few ulp negative.
        if headroom >= -1e-12 * pr_max:
            return 0.0
        raise BudgetError(f"relay budget {pr_max:g} W exceeded by residual {residual:g} W")
    return float(np.sqrt(headroom / (sigma_b_sq + pa * b_n_norm_sq)))


def equal_split_amplitudes(active_set, h_rb, pa, sigma_b_sq, pr_max) -> np.ndarray:
    """Amplitudes giving each active element an equal share of the relay budget."""
    active = list(active_set)
    if not active:
        return np.zeros(0)
    load = element_load(h_rb, pa, sigma_b_sq)[active]
    return np.sqrt(pr_max / len(active) / load)


def fit_to_budget(coeffs: SurfaceCoefficients, h_rb, pa, sigma_b_sq, pr_max) -> SurfaceCoefficients:
    """Rescale all active amplitudes by one factor so the relay power equals `pr_max`."""
    if not coeffs.active_set:
        return coeffs
    used = relay_power(coeffs, h_rb, pa, sigma_b_sq)
    theta = coeffs.theta.copy()
    active = list(coeffs.active_set)
    if used > 0:
        theta[active] *= np.sqrt(pr_max / used)
    else:
        # all active amplitudes are zero: fall back to the equal split
        theta[active] = equal_split_amplitudes(active, h_rb, pa, sigma_b_sq, pr_max)
    scaled = SurfaceCoefficients(theta, coeffs.active_set)
    if relay_power(scaled, h_rb, pa, sigma_b_sq) > pr_max:
        # shave the last few ulp so the budget holds without relying on tolerances
        theta[active] *= 1 - 1e-15
        scaled = SurfaceCoefficients(theta, coeffs.active_set)
    return scaled
