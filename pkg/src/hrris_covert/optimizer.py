"""Alternating optimization of the surface coefficients and Alice's transmit power.

The coefficient block is updated one element at a time.  With every other element
fixed the log-det bound is

    f0 = log2|A_n + |theta_n|^2 B_n + theta_n C_n + conj(theta_n) C_n^H|

where B_n and C_n are rank one, so the phase maximiser is available in closed form
from the single non-zero eigenvalue of E_n^-1 C_n, E_n = A_n + |theta_n|^2 B_n.
The power block is a scalar root solve, because the KL divergence seen by the
warden is increasing in the transmit power.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelSet
from .metrics import kl_divergence, logdet_hermitian, rate_report, willie_sinr
from .params import SystemParams
from .surface import (
    BudgetError, PowerBudget, SurfaceCoefficients, amplitude_bound, element_load,
    equal_split_amplitudes, fit_to_budget, relay_power, residual_power, split,
)

log = logging.getLogger(__name__)

RANK_RTOL = 1e-10
LN2 = np.log(2.0)


class OptimizerError(RuntimeError):
    pass


class RankError(OptimizerError):
    """A matrix that the model requires to be rank one is not."""


class MonotonicityError(OptimizerError):
    """KL divergence failed to increase with transmit power."""


@dataclass(frozen=True)
class ElementContext:
    a_mat: np.ndarray
    b_mat: np.ndarray
    c_mat: np.ndarray
    n: int
    active: bool

    def objective(self, theta_n: complex) -> float:
        """f0 in bits for a candidate value of element n."""
        m = (self.a_mat + abs(theta_n) ** 2 * self.b_mat
             + theta_n * self.c_mat + np.conj(theta_n) * self.c_mat.conj().T)
        return logdet_hermitian(0.5 * (m + m.conj().T)) / LN2


@dataclass(frozen=True)
class UpdateDiagnostics:
    iota_n: float
    lambda_n: complex
    vnp_vn: float
    left_right_product: complex
    objective_before: float
    objective_after: float


@dataclass(frozen=True)
class AoSettings:
    max_outer_iters: int = 50
    max_sweeps: int = 1
    rel_tol: float = 1e-6
    bisection_tol: float = 1e-10
    init_seed: int = 0
    n_starts: int = 1

    def __post_init__(self):
        if self.max_outer_iters < 1 or self.max_sweeps < 1 or self.n_starts < 1:
            raise ValueError("iteration counts must be positive")
        for name in ("rel_tol", "bisection_tol"):
            if not 0 < getattr(self, name) < 1:
                raise ValueError(f"{name} must lie in (0, 1)")


@dataclass
class OptimizationResult:
    coeffs: SurfaceCoefficients
    pa_star: float
    rate_bits: float
    rate_upper_bits: float
    d01_nats: float
    relay_power: float
    iterations: int
    converged: bool
    trace: list[dict] = field(default_factory=list)
    best_iteration: int = 0
    best_start: int = 0

    @property
    def element_f0(self) -> np.ndarray:
        """f0 after every element update, concatenated over all sweeps."""
        parts = [np.asarray(t["element_f0"]) for t in self.trace]
        return np.concatenate(parts) if parts else np.zeros(0)


# -- element matrices ---------------------------------------------------------

def _noise_ratio(channels: ChannelSet) -> float:
    return channels.sigma_r_sq / channels.sigma_b_sq


def _context_from_state(n, coeffs, channels, rho, g, relay_cov):
    """Element matrices given the running sums g = H_rb Theta H_ar + H_ab and
    relay_cov = sum over active i of |theta_i|^2 b_i b_i^H."""
    b = channels.h_rb[:, n]
    a_row = channels.h_ar[n]                    # a_n^H
    theta_n = coeffs.theta[n]
    active = coeffs.is_active(n)
    r = _noise_ratio(channels)
    bbh = np.outer(b, b.conj())
    x = g - theta_n * np.outer(b, a_row)         # everything except element n
    relay = relay_cov - abs(theta_n) ** 2 * bbh if active else relay_cov
    a_mat = np.eye(b.size) + r * relay + rho * (x @ x.conj().T)
    a_mat = 0.5 * (a_mat + a_mat.conj().T)
    gain = rho * np.vdot(a_row, a_row).real + (r if active else 0.0)
    b_mat = gain * bbh
    c_mat = rho * np.outer(b, (x @ a_row.conj()).conj())
    return ElementContext(a_mat, b_mat, c_mat, n, active)


def _running_sums(coeffs, channels):
    g = (channels.h_rb * coeffs.theta) @ channels.h_ar + channels.h_ab
    _, psi = split(coeffs)
    hp = channels.h_rb * np.abs(psi)
    return g, hp @ hp.conj().T


def build_element_context(n: int, coeffs: SurfaceCoefficients, channels: ChannelSet,
                          rho: float) -> ElementContext:
    if coeffs.n_elements != channels.n_elements:
        raise ValueError(f"{coeffs.n_elements} coefficients for a "
                         f"{channels.n_elements}-element surface")
    if not 0 <= n < coeffs.n_elements:
        raise IndexError(n)
    g, relay_cov = _running_sums(coeffs, channels)
    return _context_from_state(n, coeffs, channels, rho, g, relay_cov)


# -- rank-one eigen-analysis --------------------------------------------------

def sole_nonzero_eigenvalue(m: np.ndarray, tol: float = RANK_RTOL) -> tuple[complex, complex]:
    """Dominant eigenvalue of a numerically rank-one matrix.

    Also returns the product of the matching row of T^-1 and column of T, where
    T holds the eigenvectors; this is 1 whenever `m` is diagonalisable.
    """
    m = np.asarray(m, dtype=complex)
    s = np.linalg.svd(m, compute_uv=False)
    if s[0] == 0:
        return 0j, 1.0 + 0j
    if s.size > 1 and s[1] > tol * s[0]:
        raise RankError(f"expected rank one, singular values {s[0]:.3e}, {s[1]:.3e}")
    w, t = np.linalg.eig(m)
    k = int(np.argmax(np.abs(w)))
    try:
        t_inv = np.linalg.inv(t)
    except np.linalg.LinAlgError:
        return complex(w[k]), complex(np.nan)
    return complex(w[k]), complex(t_inv[k] @ t[:, k])


# -- coefficient block --------------------------------------------------------

def _solve_element(ctx: ElementContext, amplitude: float):
    """Closed-form phase for a fixed amplitude, plus the scalar reduction terms."""
    e_mat = ctx.a_mat + amplitude ** 2 * ctx.b_mat
    iota, _ = sole_nonzero_eigenvalue(np.linalg.solve(ctx.a_mat, ctx.b_mat))
    ec = np.linalg.solve(e_mat, ctx.c_mat)
    lam, lr = sole_nonzero_eigenvalue(ec)
    theta_new = amplitude * np.exp(-1j * np.angle(lam)) if lam != 0 else complex(amplitude)
    # exact cross-coupling of the rank-two perturbation E^-1 (theta C + conj(theta) C^H)
    ech = np.linalg.solve(e_mat, ctx.c_mat.conj().T)
    xi = np.trace(ec @ ech).real
    vnp_vn = amplitude ** 2 * xi / abs(lam) ** 2 if lam != 0 else np.nan
    return theta_new, float(iota.real), lam, float(vnp_vn), lr


def _active_amplitude(n, coeffs, channels, budget, pa):
    residual = residual_power(coeffs, channels.h_rb, pa, channels.sigma_r_sq, n)
    b_sq = float(np.sum(np.abs(channels.h_rb[:, n]) ** 2))
    return amplitude_bound(budget.pr_max, residual, pa, b_sq, channels.sigma_r_sq)


def update_element(n: int, coeffs: SurfaceCoefficients, channels: ChannelSet, rho: float,
                   budget: PowerBudget, pa: float, _state=None):
    """Optimal value of element n with all others fixed.

    Passive elements keep unit modulus; active elements take the largest amplitude
    the relay budget leaves them.  Returns (theta_n_star, UpdateDiagnostics).
    """
    if _state is None:
        ctx = build_element_context(n, coeffs, channels, rho)
    else:
        ctx = _context_from_state(n, coeffs, channels, rho, *_state)
    amplitude = _active_amplitude(n, coeffs, channels, budget, pa) if ctx.active else 1.0
    theta_new, iota, lam, vnp_vn, lr = _solve_element(ctx, amplitude)
    diag = UpdateDiagnostics(iota, lam, vnp_vn, lr,
                             ctx.objective(coeffs.theta[n]), ctx.objective(theta_new))
    return theta_new, diag


def sweep_elements(coeffs: SurfaceCoefficients, channels: ChannelSet, rho: float,
                   budget: PowerBudget, pa: float, diagnostics: list | None = None,
                   trace: list | None = None):
    """One pass of update_element over n = 0..N-1; returns (coeffs, f0_after).

    With `diagnostics` given, every element goes through the full eigen-analysis
    of update_element.  Otherwise the rank-one structure C_n = b_n w_n^H is used
    directly: the sole eigenvalue of E_n^-1 C_n is w_n^H E_n^-1 b_n.  `trace`
    collects f0 (bits) after each element update.
    """
    if diagnostics is not None:
        current = coeffs
        state = _running_sums(coeffs, channels)
        for n in range(coeffs.n_elements):
            theta_n, diag = update_element(n, current, channels, rho, budget, pa, _state=state)
            state = _advance_sums(state, channels, n, current.theta[n], theta_n,
                                  current.is_active(n))
            current = current.with_element(n, theta_n)
            diagnostics.append(diag)
            if trace is not None:
                trace.append(diag.objective_after)
        return current, _f0(current, channels, pa)

    theta = coeffs.theta.copy()
    mask = coeffs.active_mask
    h_rb, h_ar = channels.h_rb, channels.h_ar
    r = _noise_ratio(channels)
    load = element_load(h_rb, pa, channels.sigma_r_sq)
    col_sq = np.sum(np.abs(h_rb) ** 2, axis=0)
    row_sq = np.sum(np.abs(h_ar) ** 2, axis=1)
    used = np.where(mask, np.abs(theta) ** 2 * load, 0.0)
    g, relay_cov = _running_sums(coeffs, channels)
    eye = np.eye(h_rb.shape[0])
    f0 = None
    for n in range(theta.size):
        b = h_rb[:, n]
        a_row = h_ar[n]
        bbh = np.outer(b, b.conj())
        x = g - theta[n] * np.outer(b, a_row)
        active = mask[n]
        if active:
            relay = relay_cov - abs(theta[n]) ** 2 * bbh
            residual = used.sum() - used[n]
            amp = amplitude_bound(budget.pr_max, residual, pa, col_sq[n], channels.sigma_r_sq)
            gain = rho * row_sq[n] + r
        else:
            relay = relay_cov
            amp = 1.0
            gain = rho * row_sq[n]
        a_mat = eye + r * relay + rho * (x @ x.conj().T)
        e_mat = a_mat + (amp ** 2 * gain) * bbh
        w = rho * (x @ a_row.conj())
        u = np.linalg.solve(e_mat, b)
        lam = np.vdot(w, u)
        new = amp * np.exp(-1j * np.angle(lam)) if lam != 0 else complex(amp)
        g = g + (new - theta[n]) * np.outer(b, a_row)
        if active:
            relay_cov = relay + amp ** 2 * bbh
            used[n] = amp ** 2 * load[n]
        theta[n] = new
        if trace is not None:
            m = e_mat + new * np.outer(b, w.conj()) + np.conj(new) * np.outer(w, b.conj())
            f0 = logdet_hermitian(0.5 * (m + m.conj().T)) / LN2
            trace.append(f0)
    out = SurfaceCoefficients(theta, coeffs.active_set)
    return out, (f0 if f0 is not None else _f0(out, channels, pa))


def _advance_sums(state, channels, n, old, new, active):
    g, relay_cov = state
    b = channels.h_rb[:, n]
    g = g + (new - old) * np.outer(b, channels.h_ar[n])
    if active:
        relay_cov = relay_cov + (abs(new) ** 2 - abs(old) ** 2) * np.outer(b, b.conj())
    return g, relay_cov


# -- power block --------------------------------------------------------------

def _kl_curve(coeffs, channels, l):
    # the warden's SINR is linear in P_a, so evaluate the slope once
    slope = willie_sinr(coeffs, channels, 1.0)
    return lambda pa: kl_divergence(slope * pa, l)


def solve_pa(coeffs: SurfaceCoefficients, channels: ChannelSet, epsilon: float, l: int,
             pa_max: float, rtol: float = 1e-10, max_iter: int = 4000) -> float:
    """Largest P_a <= pa_max with KL divergence at most 2 eps^2.

    Bisection on [0, pa_max]; the bracket is checked for monotonicity and a
    violation raises MonotonicityError instead of returning a root.
    """
    if not (epsilon > 0 and l >= 1 and pa_max > 0):
        raise ValueError("need epsilon > 0, l >= 1, pa_max > 0")
    target = 2.0 * epsilon ** 2
    kl = _kl_curve(coeffs, channels, l)
    d_hi = kl(pa_max)
    if d_hi <= target:
        return pa_max
    grid = pa_max * np.logspace(-12, 0, 25)
    d_grid = np.array([kl(p) for p in grid])
    if np.any(np.diff(d_grid) < 0):
        raise MonotonicityError("KL divergence decreases over the bracketing grid")
    lo, hi, d_lo = 0.0, pa_max, 0.0
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        d_mid = kl(mid)
        if not d_lo <= d_mid <= d_hi:
            raise MonotonicityError(f"KL divergence not monotone near P_a={mid:.6e} W")
        if abs(d_mid - target) <= rtol * target:
            return mid
        if d_mid < target:
            lo, d_lo = mid, d_mid
        else:
            hi, d_hi = mid, d_mid
    # bracket collapsed to adjacent floats; keep the feasible side
    return lo


def relay_power_cap(coeffs: SurfaceCoefficients, channels: ChannelSet, pr_max: float) -> float:
    """Largest P_a for which the current active amplitudes respect the relay budget."""
    _, psi = split(coeffs)
    w = np.abs(psi) ** 2
    slope = float(np.sum(w * np.sum(np.abs(channels.h_rb) ** 2, axis=0)))
    fixed = float(np.sum(w)) * channels.sigma_r_sq
    if slope == 0:
        return np.inf
    return max(0.0, (pr_max - fixed) / slope)


# -- driver -------------------------------------------------------------------

def choose_active_set(n: int, k: int, placement: str, rng: np.random.Generator) -> tuple[int, ...]:
    if placement == "first":
        return tuple(range(k))
    if placement == "random":
        return tuple(sorted(int(i) for i in rng.choice(n, size=k, replace=False)))
    raise ValueError(f"unknown placement {placement!r}")


def initial_coefficients(channels, active_set, pa, pr_max, rng) -> SurfaceCoefficients:
    phases = rng.uniform(0.0, 2 * np.pi, channels.n_elements)
    amps = equal_split_amplitudes(active_set, channels.h_rb, pa, channels.sigma_r_sq, pr_max)
    return SurfaceCoefficients.from_phases(phases, active_set, amps)


def _f0(coeffs, channels, pa):
    return rate_report(coeffs, channels, pa).rate_upper_bits


def _feasible_point(coeffs, channels, budget, power):
    """Covert rate at coeffs with P_a re-solved and clamped to every constraint."""
    pa = min(power(coeffs), relay_power_cap(coeffs, channels, budget.pr_max), budget.pa_max)
    return pa, rate_report(coeffs, channels, pa)


def _run_start(channels, params, settings, budget, active, rng, start):
    def power(c):
        return solve_pa(c, channels, params.epsilon, params.l, budget.pa_max,
                        rtol=settings.bisection_tol)

    coeffs = initial_coefficients(channels, active, budget.pa_max, budget.pr_max, rng)
    pa = power(coeffs)
    coeffs = fit_to_budget(coeffs, channels.h_rb, pa, channels.sigma_r_sq, budget.pr_max)
    best_pa, best_rep = _feasible_point(coeffs, channels, budget, power)
    best = (best_rep.rate_bits, coeffs, best_pa, 0)
    prev = best_rep.rate_upper_bits
    trace = []
    converged = False
    it = 0
    for it in range(1, settings.max_outer_iters + 1):
        rho = pa / channels.sigma_b_sq
        element_f0 = []
        try:
            for _ in range(settings.max_sweeps):
                coeffs, _ = sweep_elements(coeffs, channels, rho, budget, pa,
                                           trace=element_f0)
        except (BudgetError, RankError) as exc:
            raise type(exc)(f"start {start}, outer iteration {it}: {exc}") from exc
        f0_sweep = element_f0[-1]
        pa = power(coeffs)
        coeffs = fit_to_budget(coeffs, channels.h_rb, pa, channels.sigma_r_sq, budget.pr_max)
        pa_ok, rep = _feasible_point(coeffs, channels, budget, power)
        f0 = rep.rate_upper_bits
        trace.append({"start": start, "iteration": it, "f0_sweep": f0_sweep, "pa": pa_ok,
                      "f0": f0, "rate": rep.rate_bits, "element_f0": np.asarray(element_f0)})
        log.debug("start %d iteration %d: f0=%.9f rate=%.9f pa=%.6e",
                  start, it, f0, rep.rate_bits, pa_ok)
        if rep.rate_bits > best[0]:
            best = (rep.rate_bits, coeffs, pa_ok, it)
        if abs(f0 - prev) <= settings.rel_tol * max(abs(prev), 1e-300):
            converged = True
            break
        prev = f0
    return best, it, converged, trace


def optimize(channels: ChannelSet, params: SystemParams,
             settings: AoSettings | None = None) -> OptimizationResult:
    """Alternate closed-form element sweeps with the covertness power solve.

    The coefficient sweeps raise f0 for a fixed P_a but ignore the warden, so the
    covert rate need not rise with them.  Every outer iterate is feasible, and the
    one with the highest covert rate over all starts is returned.
    """
    settings = settings or AoSettings()
    budget = PowerBudget(params.pa_max, params.pr_max)
    rng = np.random.default_rng(settings.init_seed)
    active = choose_active_set(channels.n_elements, params.active_count,
                               params.active_placement, rng)
    trace = []
    chosen = None
    for start in range(settings.n_starts):
        start_rng = rng if start == 0 else np.random.default_rng([settings.init_seed, start])
        best, it, converged, start_trace = _run_start(channels, params, settings, budget,
                                                      active, start_rng, start)
        trace.extend(start_trace)
        if chosen is None or best[0] > chosen[0][0]:
            chosen = (best, it, converged, start)

    (_, coeffs, pa, best_it), it, converged, start = chosen
    report = rate_report(coeffs, channels, pa)
    d01 = kl_divergence(willie_sinr(coeffs, channels, 1.0) * pa, params.l)
    return OptimizationResult(
        coeffs=coeffs, pa_star=pa, rate_bits=report.rate_bits,
        rate_upper_bits=report.rate_upper_bits, d01_nats=d01,
        relay_power=relay_power(coeffs, channels.h_rb, pa, channels.sigma_r_sq),
        iterations=it, converged=converged, trace=trace,
        best_iteration=best_it, best_start=start)
