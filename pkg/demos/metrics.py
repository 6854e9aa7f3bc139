"""Covert rate, its log-det bound and the warden's KL divergence for a random surface."""
import numpy as np

from hrris_covert import (ArraySpec, FadingSpec, SceneGeometry, SurfaceCoefficients,
                          build_channel_set, covert_rate, detection_report, rate_report)

arrays = ArraySpec.for_elements(64, n_willie=1)
ch = build_channel_set(SceneGeometry(), arrays, FadingSpec(seed=5), noise_dbm=-80.0)

rng = np.random.default_rng(0)
phases = rng.uniform(0, 2 * np.pi, 64)

# four active elements with a modest gain, the rest phase-only
coeffs = SurfaceCoefficients.from_phases(phases, active_set=(0, 1, 2, 3),
                                         amplitudes=np.full(4, 5.0))

pa = 1e-5   # 10 uW transmit power
rep = rate_report(coeffs, ch, pa)
print(f"rate {rep.rate_bits:.4f} bits, bound f0 {rep.rate_upper_bits:.4f}, "
      f"gap log2|R| {rep.noise_cov_logdet:.2e}")

# the warden's detection statistic grows with power
for p in (1e-7, 1e-6, 1e-5, 1e-4):
    det = detection_report(coeffs, ch, p, l=100)
    print(f"P_a = {p:.0e} W: SINR {det.gamma_w:.3e}, D01 {det.d01:.3e} nats "
          f"(limit {2 * 0.01 ** 2:.0e}), rate {covert_rate(coeffs, ch, p):.4f}")
