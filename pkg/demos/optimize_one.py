"""One run of the alternating optimizer on a 100-element surface with 5 active elements."""
import dataclasses

import numpy as np

from hrris_covert import (AoSettings, ArraySpec, FadingSpec, SystemParams, build_channel_set,
                          optimize, watts_to_dbm)

params = SystemParams(arrays=ArraySpec.for_elements(100, n_willie=1), active_count=5)
params = dataclasses.replace(params, fading=FadingSpec(seed=11))
ch = build_channel_set(params.geometry, params.arrays, params.fading, params.noise_dbm)

res = optimize(ch, params, AoSettings(init_seed=3))

print(f"covert rate     {res.rate_bits:.4f} bits/use (bound {res.rate_upper_bits:.4f})")
print(f"transmit power  {watts_to_dbm(res.pa_star):.2f} dBm")
print(f"D01             {res.d01_nats:.3e} nats, limit {params.covertness_threshold:.0e}")
print(f"relay power     {watts_to_dbm(res.relay_power):.2f} dBm of {params.pr_max_dbm} dBm")
print(f"iterations      {res.iterations}, converged {res.converged}")
print("active amplitudes", np.round(res.coeffs.amplitudes[list(res.coeffs.active_set)], 2))

# f0 after each outer iteration
f0 = [t["f0"] for t in res.trace]
print("f0 trace:", " ".join(f"{v:.4f}" for v in f0[:5]), "...", f"{f0[-1]:.4f}")
