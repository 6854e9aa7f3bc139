"""Mean covert rate versus surface size for several active-element counts.

Runs the shipped sweep config with fewer trials so it finishes in about a minute;
pass a trial count to override, e.g. ``python demos/rate_sweep.py 50``.
"""
import dataclasses
import sys
from pathlib import Path

from hrris_covert.experiment import load_config, run_sweep

config = Path(__file__).resolve().parents[1] / "configs" / "rate_sweep.yaml"
params, spec, settings = load_config(config)
trials = int(sys.argv[1]) if len(sys.argv) > 1 else 8
spec = dataclasses.replace(spec, trials=trials)

result = run_sweep(params, spec, settings)

print(f"mean covert rate (bits/use) over {trials} trials")
print("   N  " + "".join(f"   K={k:<4}" for k in spec.k_values))
for n in spec.n_values:
    print(f"{n:4d}  " + "".join(f"{result.mean_rate(n, k):9.3f}" for k in spec.k_values))
