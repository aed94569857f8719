"""Reference lasers that wander between synchronizations wash out the violation.

A Gaussian relative-phase error of variance v multiplies every correlation by
exp(-v/2), so the violation is lost once v exceeds ln 2.

Run:  python3 demos/drift_and_resync.py
"""

import math

from vacuumbell import bell
from vacuumbell.bell import ChshSettings, DriftModel

cs = ChshSettings()
print(f"violation boundary: relative variance ln 2 = {bell.DAMPING_BOUNDARY:.4f}")
print("  variance   predicted S   simulated S")
for v in (0.0, 0.3, 0.6, 0.8, 1.2):
    d = DriftModel(sigma_step=math.sqrt(v / 2), resync_period=1, seed=1)
    r = bell.run_stations("phase", cs, trials=100_000, drift=d)
    pred = bell.TSIRELSON * math.exp(-v / 2)
    print(f"  {v:8.2f}   {pred:11.4f}   {r.S:.4f} +/- {r.S_err:.4f}")

print("\nRandom walk, step 0.03 rad per trial, for different resync periods:")
model = bell.build_model("phase")
for period in (10, 100, 1000):
    d = DriftModel(sigma_step=0.03, resync_period=period, seed=2)
    r = bell.run_stations("phase", cs, trials=100_000, drift=d, shards=4, model=model)
    mix = bell.expected_chsh(model, cs, *d.rel_variances(r.trials))
    print(f"  period {period:5d}: S = {r.S:.4f} +/- {r.S_err:.4f}, "
          f"given these drifts {r.S_conditional:.4f}, ensemble {mix:.4f}")
