"""How a coherent phase reference turns the photon into a measurable relative phase.

Projecting each arm onto relative-phase eigenstates recovers the ideal
correlations only as the reference gets bright; the deficit is the mass
the projectors miss.

Run:  python3 demos/relative_phase_convergence.py
"""

import math

from vacuumbell import measure, states, theory

for a2 in (0.5, 1.0, 3.0, 10.0):
    st = states.after_pbs(a2)
    p = measure.dichotomize_arm(st, ("cV", "cH"), 0.0, math.sqrt(a2))
    s = theory.marginal_sum(a2)
    print(f"alpha^2 = {a2:5}: P(+) = {p[measure.Dichotomy.PLUS]:.6f} (closed form {s:.6f}), "
          f"P(-) = {p[measure.Dichotomy.MINUS]:.6f}, inconclusive = {p[measure.Dichotomy.INCONCLUSIVE]:.6f}")

print("\nDeficits relative to the ideal phase measurement:")
print("   alpha^2    1/2 - S     1/2 - 2 S^2")
for pt in theory.fig3_curves([0.1, 1, 3, 10, 30, 1e3, 1e6]):
    print(f"{pt.alpha2:10.4g}  {pt.lower:10.3e}  {pt.upper:12.3e}")

print("\nPeak joint probability (ideal 0.5):")
for a2 in (3.0, 10.0, 1e9):
    peak = max(q.y for q in theory.fig4_curve(a2)["joint"])
    print(f"  alpha^2 = {a2:g}: {peak:.10f}")
