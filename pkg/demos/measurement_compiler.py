"""Turning a relative-phase projector into photon counting.

compile_measurement(n, phi, alpha, m) returns a unitary on the manifold n
that maps the relative-phase eigenstate onto the number state |m, n-m>.
Counting photons after it reproduces the projector statistics.

Run:  python3 demos/measurement_compiler.py
"""

import math

import numpy as np

from vacuumbell import fock, measure, states

np.set_printoptions(precision=4, suppress=True)
u = measure.compile_measurement(2, 0.3, 1.0, 1)
print("n = 2, phi = 0.3, alpha = 1, target |1,1>:")
print(u)
print("max |U^dag U - I| =", np.abs(u.conj().T @ u - np.eye(3)).max())

a2 = 3.0
st = states.after_pbs(a2)
print(f"\nOn the four-mode state at alpha^2 = {a2}:")
for n in range(1, 5):
    xi = measure.xi_eigenstate(measure.RelPhaseEigenstate(n, 0.3, math.sqrt(a2)), "cV", "cH")
    direct = fock.projector_expectation(st, [(1.0, xi)])
    counted = measure.compiled_count_probability(st, "cV", "cH", n, 0.3, math.sqrt(a2), 1)
    print(f"  n = {n}: projector {direct:.12f}   counting (1, {n - 1}) {counted:.12f}")
