"""Passive linear-optical elements acting on :class:`~vacuumbell.fock.StateVector`.

Sign conventions are pinned so that a single photon entering the first port of
the 50:50 splitter leaves as ``(|1,0> - |0,1>)/sqrt(2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .fock import ModeSpec, StateVector, apply_local_operator

# columns are the images of the input creation operators:
# a1^dag -> (a1^dag - a2^dag)/sqrt2,  a2^dag -> (a1^dag + a2^dag)/sqrt2
BS_TRANSMITTED_SIGN = +1
BS_REFLECTED_SIGN = -1
BS_50_50 = np.array([[1.0, 1.0],
                     [BS_REFLECTED_SIGN, BS_TRANSMITTED_SIGN]]) / math.sqrt(2)

PBS_ROUTING = {"aV": "cV", "bH": "cH", "bV": "dV", "aH": "dH"}
PBS_OUTPUT_ORDER = ("cV", "cH", "dV", "dH")
PBS_INPUT_MODES = ("aV", "aH", "bV", "bH")


@dataclass(frozen=True)
class PropagationSettings:
    """Angular frequency and the two arm propagation times; only omega*tau matters."""

    omega: float = 1.0
    tau_c: float = 0.0
    tau_d: float = 0.0

    def __post_init__(self):
        for v in (self.omega, self.tau_c, self.tau_d):
            if not math.isfinite(v):
                raise ValueError("propagation settings must be finite")

    @property
    def omega_tau_c(self) -> float:
        return self.omega * self.tau_c

    @property
    def omega_tau_d(self) -> float:
        return self.omega * self.tau_d


def two_mode_linear_unitary(u, cutoff: int) -> np.ndarray:
    """Fock-space matrix of a 2x2 mode transformation, truncated at ``cutoff`` per mode.

    ``u[:, i]`` is the image of input creation operator ``i``.  Components that
    would exceed the cutoff are dropped, so for total photon number above the
    cutoff the result is not unitary; callers see this as leakage.
    """
    u = np.asarray(u, dtype=complex)
    d = cutoff + 1
    out = np.zeros((d * d, d * d), dtype=complex)
    fact = [math.factorial(k) for k in range(2 * cutoff + 1)]
    for n1 in range(d):
        for n2 in range(d):
            col = n1 * d + n2
            pre = 1.0 / math.sqrt(fact[n1] * fact[n2])
            for k in range(n1 + 1):
                ck = math.comb(n1, k) * u[0, 0] ** k * u[1, 0] ** (n1 - k)
                for l in range(n2 + 1):
                    p = k + l
                    q = n1 + n2 - p
                    if p > cutoff or q > cutoff:
                        continue
                    cl = math.comb(n2, l) * u[0, 1] ** l * u[1, 1] ** (n2 - l)
                    out[p * d + q, col] += pre * ck * cl * math.sqrt(fact[p] * fact[q])
    return out


def beam_splitter_50_50(state: StateVector, in_modes: tuple[str, str]) -> StateVector:
    c1, c2 = (state.spec.cutoff(m) for m in in_modes)
    if c1 != c2:
        raise ValueError(f"beam splitter modes need equal cutoffs, got {c1} and {c2}")
    return apply_local_operator(state, in_modes, two_mode_linear_unitary(BS_50_50, c1))


def polarizing_beam_splitter(state: StateVector) -> StateVector:
    """Route (aV, aH, bV, bH) to (cV, cH, dV, dH): V transmitted, H reflected.

    This is a pure relabelling; no amplitude changes.
    """
    if set(state.spec.names) != set(PBS_INPUT_MODES):
        raise ValueError(f"PBS expects modes {PBS_INPUT_MODES}, got {state.spec.names}")
    return state.relabel(PBS_ROUTING, order=PBS_OUTPUT_ORDER)


def _diagonal_phase(state: StateVector, phase_of) -> StateVector:
    amps = {occ: a * np.exp(1j * phase_of(occ)) for occ, a in state.items()}
    return StateVector(state.spec, amps, loss=state.loss, leakage=state.leakage)


def propagate(state: StateVector, settings: PropagationSettings, arm_map: Mapping[str, str]) -> StateVector:
    """Free evolution: multiply each basis amplitude by exp[i(wt_c N_c + wt_d N_d)]."""
    spec = state.spec
    missing = [m for m in spec.names if m not in arm_map]
    if missing:
        raise ValueError(f"modes without an arm assignment: {missing}")
    bad = {arm_map[m] for m in spec.names} - {"c", "d"}
    if bad:
        raise ValueError(f"arms must be 'c' or 'd', got {sorted(bad)}")
    wt = [settings.omega_tau_c if arm_map[m] == "c" else settings.omega_tau_d for m in spec.names]
    return _diagonal_phase(state, lambda occ: sum(w * n for w, n in zip(wt, occ)))


def birefringent_plate(state: StateVector, mode: str, phi: float) -> StateVector:
    """Phase shift exp(i*phi*n) on occupation n of ``mode``."""
    i = state.spec.index(mode)
    return _diagonal_phase(state, lambda occ: phi * occ[i])


def phase_shifter_matrix(cutoff: int, phi: float) -> np.ndarray:
    return np.diag(np.exp(1j * phi * np.arange(cutoff + 1)))


def arm_map_for(spec: ModeSpec, arms: Sequence[str] = ("c", "d")) -> dict[str, str]:
    """Assign each mode to the arm given by its first letter (``cV`` -> ``c``)."""
    out = {}
    for name in spec.names:
        if name[0] not in arms:
            raise ValueError(f"cannot infer arm of mode {name!r}")
        out[name] = name[0]
    return out
