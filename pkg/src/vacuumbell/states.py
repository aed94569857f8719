"""Constructors for the states that appear in the single-photon Bell test.

* ``single_photon_split``: one photon through a 50:50 splitter,
  ``(|1,0> - |0,1>)/sqrt2`` on modes (c, d).
* ``propagated_split``: the same after free propagation in both arms.
* ``photon_plus_reference``: the split photon (on aV, aH) times coherent
  references ``|alpha, alpha>`` on (bV, bH).
* ``after_pbs`` / ``propagated_after_pbs``: the four-mode state on
  (cV, cH, dV, dH) after the polarizing splitter, optionally propagated.
"""

from __future__ import annotations

import math

from .fock import CoherentParams, ModeSpec, StateVector, make_coherent, make_fock, tensor
from .optics import (PropagationSettings, arm_map_for, beam_splitter_50_50,
                     polarizing_beam_splitter, propagate)

DEFAULT_TAIL = 1e-13


def single_photon_split(modes=("c", "d")) -> StateVector:
    spec = ModeSpec([(modes[0], 1), (modes[1], 1)])
    return beam_splitter_50_50(make_fock(spec, (1, 0)), tuple(modes))


def propagated_split(omega_tau_c: float, omega_tau_d: float) -> StateVector:
    st = single_photon_split()
    return propagate(st, PropagationSettings(1.0, omega_tau_c, omega_tau_d), {"c": "c", "d": "d"})


def reference_params(alpha2: float, tail_bound: float = DEFAULT_TAIL, cutoff: int | None = None) -> CoherentParams:
    if alpha2 < 0:
        raise ValueError("alpha2 must be nonnegative")
    return CoherentParams(alpha=math.sqrt(alpha2), cutoff=cutoff, tail_bound=tail_bound)


def photon_plus_reference(alpha2: float, tail_bound: float = DEFAULT_TAIL,
                          cutoff: int | None = None) -> StateVector:
    """Split photon on (aV, aH) tensored with |alpha>|alpha> on (bV, bH)."""
    params = reference_params(alpha2, tail_bound, cutoff)
    photon = single_photon_split(("aV", "aH"))
    return tensor(tensor(photon, make_coherent("bV", params)), make_coherent("bH", params))


def after_pbs(alpha2: float, tail_bound: float = DEFAULT_TAIL, cutoff: int | None = None) -> StateVector:
    return polarizing_beam_splitter(photon_plus_reference(alpha2, tail_bound, cutoff))


def propagated_after_pbs(alpha2: float, omega_tau_c: float, omega_tau_d: float,
                         tail_bound: float = DEFAULT_TAIL, cutoff: int | None = None) -> StateVector:
    st = after_pbs(alpha2, tail_bound, cutoff)
    return propagate(st, PropagationSettings(1.0, omega_tau_c, omega_tau_d), arm_map_for(st.spec))
