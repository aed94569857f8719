"""Single-photon Bell tests in a truncated multimode Fock space.

Modules
-------
fock     sparse states, tensor products, local operators, projector expectations
optics   50:50 and polarizing beam splitters, free propagation, phase plates
states   the split-photon and photon-plus-reference states of the experiment
measure  phase / relative-phase analyzers, dichotomic outcomes, counting compiler
theory   closed-form probabilities and convergence curves
bell     CHSH, local-deterministic bound, two-station Monte Carlo with drift
"""

from .fock import CoherentParams, ModeSpec, StateVector
from .measure import ArmAnalyzer, Dichotomy, JointOutcomeModel, RelPhaseEigenstate
from .bell import ChshSettings, DriftModel, RunSummary, TrialRecord

__version__ = "0.1.0"

__all__ = ["ModeSpec", "StateVector", "CoherentParams", "ArmAnalyzer", "Dichotomy",
           "JointOutcomeModel", "RelPhaseEigenstate", "ChshSettings", "DriftModel",
           "RunSummary", "TrialRecord"]
