"""Phase and relative-phase analyzers, their dichotomic outcomes, and the
photon-counting compiler for relative-phase eigenstates.

Two analyzer families are supported:

* the two-level phase projector onto ``(e^{i(phi+wt)}|1> + |0>)/sqrt2`` acting
  on a single mode truncated at one photon;
* the relative-phase eigenstates of a (photon mode, reference mode) pair,
  one per total-photon-number manifold ``n >= 1``::

      xi_n(phi) = [ (sqrt(n)/alpha) |0, n> + e^{i phi} |1, n-1> ] / sqrt(1 + n/alpha^2)

  written as (photon occupation, reference occupation).

Outcome ``+`` is the analyzer eigenstate, ``-`` its orthogonal complement in the
same two-dimensional subspace, and ``inconclusive`` the empty ``n = 0``
manifold, which carries no phase information.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .fock import ModeSpec, StateVector, apply_local_operator, make_fock, projector_expectation


class Dichotomy(str, enum.Enum):
    PLUS = "+"
    MINUS = "-"
    INCONCLUSIVE = "inconclusive"


OUTCOMES = (Dichotomy.PLUS, Dichotomy.MINUS, Dichotomy.INCONCLUSIVE)
PLUS, MINUS, INCONCLUSIVE = 0, 1, 2


# --- two-level phase projectors -------------------------------------------

@dataclass(frozen=True)
class PhaseProjector2D:
    phi: float
    omega_tau: float = 0.0

    @property
    def angle(self) -> float:
        return self.phi + self.omega_tau


def pb_eigenstate(p: PhaseProjector2D, mode: str = "c") -> StateVector:
    s = 1 / math.sqrt(2)
    return StateVector(ModeSpec([(mode, 1)]), {(0,): s, (1,): s * np.exp(1j * p.angle)})


def pb_complement(p: PhaseProjector2D, mode: str = "c") -> StateVector:
    s = 1 / math.sqrt(2)
    return StateVector(ModeSpec([(mode, 1)]), {(0,): -s, (1,): s * np.exp(1j * p.angle)})


# --- relative-phase eigenstates -------------------------------------------

@dataclass(frozen=True)
class RelPhaseEigenstate:
    """Manifold ``n`` relative-phase eigenstate.

    ``photon_first`` selects the ket order (photon mode, reference mode); arm d
    of the polarizing-splitter layout has the photon mode second.
    """

    n: int
    phi: float
    alpha: float
    photon_first: bool = True

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("the n = 0 manifold holds a single state and has no relative-phase projector")
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")

    @property
    def ratio(self) -> float:
        return math.sqrt(self.n) / self.alpha

    @property
    def norm(self) -> float:
        return 1 / math.sqrt(1 + self.n / self.alpha**2)


def _manifold_state(e: RelPhaseEigenstate, c0: complex, c1: complex, photon_mode: str,
                    reference_mode: str) -> StateVector:
    # c0 on |0, n>, c1 on |1, n-1> in (photon, reference) order
    if e.photon_first:
        spec = ModeSpec([(photon_mode, 1), (reference_mode, e.n)])
        amps = {(0, e.n): c0, (1, e.n - 1): c1}
    else:
        spec = ModeSpec([(reference_mode, e.n), (photon_mode, 1)])
        amps = {(e.n, 0): c0, (e.n - 1, 1): c1}
    return StateVector(spec, amps)


def xi_eigenstate(e: RelPhaseEigenstate, photon_mode: str = "p", reference_mode: str = "r") -> StateVector:
    return _manifold_state(e, e.norm * e.ratio, e.norm * np.exp(1j * e.phi), photon_mode, reference_mode)


def manifold_complement(e: RelPhaseEigenstate, photon_mode: str = "p", reference_mode: str = "r") -> StateVector:
    """Unit state orthogonal to the eigenstate within span{|0,n>, |1,n-1>}.

    The |0,n> coefficient is real and positive, so for n = 1, alpha = 1,
    phi = 0 this is (|0,1> - |1,0>)/sqrt2.
    """
    return _manifold_state(e, e.norm, -e.norm * e.ratio * np.exp(1j * e.phi), photon_mode, reference_mode)


# --- per-arm analyzers ----------------------------------------------------

@dataclass(frozen=True)
class ArmAnalyzer:
    """Dichotomic analyzer for one arm.

    With ``reference_mode=None`` it is the two-level phase projector on
    ``photon_mode`` (offset ``omega_tau``).  Otherwise it is the family of
    relative-phase eigenstates for manifolds ``1..n_max`` plus the
    inconclusive vacuum manifold.
    """

    photon_mode: str
    reference_mode: str | None = None
    alpha: float | None = None
    n_max: int | None = None
    omega_tau: float = 0.0

    @property
    def is_phase(self) -> bool:
        return self.reference_mode is None

    @property
    def modes(self) -> tuple[str, ...]:
        return (self.photon_mode,) if self.is_phase else (self.photon_mode, self.reference_mode)

    def resolve(self, spec: ModeSpec) -> "ArmAnalyzer":
        """Fill in ``n_max`` from the reference cutoff and check it fits."""
        if self.is_phase:
            if spec.cutoff(self.photon_mode) < 1:
                raise ValueError(f"phase analyzer needs cutoff >= 1 on {self.photon_mode!r}")
            return self
        if self.alpha is None or not self.alpha > 0:
            raise ValueError("relative-phase analyzer needs alpha > 0")
        cut = spec.cutoff(self.reference_mode)
        n_max = cut if self.n_max is None else self.n_max
        if n_max > cut:
            raise ValueError(f"n_max {n_max} exceeds the cutoff {cut} of reference mode {self.reference_mode!r}")
        return ArmAnalyzer(self.photon_mode, self.reference_mode, self.alpha, n_max, self.omega_tau)

    # ``slots`` are the subspaces the analyzer resolves.  Each slot has up to
    # two basis kets u0, u1 and bra weights per outcome, so that
    #   <outcome, slot| = sum_j W[outcome, slot, j] e^{-i j phi} <u_j|.

    def slot_labels(self) -> list[int]:
        return [-1] if self.is_phase else list(range(self.n_max + 1))

    def slot_kets(self, spec: ModeSpec) -> list[list[tuple[int, ...] | None]]:
        """Occupations of (u0, u1) per slot, ordered like ``self.modes`` within ``spec``."""
        if self.is_phase:
            return [[(0,), (1,)]]
        kets: list[list[tuple[int, ...] | None]] = [[(0, 0), None]]
        for n in range(1, self.n_max + 1):
            kets.append([(0, n), (1, n - 1)])
        return kets

    def bra_weights(self) -> np.ndarray:
        if self.is_phase:
            s = 1 / math.sqrt(2)
            w = np.zeros((3, 1, 2))
            w[PLUS, 0] = (s, s)
            w[MINUS, 0] = (-s, s)
            return w
        w = np.zeros((3, self.n_max + 1, 2))
        w[INCONCLUSIVE, 0, 0] = 1.0
        for n in range(1, self.n_max + 1):
            e = RelPhaseEigenstate(n, 0.0, self.alpha)
            w[PLUS, n] = (e.norm * e.ratio, e.norm)
            w[MINUS, n] = (e.norm, -e.norm * e.ratio)
        return w

    def phase(self, phi):
        return np.asarray(phi) + self.omega_tau

    def projectors(self, phi: float) -> dict[Dichotomy, list[StateVector]]:
        """Explicit projector states per outcome, for brute-force evaluation."""
        if self.is_phase:
            p = PhaseProjector2D(phi, self.omega_tau)
            return {Dichotomy.PLUS: [pb_eigenstate(p, self.photon_mode)],
                    Dichotomy.MINUS: [pb_complement(p, self.photon_mode)],
                    Dichotomy.INCONCLUSIVE: []}
        out: dict[Dichotomy, list[StateVector]] = {d: [] for d in OUTCOMES}
        vac = ModeSpec([(self.photon_mode, 0), (self.reference_mode, 0)])
        out[Dichotomy.INCONCLUSIVE].append(make_fock(vac, (0, 0)))
        for n in range(1, self.n_max + 1):
            e = RelPhaseEigenstate(n, float(self.phase(phi)), self.alpha)
            out[Dichotomy.PLUS].append(xi_eigenstate(e, self.photon_mode, self.reference_mode))
            out[Dichotomy.MINUS].append(manifold_complement(e, self.photon_mode, self.reference_mode))
        return out


def dichotomize_arm(state: StateVector, arm_modes: Sequence[str | None], phi: float,
                    alpha: float | None = None, n_max: int | None = None,
                    omega_tau: float = 0.0) -> dict[Dichotomy, float]:
    """Outcome probabilities for one arm, by explicit projection.

    ``arm_modes`` is (photon mode, reference mode); a ``None`` reference gives
    the two-level phase analyzer.  The deficit ``1 - sum`` is truncation loss.
    """
    photon, ref = arm_modes
    arm = ArmAnalyzer(photon, ref, alpha, n_max, omega_tau).resolve(state.spec)
    return {d: projector_expectation(state, [(1.0, p) for p in ps])
            for d, ps in arm.projectors(phi).items()}


def joint_outcomes_bruteforce(state: StateVector, arm_c: ArmAnalyzer, arm_d: ArmAnalyzer,
                              phi_c: float, phi_d: float) -> np.ndarray:
    """3x3 outcome table (rows: arm c +/-/inc, cols: arm d) from tensor projectors."""
    from .fock import tensor
    arm_c, arm_d = arm_c.resolve(state.spec), arm_d.resolve(state.spec)
    pc, pd = arm_c.projectors(phi_c), arm_d.projectors(phi_d)
    out = np.zeros((3, 3))
    for i, oc in enumerate(OUTCOMES):
        for j, od in enumerate(OUTCOMES):
            out[i, j] = projector_expectation(state, [(1.0, tensor(a, b)) for a in pc[oc] for b in pd[od]])
    return out


class JointOutcomeModel:
    """Exact joint outcome distribution of two arm analyzers on a fixed state.

    The analyzer phases enter only through ``e^{-i j phi}`` factors, so the
    state is contracted once against the phase-free slot kets and each query
    is a small trigonometric sum.  Vectorized over arrays of phases.
    """

    def __init__(self, state: StateVector, arm_c: ArmAnalyzer, arm_d: ArmAnalyzer):
        spec = state.spec
        self.arm_c = arm_c = arm_c.resolve(spec)
        self.arm_d = arm_d = arm_d.resolve(spec)
        modes_c, modes_d = list(arm_c.modes), list(arm_d.modes)
        if set(modes_c) & set(modes_d) or set(modes_c) | set(modes_d) != set(spec.names):
            raise ValueError("arms must partition the state's modes")
        order = modes_c + modes_d
        psi = state.dense().reshape(spec.dims).transpose([spec.index(m) for m in order])
        dims_c = psi.shape[:len(modes_c)]
        dims_d = psi.shape[len(modes_c):]
        psi = psi.reshape(math.prod(dims_c), math.prod(dims_d))

        self.loss = state.loss
        self.wc = arm_c.bra_weights()
        self.wd = arm_d.bra_weights()
        # C[sc, jc, :] = <u_jc| psi  over the full d space
        self.C = self._gather_rows(psi, arm_c.slot_kets(spec), dims_c)
        kd = self._flat(arm_d.slot_kets(spec), dims_d)
        self.kd = kd
        Cd = np.where(kd[None, None] >= 0, self.C[:, :, np.clip(kd, 0, None)], 0)  # (Sc,2,Sd,2)
        G = np.einsum("asj,bti,sjti->asbtji", self.wc, self.wd, Cd)  # (3,Sc,3,Sd,jc,jd)
        G = G.reshape(3, G.shape[1], 3, G.shape[3], 4)
        # M[oc, od, k, k'] = sum_slots conj(G_k') G_k
        self.M = np.einsum("asbtk,asbtl->abkl", G, G.conj())
        self.slot_c = np.array(arm_c.slot_labels())
        self.slot_d = np.array(arm_d.slot_labels())
        # single-arm (c) marginal over the complete d space
        H = np.einsum("asj,sjr->asjr", self.wc, self.C)
        self.Qc = np.einsum("asjr,askr->asjk", H, H.conj())

    @staticmethod
    def _flat(kets, dims):
        out = np.full((len(kets), 2), -1, dtype=int)
        for s, pair in enumerate(kets):
            for j, occ in enumerate(pair):
                if occ is not None and all(n < d for n, d in zip(occ, dims)):
                    out[s, j] = np.ravel_multi_index(occ, dims)
        return out

    def _gather_rows(self, psi, kets, dims):
        k = self._flat(kets, dims)
        rows = psi[np.clip(k, 0, None)]
        rows[k < 0] = 0
        return rows

    def probabilities(self, phi_c, phi_d) -> np.ndarray:
        """P[..., outcome_c, outcome_d] for analyzer phases (broadcastable arrays)."""
        ac = np.asarray(self.arm_c.phase(phi_c), dtype=float)
        ad = np.asarray(self.arm_d.phase(phi_d), dtype=float)
        ac, ad = np.broadcast_arrays(ac, ad)
        j = np.array([(0, 0), (0, 1), (1, 0), (1, 1)])
        e = np.exp(-1j * (ac[..., None] * j[:, 0] + ad[..., None] * j[:, 1]))  # (...,4)
        ph = e[..., :, None] * e[..., None, :].conj()
        return np.einsum("abkl,...kl->...ab", self.M, ph).real

    def marginal_c(self, phi_c) -> np.ndarray:
        """P[..., outcome, slot] for arm c alone."""
        a = np.asarray(self.arm_c.phase(phi_c), dtype=float)
        e = np.exp(-1j * a[..., None] * np.arange(2))
        return np.einsum("asjk,...j,...k->...as", self.Qc, e, e.conj()).real

    def sample(self, phi_c, phi_d, rng: np.random.Generator):
        """Draw (outcome_c, slot_c, outcome_d, slot_d) per entry of the phase arrays.

        Arm c is sampled from its exact marginal, arm d from the conditional
        state left after arm c's outcome.  Slot labels are manifold numbers
        (``-1`` for the two-level phase analyzer).
        """
        ac = np.atleast_1d(np.asarray(self.arm_c.phase(phi_c), dtype=float))
        ad = np.atleast_1d(np.asarray(self.arm_d.phase(phi_d), dtype=float))
        ac, ad = np.broadcast_arrays(ac, ad)
        T = ac.size
        pc = self.marginal_c(ac).reshape(T, -1)
        ic = _draw(pc, rng)
        nslot_c = self.wc.shape[1]
        oc, sc = np.divmod(ic, nslot_c)

        ec = np.exp(-1j * ac[:, None] * np.arange(2))
        v = np.einsum("tj,tjr->tr", self.wc[oc, sc] * ec, self.C[sc])
        kd = self.kd
        vd = np.where(kd[None] >= 0, v[:, np.clip(kd, 0, None)], 0)  # (T,Sd,2)
        ed = np.exp(-1j * ad[:, None] * np.arange(2))
        amp = np.einsum("bsj,tsj,tj->tbs", self.wd, vd, ed)
        pd = (np.abs(amp) ** 2).reshape(T, -1)
        idn = _draw(pd, rng)
        od, sd = np.divmod(idn, self.wd.shape[1])
        return oc, self.slot_c[sc], od, self.slot_d[sd]


def _draw(p: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    cdf = np.cumsum(p, axis=1)
    u = rng.random(p.shape[0]) * cdf[:, -1]
    idx = (cdf < u[:, None]).sum(axis=1)
    return np.minimum(idx, p.shape[1] - 1)


# --- measurement compiler -------------------------------------------------

def manifold_basis(n: int) -> list[tuple[int, int]]:
    """|0,n>, |1,n-1>, ..., |n,0> in (photon, reference) order."""
    return [(k, n - k) for k in range(n + 1)]


def compile_measurement(n: int, phi: float, alpha: float, m: int, *, tol: float = 1e-10) -> np.ndarray:
    """Unitary on the manifold-n basis sending xi_n(phi) to |m, n-m>.

    The input frame is Gram-Schmidt over [xi, |0,n>, |1,n-1>, ..., |n,0>]
    (dependent vectors dropped); the output frame is |m, n-m> followed by the
    other basis kets in ascending order.
    """
    if n < 1:
        raise ValueError("n = 0 manifold has no relative-phase eigenstate")
    if not 0 < m <= n:
        raise ValueError(f"need 0 < m <= n, got m={m}, n={n}")
    d = n + 1
    xi = np.zeros(d, dtype=complex)
    e = RelPhaseEigenstate(n, phi, alpha)
    xi[0] = e.norm * e.ratio
    xi[1] = e.norm * np.exp(1j * phi)

    frame = []
    for v in [xi] + list(np.eye(d, dtype=complex)):
        w = v.copy()
        for u in frame:
            w = w - np.vdot(u, w) * u
        for u in frame:  # second pass keeps the frame orthogonal to 1e-16
            w = w - np.vdot(u, w) * u
        nw = np.linalg.norm(w)
        if nw > tol:
            frame.append(w / nw)
        if len(frame) == d:
            break
    vin = np.array(frame).T
    order = [m] + [k for k in range(d) if k != m]
    vout = np.eye(d, dtype=complex)[:, order]
    return vout @ vin.conj().T


def embed_manifold_unitary(u: np.ndarray, n: int, cutoff: int) -> np.ndarray:
    """Lift a manifold-n unitary to two modes with equal ``cutoff`` (identity elsewhere)."""
    if cutoff < n:
        raise ValueError("cutoff must hold the whole manifold")
    d = cutoff + 1
    full = np.eye(d * d, dtype=complex)
    idx = [p * d + r for p, r in manifold_basis(n)]
    full[np.ix_(idx, idx)] = u
    return full


def compiled_count_probability(state: StateVector, photon_mode: str, reference_mode: str,
                               n: int, phi: float, alpha: float, m: int) -> float:
    """Probability of counting (m, n-m) photons after the compiled unitary."""
    cut = max(n, state.spec.cutoff(photon_mode), state.spec.cutoff(reference_mode))
    big = state.embed(state.spec.with_cutoffs({photon_mode: cut, reference_mode: cut}))
    u = embed_manifold_unitary(compile_measurement(n, phi, alpha, m), n, cut)
    out = apply_local_operator(big, [photon_mode, reference_mode], u)
    target = make_fock(ModeSpec([(photon_mode, cut), (reference_mode, cut)]), (m, n - m))
    return projector_expectation(out, [(1.0, target)])
