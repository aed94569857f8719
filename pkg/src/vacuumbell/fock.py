"""Truncated multimode bosonic Fock-space algebra.

States are sparse maps from occupation tuples to complex amplitudes over an
ordered set of named modes, each with its own photon-number cutoff.  Every
operation returns a new value; nothing here mutates its inputs.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.special import gammainc, gammaln

PRUNE = 1e-15
NORM_EPS = 1e-12
LEAKAGE_BOUND = 1e-9


class LeakageWarning(UserWarning):
    """Raised (as a warning) when a unitary pushes amplitude past a cutoff."""


@dataclass(frozen=True)
class ModeSpec:
    """Ordered, named modes with photon-number cutoffs.

    >>> ModeSpec([("c", 1), ("d", 1)]).dims
    (2, 2)
    """

    modes: tuple[tuple[str, int], ...]

    def __init__(self, modes: Iterable[tuple[str, int]]):
        modes = tuple((str(name), int(cut)) for name, cut in modes)
        names = [m[0] for m in modes]
        if len(set(names)) != len(names):
            dup = sorted({n for n in names if names.count(n) > 1})
            raise ValueError(f"duplicate mode names: {dup}")
        for name, cut in modes:
            if cut < 0:
                raise ValueError(f"mode {name!r} has negative cutoff {cut}")
        object.__setattr__(self, "modes", modes)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(m[0] for m in self.modes)

    @property
    def cutoffs(self) -> tuple[int, ...]:
        return tuple(m[1] for m in self.modes)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(c + 1 for c in self.cutoffs)

    @property
    def size(self) -> int:
        return math.prod(self.dims)

    def __len__(self):
        return len(self.modes)

    def __contains__(self, name):
        return name in self.names

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"unknown mode {name!r}; modes are {self.names}") from None

    def cutoff(self, name: str) -> int:
        return self.modes[self.index(name)][1]

    def validate(self, occ: Sequence[int]) -> tuple[int, ...]:
        occ = tuple(int(n) for n in occ)
        if len(occ) != len(self.modes):
            raise ValueError(f"occupation {occ} has {len(occ)} entries, spec has {len(self.modes)} modes")
        for n, (name, cut) in zip(occ, self.modes):
            if n < 0:
                raise ValueError(f"negative occupation {n} in mode {name!r}")
            if n > cut:
                raise ValueError(f"occupation {n} exceeds cutoff {cut} of mode {name!r}")
        return occ

    def basis(self) -> list[tuple[int, ...]]:
        """All occupation tuples in row-major (last mode fastest) order."""
        return [tuple(int(i) for i in idx) for idx in np.ndindex(*self.dims)]

    def flat_index(self, occ: Sequence[int]) -> int:
        return int(np.ravel_multi_index(tuple(occ), self.dims))

    def concat(self, other: "ModeSpec") -> "ModeSpec":
        clash = set(self.names) & set(other.names)
        if clash:
            raise ValueError(f"mode-name collision: {sorted(clash)}")
        return ModeSpec(self.modes + other.modes)

    def with_cutoffs(self, cutoffs: Mapping[str, int]) -> "ModeSpec":
        for name in cutoffs:
            self.index(name)
        return ModeSpec((name, cutoffs.get(name, cut)) for name, cut in self.modes)


class StateVector:
    """Sparse pure state on a :class:`ModeSpec`.

    ``loss`` is the probability discarded by truncation before renormalizing,
    ``leakage`` the norm lost to cutoffs by later operations.  Both accumulate
    through tensor products and operator applications.
    """

    __slots__ = ("spec", "_amps", "loss", "leakage", "_dense_cache")

    def __init__(self, spec: ModeSpec, amplitudes: Mapping, *, prune: float = PRUNE,
                 loss: float = 0.0, leakage: float = 0.0):
        amps = {}
        for occ, amp in amplitudes.items():
            amp = complex(amp)
            if abs(amp) <= prune:
                continue
            occ = spec.validate(occ)
            amps[occ] = amps.get(occ, 0j) + amp
        self.spec = spec
        self._amps = MappingProxyType(amps)
        self.loss = float(loss)
        self.leakage = float(leakage)
        self._dense_cache = None

    @property
    def amplitudes(self) -> Mapping[tuple[int, ...], complex]:
        return self._amps

    def __getitem__(self, occ) -> complex:
        return self._amps.get(tuple(occ), 0j)

    def __len__(self):
        return len(self._amps)

    def __repr__(self):
        return f"StateVector({self.spec.names}, {len(self)} terms, norm2={self.norm2():.15g})"

    def items(self):
        return self._amps.items()

    def norm2(self) -> float:
        return float(sum(abs(a) ** 2 for a in self._amps.values()))

    def norm(self) -> float:
        return math.sqrt(self.norm2())

    def normalize(self) -> "StateVector":
        n2 = self.norm2()
        if n2 == 0.0:
            raise ValueError("cannot normalize the zero vector")
        s = 1.0 / math.sqrt(n2)
        return StateVector(self.spec, {k: v * s for k, v in self._amps.items()},
                           loss=self.loss, leakage=self.leakage)

    def scaled(self, factor: complex) -> "StateVector":
        return StateVector(self.spec, {k: v * factor for k, v in self._amps.items()},
                           loss=self.loss, leakage=self.leakage)

    def dense(self) -> np.ndarray:
        vec = np.zeros(self.spec.size, dtype=complex)
        for occ, amp in self._amps.items():
            vec[self.spec.flat_index(occ)] = amp
        return vec

    @classmethod
    def from_dense(cls, spec: ModeSpec, vec, **kw) -> "StateVector":
        vec = np.asarray(vec, dtype=complex).reshape(-1)
        if vec.size != spec.size:
            raise ValueError(f"dense vector has {vec.size} entries, spec needs {spec.size}")
        nz = np.flatnonzero(vec)
        return cls(spec, {tuple(int(i) for i in np.unravel_index(k, spec.dims)): vec[k] for k in nz}, **kw)

    def embed(self, spec: ModeSpec) -> "StateVector":
        """Re-express on ``spec`` (same mode names, any order, possibly larger cutoffs)."""
        if set(spec.names) != set(self.spec.names):
            raise ValueError(f"mode sets differ: {self.spec.names} vs {spec.names}")
        perm = [self.spec.index(n) for n in spec.names]
        return StateVector(spec, {tuple(occ[i] for i in perm): a for occ, a in self._amps.items()},
                           loss=self.loss, leakage=self.leakage)

    def relabel(self, mapping: Mapping[str, str], order: Sequence[str] | None = None) -> "StateVector":
        """Rename modes; amplitudes are untouched apart from reordering to ``order``."""
        renamed = ModeSpec((mapping.get(n, n), c) for n, c in self.spec.modes)
        out = StateVector(renamed, dict(self._amps), loss=self.loss, leakage=self.leakage)
        if order is not None:
            out = out.embed(ModeSpec((n, renamed.cutoff(n)) for n in order))
        return out

    def mean_number(self, modes: Iterable[str] | None = None) -> float:
        idx = [self.spec.index(m) for m in (modes if modes is not None else self.spec.names)]
        return float(sum(abs(a) ** 2 * sum(occ[i] for i in idx) for occ, a in self._amps.items()))

    def dump(self) -> str:
        """Debug dump: ``(occ)<TAB>re<TAB>im`` per basis state, sorted by occupation."""
        return "".join(f"{_fmt_occ(occ)}\t{_fmt_float(a.real)}\t{_fmt_float(a.imag)}\n"
                       for occ, a in sorted(self._amps.items()))


def _fmt_occ(occ) -> str:
    return "(" + ",".join(str(n) for n in occ) + ")"


def _fmt_float(x: float) -> str:
    return repr(float(x) + 0.0)


def dump_matrix(matrix) -> str:
    """Row-major matrix dump, one row per line, re/im pairs tab-separated."""
    m = np.asarray(matrix, dtype=complex)
    return "".join("\t".join(f"{_fmt_float(z.real)}\t{_fmt_float(z.imag)}" for z in row) + "\n" for row in m)


def make_fock(spec: ModeSpec, occ: Sequence[int]) -> StateVector:
    return StateVector(spec, {spec.validate(occ): 1.0})


def make_vacuum(spec: ModeSpec) -> StateVector:
    return make_fock(spec, (0,) * len(spec))


def superpose(terms: Iterable[tuple[complex, StateVector]]) -> StateVector:
    """Linear combination of states sharing one spec (no renormalization)."""
    terms = list(terms)
    spec = terms[0][1].spec
    acc: dict = {}
    for c, st in terms:
        if st.spec != spec:
            raise ValueError("superpose needs identical mode specs")
        for occ, a in st.items():
            acc[occ] = acc.get(occ, 0j) + c * a
    return StateVector(spec, acc, loss=max(s.loss for _, s in terms),
                       leakage=max(s.leakage for _, s in terms))


# --- coherent states -------------------------------------------------------

def coherent_tail(alpha: float, cutoff: int) -> float:
    """Poisson mass above ``cutoff`` for mean photon number ``alpha**2``."""
    lam = float(alpha) ** 2
    if lam == 0.0:
        return 0.0
    # regularized lower incomplete gamma P(N+1, lam) == Pr[n >= N+1]
    return float(gammainc(cutoff + 1, lam))


def coherent_cutoff(alpha: float, tail_bound: float) -> int:
    """Smallest cutoff whose discarded Poisson tail is below ``tail_bound``."""
    if not 0.0 < tail_bound < 1.0:
        raise ValueError("tail_bound must lie in (0, 1)")
    lam = float(alpha) ** 2
    n = max(0, int(lam))
    while coherent_tail(alpha, n) >= tail_bound:
        n += 1 + int(math.sqrt(lam) / 8)
    while n > 0 and coherent_tail(alpha, n - 1) < tail_bound:
        n -= 1
    return n


@dataclass(frozen=True)
class CoherentParams:
    """Coherent amplitude (real) plus truncation policy.

    ``cutoff=None`` lets :func:`make_coherent` pick the smallest cutoff that
    honours ``tail_bound``.
    """

    alpha: float
    cutoff: int | None = None
    tail_bound: float = 1e-12

    def resolved_cutoff(self) -> int:
        need = coherent_cutoff(self.alpha, self.tail_bound)
        if self.cutoff is None:
            return need
        if self.cutoff < need:
            raise ValueError(f"cutoff {self.cutoff} leaves Poisson tail "
                             f"{coherent_tail(self.alpha, self.cutoff):.3g} >= {self.tail_bound:g}; "
                             f"required cutoff is {need}")
        return self.cutoff


def coherent_amplitudes(alpha: float, cutoff: int) -> np.ndarray:
    """Unnormalized truncated series e^{-a^2/2} a^n / sqrt(n!), n = 0..cutoff."""
    n = np.arange(cutoff + 1)
    alpha = float(alpha)
    if alpha == 0.0:
        out = np.zeros(cutoff + 1)
        out[0] = 1.0
        return out
    logmag = -alpha**2 / 2 + n * math.log(abs(alpha)) - 0.5 * gammaln(n + 1)
    return np.exp(logmag) * np.sign(alpha) ** n


def make_coherent(mode: str, params: CoherentParams, spec: ModeSpec | None = None) -> StateVector:
    """Truncated, renormalized coherent state in ``mode``; other modes of ``spec`` in vacuum.

    The discarded probability before renormalization is stored in ``.loss``.
    """
    cut = params.resolved_cutoff()
    if spec is None:
        spec = ModeSpec([(mode, cut)])
    elif spec.cutoff(mode) < cut:
        raise ValueError(f"mode {mode!r} cutoff {spec.cutoff(mode)} below required {cut} "
                         f"for tail_bound {params.tail_bound:g}")
    c = coherent_amplitudes(params.alpha, cut)
    kept = float(np.sum(c**2))
    i = spec.index(mode)
    base = [0] * len(spec)
    amps = {}
    for n, cn in enumerate(c / math.sqrt(kept)):
        occ = list(base)
        occ[i] = n
        amps[tuple(occ)] = cn
    return StateVector(spec, amps, loss=1.0 - kept)


# --- products, overlaps, operators ----------------------------------------

def tensor(a: StateVector, b: StateVector) -> StateVector:
    spec = a.spec.concat(b.spec)
    amps = {oa + ob: va * vb for oa, va in a.items() for ob, vb in b.items()}
    return StateVector(spec, amps, loss=1 - (1 - a.loss) * (1 - b.loss),
                       leakage=a.leakage + b.leakage)


def inner_product(a: StateVector, b: StateVector) -> complex:
    """<a|b>, conjugate-linear in ``a``."""
    if a.spec != b.spec:
        raise ValueError(f"spec mismatch: {a.spec.names} vs {b.spec.names}")
    if len(a) > len(b):
        return sum(a[k].conjugate() * v for k, v in b.items())
    return sum(v.conjugate() * b[k] for k, v in a.items())


def _split(spec: ModeSpec, target: Sequence[str]):
    tidx = [spec.index(m) for m in target]
    ridx = [i for i in range(len(spec)) if i not in tidx]
    return tidx, ridx


def apply_local_operator(state: StateVector, target_modes: Sequence[str], matrix, *,
                         unitary: bool = True, leakage_bound: float = LEAKAGE_BOUND) -> StateVector:
    """Apply ``matrix`` on ``target_modes`` (identity elsewhere).

    ``matrix`` is indexed row-major over the target modes' occupations, in the
    order given.  With ``unitary=True`` the norm lost (cutoff leakage) is
    added to ``.leakage`` and a :class:`LeakageWarning` is issued above
    ``leakage_bound``.
    """
    spec = state.spec
    tidx, ridx = _split(spec, target_modes)
    tdims = tuple(spec.dims[i] for i in tidx)
    dim = math.prod(tdims)
    m = np.asarray(matrix, dtype=complex)
    if m.shape != (dim, dim):
        raise ValueError(f"matrix shape {m.shape} does not match target dimension {dim}")

    blocks: dict[tuple, np.ndarray] = {}
    for occ, amp in state.items():
        rest = tuple(occ[i] for i in ridx)
        vec = blocks.get(rest)
        if vec is None:
            vec = blocks[rest] = np.zeros(dim, dtype=complex)
        vec[np.ravel_multi_index(tuple(occ[i] for i in tidx), tdims)] += amp

    amps = {}
    for rest, vec in blocks.items():
        out = m @ vec
        for k in np.flatnonzero(np.abs(out) > PRUNE):
            occ = [0] * len(spec)
            for i, n in zip(tidx, np.unravel_index(k, tdims)):
                occ[i] = int(n)
            for i, n in zip(ridx, rest):
                occ[i] = n
            amps[tuple(occ)] = out[k]
    result = StateVector(spec, amps, loss=state.loss, leakage=state.leakage)
    if unitary:
        lost = state.norm2() - result.norm2()
        if lost > leakage_bound:
            warnings.warn(f"cutoff leakage {lost:.3g} on modes {tuple(target_modes)}", LeakageWarning,
                          stacklevel=2)
        result.leakage = state.leakage + max(lost, 0.0)
    return result


DENSE_LIMIT = 200_000


def _dense_tensor(state: StateVector) -> np.ndarray:
    # states are immutable, so the dense view is built once and kept read-only
    if state._dense_cache is None:
        t = state.dense().reshape(state.spec.dims)
        t.flags.writeable = False
        state._dense_cache = t
    return state._dense_cache


def _projector_prob_dense(psi: np.ndarray, spec: ModeSpec, proj: StateVector) -> float:
    axes = [spec.index(m) for m in proj.spec.names]
    sub = tuple(spec.dims[i] for i in axes)
    p = np.zeros(sub, dtype=complex)
    for occ, a in proj.items():
        if all(n < d for n, d in zip(occ, sub)):
            p[occ] = a
    rest = np.tensordot(p.conj(), psi, axes=(list(range(len(axes))), axes))
    return float(np.vdot(rest, rest).real)


def partial_overlap(state: StateVector, proj: StateVector) -> dict[tuple, complex]:
    """(<proj| x I) |state>, keyed by the occupations of the remaining modes."""
    tidx, ridx = _split(state.spec, proj.spec.names)
    out: dict[tuple, complex] = {}
    for occ, amp in state.items():
        c = proj[tuple(occ[i] for i in tidx)]
        if c:
            rest = tuple(occ[i] for i in ridx)
            out[rest] = out.get(rest, 0j) + c.conjugate() * amp
    return out


def projector_expectation(state: StateVector, projector_states: Iterable[tuple[float, StateVector]],
                          *, unit_tol: float = 1e-10) -> float:
    """<state| sum_k w_k |p_k><p_k| x I |state> for unit-norm ``p_k`` on a subset of modes.

    Small states are contracted densely, larger ones through the sparse map;
    both routes give the same number.
    """
    dense = state.spec.size <= DENSE_LIMIT
    psi = _dense_tensor(state) if dense else None
    total = 0.0
    for w, p in projector_states:
        n2 = p.norm2()
        if abs(n2 - 1.0) > unit_tol:
            raise ValueError(f"projector state not unit norm (norm^2 = {n2:.15g})")
        if dense:
            total += w * _projector_prob_dense(psi, state.spec, p)
        else:
            total += w * sum(abs(v) ** 2 for v in partial_overlap(state, p).values())
    return float(total)
