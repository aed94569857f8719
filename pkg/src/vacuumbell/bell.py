"""CHSH analytics, the local-deterministic bound, and a two-station Monte Carlo.

The Monte Carlo models two measurement stations whose local phase references
(slave lasers) random-walk away from each other and are reset to a common
phase every ``resync_period`` trials.  Outcomes are sampled from the exact
quantum distribution of the chosen state and analyzers, evaluated at the
effective analyzer phase ``setting + drift``.

Trial sharding: shard ``i`` draws from ``SeedSequence(seed).spawn(shards)[i]``
and covers a contiguous block of trials whose start is a multiple of the
resync period, so every shard begins freshly synchronized.  The result
depends on ``(seed, shards)`` but not on how shards are executed.
"""

from __future__ import annotations

import csv
import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import states
from .measure import INCONCLUSIVE, MINUS, OUTCOMES, PLUS, ArmAnalyzer, Dichotomy, JointOutcomeModel

PAIR_NAMES = ("ab", "abp", "apb", "apbp")
PAIR_SIGNS = (1, -1, 1, 1)
TSIRELSON = 2 * math.sqrt(2)
LHV_BOUND = 2.0
DAMPING_BOUNDARY = math.log(2)  # relative-phase variance where 2*sqrt2*exp(-v/2) == 2
CHUNK = 20_000


@dataclass(frozen=True)
class ChshSettings:
    a: float = 0.0
    a_prime: float = math.pi / 2
    b: float = math.pi / 4
    b_prime: float = 3 * math.pi / 4

    def pairs(self) -> list[tuple[float, float]]:
        return [(self.a, self.b), (self.a, self.b_prime), (self.a_prime, self.b), (self.a_prime, self.b_prime)]


def chsh_value(settings: ChshSettings, E: Callable[[float], float]) -> float:
    """S = |E(a-b) - E(a-b') + E(a'-b) + E(a'-b')| for a correlation depending on the phase difference."""
    return abs(sum(s * E(x - y) for s, (x, y) in zip(PAIR_SIGNS, settings.pairs())))


def chsh_from_correlations(E_pairs: Sequence[float]) -> float:
    return abs(sum(s * e for s, e in zip(PAIR_SIGNS, E_pairs)))


def lhv_strategies(settings: ChshSettings) -> list[tuple[tuple[int, int], tuple[int, int], float]]:
    """All 16 local deterministic strategies with their CHSH values.

    Each station maps each of its settings to +/-1; physically identical
    settings must receive the same value.
    """
    out = []
    for A in itertools.product((1, -1), repeat=2):
        for B in itertools.product((1, -1), repeat=2):
            if settings.a == settings.a_prime and A[0] != A[1]:
                continue
            if settings.b == settings.b_prime and B[0] != B[1]:
                continue
            corr = [A[0] * B[0], A[0] * B[1], A[1] * B[0], A[1] * B[1]]
            out.append((A, B, chsh_from_correlations(corr)))
    return out


def lhv_max(settings: ChshSettings) -> float:
    return max(s for _, _, s in lhv_strategies(settings))


# --- distribution level ---------------------------------------------------

def build_model(mode: str, alpha2: float | None = None, tail_bound: float = states.DEFAULT_TAIL,
                omega_tau_c: float = 0.0, omega_tau_d: float = 0.0) -> JointOutcomeModel:
    """Exact outcome model for the phase (two-mode) or relative-phase (four-mode) experiment."""
    if mode == "phase":
        st = states.propagated_split(omega_tau_c, omega_tau_d)
        return JointOutcomeModel(st, ArmAnalyzer("c", omega_tau=omega_tau_c),
                                 ArmAnalyzer("d", omega_tau=omega_tau_d))
    if mode == "relative-phase":
        if alpha2 is None:
            raise ValueError("relative-phase mode needs alpha2")
        st = states.propagated_after_pbs(alpha2, omega_tau_c, omega_tau_d, tail_bound)
        alpha = math.sqrt(alpha2)
        return JointOutcomeModel(st, ArmAnalyzer("cV", "cH", alpha), ArmAnalyzer("dH", "dV", alpha))
    raise ValueError(f"unknown mode {mode!r}; use 'phase' or 'relative-phase'")


def correlation_from_table(p) -> np.ndarray:
    """E on conclusive outcomes from P[..., c, d] tables (nan where none conclusive)."""
    p = np.asarray(p)
    num = p[..., PLUS, PLUS] + p[..., MINUS, MINUS] - p[..., PLUS, MINUS] - p[..., MINUS, PLUS]
    den = p[..., :2, :2].sum(axis=(-1, -2))
    with np.errstate(invalid="ignore", divide="ignore"):
        return num / den


def exact_correlation(model: JointOutcomeModel, phi_c, phi_d):
    return correlation_from_table(model.probabilities(phi_c, phi_d))


def smeared_table(model: JointOutcomeModel, phi_c: float, phi_d: float, sigma: float,
                  order: int = 60) -> np.ndarray:
    """Outcome table averaged over a Gaussian relative-phase error of s.d. ``sigma``."""
    if sigma == 0:
        return model.probabilities(phi_c, phi_d)
    x, w = np.polynomial.hermite_e.hermegauss(order)
    w = w / w.sum()
    p = model.probabilities(phi_c + sigma * x, phi_d)
    return np.tensordot(w, p, axes=(0, 0))


def damped_correlation(model: JointOutcomeModel, delta: float, sigma: float, order: int = 60) -> float:
    """E(delta) with Gaussian relative-phase noise, by Gauss-Hermite quadrature."""
    return float(correlation_from_table(smeared_table(model, delta, 0.0, sigma, order)))


def damping_factor(rel_variance) -> np.ndarray:
    return np.exp(-np.asarray(rel_variance) / 2)


def expected_chsh(model: JointOutcomeModel, settings: ChshSettings, rel_variances: Iterable[float] = (0.0,),
                  weights: Iterable[float] | None = None) -> float:
    """CHSH value of the trial-averaged outcome tables for a mixture of drift variances."""
    v = np.asarray(list(rel_variances), dtype=float)
    w = np.ones_like(v) if weights is None else np.asarray(list(weights), dtype=float)
    w = w / w.sum()
    E = []
    for x, y in settings.pairs():
        tab = sum(wi * smeared_table(model, x, y, math.sqrt(vi)) for wi, vi in zip(w, v))
        E.append(float(correlation_from_table(tab)))
    return chsh_from_correlations(E)


def no_signaling_gap(model: JointOutcomeModel, settings: ChshSettings) -> float:
    """Largest change of one station's marginal caused by the other station's setting."""
    gap = 0.0
    for x in (settings.a, settings.a_prime):
        m = [model.probabilities(x, y).sum(axis=1) for y in (settings.b, settings.b_prime)]
        gap = max(gap, float(np.abs(m[0] - m[1]).max()))
    for y in (settings.b, settings.b_prime):
        m = [model.probabilities(x, y).sum(axis=0) for x in (settings.a, settings.a_prime)]
        gap = max(gap, float(np.abs(m[0] - m[1]).max()))
    return gap


# --- Monte Carlo ----------------------------------------------------------

@dataclass(frozen=True)
class DriftModel:
    """Per-trial Gaussian phase steps at each station, reset every ``resync_period`` trials."""

    sigma_step: float = 0.0
    resync_period: int = 1_000_000_000
    seed: int = 0

    def __post_init__(self):
        if self.sigma_step < 0:
            raise ValueError("sigma_step must be >= 0")
        if self.resync_period < 1:
            raise ValueError("resync_period must be >= 1")

    def rel_variance(self, position) -> np.ndarray:
        """Variance of drift_c - drift_d at 0-based position within a sync cycle."""
        return 2 * (np.asarray(position) + 1) * self.sigma_step**2

    def rel_variances(self, trials: int, max_points: int = 256) -> tuple[np.ndarray, np.ndarray]:
        """Distinct relative variances met in a run of ``trials`` with their trial counts."""
        P = self.resync_period
        full, rem = divmod(trials, P)
        npos = min(P, trials)
        counts = np.full(npos, full, dtype=float)
        counts[:rem] += 1
        pos = np.arange(npos)
        if npos > max_points:
            edges = np.linspace(0, npos, max_points + 1).astype(int)
            pos = np.array([(lo + hi - 1) / 2 for lo, hi in zip(edges[:-1], edges[1:])])
            counts = np.array([counts[lo:hi].sum() for lo, hi in zip(edges[:-1], edges[1:])])
        return self.rel_variance(pos), counts


@dataclass
class TrialRecord:
    trial_index: int
    setting_c: float
    setting_d: float
    drift_c: float
    drift_d: float
    outcome_c: Dichotomy
    outcome_d: Dichotomy
    n_c: int | None = None
    n_d: int | None = None


@dataclass
class RunSummary:
    """Aggregated counts and CHSH estimate.  ``counts[pair][c][d]`` over (+, -, inconclusive)."""

    mode: str
    trials: int
    counts: dict[str, list[list[int]]]
    E: dict[str, float | None]
    E_err: dict[str, float | None]
    S: float | None
    S_err: float | None
    inconclusive_fraction: float
    drift_rms_c: float = 0.0
    drift_rms_d: float = 0.0
    drift_rel_var: float = 0.0
    damping_estimate: float = 1.0
    S_conditional: float | None = None
    seed: int | None = None
    alpha2: float | None = None
    flags: list[str] = field(default_factory=list)
    records: list[TrialRecord] | None = field(default=None, repr=False, compare=False)

    @property
    def violation(self) -> bool:
        return self.S is not None and self.S > LHV_BOUND

    def to_dict(self) -> dict:
        """Flat key/value view; key names are part of the public output format."""
        d = {"mode": self.mode, "trials": self.trials, "seed": self.seed, "alpha2": self.alpha2,
             "S": self.S, "S_err": self.S_err, "S_available": self.S is not None,
             "violation": self.violation, "inconclusive_fraction": self.inconclusive_fraction,
             "drift_rms_c": self.drift_rms_c, "drift_rms_d": self.drift_rms_d,
             "drift_rel_var": self.drift_rel_var, "damping_estimate": self.damping_estimate,
             "S_conditional": self.S_conditional, "flags": ";".join(self.flags)}
        labels = [o.value for o in OUTCOMES]
        for name in PAIR_NAMES:
            d[f"E_{name}"] = self.E[name]
            d[f"E_{name}_err"] = self.E_err[name]
            tab = self.counts[name]
            d[f"n_{name}"] = int(sum(map(sum, tab)))
            for i, lc in enumerate(labels):
                for j, ld in enumerate(labels):
                    d[f"n_{name}_{_short(lc)}{_short(ld)}"] = int(tab[i][j])
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False)


def _short(label: str) -> str:
    return {"+": "p", "-": "m"}.get(label, "i")


def _aggregate(mode, pair, oc, od, drift_c, drift_d, seed=None, alpha2=None) -> RunSummary:
    trials = int(pair.size)
    counts, E, E_err, flags = {}, {}, {}, []
    for k, name in enumerate(PAIR_NAMES):
        sel = pair == k
        tab = np.zeros((3, 3), dtype=np.int64)
        np.add.at(tab, (oc[sel], od[sel]), 1)
        counts[name] = tab.tolist()
        n = int(tab[:2, :2].sum())
        if n == 0:
            E[name] = E_err[name] = None
            flags.append(f"no_conclusive_{name}")
            continue
        e = (tab[0, 0] + tab[1, 1] - tab[0, 1] - tab[1, 0]) / n
        E[name] = float(e)
        E_err[name] = float(math.sqrt(max(1 - e * e, 0.0) / n))
    if any(E[n] is None for n in PAIR_NAMES):
        S = S_err = None
    else:
        S = chsh_from_correlations([E[n] for n in PAIR_NAMES])
        S_err = math.sqrt(sum(E_err[n] ** 2 for n in PAIR_NAMES))
    inc = float(np.mean((oc == INCONCLUSIVE) | (od == INCONCLUSIVE))) if trials else 0.0
    rel = drift_c - drift_d
    return RunSummary(mode=mode, trials=trials, counts=counts, E=E, E_err=E_err, S=S, S_err=S_err,
                      inconclusive_fraction=inc,
                      drift_rms_c=float(np.sqrt(np.mean(drift_c**2))) if trials else 0.0,
                      drift_rms_d=float(np.sqrt(np.mean(drift_d**2))) if trials else 0.0,
                      drift_rel_var=float(np.mean(rel**2)) if trials else 0.0,
                      damping_estimate=float(np.mean(np.cos(rel))) if trials else 1.0,
                      seed=seed, alpha2=alpha2, flags=flags)


def _block_drift(steps: np.ndarray, start: int, period: int) -> np.ndarray:
    """Cumulative steps, restarted at every multiple of ``period`` (global trial index)."""
    cs = np.cumsum(steps, axis=0)
    idx = np.arange(steps.shape[0]) + start
    block_first = (idx // period) * period - start  # local index of the cycle's first trial
    base = np.where((block_first > 0)[:, None], cs[np.maximum(block_first - 1, 0)], 0.0)
    return cs - base


def _shard_bounds(trials: int, shards: int, period: int) -> list[tuple[int, int]]:
    if shards <= 1 or trials <= period:
        return [(0, trials)]
    cycles = math.ceil(trials / period)
    per = math.ceil(cycles / shards)
    bounds = []
    for i in range(shards):
        lo, hi = i * per * period, min((i + 1) * per * period, trials)
        if lo < hi:
            bounds.append((lo, hi))
    return bounds


def run_stations(mode: str, settings: ChshSettings = ChshSettings(), alpha2: float | None = None,
                 trials: int = 100_000, drift: DriftModel = DriftModel(), *, shards: int = 1,
                 record: bool = False, tail_bound: float = states.DEFAULT_TAIL,
                 model: JointOutcomeModel | None = None) -> RunSummary:
    """Simulate ``trials`` Bell-test rounds; deterministic in (drift.seed, shards)."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if mode == "relative-phase" and alpha2 is None:
        raise ValueError("relative-phase mode needs alpha2")
    if model is None:
        model = build_model(mode, alpha2, tail_bound)
    sc = np.array([settings.a, settings.a, settings.a_prime, settings.a_prime])
    sd = np.array([settings.b, settings.b_prime, settings.b, settings.b_prime])

    bounds = _shard_bounds(trials, shards, drift.resync_period)
    children = np.random.SeedSequence(drift.seed).spawn(len(bounds))
    parts = []
    tables = np.zeros((4, 3, 3))  # exact outcome tables summed over realized phases
    for (lo, hi), child in zip(bounds, children):
        rng = np.random.default_rng(child)
        T = hi - lo
        pair = rng.integers(0, 4, T)
        steps = rng.normal(0.0, drift.sigma_step, (T, 2)) if drift.sigma_step > 0 else np.zeros((T, 2))
        dr = _block_drift(steps, lo, drift.resync_period)
        out = [np.empty(T, dtype=int) for _ in range(4)]
        for c0 in range(0, T, CHUNK):
            c1 = min(c0 + CHUNK, T)
            phi_c = sc[pair[c0:c1]] + dr[c0:c1, 0]
            phi_d = sd[pair[c0:c1]] + dr[c0:c1, 1]
            res = model.sample(phi_c, phi_d, rng)
            for o, r in zip(out, res):
                o[c0:c1] = r
            np.add.at(tables, pair[c0:c1], model.probabilities(phi_c, phi_d))
        parts.append((pair, dr, *out))

    pair = np.concatenate([p[0] for p in parts])
    dr = np.concatenate([p[1] for p in parts])
    oc, nc, od, nd = (np.concatenate([p[i] for p in parts]) for i in range(2, 6))
    summary = _aggregate(mode, pair, oc, od, dr[:, 0], dr[:, 1], seed=drift.seed, alpha2=alpha2)
    # what S would be with infinitely many outcomes at exactly these drifts and settings
    summary.S_conditional = chsh_from_correlations(correlation_from_table(tables))
    if record:
        rel = mode == "relative-phase"
        summary.records = [
            TrialRecord(i, float(sc[pair[i]]), float(sd[pair[i]]), float(dr[i, 0]), float(dr[i, 1]),
                        OUTCOMES[oc[i]], OUTCOMES[od[i]],
                        int(nc[i]) if rel else None, int(nd[i]) if rel else None)
            for i in range(trials)]
    return summary


def summarize(records: Sequence[TrialRecord], settings: ChshSettings = ChshSettings(),
              mode: str = "records") -> RunSummary:
    """Aggregate trial records; setting pairs are matched against ``settings``."""
    if not records:
        raise ValueError("no records to summarize")
    lookup = {}
    for k, p in enumerate(settings.pairs()):
        lookup.setdefault(p, k)
    idx = {o: i for i, o in enumerate(OUTCOMES)}
    try:
        pair = np.array([lookup[(r.setting_c, r.setting_d)] for r in records])
    except KeyError as exc:
        raise ValueError(f"record setting pair {exc.args[0]} not among the CHSH settings") from None
    oc = np.array([idx[Dichotomy(r.outcome_c)] for r in records])
    od = np.array([idx[Dichotomy(r.outcome_d)] for r in records])
    dc = np.array([r.drift_c for r in records], dtype=float)
    dd = np.array([r.drift_d for r in records], dtype=float)
    return _aggregate(mode, pair, oc, od, dc, dd)


TRIAL_LOG_HEADER = ["trial", "setting_c", "setting_d", "drift_c", "drift_d", "outcome_c", "outcome_d", "n_c", "n_d"]


def write_trial_log(path, records: Iterable[TrialRecord]):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRIAL_LOG_HEADER)
        for r in records:
            w.writerow([r.trial_index, repr(r.setting_c), repr(r.setting_d), repr(r.drift_c), repr(r.drift_d),
                        Dichotomy(r.outcome_c).value, Dichotomy(r.outcome_d).value,
                        "" if r.n_c is None else r.n_c, "" if r.n_d is None else r.n_d])


def read_trial_log(path) -> list[TrialRecord]:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(TrialRecord(int(row["trial"]), float(row["setting_c"]), float(row["setting_d"]),
                                   float(row["drift_c"]), float(row["drift_d"]),
                                   Dichotomy(row["outcome_c"]), Dichotomy(row["outcome_d"]),
                                   int(row["n_c"]) if row["n_c"] else None,
                                   int(row["n_d"]) if row["n_d"] else None))
    return out
