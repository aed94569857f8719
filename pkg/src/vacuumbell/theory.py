"""Closed-form probabilities and the convergence curves built from them.

The relative-phase marginal for manifold n is

    P(n) = exp(-a2) a2^(n-1) / [(1 + n/a2) (n-1)!]

i.e. a Poisson weight at n-1 damped by 1/(1 + n/a2).  The variant with a
growing exp(+a2) is not normalizable and disagrees with explicit projection;
``printed_sign=True`` evaluates it anyway so self-tests can show they catch it.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.special import gammaln
from scipy.stats import poisson

FIG3_GRID = np.geomspace(0.1, 30.0, 60)
FIG4_GRID = np.linspace(-np.pi, np.pi, 181)


@dataclass(frozen=True)
class CurvePoint:
    x: float
    y: float


@dataclass(frozen=True)
class Fig3Point:
    alpha2: float
    lower: float
    upper: float


def p_marginal_phase() -> float:
    return 0.5


def p_joint_phase(phi_c, phi_d):
    return 0.5 * np.sin((np.asarray(phi_c) - np.asarray(phi_d)) / 2) ** 2


def correlation_E(delta):
    """Dichotomic correlation -cos(delta) of the singlet-like state."""
    return -np.cos(delta)


def _stirlerr(k):
    # log k! - [(k + 1/2) log k - k + log(2 pi)/2], asymptotic series for k > 15
    k = np.asarray(k, dtype=float)
    k2 = k * k
    return (1 / 12 - (1 / 360 - (1 / 1260 - (1 / 1680 - 1 / (1188 * k2)) / k2) / k2) / k2) / k


def poisson_logpmf(k, lam: float):
    """log Poisson pmf, accurate for large ``lam`` where gammaln cancellation bites.

    Uses the deviance form  -stirlerr(k) - lam*[(1+t)log1p(t) - t] - log(2 pi k)/2,
    t = (k - lam)/lam, for k > 15 and the direct formula below that.
    """
    k = np.asarray(k, dtype=float)
    out = np.empty_like(k)
    small = k <= 15
    ks = k[small]
    out[small] = -lam + ks * math.log(lam) - gammaln(ks + 1)
    kb = k[~small]
    t = (kb - lam) / lam
    dev = lam * ((1 + t) * np.log1p(t) - t)
    out[~small] = -_stirlerr(kb) - dev - 0.5 * np.log(2 * np.pi * kb)
    return out


def p_marginal_rel(n, alpha2: float, printed_sign: bool = False):
    n = np.asarray(n)
    if np.any(n < 1):
        raise ValueError("relative-phase marginal is defined for n >= 1 only")
    if not alpha2 > 0:
        raise ValueError("alpha2 must be positive")
    logp = poisson_logpmf(n - 1, alpha2) - np.log1p(n / alpha2)
    if printed_sign:
        logp = logp + 2 * alpha2
    return np.exp(logp)


def p_joint_rel(n_c, n_d, phi_c, phi_d, alpha2: float, printed_sign: bool = False):
    return (2 * p_marginal_rel(n_c, alpha2, printed_sign) * p_marginal_rel(n_d, alpha2, printed_sign)
            * np.sin((np.asarray(phi_c) - np.asarray(phi_d)) / 2) ** 2)


def summation_window(alpha2: float, tail_tol: float) -> tuple[int, int]:
    """Manifolds [lo, hi] outside of which the Poisson mass is below ``tail_tol``.

    Since 1/(1 + n/a2) <= 1, the skipped marginal terms sum to less than the
    skipped Poisson mass at n - 1.
    """
    lo = int(poisson.ppf(tail_tol / 2, alpha2))
    hi = int(poisson.isf(tail_tol / 2, alpha2))
    lo = max(lo - 1, 0)
    return lo + 1, hi + 2


def marginal_terms(alpha2: float, tail_tol: float = 1e-15, printed_sign: bool = False):
    lo, hi = summation_window(alpha2, tail_tol)
    n = np.arange(lo, hi + 1)
    return n, p_marginal_rel(n, alpha2, printed_sign)


def marginal_sum(alpha2: float, tail_tol: float = 1e-15, printed_sign: bool = False) -> float:
    """S(a2) = sum_{n>=1} P(n), truncated where the analytic tail is below ``tail_tol``."""
    _, p = marginal_terms(alpha2, tail_tol, printed_sign)
    return float(math.fsum(p))


def summed_joint_rel(delta, alpha2: float, tail_tol: float = 1e-15) -> np.ndarray:
    """sum_{n_c, n_d} P(n_c, n_d, delta) by explicit double summation."""
    _, p = marginal_terms(alpha2, tail_tol)
    outer = 2 * np.outer(p, p).sum()
    return outer * np.sin(np.asarray(delta) / 2) ** 2


def fig3_curves(alpha2_grid: Iterable[float] = FIG3_GRID) -> list[Fig3Point]:
    """Marginal deficit 1/2 - S and worst-case joint deficit 1/2 - 2 S^2."""
    out = []
    for a2 in alpha2_grid:
        s = marginal_sum(float(a2))
        out.append(Fig3Point(float(a2), 0.5 - s, 0.5 - 2 * s * s))
    return out


def fig4_curve(alpha2: float, delta_grid: Sequence[float] = FIG4_GRID) -> dict[str, list[CurvePoint]]:
    """Summed joint relative-phase probability vs. phase difference, plus the ideal."""
    s = marginal_sum(alpha2)
    delta = np.asarray(delta_grid, dtype=float)
    joint = 2 * s * s * np.sin(delta / 2) ** 2
    ideal = p_joint_phase(delta, 0.0)
    return {"joint": [CurvePoint(float(x), float(y)) for x, y in zip(delta, joint)],
            "ideal": [CurvePoint(float(x), float(y)) for x, y in zip(delta, ideal)]}


def _g(x: float) -> str:
    return f"{x:.12g}"


def write_fig3_csv(path, points: Iterable[Fig3Point]):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "lower", "upper"])
        for p in points:
            w.writerow([_g(p.alpha2), _g(p.lower), _g(p.upper)])


def write_fig4_csv(path, curve: dict[str, list[CurvePoint]]):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["delta", "joint", "ideal"])
        for j, i in zip(curve["joint"], curve["ideal"]):
            w.writerow([_g(j.x), _g(j.y), _g(i.y)])
