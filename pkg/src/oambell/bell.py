"""Correlation functions, CHSH S, fidelity and the curve-area dimensionality.

Two correlation functions are provided. ``CORRECT_EQ1`` uses per-emitted-pair
weights, so events that miss all four projections count towards the
denominator. ``CHSH_EQ2`` renormalizes by the total of the four detected rates,
which is what a sequential psi/psi-perp measurement without a pair-rate
monitor actually reports.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import minimize

from .hilbert import (
    AnalyzerSpec,
    Convention,
    SpectrumModel,
    coincidence_probability,
    orthogonal_rotation,
    probability_grid,
)

TSIRELSON = 2 * math.sqrt(2)
#: Fidelity above which communication complexity becomes trivial.
COMMUNICATION_COMPLEXITY_BOUND = 0.908

ANGLE_FAMILY_NOTE = (
    "S(dtheta) uses angles a=0, b=dtheta, a'=2dtheta, b'=3dtheta, i.e. "
    "S=|3E(dtheta)-E(3dtheta)|; curve shape between extrema depends on this choice"
)
CONVENTION_NOTES = {
    Convention.PAPER_IDEAL: (
        "paper-ideal spectrum: c_ell=1/sqrt(2) per measured ell (not unit norm); "
        "inferred because it reproduces P_max=0.5 (single ell), 0.24 and S=1.79"
    ),
    Convention.NORMALIZED_FLAT: (
        "normalized-flat spectrum: c_ell=1/sqrt(2N); eq1 values are smaller than "
        "paper-ideal ones by the factor 1/N, eq2 values are unaffected"
    ),
    Convention.CUSTOM: "custom spectrum weights",
}
DIMENSIONALITY_CAVEAT = (
    "peak normalisation is itself unreliable when fair sampling fails, so this "
    "D is not the true dimensionality of the measurement states"
)


class CorrelationMode(str, enum.Enum):
    CORRECT_EQ1 = "eq1"
    CHSH_EQ2 = "eq2"


@dataclass(frozen=True)
class FourSettingProbabilities:
    """Outcome weights with A at psi/perp and B at psi/perp (``pt`` = A psi, B perp)."""

    pp: float
    pt: float
    tp: float
    tt: float

    def __post_init__(self):
        if min(self.pp, self.pt, self.tp, self.tt) < 0:
            raise ValueError("probabilities must be non-negative")

    @property
    def total(self) -> float:
        return self.pp + self.pt + self.tp + self.tt

    def scaled(self, factor: float) -> "FourSettingProbabilities":
        return FourSettingProbabilities(
            self.pp * factor, self.pt * factor, self.tp * factor, self.tt * factor
        )


@dataclass(frozen=True)
class CHSHReport:
    mode: CorrelationMode
    angles: tuple[float, float, float, float]  # a, a', b, b'
    correlations: tuple[float, float, float, float]  # E(a,b), E(a,b'), E(a',b), E(a',b')
    s: float
    sigma: float | None = None
    convention: Convention | None = None
    delta_theta: float | None = None
    notes: tuple[str, ...] = ()

    def recomputed_s(self) -> float:
        return s_value(self.correlations)

    @property
    def fidelity(self) -> float:
        return fidelity(min(self.s, 4.0))


class CurveKind(str, enum.Enum):
    PROBABILITY = "probability"
    CORRELATION = "correlation"
    S_SCAN = "s-scan"


@dataclass(frozen=True)
class CoincidenceCurve:
    kind: CurveKind
    delta_theta: np.ndarray
    values: np.ndarray
    tags: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        x = np.asarray(self.delta_theta, dtype=float)
        y = np.asarray(self.values, dtype=float)
        if x.ndim != 1 or x.shape != y.shape or x.size == 0:
            raise ValueError("curve needs matching, non-empty 1-D grids")
        if np.any(np.diff(x) <= 0):
            raise ValueError("curve grid must be strictly increasing")
        object.__setattr__(self, "kind", CurveKind(self.kind))
        object.__setattr__(self, "delta_theta", x)
        object.__setattr__(self, "values", y)
        object.__setattr__(self, "tags", dict(self.tags))

    def argmax(self, tie_tolerance: float = 1e-9) -> tuple[float, float]:
        """Location and value of the maximum; ties go to the smallest |dtheta|, positive first."""
        vmax = self.values.max()
        candidates = self.delta_theta[self.values >= vmax - tie_tolerance]
        best = min(candidates, key=lambda x: (round(abs(x), 12), x < 0))
        return float(best), float(vmax)


def default_grid(n: int = 720) -> np.ndarray:
    """Uniform grid over one period [-pi/2, pi/2) of an odd-support curve."""
    return -np.pi / 2 + np.pi * np.arange(n) / n


def four_setting_probabilities(
    spectrum: SpectrumModel, spec: AnalyzerSpec, theta_a: float, theta_b: float
) -> FourSettingProbabilities:
    rot = orthogonal_rotation(spec)
    p = lambda ta, tb: coincidence_probability(spectrum, spec, ta, spec, tb)
    return FourSettingProbabilities(
        pp=p(theta_a, theta_b),
        pt=p(theta_a, theta_b + rot),
        tp=p(theta_a + rot, theta_b),
        tt=p(theta_a + rot, theta_b + rot),
    )


def four_setting_grid(spectrum: SpectrumModel, spec: AnalyzerSpec, delta_theta) -> np.ndarray:
    """Array form of :func:`four_setting_probabilities` with B at 0; columns pp, pt, tp, tt."""
    d = np.asarray(delta_theta, dtype=float)
    rot = orthogonal_rotation(spec)
    p = lambda ta, tb: probability_grid(spectrum, spec, ta, spec, tb)
    zero = np.zeros_like(d)
    return np.stack([p(d, zero), p(d, zero + rot), p(d + rot, zero), p(d + rot, zero + rot)], axis=-1)


def correlation_correct(p: FourSettingProbabilities) -> float:
    return (p.pp + p.tt) - (p.pt + p.tp)


def correlation_chsh(p: FourSettingProbabilities) -> float:
    total = p.total
    if total <= 0:
        raise ValueError("no detected events")
    return (p.pp + p.tt - p.pt - p.tp) / total


def correlation(p: FourSettingProbabilities, mode: CorrelationMode) -> float:
    if CorrelationMode(mode) is CorrelationMode.CORRECT_EQ1:
        return correlation_correct(p)
    return correlation_chsh(p)


def _correlation_array(probs: np.ndarray, mode: CorrelationMode) -> np.ndarray:
    same = probs[..., 0] + probs[..., 3]
    diff = probs[..., 1] + probs[..., 2]
    if CorrelationMode(mode) is CorrelationMode.CORRECT_EQ1:
        return same - diff
    total = same + diff
    if np.any(total <= 0):
        raise ValueError("no detected events")
    return (same - diff) / total


def correlation_grid(spectrum, spec, delta_theta, mode) -> np.ndarray:
    return _correlation_array(four_setting_grid(spectrum, spec, delta_theta), mode)


def s_value(correlations: Sequence[float]) -> float:
    """``|E(a,b) - E(a,b') + E(a',b) + E(a',b')|``."""
    e_ab, e_abp, e_apb, e_apbp = correlations
    return abs(e_ab - e_abp + e_apb + e_apbp)


def _tags(spectrum: SpectrumModel, mode: CorrelationMode | None = None) -> dict[str, str]:
    tags = {"convention": spectrum.convention.value}
    if mode is not None:
        tags["mode"] = CorrelationMode(mode).value
    return tags


def probability_curve(spectrum, spec, grid) -> CoincidenceCurve:
    grid = np.asarray(grid, dtype=float)
    values = probability_grid(spectrum, spec, grid, spec, np.zeros_like(grid))
    return CoincidenceCurve(CurveKind.PROBABILITY, grid, values, _tags(spectrum))


def correlation_curve(spectrum, spec, grid, mode) -> CoincidenceCurve:
    grid = np.asarray(grid, dtype=float)
    return CoincidenceCurve(
        CurveKind.CORRELATION, grid, correlation_grid(spectrum, spec, grid, mode), _tags(spectrum, mode)
    )


def s_scan(spectrum: SpectrumModel, spec: AnalyzerSpec, grid, mode: CorrelationMode) -> CoincidenceCurve:
    grid = np.asarray(grid, dtype=float)
    e1 = correlation_grid(spectrum, spec, grid, mode)
    e3 = correlation_grid(spectrum, spec, 3 * grid, mode)
    tags = _tags(spectrum, mode) | {"angle_family": "0,d,2d,3d"}
    return CoincidenceCurve(CurveKind.S_SCAN, grid, np.abs(3 * e1 - e3), tags)


def chsh_report(
    spectrum: SpectrumModel,
    spec: AnalyzerSpec,
    angles: Sequence[float],
    mode: CorrelationMode,
    delta_theta: float | None = None,
) -> CHSHReport:
    """Evaluate S at explicit analyser angles ``(a, a', b, b')``."""
    a, ap, b, bp = (float(x) for x in angles)
    mode = CorrelationMode(mode)
    e = tuple(
        correlation(four_setting_probabilities(spectrum, spec, x, y), mode)
        for x, y in ((a, b), (a, bp), (ap, b), (ap, bp))
    )
    return CHSHReport(
        mode=mode,
        angles=(a, ap, b, bp),
        correlations=e,
        s=s_value(e),
        convention=spectrum.convention,
        delta_theta=delta_theta,
        notes=(ANGLE_FAMILY_NOTE, CONVENTION_NOTES[spectrum.convention]),
    )


def scan_report(spectrum, spec, delta_theta: float, mode) -> CHSHReport:
    d = float(delta_theta)
    return chsh_report(spectrum, spec, (0.0, 2 * d, d, 3 * d), mode, delta_theta=d)


def s_max(
    spectrum: SpectrumModel, spec: AnalyzerSpec, mode: CorrelationMode, n_grid: int = 720
) -> CHSHReport:
    """Maximize S over all four analyser angles.

    E depends only on the relative angle, so S is a function of three differences
    x=a-b, y=a-b', z=a'-b (with a'-b' = z-x+y). For fixed w=y-x the best z only
    depends on w, which reduces the exhaustive grid search to O(n^2). The grid
    optimum is then polished with Nelder-Mead.
    """
    mode = CorrelationMode(mode)
    grid = default_grid(n_grid)
    e = correlation_grid(spectrum, spec, grid, mode)
    idx = np.arange(n_grid)
    # pair[z, w] = E(z) + E(z + w) on the periodic grid
    pair = e[:, None] + e[(idx[:, None] + idx[None, :]) % n_grid]
    z_hi, z_lo = pair.argmax(axis=0), pair.argmin(axis=0)
    x, y = idx[:, None], idx[None, :]
    w = (y - x) % n_grid
    base = e[x] - e[y]
    upper = base + pair[z_hi[w], w]
    lower = -(base + pair[z_lo[w], w])
    if upper.max() >= lower.max():
        i, j = np.unravel_index(upper.argmax(), upper.shape)
        k = z_hi[(j - i) % n_grid]
    else:
        i, j = np.unravel_index(lower.argmax(), lower.shape)
        k = z_lo[(j - i) % n_grid]
    start = grid[[i, j, k]]

    def signed(v):
        dx, dy, dz = v
        vals = correlation_grid(spectrum, spec, np.array([dx, dy, dz, dz - dx + dy]), mode)
        return vals[0] - vals[1] + vals[2] + vals[3]

    sign = 1.0 if signed(start) >= 0 else -1.0
    res = minimize(
        lambda v: -sign * signed(v),
        start,
        method="Nelder-Mead",
        options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 4000},
    )
    dx, dy, dz = res.x if -res.fun >= sign * signed(start) else start
    angles = (0.0, float(dz - dx), float(-dx), float(-dy))
    report = chsh_report(spectrum, spec, angles, mode)
    return report


def fidelity(s: float) -> float:
    """Popescu-Rohrlich box fidelity ``(S + 4)/8``."""
    if not 0.0 <= s <= 4.0:
        raise ValueError(f"S must lie in [0, 4], got {s}")
    return (s + 4.0) / 8.0


def beats_communication_bound(f: float) -> bool:
    return f > COMMUNICATION_COMPLEXITY_BOUND


def dimensionality(curve: CoincidenceCurve) -> float:
    """Inverse mean of the peak-normalized curve over its (periodic) grid."""
    peak = curve.values.max()
    if not peak > 0:
        raise ValueError("curve has no positive maximum")
    return float(1.0 / np.mean(curve.values / peak))
