"""Photon-counting simulation of the sequential psi / psi-perp Bell measurement.

Each setting draws a Poisson number of emitted pairs, sorts them into
joint projective outcomes, thins each arm by its detector efficiency, adds
uncorrelated background singles and an independent Poisson stream of
accidental coincidences at rate ``C_A * C_B * window``. Accidentals are then
subtracted with the same formula from the measured singles.

Random streams use the counter-based Philox generator. The stream for a
setting is ``Philox(SeedSequence(seed, spawn_key=(sub_seed,)))`` with
``sub_seed = 4 * delta_index + setting_index``, so every setting is
reproducible on its own and results do not depend on evaluation order.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .bell import (
    ANGLE_FAMILY_NOTE,
    CONVENTION_NOTES,
    CHSHReport,
    CorrelationMode,
    s_value,
)
from .hilbert import (
    AnalyzerSpec,
    SpectrumModel,
    analyzer_state,
    marginal_probability,
    orthogonal_rotation,
    two_photon_amplitude,
)

SETTINGS = ("pp", "pt", "tp", "tt")
CSV_HEADER = ("delta_theta", "setting", "singles_a", "singles_b", "raw_coinc", "accidentals", "corrected")
EQ1_NOTE = (
    "eq1 estimate divides by the simulated emitted-pair count, which a real "
    "experiment without event-ready detection does not know"
)


@dataclass(frozen=True)
class ExperimentConfig:
    """Synthetic source and detector parameters. Rates in 1/s, times in s."""

    spectrum: SpectrumModel
    spec_a: AnalyzerSpec
    spec_b: AnalyzerSpec
    pair_rate: float = 1e5
    duration_per_setting: float = 1.0
    efficiency_a: float = 1.0
    efficiency_b: float = 1.0
    window: float = 0.0
    background_rate_a: float = 0.0
    background_rate_b: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not self.spectrum.is_unit_norm:
            raise ValueError("Monte Carlo requires a physical (unit-norm) spectrum")
        if min(self.pair_rate, self.background_rate_a, self.background_rate_b) < 0:
            raise ValueError("rates must be non-negative")
        for eta in (self.efficiency_a, self.efficiency_b):
            if not 0.0 <= eta <= 1.0:
                raise ValueError(f"efficiency {eta} outside [0, 1]")
        if self.window < 0:
            raise ValueError("coincidence window must be non-negative")
        if not self.duration_per_setting > 0:
            raise ValueError("duration per setting must be positive")

    @classmethod
    def paper_like(cls, **overrides) -> "ExperimentConfig":
        """Square-wave analyser on both arms with a unit-norm flat spectrum over {1, 3, 5, 7}."""
        spec = AnalyzerSpec.paper()
        base = dict(spectrum=SpectrumModel.normalized_flat(spec.support), spec_a=spec, spec_b=spec)
        base.update(overrides)
        return cls(**base)


@dataclass(frozen=True)
class SettingCounts:
    delta_theta: float
    setting: str
    singles_a: int
    singles_b: int
    raw_coincidences: int
    accidentals_estimate: float
    pairs_emitted: int = 0
    duration: float = 1.0

    @property
    def corrected(self) -> float:
        return self.raw_coincidences - self.accidentals_estimate


@dataclass
class CountsRecord:
    entries: list[SettingCounts] = field(default_factory=list)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def lookup(self, delta_theta: float, setting: str, atol: float = 1e-9) -> SettingCounts:
        for e in self.entries:
            if e.setting == setting and abs(e.delta_theta - delta_theta) <= atol:
                return e
        raise KeyError(f"no counts for delta_theta={delta_theta!r}, setting={setting!r}")

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for e in self.entries:
            writer.writerow(
                [
                    f"{e.delta_theta:.12g}",
                    e.setting,
                    e.singles_a,
                    e.singles_b,
                    e.raw_coincidences,
                    f"{e.accidentals_estimate:.12g}",
                    f"{e.corrected:.12g}",
                ]
            )
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "CountsRecord":
        rows = [line for line in text.splitlines() if line and not line.startswith("#")]
        reader = csv.DictReader(rows)
        if tuple(reader.fieldnames or ()) != CSV_HEADER:
            raise ValueError(f"unexpected header {reader.fieldnames}")
        entries = [
            SettingCounts(
                delta_theta=float(r["delta_theta"]),
                setting=r["setting"],
                singles_a=int(r["singles_a"]),
                singles_b=int(r["singles_b"]),
                raw_coincidences=int(r["raw_coinc"]),
                accidentals_estimate=float(r["accidentals"]),
            )
            for r in reader
        ]
        return cls(entries)


def accidentals(c_s: float, c_i: float, window: float) -> float:
    """Accidental coincidence rate ``C_S * C_I * dt`` from singles rates and window."""
    if min(c_s, c_i, window) < 0:
        raise ValueError("singles rates and window must be non-negative")
    return c_s * c_i * window


def _generator(seed: int, sub_seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(sub_seed,))))


def outcome_probabilities(config: ExperimentConfig, theta_a: float, theta_b: float) -> tuple[float, float, float]:
    """Per-pair probabilities (A clicks, B clicks, both click) at unit efficiency."""
    bra_a = analyzer_state(config.spec_a, theta_a)
    bra_b = analyzer_state(config.spec_b, theta_b)
    p_ab = abs(two_photon_amplitude(config.spectrum, bra_a, bra_b)) ** 2
    p_a = marginal_probability(config.spectrum, bra_a, "a")
    p_b = marginal_probability(config.spectrum, bra_b, "b")
    return p_a, p_b, p_ab


def expected_rates(config: ExperimentConfig, theta_a: float, theta_b: float) -> tuple[float, float, float]:
    """Mean singles rates and true coincidence rate (1/s), detector efficiency included."""
    p_a, p_b, p_ab = outcome_probabilities(config, theta_a, theta_b)
    r = config.pair_rate
    return (
        r * p_a * config.efficiency_a + config.background_rate_a,
        r * p_b * config.efficiency_b + config.background_rate_b,
        r * p_ab * config.efficiency_a * config.efficiency_b,
    )


def window_for_accidental_fraction(
    config: ExperimentConfig, fraction: float = 0.05, theta_a: float = 0.0, theta_b: float = 0.0
) -> float:
    """Coincidence window making accidentals ``fraction`` of raw coincidences at the given setting."""
    if not 0 <= fraction < 1:
        raise ValueError("fraction must lie in [0, 1)")
    c_a, c_b, true = expected_rates(config, theta_a, theta_b)
    if c_a * c_b == 0:
        return 0.0
    # acc / (true + acc) = fraction
    return fraction / (1 - fraction) * true / (c_a * c_b)


def simulate_setting(
    config: ExperimentConfig, theta_a: float, theta_b: float, sub_seed: int, delta_theta: float | None = None,
    setting: str = "pp",
) -> SettingCounts:
    rng = _generator(config.seed, sub_seed)
    t = config.duration_per_setting
    p_a, p_b, p_ab = outcome_probabilities(config, theta_a, theta_b)
    # clip rounding so the multinomial stays valid
    only_a, only_b = max(p_a - p_ab, 0.0), max(p_b - p_ab, 0.0)
    none = max(1.0 - p_ab - only_a - only_b, 0.0)
    pairs = int(rng.poisson(config.pair_rate * t))
    n_ab, n_a, n_b, _ = rng.multinomial(pairs, np.array([p_ab, only_a, only_b, none]) / (p_ab + only_a + only_b + none))

    ea, eb = config.efficiency_a, config.efficiency_b
    both, a_side, b_side, _ = rng.multinomial(n_ab, [ea * eb, ea * (1 - eb), (1 - ea) * eb, (1 - ea) * (1 - eb)])
    singles_a = both + a_side + rng.binomial(n_a, ea) + rng.poisson(config.background_rate_a * t)
    singles_b = both + b_side + rng.binomial(n_b, eb) + rng.poisson(config.background_rate_b * t)

    c_a, c_b, _ = expected_rates(config, theta_a, theta_b)
    injected = rng.poisson(accidentals(c_a, c_b, config.window) * t)
    raw = int(both + injected)
    estimate = accidentals(singles_a / t, singles_b / t, config.window) * t
    return SettingCounts(
        delta_theta=theta_a - theta_b if delta_theta is None else delta_theta,
        setting=setting,
        singles_a=int(singles_a),
        singles_b=int(singles_b),
        raw_coincidences=raw,
        accidentals_estimate=float(estimate),
        pairs_emitted=pairs,
        duration=t,
    )


def setting_angles(config: ExperimentConfig, delta_theta: float) -> dict[str, tuple[float, float]]:
    rot_a, rot_b = orthogonal_rotation(config.spec_a), orthogonal_rotation(config.spec_b)
    return {
        "pp": (delta_theta, 0.0),
        "pt": (delta_theta, rot_b),
        "tp": (delta_theta + rot_a, 0.0),
        "tt": (delta_theta + rot_a, rot_b),
    }


def run_experiment(config: ExperimentConfig, delta_thetas: Iterable[float]) -> CountsRecord:
    """Four sequential settings (psi/perp on each arm) per relative angle, B held at 0."""
    entries = []
    for i, d in enumerate(delta_thetas):
        for j, (name, (ta, tb)) in enumerate(setting_angles(config, float(d)).items()):
            entries.append(simulate_setting(config, ta, tb, 4 * i + j, delta_theta=float(d), setting=name))
    return CountsRecord(entries)


def _correlation_terms(record: CountsRecord, delta_theta: float, mode: CorrelationMode):
    """E and its first-order Poisson variance at one relative angle."""
    cells = {s: record.lookup(delta_theta, s) for s in SETTINGS}
    counts = {s: c.corrected for s, c in cells.items()}
    # variance of raw - estimate: raw is Poisson; the estimate's own noise is second order.
    # n + 1 rather than n keeps the 3-sigma coverage nominal when the psi/perp
    # channels hold only a handful of counts (n alone under-covers there)
    variances = {s: c.raw_coincidences + 1 for s, c in cells.items()}
    same = counts["pp"] + counts["tt"]
    diff = counts["pt"] + counts["tp"]
    var_same = variances["pp"] + variances["tt"]
    var_diff = variances["pt"] + variances["tp"]
    if mode is CorrelationMode.CHSH_EQ2:
        total = same + diff
        if total <= 0:
            raise ValueError(f"no detected events at delta_theta={delta_theta}")
        e = (same - diff) / total
        var = (2 * diff / total**2) ** 2 * var_same + (2 * same / total**2) ** 2 * var_diff
        return e, var
    pairs = {s: c.pairs_emitted for s, c in cells.items()}
    if min(pairs.values()) <= 0:
        raise ValueError("eq1 estimate needs the emitted-pair count of every setting")
    e = sum(sign * counts[s] / pairs[s] for s, sign in zip(SETTINGS, (1, -1, -1, 1)))
    var = sum(variances[s] / pairs[s] ** 2 for s in SETTINGS)
    return e, var


def estimate_S(
    record: CountsRecord,
    mode: CorrelationMode,
    delta_theta: float,
    bootstrap: int = 0,
    seed: int = 0,
) -> CHSHReport:
    """S = |3E(d) - E(3d)| from corrected counts, with Poisson or bootstrap uncertainty."""
    mode = CorrelationMode(mode)
    d = float(delta_theta)
    e1, v1 = _correlation_terms(record, d, mode)
    e3, v3 = _correlation_terms(record, 3 * d, mode)
    correlations = (e1, e3, e1, e1)  # E(a,b), E(a,b'), E(a',b), E(a',b') for angles 0, 2d, d, 3d
    s = s_value(correlations)
    sigma = math.sqrt(9 * v1 + v3)
    if bootstrap:
        sigma = _bootstrap_sigma(record, mode, d, bootstrap, seed)
    notes = [ANGLE_FAMILY_NOTE]
    if mode is CorrelationMode.CORRECT_EQ1:
        notes.append(EQ1_NOTE)
    return CHSHReport(
        mode=mode,
        angles=(0.0, 2 * d, d, 3 * d),
        correlations=correlations,
        s=s,
        sigma=sigma,
        delta_theta=d,
        notes=tuple(notes),
    )


def _bootstrap_sigma(record: CountsRecord, mode, d: float, resamples: int, seed: int) -> float:
    """Parametric bootstrap: redraw every raw coincidence count as Poisson around its observed value."""
    rng = _generator(seed, 2**32 - 1)
    cells = [record.lookup(x, s) for x in (d, 3 * d) for s in SETTINGS]
    values = []
    for _ in range(resamples):
        redrawn = CountsRecord([replace(c, raw_coincidences=int(rng.poisson(c.raw_coincidences))) for c in cells])
        try:
            e1, _ = _correlation_terms(redrawn, d, mode)
            e3, _ = _correlation_terms(redrawn, 3 * d, mode)
        except ValueError:
            continue
        values.append(abs(3 * e1 - e3))
    return float(np.std(values, ddof=1))
