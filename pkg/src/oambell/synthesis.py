"""Fourier analysis of periodic target curves and fitting of analyser coefficients."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.optimize import minimize

from .bell import CoincidenceCurve, CurveKind
from .hilbert import AnalyzerSpec, SpectrumModel, PAPER_COEFFICIENTS, pair_kernel, probability_grid

OBJECTIVE = "rms distance between peak-normalized coincidence curve and target"


@dataclass(frozen=True)
class PeriodicSignal:
    """A real function of period ``period``, tabulated once on a uniform grid.

    Samples sit at cell midpoints of ``[-T/2, T/2)`` so that no sample lands on a
    jump of a piecewise-constant target placed symmetrically about zero.
    """

    period: float
    func: Callable[[np.ndarray], np.ndarray]
    n_samples: int = 2048
    x: np.ndarray = field(init=False, repr=False)
    samples: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not self.period > 0:
            raise ValueError("period must be positive")
        h = self.period / self.n_samples
        x = -self.period / 2 + h * (np.arange(self.n_samples) + 0.5)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "samples", np.asarray(self.func(x), dtype=float))

    def __call__(self, x):
        t = self.period
        wrapped = (np.asarray(x, dtype=float) + t / 2) % t - t / 2
        return np.asarray(self.func(wrapped), dtype=float)


@dataclass(frozen=True)
class FourierSeries:
    omega0: float
    coefficients: Mapping[int, complex]

    def __call__(self, x):
        return synthesize(self, x)

    def power(self) -> float:
        return float(sum(abs(f) ** 2 for f in self.coefficients.values()))


def fourier_coefficients(signal: PeriodicSignal, k_max: int) -> FourierSeries:
    """``f_k = (1/T) int_{-T/2}^{T/2} g(x) e^{-i w0 k x} dx`` for ``|k| <= k_max``.

    The periodic trapezoid rule on the tabulation reduces to a sample mean.
    """
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    omega0 = 2 * math.pi / signal.period
    ks = np.arange(-k_max, k_max + 1)
    phases = np.exp(-1j * omega0 * np.outer(ks, signal.x))
    f = phases @ signal.samples / signal.n_samples
    return FourierSeries(omega0, {int(k): complex(v) for k, v in zip(ks, f)})


def synthesize(series: FourierSeries, x):
    x = np.asarray(x, dtype=float)
    total = np.zeros(x.shape, dtype=complex)
    for k, f in series.coefficients.items():
        total = total + f * np.exp(1j * series.omega0 * k * x)
    out = total.real
    return float(out) if out.ndim == 0 else out


def square_wave_target(delta_theta):
    """1 where cos(2 dtheta) > 0 else 0: period pi, plateaus centred on multiples of pi."""
    c = np.cos(2 * np.asarray(delta_theta, dtype=float))
    # cos(2 * pi/4) evaluates to ~6e-17; the plateau edge itself maps to 0
    out = np.where(c > 1e-12, 1.0, 0.0)
    return float(out) if out.ndim == 0 else out


def square_wave_signal(n_samples: int = 2048) -> PeriodicSignal:
    return PeriodicSignal(math.pi, square_wave_target, n_samples)


def _peak_normalized(spectrum, spec, grid) -> np.ndarray:
    p = probability_grid(spectrum, spec, grid, spec, np.zeros_like(grid))
    peak = p.max()
    if peak <= 1e-300:
        raise ValueError("degenerate analyser: coincidence curve is identically zero")
    return p / peak


def achieved_curve(spec: AnalyzerSpec, grid, spectrum: SpectrumModel | None = None) -> CoincidenceCurve:
    """Peak-normalized coincidence probability versus relative orientation."""
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("grid is empty")
    spectrum = spectrum or SpectrumModel.paper_ideal(spec.support)
    values = _peak_normalized(spectrum, spec, grid)
    return CoincidenceCurve(
        CurveKind.PROBABILITY, grid, values, {"convention": spectrum.convention.value, "normalized": "peak"}
    )


def rms_residual(spec: AnalyzerSpec, target: PeriodicSignal, grid) -> float:
    grid = np.asarray(grid, dtype=float)
    achieved = achieved_curve(spec, grid).values
    return float(np.sqrt(np.mean((achieved - target(grid)) ** 2)))


@dataclass(frozen=True)
class RestartResult:
    index: int
    spec: AnalyzerSpec
    residual: float
    iterations: int
    converged: bool
    history: tuple[float, ...] = ()  # best residual after each simplex iteration


@dataclass(frozen=True)
class FitResult:
    spec: AnalyzerSpec
    residual: float
    iterations: int
    converged: bool
    objective: str = OBJECTIVE
    parametrization: str = "complex"
    restarts: tuple[RestartResult, ...] = ()


def _sphere(angles: np.ndarray) -> np.ndarray:
    """Hyperspherical angles -> non-negative unit vector (n angles -> n+1 components)."""
    r = np.empty(len(angles) + 1)
    s = 1.0
    for i, t in enumerate(angles):
        r[i] = s * math.cos(t)
        s *= math.sin(t)
    r[-1] = s
    return np.abs(r)


def _complex_coefficients(params: np.ndarray, n: int) -> np.ndarray:
    # n-1 sphere angles then n-1 relative phases (phase of the first entry is fixed to 0)
    r = _sphere(params[: n - 1])
    phases = np.concatenate([[0.0], params[n - 1 :]])
    return r * np.exp(1j * phases)


def _real_weight_coefficients(params: np.ndarray, n: int) -> np.ndarray:
    # signed weights a_ell = (b_ell^*)^2 with sum |a| = 1; b real for a >= 0, imaginary otherwise
    w = np.asarray(params, dtype=float)
    total = np.abs(w).sum()
    if total == 0:
        w, total = np.ones(n), float(n)
    a = w / total
    return np.sqrt(np.abs(a)) * np.where(a >= 0, 1.0, 1j)


def fit_analyzer_coefficients(
    target: PeriodicSignal,
    support: Sequence[int] = (1, 3, 5, 7),
    restarts: int = 8,
    seed: int = 0,
    real_weights: bool = False,
    grid_points: int = 720,
    max_iterations: int = 5000,
) -> FitResult:
    """Nelder-Mead fit of ``b_ell`` so that the peak-normalized curve matches ``target``.

    ``real_weights=True`` restricts the search to coefficients whose squares
    ``(b_ell^*)^2`` are real, i.e. each sector-state harmonic enters the
    amplitude with a real signed weight.
    """
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    support = tuple(int(ell) for ell in support)
    if not support or any(ell < 1 or ell % 2 == 0 for ell in support):
        raise ValueError("fit support must be non-empty, positive and odd")
    n = len(support)
    grid = -target.period / 2 + target.period * np.arange(grid_points) / grid_points
    wanted = target(grid)
    kernel = pair_kernel(SpectrumModel.paper_ideal(support), support, grid)
    unpack = _real_weight_coefficients if real_weights else _complex_coefficients

    def objective(params):
        b = unpack(params, n)
        p = np.abs(kernel @ np.conj(b) ** 2) ** 2
        peak = p.max()
        if peak <= 1e-300:
            return math.inf
        return float(np.sqrt(np.mean((p / peak - wanted) ** 2)))

    rng = np.random.Generator(np.random.Philox(seed))
    results = []
    for index in range(restarts):
        if real_weights:
            start = rng.uniform(-1, 1, n)
        else:
            start = np.concatenate([rng.uniform(0, math.pi / 2, n - 1), rng.uniform(-math.pi, math.pi, n - 1)])
        if start.size == 0:
            spec = AnalyzerSpec(support, (1.0,))
            results.append(RestartResult(index, spec, objective(start), 0, True))
            continue
        history: list[float] = []
        res = minimize(
            objective,
            start,
            method="Nelder-Mead",
            callback=lambda xk: history.append(objective(xk)),
            # fatol=inf: stop on simplex size alone
            options={"xatol": 1e-8, "fatol": math.inf, "maxiter": max_iterations, "maxfev": 4 * max_iterations},
        )
        spec = AnalyzerSpec(support, tuple(unpack(res.x, n)))
        results.append(
            RestartResult(index, spec, float(res.fun), int(res.nit), bool(res.success), tuple(history))
        )

    best = min(results, key=lambda r: (r.residual, r.index))
    return FitResult(
        spec=best.spec,
        residual=best.residual,
        iterations=best.iterations,
        converged=best.converged,
        parametrization="real-weights" if real_weights else "complex",
        restarts=tuple(results),
    )


def paper_baseline_residual(target: PeriodicSignal | None = None, grid_points: int = 720) -> float:
    """Residual of the published coefficients, the yardstick for any fit."""
    target = target or square_wave_signal()
    grid = -target.period / 2 + target.period * np.arange(grid_points) / grid_points
    return rms_residual(AnalyzerSpec.from_coefficients(PAPER_COEFFICIENTS), target, grid)


def magnitude_distance(spec: AnalyzerSpec, reference: Mapping[int, complex]) -> float:
    """Largest difference of |b_ell| against a reference profile (renormalized)."""
    ref = AnalyzerSpec.from_coefficients(reference).as_dict
    mine = spec.as_dict
    return max(abs(abs(mine.get(ell, 0)) - abs(ref.get(ell, 0))) for ell in set(ref) | set(mine))
