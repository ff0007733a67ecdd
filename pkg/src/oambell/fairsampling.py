"""The sampled-subspace operator H(theta) = |psi><psi| + |psi_perp><psi_perp|.

Fair sampling requires H to be independent of analyser orientation. For a
single sector state H is the identity on span{|ell>, |-ell>}; for the tailored
multi-term analysers it carries ``e^{i (ell_i - ell_j) theta}`` harmonics.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .hilbert import AnalyzerSpec, analyzer_state, orthogonal_state

HERMITIAN_TOLERANCE = 1e-12


def signed_basis(spec: AnalyzerSpec) -> tuple[int, ...]:
    """Ascending signed basis, most negative first (-7, -5, ..., 5, 7)."""
    return tuple(sorted({s * ell for ell in spec.support for s in (1, -1)}))


@dataclass(frozen=True)
class HermitianMatrix:
    basis: tuple[int, ...]
    entries: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=complex)
        if m.shape != (len(self.basis), len(self.basis)):
            raise ValueError("matrix shape does not match basis")
        if np.max(np.abs(m - m.conj().T), initial=0.0) > HERMITIAN_TOLERANCE:
            raise ValueError("matrix is not Hermitian")
        object.__setattr__(self, "basis", tuple(self.basis))
        object.__setattr__(self, "entries", m)

    def entry(self, row_ell: int, col_ell: int) -> complex:
        return complex(self.entries[self.basis.index(row_ell), self.basis.index(col_ell)])

    @property
    def trace(self) -> complex:
        return complex(np.trace(self.entries))

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.entries)


@dataclass(frozen=True)
class FairSamplingVerdict:
    max_deviation: float
    harmonic_content: Mapping[int, float] = field(default_factory=dict)
    tolerance: float = 1e-9

    @property
    def fair(self) -> bool:
        return self.max_deviation <= self.tolerance


def sampled_subspace_operator(spec: AnalyzerSpec, theta: float) -> HermitianMatrix:
    basis = signed_basis(spec)
    psi = analyzer_state(spec, theta).to_array(basis)
    perp = orthogonal_state(spec, theta).to_array(basis)
    h = np.outer(psi, psi.conj()) + np.outer(perp, perp.conj())
    # symmetrize away rounding so the Hermitian check is exact
    return HermitianMatrix(basis, (h + h.conj().T) / 2)


def default_theta_grid(n: int = 64) -> np.ndarray:
    return math.pi * np.arange(n) / n


def _operator_stack(spec: AnalyzerSpec, theta_grid: Sequence[float]) -> tuple[tuple[int, ...], np.ndarray]:
    mats = [sampled_subspace_operator(spec, t) for t in theta_grid]
    return mats[0].basis, np.stack([m.entries for m in mats])


def entry_harmonics(
    spec: AnalyzerSpec, row_ell: int, col_ell: int, theta_grid: Sequence[float] | None = None
) -> dict[int, complex]:
    """Discrete Fourier coefficients ``h_m`` of ``H_ij(theta) = sum_m h_m e^{i m theta}``.

    The grid must be uniform over [0, pi); H has period pi/2 so its harmonics are
    even integers, all resolvable on that window.
    """
    grid = default_theta_grid() if theta_grid is None else np.asarray(theta_grid, dtype=float)
    basis, stack = _operator_stack(spec, grid)
    series = stack[:, basis.index(row_ell), basis.index(col_ell)]
    n = len(grid)
    out = {}
    for m in range(-n, n + 1, 2):
        h = complex(np.mean(series * np.exp(-1j * m * grid)))
        if abs(h) > 1e-12:
            out[m] = h
    return out


def theta_dependence(
    spec: AnalyzerSpec, theta_grid: Sequence[float], tolerance: float = 1e-9
) -> FairSamplingVerdict:
    """Entrywise sup-norm of H(theta1) - H(theta2) over all grid pairs, plus harmonic content.

    ``harmonic_content`` maps each nonzero frequency ``m`` to the largest
    ``|h_m|`` over all entries; frequencies follow ``m = ell_i - ell_j``. It
    assumes a uniform grid over [0, pi).
    """
    grid = np.asarray(theta_grid, dtype=float)
    if grid.size < 2:
        raise ValueError("theta grid needs at least two points")
    basis, stack = _operator_stack(spec, grid)
    # sup over pairs of |H_ij(t1) - H_ij(t2)| is the per-entry diameter of the sampled values
    flat = stack.reshape(len(grid), -1)
    diffs = np.abs(flat[:, None, :] - flat[None, :, :])
    max_deviation = float(diffs.max())

    content: dict[int, float] = {}
    n = len(grid)
    # entries only carry even frequencies; odd ones would alias on a [0, pi) grid
    for m in range(-2 * max(basis), 2 * max(basis) + 1, 2):
        if m == 0:
            continue
        amp = float(np.max(np.abs(np.tensordot(np.exp(-1j * m * grid), flat, axes=(0, 0)) / n)))
        if amp > 1e-12:
            content[m] = amp
    return FairSamplingVerdict(max_deviation, content, tolerance)


def is_fair_sampling(spec: AnalyzerSpec, tolerance: float, n_grid: int = 64) -> bool:
    if not tolerance > 0:
        raise ValueError("tolerance must be positive")
    return theta_dependence(spec, default_theta_grid(n_grid), tolerance).fair
