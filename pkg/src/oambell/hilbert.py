"""State algebra over the orbital-angular-momentum basis.

Single-photon states are sparse maps ``ell -> amplitude``. The two-photon
source state is ``sum_ell c_ell |ell>_A |-ell>_B`` and is described by a
:class:`SpectrumModel`; only the weights overlapping the analyser support
matter because distinct ``|ell>`` are orthogonal.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping

import numpy as np

PRUNE_TOLERANCE = 1e-15
NORM_TOLERANCE = 1e-9

#: Analyser coefficients found experimentally for the square-wave analyser.
PAPER_COEFFICIENTS: dict[int, complex] = {1: 0.778, 3: 0.467, 5: 0.389j, 7: 0.155}


@dataclass(frozen=True)
class OAMVector:
    """Sparse complex amplitudes over integer OAM indices."""

    amplitudes: Mapping[int, complex] = field(default_factory=dict)

    def __post_init__(self):
        pruned = {
            int(ell): complex(amp)
            for ell, amp in sorted(self.amplitudes.items())
            if abs(amp) >= PRUNE_TOLERANCE
        }
        object.__setattr__(self, "amplitudes", MappingProxyType(pruned))

    @classmethod
    def basis(cls, ell: int) -> "OAMVector":
        return cls({ell: 1.0})

    def __getitem__(self, ell: int) -> complex:
        return self.amplitudes.get(ell, 0j)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(self.amplitudes)

    @property
    def norm_squared(self) -> float:
        return float(sum(abs(a) ** 2 for a in self.amplitudes.values()))

    def __add__(self, other: "OAMVector") -> "OAMVector":
        out = dict(self.amplitudes)
        for ell, amp in other.amplitudes.items():
            out[ell] = out.get(ell, 0j) + amp
        return OAMVector(out)

    def __mul__(self, scalar: complex) -> "OAMVector":
        return OAMVector({ell: scalar * amp for ell, amp in self.amplitudes.items()})

    __rmul__ = __mul__

    def to_array(self, basis: Iterable[int]) -> np.ndarray:
        return np.array([self[ell] for ell in basis], dtype=complex)


@dataclass(frozen=True)
class AnalyzerSpec:
    """Support ``{ell}`` and coefficients ``b_ell`` of a rotatable analyser.

    The analyser state at orientation ``theta`` is
    ``sum_ell b_ell |alpha_ell(theta)>``.
    """

    support: tuple[int, ...]
    coefficients: tuple[complex, ...]

    def __post_init__(self):
        support = tuple(int(ell) for ell in self.support)
        coefficients = tuple(complex(b) for b in self.coefficients)
        if not support:
            raise ValueError("analyser support is empty")
        if len(support) != len(coefficients):
            raise ValueError("support and coefficients differ in length")
        if support[0] < 1 or any(b <= a for a, b in zip(support, support[1:])):
            raise ValueError(
                f"support must be positive and strictly increasing, got {support}"
            )
        norm = sum(abs(b) ** 2 for b in coefficients)
        if abs(norm - 1.0) > NORM_TOLERANCE:
            raise ValueError(f"sum |b|^2 = {norm:.12g}, expected 1")
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "coefficients", coefficients)

    @classmethod
    def from_coefficients(
        cls, coefficients: Mapping[int, complex], normalize: bool = True
    ) -> "AnalyzerSpec":
        items = sorted(coefficients.items())
        values = np.array([b for _, b in items], dtype=complex)
        if normalize:
            norm = np.linalg.norm(values)
            if norm == 0:
                raise ValueError("all analyser coefficients are zero")
            values = values / norm
        return cls(tuple(ell for ell, _ in items), tuple(values))

    @classmethod
    def paper(cls) -> "AnalyzerSpec":
        """The four-term analyser {1, 3, 5, 7}, renormalized from sum |b|^2 = 0.998."""
        return cls.from_coefficients(PAPER_COEFFICIENTS)

    @classmethod
    def single(cls, ell: int) -> "AnalyzerSpec":
        return cls((ell,), (1.0,))

    @property
    def as_dict(self) -> dict[int, complex]:
        return dict(zip(self.support, self.coefficients))

    @property
    def is_odd(self) -> bool:
        return all(ell % 2 == 1 for ell in self.support)

    def with_phase(self, phi: float) -> "AnalyzerSpec":
        factor = complex(math.cos(phi), math.sin(phi))
        return AnalyzerSpec(self.support, tuple(factor * b for b in self.coefficients))

    def conjugate(self) -> "AnalyzerSpec":
        """Phase-conjugate analyser (b -> b*)."""
        return AnalyzerSpec(self.support, tuple(b.conjugate() for b in self.coefficients))


class Convention(str, enum.Enum):
    PAPER_IDEAL = "paper-ideal"
    NORMALIZED_FLAT = "normalized-flat"
    CUSTOM = "custom"


@dataclass(frozen=True)
class SpectrumModel:
    """Schmidt weights ``c_ell`` of the pair state, keyed by signed ``ell`` of arm A."""

    convention: Convention
    weights: Mapping[int, complex]

    def __post_init__(self):
        object.__setattr__(self, "convention", Convention(self.convention))
        weights = {int(ell): complex(c) for ell, c in sorted(self.weights.items())}
        if self.convention is Convention.CUSTOM:
            norm = sum(abs(c) ** 2 for c in weights.values())
            if abs(norm - 1.0) > NORM_TOLERANCE:
                raise ValueError(f"custom spectrum has sum |c|^2 = {norm:.12g}, expected 1")
        object.__setattr__(self, "weights", MappingProxyType(weights))

    @classmethod
    def paper_ideal(cls, support: Iterable[int]) -> "SpectrumModel":
        # c = 1/sqrt(2) per measured ell: deliberately not unit norm, this is the
        # flat convention under which a single sector pair peaks at probability 0.5.
        c = 1 / math.sqrt(2)
        return cls(Convention.PAPER_IDEAL, {s * ell: c for ell in support for s in (1, -1)})

    @classmethod
    def normalized_flat(cls, support: Iterable[int]) -> "SpectrumModel":
        support = sorted(set(support))
        c = 1 / math.sqrt(2 * len(support))
        return cls(Convention.NORMALIZED_FLAT, {s * ell: c for ell in support for s in (1, -1)})

    @classmethod
    def custom(cls, weights: Mapping[int, complex]) -> "SpectrumModel":
        return cls(Convention.CUSTOM, weights)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(sorted({abs(ell) for ell in self.weights}))

    @property
    def norm_squared(self) -> float:
        return float(sum(abs(c) ** 2 for c in self.weights.values()))

    @property
    def is_unit_norm(self) -> bool:
        return abs(self.norm_squared - 1.0) <= NORM_TOLERANCE


def sector_state(ell: int, theta: float) -> OAMVector:
    """``(e^{i ell theta}|ell> + e^{-i ell theta}|-ell>)/sqrt(2)``."""
    if ell < 1:
        raise ValueError(f"sector states need ell >= 1, got {ell}")
    phase = complex(math.cos(ell * theta), math.sin(ell * theta))
    r = 1 / math.sqrt(2)
    return OAMVector({ell: r * phase, -ell: r * phase.conjugate()})


def analyzer_state(spec: AnalyzerSpec, theta: float) -> OAMVector:
    state = OAMVector()
    for ell, b in zip(spec.support, spec.coefficients):
        state = state + b * sector_state(ell, theta)
    return state


def orthogonal_rotation(spec: AnalyzerSpec) -> float:
    """Rotation that maps the analyser onto its orthogonal partner.

    A single sector state uses ``pi/(2 ell)``; a multi-term analyser relies on a
    ``pi/2`` rotation, which is orthogonal only when every ``ell`` is odd.
    """
    if len(spec.support) == 1:
        return math.pi / (2 * spec.support[0])
    if not spec.is_odd:
        raise ValueError("pi/2 rotation does not produce an orthogonal state")
    return math.pi / 2


def orthogonal_state(spec: AnalyzerSpec, theta: float) -> OAMVector:
    return analyzer_state(spec, theta + orthogonal_rotation(spec))


def inner_product(u: OAMVector, v: OAMVector) -> complex:
    """``<u|v>``, antilinear in the first argument."""
    return sum((u[ell].conjugate() * amp for ell, amp in v.amplitudes.items()), 0j)


def two_photon_amplitude(spectrum: SpectrumModel, bra_a: OAMVector, bra_b: OAMVector) -> complex:
    """``<bra_a|<bra_b|Psi>`` for the pair state described by ``spectrum``."""
    return sum(
        (c * bra_a[ell].conjugate() * bra_b[-ell].conjugate() for ell, c in spectrum.weights.items()),
        0j,
    )


def coincidence_probability(
    spectrum: SpectrumModel,
    spec_a: AnalyzerSpec,
    theta_a: float,
    spec_b: AnalyzerSpec,
    theta_b: float,
) -> float:
    amp = two_photon_amplitude(
        spectrum, analyzer_state(spec_a, theta_a), analyzer_state(spec_b, theta_b)
    )
    return abs(amp) ** 2


def marginal_probability(spectrum: SpectrumModel, bra: OAMVector, arm: str) -> float:
    """Single-arm click probability ``<Psi|(P (x) 1)|Psi>`` (or ``1 (x) P`` for arm B)."""
    sign = {"a": 1, "b": -1}[arm.lower()]
    return float(sum(abs(c) ** 2 * abs(bra[sign * ell]) ** 2 for ell, c in spectrum.weights.items()))


def _arm_amplitudes(spec: AnalyzerSpec, ells: np.ndarray, theta: np.ndarray) -> np.ndarray:
    # analyser amplitude on signed ell: b_|ell| e^{i ell theta} / sqrt(2), shape (len(theta), len(ells))
    coeffs = spec.as_dict
    b = np.array([coeffs.get(abs(int(ell)), 0j) for ell in ells])
    return b * np.exp(1j * np.outer(theta, ells)) / np.sqrt(2)


def amplitude_grid(
    spectrum: SpectrumModel,
    spec_a: AnalyzerSpec,
    theta_a,
    spec_b: AnalyzerSpec,
    theta_b,
) -> np.ndarray:
    """Vectorized :func:`two_photon_amplitude` over broadcast orientation arrays."""
    theta_a, theta_b = np.broadcast_arrays(np.asarray(theta_a, float), np.asarray(theta_b, float))
    shape = theta_a.shape
    ells = np.array(list(spectrum.weights), dtype=int)
    if ells.size == 0:
        return np.zeros(shape, dtype=complex)
    c = np.array(list(spectrum.weights.values()), dtype=complex)
    amp_a = _arm_amplitudes(spec_a, ells, theta_a.ravel())
    amp_b = _arm_amplitudes(spec_b, -ells, theta_b.ravel())
    return ((np.conj(amp_a) * np.conj(amp_b)) @ c).reshape(shape)


def probability_grid(spectrum, spec_a, theta_a, spec_b, theta_b) -> np.ndarray:
    return np.abs(amplitude_grid(spectrum, spec_a, theta_a, spec_b, theta_b)) ** 2


def pair_kernel(spectrum: SpectrumModel, support: Iterable[int], delta_theta) -> np.ndarray:
    """Kernel K with ``amplitude(dtheta) = K @ conj(b)**2`` when both arms use the same analyser.

    Arm A sits at ``dtheta`` and arm B at 0; ``K[i, j] = sum_{s=+-1} c_{s ell_j} e^{-i s ell_j dtheta_i} / 2``.
    """
    d = np.asarray(delta_theta, dtype=float)
    cols = []
    for ell in support:
        c_pos = spectrum.weights.get(ell, 0j)
        c_neg = spectrum.weights.get(-ell, 0j)
        cols.append((c_pos * np.exp(-1j * ell * d) + c_neg * np.exp(1j * ell * d)) / 2)
    return np.stack(cols, axis=-1)
