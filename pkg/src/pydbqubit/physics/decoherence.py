"""Noise models: LA-phonon relaxation rate and the lattice-relaxation bias drift."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Optional

import numpy as np

from ..errors import DomainError
from .defines import ANGSTROM_TO_M, EV_TO_J, HBAR, HBAR_SI

if TYPE_CHECKING:
    from ..settings import DriftSettings, PhononSettings
    from .model import MaterialParams

__all__ = [
    "PhononModel",
    "phonon_rate",
    "phonon_sweep",
    "DriftModel",
    "drift_bias",
    "drift_steps",
    "drift_decoherence_estimate",
]

logger = logging.getLogger(__name__)

_SINC_SERIES_LIMIT = 1e-3


@dataclass(frozen=True)
class PhononModel:
    """Deformation-potential coupling of a DB pair to bulk LA phonons.

    Energies in eV, density in kg/m³, sound speed in m/s, envelope radius in Å.
    """

    deformation_potential: float = 8.8
    density: float = 2329.0
    sound_speed_l: float = 8433.0
    envelope_radius: float = 12.924
    phonon_energy: float = 0.022
    debye_energy: float = 0.055

    def __post_init__(self):
        for name in self.__dataclass_fields__:
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise DomainError(f"PhononModel.{name} must be strictly positive, got {value}")
        if self.phonon_energy > self.debye_energy:
            raise DomainError(
                f"phonon_energy ({self.phonon_energy} eV) exceeds debye_energy ({self.debye_energy} eV)"
            )

    @classmethod
    def from_material(cls, material: "MaterialParams", settings: Optional["PhononSettings"] = None) -> "PhononModel":
        """Phonon model of ``material``; the envelope radius defaults to its effective Bohr radius."""
        kwargs = {}
        if settings is not None:
            kwargs = dict(phonon_energy=settings.phonon_energy, debye_energy=settings.debye_energy)
            if settings.envelope_radius is not None:
                kwargs["envelope_radius"] = settings.envelope_radius
        kwargs.setdefault("envelope_radius", material.effective_bohr_radius)
        return cls(
            deformation_potential=material.deformation_potential,
            density=material.density,
            sound_speed_l=material.sound_speed_l,
            **kwargs,
        )


def _one_minus_sinc(x: np.ndarray) -> np.ndarray:
    small = np.abs(x) < _SINC_SERIES_LIMIT
    safe = np.where(small, 1.0, x)
    x2 = x * x
    return np.where(small, x2 / 6.0 - x2 * x2 / 120.0, 1.0 - np.sin(safe) / safe)


def phonon_rate(
    model: PhononModel, separation: float | np.ndarray, energy: Optional[float] = None
) -> float | np.ndarray:
    """Golden-rule LA-phonon relaxation rate of a DB pair, in Hz.

    Γ = Ξ²ω³/(4π²ρħc⁵) · [1 − sinc(qs)] · exp(−q²a²/2) with ω = E/ħ and q = ω/c.
    ``energy`` overrides the model's phonon energy; energies above the Debye
    cutoff give zero.

    Raises:
        DomainError: If a separation is negative or the energy is not positive.

    """
    s = np.asarray(separation, dtype=float)
    if np.any(~np.isfinite(s)) or np.any(s < 0):
        raise DomainError(f"separation must be >= 0 Å, got {separation}")
    energy = model.phonon_energy if energy is None else float(energy)
    if not energy > 0:
        raise DomainError(f"phonon energy must be > 0 eV, got {energy}")
    if energy > model.debye_energy:
        rate = np.zeros_like(s)
        return float(rate) if rate.ndim == 0 else rate

    xi = model.deformation_potential * EV_TO_J
    omega = energy * EV_TO_J / HBAR_SI
    c = model.sound_speed_l
    q = omega / c
    prefactor = xi**2 * omega**3 / (4.0 * math.pi**2 * model.density * HBAR_SI * c**5)
    envelope = math.exp(-0.5 * (q * model.envelope_radius * ANGSTROM_TO_M) ** 2)
    rate = prefactor * envelope * _one_minus_sinc(q * s * ANGSTROM_TO_M)
    return float(rate) if rate.ndim == 0 else rate


def phonon_sweep(model: PhononModel, s_values: Iterable[float]) -> np.ndarray:
    return np.asarray(phonon_rate(model, np.asarray(list(s_values), dtype=float)), dtype=float)


@dataclass(frozen=True)
class DriftModel:
    """Exponential relaxation of the lattice-distortion bias after initialization."""

    eta0: float = 0.5
    tau_relax: float = 1.0e6
    """fs"""

    def __post_init__(self):
        if not (math.isfinite(self.eta0) and self.eta0 >= 0):
            raise DomainError(f"eta0 must be >= 0, got {self.eta0}")
        if not (math.isfinite(self.tau_relax) and self.tau_relax > 0):
            raise DomainError(f"tau_relax must be > 0 fs, got {self.tau_relax}")

    @classmethod
    def from_settings(cls, settings: "DriftSettings") -> "DriftModel":
        return cls(eta0=settings.eta0, tau_relax=settings.tau_relax_fs)


def drift_bias(model: DriftModel, t: float | np.ndarray) -> float | np.ndarray:
    """Left-site bias η(t) = η₀·exp(−t/τ) in eV, for t ≥ 0 fs."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(~(t_arr >= 0)):
        raise DomainError(f"t must be >= 0 fs, got {t}")
    value = model.eta0 * np.exp(-t_arr / model.tau_relax)
    return float(value) if value.ndim == 0 else value


def drift_steps(model: DriftModel, t_start: float, t_end: float, step: float) -> list[tuple[float, float]]:
    """Piecewise-constant approximation of the drift on [t_start, t_end].

    Returns ``(duration, bias)`` pieces of at most ``step`` fs, each carrying the
    exact average of η over its interval.
    """
    if not (0 <= t_start < t_end) or not step > 0:
        raise DomainError(f"invalid drift window [{t_start}, {t_end}] with step {step}")
    n = max(1, math.ceil((t_end - t_start) / step - 1e-12))
    edges = np.linspace(t_start, t_end, n + 1)
    tau = model.tau_relax
    pieces = []
    for a, b in zip(edges[:-1], edges[1:]):
        mean = model.eta0 * tau * (math.exp(-a / tau) - math.exp(-b / tau)) / (b - a)
        pieces.append((float(b - a), mean))
    return pieces


def drift_decoherence_estimate(model: DriftModel, t_tunnel: float) -> float:
    """Ratio of the lattice relaxation rate to the oscillation rate, (ħ/τ)/(2T)."""
    if not t_tunnel > 0:
        raise DomainError(f"t_tunnel must be > 0 eV, got {t_tunnel}")
    return (HBAR / model.tau_relax) / (2.0 * t_tunnel)
