"""Device geometry and material parameters shared by all physics modules."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

import numpy as np

from ..errors import DomainError, LayoutStructureError
from .defines import BOHR_RADIUS, COULOMB_K, MIN_PAIR_SEPARATION, TUNNEL_RANGE

__all__ = [
    "MaterialParams",
    "DeviceLayout",
    "Violation",
    "ValidationReport",
    "validate_layout",
    "screened_coulomb",
]

logger = logging.getLogger(__name__)

_BOUNDARY_TOL = 1e-9


@dataclass(frozen=True)
class MaterialParams:
    """Silicon surface parameters (eV, Å, SI where noted)."""

    band_gap: float = 1.1
    neutral_db_level: float = 0.35
    charged_db_level: float = 0.85
    onsite_shift: float = 0.5
    lattice_displacement: float = 0.3
    effective_mass_ratio: float = 0.26
    eps_surface: float = 6.35
    density: float = 2329.0
    sound_speed_l: float = 8433.0
    deformation_potential: float = 8.8

    def __post_init__(self):
        for name in self.__dataclass_fields__:
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise DomainError(f"MaterialParams.{name} must be strictly positive, got {value}")
        if self.band_gap <= self.charged_db_level:
            raise DomainError(
                f"band_gap ({self.band_gap}) must exceed charged_db_level ({self.charged_db_level})"
            )
        if self.eps_surface < 1.0:
            raise DomainError(f"eps_surface must be >= 1, got {self.eps_surface}")

    @property
    def binding_target(self) -> float:
        """Single-well level below the conduction band, eV."""
        return self.band_gap - self.charged_db_level

    @property
    def effective_bohr_radius(self) -> float:
        """Hydrogenic 1s radius a₀·ε/m*, Å."""
        return BOHR_RADIUS * self.eps_surface / self.effective_mass_ratio


@dataclass(frozen=True)
class DeviceLayout:
    """DB sites (x, y in Å) and their grouping into qubit pairs (left, right)."""

    sites: tuple[tuple[float, float], ...]
    pairs: tuple[tuple[int, int], ...]
    _distances: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        sites = tuple((float(x), float(y)) for x, y in self.sites)
        pairs = tuple((int(a), int(b)) for a, b in self.pairs)
        object.__setattr__(self, "sites", sites)
        object.__setattr__(self, "pairs", pairs)
        _check_structure(sites, pairs)
        coords = np.asarray(sites, dtype=float).reshape(-1, 2)
        diff = coords[:, None, :] - coords[None, :, :]
        distances = np.hypot(diff[..., 0], diff[..., 1])
        distances.setflags(write=False)
        object.__setattr__(self, "_distances", distances)

    @classmethod
    def single_pair(cls, separation: float) -> "DeviceLayout":
        """One pair along x, left site at the origin."""
        return cls(sites=((0.0, 0.0), (separation, 0.0)), pairs=((0, 1),))

    @classmethod
    def parallel_pairs(cls, separation: float, spacing: float, count: int = 2) -> "DeviceLayout":
        """``count`` pairs along x, stacked along y every ``spacing`` Å."""
        sites: list[tuple[float, float]] = []
        pairs: list[tuple[int, int]] = []
        for k in range(count):
            sites.extend([(0.0, k * spacing), (separation, k * spacing)])
            pairs.append((2 * k, 2 * k + 1))
        return cls(sites=tuple(sites), pairs=tuple(pairs))

    @property
    def n_sites(self) -> int:
        return len(self.sites)

    @property
    def n_pairs(self) -> int:
        return len(self.pairs)

    @property
    def distances(self) -> np.ndarray:
        """Symmetric matrix of site-to-site distances, Å."""
        return self._distances

    def distance(self, i: int, j: int) -> float:
        return float(self._distances[i, j])

    @property
    def separations(self) -> tuple[float, ...]:
        """Intra-pair separation s of every pair, Å."""
        return tuple(self.distance(a, b) for a, b in self.pairs)

    def pair_of_site(self) -> dict[int, int]:
        return {site: p for p, pair in enumerate(self.pairs) for site in pair}


def _check_structure(sites: Sequence[tuple[float, float]], pairs: Sequence[tuple[int, int]]) -> None:
    n = len(sites)
    seen: set[int] = set()
    for p, (a, b) in enumerate(pairs):
        for idx in (a, b):
            if not 0 <= idx < n:
                raise LayoutStructureError(f"pair {p} references site {idx}, layout has {n} sites")
            if idx in seen:
                raise LayoutStructureError(f"site {idx} belongs to more than one pair (pair {p})")
            seen.add(idx)
        if a == b:
            raise LayoutStructureError(f"pair {p} joins site {a} to itself")
    for x, y in sites:
        if not (math.isfinite(x) and math.isfinite(y)):
            raise LayoutStructureError(f"site position ({x}, {y}) is not finite")


@dataclass(frozen=True)
class Violation:
    kind: str
    """One of ``min-separation``, ``tunnel-range``, ``cross-pair-isolation``, ``coincident-sites``."""

    subject: tuple[int, ...]
    detail: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def kinds(self) -> set[str]:
        return {v.kind for v in self.violations}

    def __bool__(self) -> bool:
        return self.ok


def validate_layout(layout: DeviceLayout) -> ValidationReport:
    """Check the separation rules of a layout.

    Every pair must satisfy 3.84 ≤ s ≤ 16 Å (both inclusive) and any two sites of
    different pairs must be more than 16 Å apart.

    Raises:
        LayoutStructureError: If the layout has no pairs.

    """
    if layout.n_pairs == 0:
        raise LayoutStructureError("layout has no qubit pairs")
    violations: list[Violation] = []
    for p, (a, b) in enumerate(layout.pairs):
        s = layout.distance(a, b)
        if s < MIN_PAIR_SEPARATION - _BOUNDARY_TOL:
            violations.append(Violation("min-separation", (p,), f"s={s:.6g} Å below {MIN_PAIR_SEPARATION} Å"))
        elif s > TUNNEL_RANGE + _BOUNDARY_TOL:
            violations.append(Violation("tunnel-range", (p,), f"s={s:.6g} Å beyond {TUNNEL_RANGE} Å"))
    for p, q in combinations(range(layout.n_pairs), 2):
        for i in layout.pairs[p]:
            for j in layout.pairs[q]:
                r = layout.distance(i, j)
                if r <= TUNNEL_RANGE + _BOUNDARY_TOL:
                    violations.append(
                        Violation(
                            "cross-pair-isolation",
                            (p, q),
                            f"sites {i} and {j} are {r:.6g} Å apart, within {TUNNEL_RANGE} Å",
                        )
                    )
    for i, j in combinations(range(layout.n_sites), 2):
        if layout.distance(i, j) == 0.0:
            violations.append(Violation("coincident-sites", (i, j), "distance is zero"))
    if violations:
        logger.debug("layout failed validation with %d violation(s)", len(violations))
    return ValidationReport(tuple(violations))


def screened_coulomb(r: float | np.ndarray, eps: float) -> float | np.ndarray:
    """Screened Coulomb energy k/(ε·r) in eV for a distance in Å."""
    if eps < 1.0:
        raise DomainError(f"eps must be >= 1, got {eps}")
    r_arr = np.asarray(r, dtype=float)
    if np.any(~(r_arr > 0)):
        raise DomainError(f"distance must be > 0, got {r}")
    value = COULOMB_K / (eps * r_arr)
    return float(value) if value.ndim == 0 else value
