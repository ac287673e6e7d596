"""One-dimensional double-well model of a DB pair.

Energies are measured from the barrier plateau (0 eV), so bound levels are
negative. Lengths are in Å; the kinetic prefactor is ħ²/2m* in eV·Å².
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum
from typing import TYPE_CHECKING, Iterable, Optional, Sequence

import numpy as np
from scipy.integrate import quad
from scipy.linalg import eigh_tridiagonal
from scipy.optimize import brentq, minimize_scalar
from tqdm import tqdm

from ..config import NO_PROGRESS
from ..errors import CalibrationError, DbQubitError, DomainError, NoTunnelingError
from ..tables import ResultTable, sanitize_status
from .defines import (
    DFT_ANCHORS,
    HBAR,
    HBAR2_OVER_2ME,
    HZ_PER_INVERSE_FS,
    MAX_SWEEP_SEPARATION,
    MIN_PAIR_SEPARATION,
)

if TYPE_CHECKING:
    from ..settings import SimulationConfig, WellSettings
    from .model import MaterialParams

__all__ = [
    "DEFAULT_GRID_SPACING",
    "MIN_GRID",
    "DEFAULT_MARGIN",
    "BOUNDARY_TOLERANCE",
    "SWEEP_COLUMNS",
    "WellShape",
    "DoubleWellPotential",
    "evaluate_potential",
    "BoundStateResult",
    "solve_bound_states",
    "wkb_action",
    "single_well_levels",
    "wkb_splitting",
    "splitting_to_rate",
    "calibrate_well",
    "calibrate_anchor_depth",
    "CalibratedWell",
    "fit_anchor_width",
    "calibrate_sweep_well",
    "sweep_separation",
]

logger = logging.getLogger(__name__)

DEFAULT_GRID_SPACING = 0.02
"""Target FD grid spacing in Å when n_grid is not given."""

MIN_GRID = 500
DEFAULT_MARGIN = 25.0
BOUNDARY_TOLERANCE = 1e-8

SWEEP_COLUMNS = ("s_angstrom", "splitting_fd_ev", "splitting_wkb_ev", "rate_fd_hz", "rate_wkb_hz", "status")


class WellShape(str, Enum):
    SQUARE = "square"
    GAUSSIAN = "gaussian"
    HARMONIC = "harmonic"
    """Single parabolic well V = D((x/a)² − 1), a = width/2. Test hook for the FD solver."""


@dataclass(frozen=True)
class DoubleWellPotential:
    """Two wells centred at ±s/2.

    The left well floor is raised by ``asymmetry``. With ``isolated`` only the
    right well is kept, which is how single-well levels are computed. For the
    gaussian shape each well is −D·exp(−(x−c)²/2σ²) with σ = width/2.
    """

    s: float
    well_depth: float
    well_width: float = 3.0
    asymmetry: float = 0.0
    well_shape: WellShape = WellShape.SQUARE
    m_star: float = 0.26
    domain: Optional[tuple[float, float]] = None
    isolated: bool = False
    margin: float = DEFAULT_MARGIN

    def __post_init__(self):
        object.__setattr__(self, "well_shape", WellShape(self.well_shape))
        if not self.well_depth > 0:
            raise DomainError(f"well_depth must be > 0, got {self.well_depth}")
        if not 0 <= self.asymmetry <= self.well_depth:
            raise DomainError(f"asymmetry must lie in [0, well_depth], got {self.asymmetry}")
        if not self.well_width > 0:
            raise DomainError(f"well_width must be > 0, got {self.well_width}")
        if not self.m_star > 0:
            raise DomainError(f"m_star must be > 0, got {self.m_star}")
        if self.s < 0:
            raise DomainError(f"separation must be >= 0, got {self.s}")
        if self.domain is not None:
            lo, hi = self.domain
            w_lo, w_hi = self._well_extent()
            if not (lo <= w_lo and hi >= w_hi and lo < hi):
                raise DomainError(f"domain {self.domain} does not contain the wells [{w_lo}, {w_hi}]")

    def _well_extent(self) -> tuple[float, float]:
        half = self.well_width / 2
        if self.well_shape is WellShape.HARMONIC:
            return -half, half
        if self.isolated:
            return self.s / 2 - half, self.s / 2 + half
        return -self.s / 2 - half, self.s / 2 + half

    @property
    def bounds(self) -> tuple[float, float]:
        """The solver domain [x_min, x_max] in Å."""
        if self.domain is not None:
            return self.domain
        lo, hi = self._well_extent()
        if self.well_shape is WellShape.HARMONIC:
            reach = max(3.0 * hi, hi + self.margin / 2)
            return -reach, reach
        return lo - self.margin, hi + self.margin

    @property
    def kinetic(self) -> float:
        """ħ²/2m* in eV·Å²."""
        return HBAR2_OVER_2ME / self.m_star

    @property
    def centers(self) -> tuple[float, ...]:
        if self.well_shape is WellShape.HARMONIC:
            return (0.0,)
        if self.isolated:
            return (self.s / 2,)
        return (-self.s / 2, self.s / 2)

    def isolated_well(self) -> "DoubleWellPotential":
        """The right well alone, on its own domain."""
        return replace(self, isolated=True, asymmetry=0.0, domain=None)

    def with_separation(self, s: float) -> "DoubleWellPotential":
        return replace(self, s=s, domain=None)

    def _floors(self) -> list[tuple[float, float]]:
        """(centre, floor) of each well; the left floor carries the asymmetry."""
        if self.well_shape is WellShape.HARMONIC or self.isolated:
            return [(c, -self.well_depth) for c in self.centers]
        left, right = self.centers
        return [(left, -self.well_depth + self.asymmetry), (right, -self.well_depth)]

    def values(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        half = self.well_width / 2
        if self.well_shape is WellShape.HARMONIC:
            return self.well_depth * ((x / half) ** 2 - 1.0)
        v = np.zeros_like(x)
        for c, floor in self._floors():
            if self.well_shape is WellShape.SQUARE:
                v = np.where(np.abs(x - c) <= half, floor, v)
            else:
                v = v + floor * np.exp(-((x - c) ** 2) / (2 * half**2))
        return v

    def cell_averaged(self, x: np.ndarray, h: float) -> np.ndarray:
        """Mean of the potential over [x − h/2, x + h/2] for each grid point.

        Square wells are averaged exactly by their overlap with each cell; smooth
        shapes are point-sampled.
        """
        x = np.asarray(x, dtype=float)
        if self.well_shape is not WellShape.SQUARE:
            return self.values(x)
        half = self.well_width / 2
        v = np.zeros_like(x)
        for c, floor in self._floors():
            overlap = np.clip(np.minimum(x + h / 2, c + half) - np.maximum(x - h / 2, c - half), 0.0, None)
            v = v + floor * overlap / h
        return v

    def grid(self, n_grid: int) -> tuple[np.ndarray, float]:
        """Interior points of the Dirichlet box and their spacing."""
        lo, hi = self.bounds
        h = (hi - lo) / (n_grid + 1)
        return lo + h * np.arange(1, n_grid + 1), h

    def default_n_grid(self, spacing: float = DEFAULT_GRID_SPACING) -> int:
        lo, hi = self.bounds
        return max(MIN_GRID, int(math.ceil((hi - lo) / spacing)))


def evaluate_potential(pot: DoubleWellPotential, x: float | np.ndarray) -> float | np.ndarray:
    """Potential in eV at position(s) x in Å; square wells give exact step values."""
    lo, hi = pot.bounds
    x_arr = np.asarray(x, dtype=float)
    if np.any((x_arr < lo) | (x_arr > hi)) or np.any(~np.isfinite(x_arr)):
        raise DomainError(f"x={x} outside the domain [{lo}, {hi}]")
    v = pot.values(x_arr)
    return float(v) if v.ndim == 0 else v


@dataclass(frozen=True)
class BoundStateResult:
    energies: np.ndarray
    """Bound levels in eV, ascending, all below the plateau."""

    wavefunctions: np.ndarray
    """One row per level, normalized so that Σ|ψ|²·h = 1."""

    grid: np.ndarray
    grid_spacing: float

    def __len__(self) -> int:
        return len(self.energies)

    @property
    def splitting(self) -> float:
        """E₁ − E₀ in eV."""
        if len(self.energies) < 2:
            raise NoTunnelingError(f"only {len(self.energies)} bound state(s); no splitting defined")
        return float(self.energies[1] - self.energies[0])

    def norms(self) -> np.ndarray:
        return np.sum(self.wavefunctions**2, axis=1) * self.grid_spacing


def solve_bound_states(
    pot: DoubleWellPotential,
    n_grid: Optional[int] = None,
    n_states: Optional[int] = None,
    warn_boundary: bool = True,
) -> BoundStateResult:
    """Bound states of the three-point FD Hamiltonian with Dirichlet walls.

    Args:
        pot: The potential.
        n_grid: Number of interior grid points (≥ 500). Defaults to a 0.02 Å spacing.
        n_states: Keep at most this many of the lowest levels. ``None`` returns every
            level below the plateau.
        warn_boundary: Log a warning when a wavefunction reaches the walls.

    Returns:
        BoundStateResult: Empty when no level lies below 0 eV.

    """
    if n_grid is None:
        n_grid = pot.default_n_grid()
    if n_grid < MIN_GRID:
        raise DomainError(f"n_grid must be >= {MIN_GRID}, got {n_grid}")
    x, h = pot.grid(n_grid)
    v = pot.cell_averaged(x, h)
    k = pot.kinetic
    diag = 2.0 * k / h**2 + v
    off = np.full(n_grid - 1, -k / h**2)

    if n_states is not None:
        if n_states < 1:
            raise DomainError(f"n_states must be >= 1, got {n_states}")
        w, vecs = eigh_tridiagonal(diag, off, select="i", select_range=(0, min(n_states, n_grid) - 1))
        keep = w < 0.0
        w, vecs = w[keep], vecs[:, keep]
    elif v.min() < 0.0:
        w, vecs = eigh_tridiagonal(diag, off, select="v", select_range=(v.min() - 1.0, 0.0))
        keep = w < 0.0
        w, vecs = w[keep], vecs[:, keep]
    else:
        w, vecs = np.empty(0), np.empty((n_grid, 0))

    psi = vecs.T / math.sqrt(h)
    anchor = int(np.argmin(np.abs(x - pot.centers[-1])))
    worst_edge = 0.0
    for row in psi:
        peak = np.max(np.abs(row))
        ref = row[anchor]
        if abs(ref) < 1e-8 * peak:
            right = x >= 0
            ref = row[right][np.argmax(np.abs(row[right]))]
        if ref < 0:
            row *= -1.0
        worst_edge = max(worst_edge, max(abs(row[0]), abs(row[-1])) / peak)
    if warn_boundary and worst_edge > BOUNDARY_TOLERANCE:
        logger.warning(
            "Boundary amplitude %.2e of max at s=%.4g Å; widen the domain (margin=%.4g Å)",
            worst_edge,
            pot.s,
            pot.margin,
        )
    return BoundStateResult(energies=w, wavefunctions=psi, grid=x, grid_spacing=h)


def wkb_action(pot: DoubleWellPotential, energy: float) -> float:
    """Dimensionless action ∫√((V − E)/(ħ²/2m*)) dx across the central barrier."""
    if pot.well_shape is WellShape.HARMONIC or pot.isolated:
        raise DomainError("the WKB action needs a double well")
    v_mid = float(pot.values(0.0))
    if energy >= v_mid:
        raise NoTunnelingError(f"energy {energy:.6g} eV is not below the barrier top {v_mid:.6g} eV")
    f = lambda x: float(pot.values(x)) - energy
    # Turning point on the right; the symmetric one mirrors it.
    x_turn = brentq(f, 0.0, pot.s / 2, xtol=1e-13)
    integrand = lambda x: math.sqrt(max(f(x), 0.0) / pot.kinetic)
    value, _ = quad(integrand, -x_turn, x_turn, limit=200, epsabs=1e-13, epsrel=1e-11)
    return value


def _wkb_from_levels(pot: DoubleWellPotential, e0: float, hw0: float) -> float:
    return hw0 / math.pi * math.exp(-wkb_action(pot, e0))


def single_well_levels(pot: DoubleWellPotential, n_grid: Optional[int] = None) -> tuple[float, float]:
    """Isolated-well ground level E₀ and attempt energy ħω₀, eV.

    ħω₀ is the isolated level spacing E₁ − E₀; with a single bound level it falls
    back to the harmonic estimate 2(E₀ − V_min).
    """
    iso = pot.isolated_well()
    res = solve_bound_states(iso, n_grid, n_states=2)
    if len(res) == 0:
        raise NoTunnelingError("the isolated well has no bound state")
    e0 = float(res.energies[0])
    if len(res) >= 2:
        hw0 = float(res.energies[1] - e0)
    else:
        hw0 = 2.0 * (e0 + pot.well_depth)
    return e0, hw0


def wkb_splitting(pot: DoubleWellPotential, n_grid: Optional[int] = None) -> float:
    """WKB tunnel splitting (ħω₀/π)·exp(−S) in eV for a symmetric pot."""
    if pot.asymmetry != 0.0:
        raise DomainError("wkb_splitting needs a symmetric potential (asymmetry = 0)")
    e0, hw0 = single_well_levels(pot, n_grid)
    return _wkb_from_levels(pot, e0, hw0)


def splitting_to_rate(delta: float | np.ndarray) -> float | np.ndarray:
    """Tunneling rate 2Δ/ħ in Hz for a splitting Δ in eV."""
    d = np.asarray(delta, dtype=float)
    if np.any(d < 0) or np.any(~np.isfinite(d)):
        raise DomainError(f"splitting must be >= 0, got {delta}")
    rate = 2.0 * d / HBAR * HZ_PER_INVERSE_FS
    return float(rate) if rate.ndim == 0 else rate


def _level_margin(binding: float, m_star: float) -> float:
    kappa = math.sqrt(binding * m_star / HBAR2_OVER_2ME)
    return max(DEFAULT_MARGIN, 20.0 / kappa)


def calibrate_well(
    target_level: float,
    shape: WellShape | str = WellShape.SQUARE,
    width: float = 3.0,
    m_star: float = 0.26,
    n_grid: Optional[int] = None,
) -> float:
    """Depth (eV) that puts the isolated well's ground state at −target_level.

    The root is searched in [target_level, 10·target_level].

    Raises:
        CalibrationError: If no depth in the bracket reaches the target.

    """
    if not target_level > 0:
        raise DomainError(f"target_level must be > 0, got {target_level}")
    margin = _level_margin(target_level, m_star)

    def residual(depth: float) -> float:
        pot = DoubleWellPotential(
            s=0.0, well_depth=depth, well_width=width, well_shape=shape, m_star=m_star, isolated=True, margin=margin
        )
        res = solve_bound_states(pot, n_grid, n_states=1, warn_boundary=False)
        e0 = float(res.energies[0]) if len(res) else 0.0
        return e0 + target_level

    lo, hi = target_level, 10.0 * target_level
    f_lo, f_hi = residual(lo), residual(hi)
    if f_lo * f_hi > 0:
        raise CalibrationError(
            f"no depth in [{lo:.6g}, {hi:.6g}] eV puts the ground state at {-target_level:.6g} eV "
            f"(residuals {f_lo:.4g}, {f_hi:.4g} eV; width={width} Å, m*={m_star})"
        )
    depth = brentq(residual, lo, hi, xtol=1e-12, rtol=1e-14)
    logger.info("Calibrated %s well depth %.8f eV for level %.6g eV", WellShape(shape).value, depth, -target_level)
    return depth


def _fd_splitting_or_inf(pot: DoubleWellPotential, n_grid: Optional[int] = None) -> float:
    """FD splitting, or infinity while the odd state is unbound."""
    res = solve_bound_states(pot, n_grid, n_states=2, warn_boundary=False)
    return res.splitting if len(res) >= 2 else math.inf


def calibrate_anchor_depth(
    separation: float,
    splitting: float,
    shape: WellShape | str = WellShape.SQUARE,
    width: float = 3.0,
    m_star: float = 0.26,
    depth_range: tuple[float, float] = (0.05, 400.0),
) -> float:
    """Depth (eV) for which the FD splitting at ``separation`` equals ``splitting``.

    The depth range is scanned geometrically for a sign change before the root is
    polished with brentq. Shallow wells whose odd state is unbound count as
    having an infinite splitting.
    """
    if not splitting > 0:
        raise DomainError(f"splitting must be > 0, got {splitting}")

    def residual(depth: float) -> float:
        pot = DoubleWellPotential(s=separation, well_depth=depth, well_width=width, well_shape=shape, m_star=m_star)
        return math.log(_fd_splitting_or_inf(pot) / splitting)

    depths = np.geomspace(depth_range[0], depth_range[1], 48)
    previous = None
    for depth in depths:
        value = residual(float(depth))
        if previous is not None and previous[1] > 0 >= value and math.isfinite(previous[1]):
            root = brentq(residual, previous[0], float(depth), xtol=1e-12, rtol=1e-14)
            logger.info(
                "Anchored %s well depth %.6f eV to %.4g eV at s=%.4g Å",
                WellShape(shape).value, root, splitting, separation,
            )
            return root
        previous = (float(depth), value)
    raise CalibrationError(
        f"no depth in [{depth_range[0]}, {depth_range[1]}] eV gives a {splitting} eV splitting at s={separation} Å "
        f"(width={width} Å, m*={m_star})"
    )


@dataclass(frozen=True)
class CalibratedWell:
    """A symmetric well calibrated once and reused across separations."""

    depth: float
    width: float
    shape: WellShape
    m_star: float
    ground_level: float
    """Isolated-well ground level E₀, eV."""

    attempt_energy: float
    """ħω₀, eV."""

    margin: float
    source: str
    boundary_hit: bool = False
    """True when a width fit stopped at one of its bounds."""

    fit_log_error: Optional[float] = None
    """RMS of log(FD splitting / anchor splitting) over the anchors after a width fit."""

    def potential(self, s: float) -> DoubleWellPotential:
        return DoubleWellPotential(
            s=s, well_depth=self.depth, well_width=self.width, well_shape=self.shape, m_star=self.m_star,
            margin=self.margin,
        )

    @property
    def binding(self) -> float:
        return -self.ground_level

    def wkb_splitting(self, s: float) -> float:
        return _wkb_from_levels(self.potential(s), self.ground_level, self.attempt_energy)

    def fd_splitting(self, s: float, n_grid: Optional[int] = None) -> float:
        return solve_bound_states(self.potential(s), n_grid, n_states=2).splitting


def _finish_calibration(
    depth: float, width: float, shape: WellShape, m_star: float, source: str, margin: float = DEFAULT_MARGIN
) -> CalibratedWell:
    single = DoubleWellPotential(
        s=0.0, well_depth=depth, well_width=width, well_shape=shape, m_star=m_star, margin=margin
    )
    e0, hw0 = single_well_levels(single)
    margin = max(margin, _level_margin(-e0, m_star))
    return CalibratedWell(
        depth=depth, width=width, shape=WellShape(shape), m_star=m_star, ground_level=e0, attempt_energy=hw0,
        margin=margin, source=source,
    )


def fit_anchor_width(
    shape: WellShape | str = WellShape.SQUARE,
    m_star: float = 0.26,
    anchors: Sequence[tuple[float, float]] = DFT_ANCHORS,
    width_bounds: tuple[float, float] = (1.0, 6.0),
) -> CalibratedWell:
    """Width minimizing the squared log-error of the FD splittings at all anchors.

    The depth follows the last anchor exactly for each trial width. A result within
    1% of the bracket width from either bound is flagged with ``boundary_hit``.
    """
    ref_s, ref_split = anchors[-1]
    lo, hi = width_bounds

    def loss(width: float) -> float:
        depth = calibrate_anchor_depth(ref_s, ref_split, shape, width, m_star)
        err = 0.0
        for s, target in anchors:
            pot = DoubleWellPotential(s=s, well_depth=depth, well_width=width, well_shape=shape, m_star=m_star)
            err += math.log(_fd_splitting_or_inf(pot) / target) ** 2
        return err

    best = minimize_scalar(loss, bounds=width_bounds, method="bounded", options={"xatol": 1e-3})
    width = float(best.x)
    depth = calibrate_anchor_depth(ref_s, ref_split, shape, width, m_star)
    log_error = math.sqrt(float(best.fun) / len(anchors))
    boundary_hit = min(width - lo, hi - width) <= 0.01 * (hi - lo)
    if boundary_hit:
        logger.warning(
            "Anchor width fit stopped at the bound: %.4f Å in [%g, %g] (RMS log-error %.3g)", width, lo, hi, log_error
        )
    else:
        logger.info("Fitted anchor width %.4f Å (RMS log-error %.3g)", width, log_error)
    calibrated = _finish_calibration(depth, width, WellShape(shape), m_star, "anchor+width")
    return replace(calibrated, boundary_hit=boundary_hit, fit_log_error=log_error)


def calibrate_sweep_well(material: "MaterialParams", well: "WellSettings") -> CalibratedWell:
    """Calibrated symmetric well for separation sweeps, as configured."""
    shape = WellShape(well.shape)
    m_star = material.effective_mass_ratio
    if well.calibration == "level":
        target = well.target_level if well.target_level is not None else material.binding_target
        depth = calibrate_well(target, shape, well.width, m_star)
        return _finish_calibration(depth, well.width, shape, m_star, "level", _level_margin(target, m_star))
    if well.fit_width:
        return fit_anchor_width(shape, m_star, DFT_ANCHORS)
    depth = calibrate_anchor_depth(well.anchor_separation, well.anchor_splitting, shape, well.width, m_star)
    return _finish_calibration(depth, well.width, shape, m_star, "anchor")


def _sweep_point(cal: CalibratedWell, s: float) -> dict:
    row: dict = {name: None for name in SWEEP_COLUMNS}
    row["s_angstrom"] = float(s)
    try:
        if not MIN_PAIR_SEPARATION - 1e-9 <= s <= MAX_SWEEP_SEPARATION + 1e-9:
            raise DomainError(f"s={s} Å outside [{MIN_PAIR_SEPARATION}, {MAX_SWEEP_SEPARATION}]")
        fd = cal.fd_splitting(s)
        row["splitting_fd_ev"] = fd
        row["rate_fd_hz"] = splitting_to_rate(fd)
        wkb = cal.wkb_splitting(s)
        row["splitting_wkb_ev"] = wkb
        row["rate_wkb_hz"] = splitting_to_rate(wkb)
        row["status"] = "ok"
    except DbQubitError as exc:
        logger.debug("sweep point s=%s failed: %s", s, exc)
        row["status"] = sanitize_status(f"error: {type(exc).__name__}: {exc}")
    return row


def sweep_separation(
    config: "SimulationConfig",
    s_values: Iterable[float],
    calibrated: Optional[CalibratedWell] = None,
    workers: Optional[int] = None,
) -> ResultTable:
    """Splittings and rates versus separation on the calibrated symmetric well.

    Per-point failures are recorded in the ``status`` column; rows are sorted by s.
    """
    if calibrated is None:
        calibrated = calibrate_sweep_well(config.material, config.well)
    s_sorted = sorted(float(s) for s in s_values)
    workers = workers or config.run.workers
    progress = dict(total=len(s_sorted), desc="Separation sweep", disable=NO_PROGRESS)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(tqdm(pool.map(lambda s: _sweep_point(calibrated, s), s_sorted), **progress))
    else:
        rows = [_sweep_point(calibrated, s) for s in tqdm(s_sorted, **progress)]
    rows.sort(key=lambda r: r["s_angstrom"])
    return ResultTable.from_rows(rows, SWEEP_COLUMNS)
