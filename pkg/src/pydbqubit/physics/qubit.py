"""Charge-qubit Hamiltonian H_q of an array of DB pairs.

Basis index ``k`` of an N-qubit register stores qubit ``p`` in bit ``N-1-p``
(qubit 0 most significant). State 0 of a qubit has the excess electron on the
left site and Z = +1.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from functools import reduce
from itertools import combinations, product
from typing import TYPE_CHECKING, Iterable, Optional, Sequence

import numpy as np

from ..errors import CapacityError, DomainError, ProjectionError, ScheduleError
from .defines import STATEVECTOR_QUBIT_CAP
from .model import DeviceLayout, MaterialParams, screened_coulomb, validate_layout

if TYPE_CHECKING:
    from ..settings import PulseSettings
    from .hubbard import HubbardParams
    from .well1d import CalibratedWell

__all__ = [
    "ZZ_CONVENTIONS",
    "PAULI",
    "pauli_operator",
    "embed",
    "pauli_coefficients",
    "QubitParams",
    "geometry_to_params",
    "qubit_params_from_hubbard",
    "z_signs",
    "build_hq",
    "conjugate_basis_states",
    "Segment",
    "PulseSchedule",
]

logger = logging.getLogger(__name__)

ZZ_CONVENTIONS = ("projected", "literal")

PAULI = {
    "I": np.eye(2),
    "X": np.array([[0.0, 1.0], [1.0, 0.0]]),
    "Y": np.array([[0.0, -1j], [1j, 0.0]]),
    "Z": np.array([[1.0, 0.0], [0.0, -1.0]]),
}


def pauli_operator(label: str) -> np.ndarray:
    """Tensor product of single-qubit Paulis, e.g. ``"XIZ"``; qubit 0 is the leftmost factor."""
    try:
        return reduce(np.kron, (PAULI[c] for c in label.upper()))
    except KeyError as exc:
        raise DomainError(f"invalid Pauli label {label!r}") from exc


def embed(op: np.ndarray, qubit: int, n_qubits: int) -> np.ndarray:
    """Single-qubit operator acting on ``qubit`` of an ``n_qubits`` register."""
    if not 0 <= qubit < n_qubits:
        raise DomainError(f"qubit index {qubit} out of range for {n_qubits} qubits")
    left = np.eye(2**qubit)
    right = np.eye(2 ** (n_qubits - 1 - qubit))
    return np.kron(np.kron(left, op), right)


def pauli_coefficients(H: np.ndarray, n_qubits: int, tol: float = 0.0) -> dict[str, float]:
    """Real Pauli expansion H = Σ c_P P with c_P = Tr(P·H)/2^N."""
    H = np.asarray(H)
    d = 2**n_qubits
    if H.shape != (d, d):
        raise DomainError(f"expected a {d}x{d} matrix, got {H.shape}")
    coeffs = {}
    for letters in product("IXYZ", repeat=n_qubits):
        label = "".join(letters)
        c = float(np.real(np.einsum("ij,ji->", pauli_operator(label), H))) / d
        if abs(c) > tol:
            coeffs[label] = c
    return coeffs


def _square(values, n: int, name: str) -> np.ndarray:
    arr = np.zeros((n, n)) if values is None else np.array(values, dtype=float)
    if arr.shape != (n, n):
        raise DomainError(f"{name} must be ({n}, {n}), got {arr.shape}")
    arr = np.triu(arr, 1)
    arr = arr + arr.T
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class QubitParams:
    """Coefficients of H_q, in eV.

    ``w_same``/``w_cross`` are symmetric (N, N) with zero diagonal. ``static_bias``
    is a per-qubit Z field from inter-pair Coulomb asymmetry; it enters as ½·b·Z
    next to the applied tilt.
    """

    n_qubits: int
    t_tunnel: float
    u0: float = 0.5
    w0: float = 0.0
    e_os: float = 0.35
    eta: float = 0.0
    w_same: Optional[np.ndarray] = None
    w_cross: Optional[np.ndarray] = None
    zz_convention: str = "projected"
    t_per_qubit: Optional[tuple[float, ...]] = None
    static_bias: Optional[tuple[float, ...]] = None

    def __post_init__(self):
        n = int(self.n_qubits)
        if n < 1:
            raise DomainError(f"n_qubits must be >= 1, got {self.n_qubits}")
        object.__setattr__(self, "n_qubits", n)
        if not (math.isfinite(self.t_tunnel) and self.t_tunnel > 0):
            raise DomainError(f"t_tunnel must be > 0 eV, got {self.t_tunnel}")
        if self.zz_convention not in ZZ_CONVENTIONS:
            raise DomainError(f"zz_convention must be one of {ZZ_CONVENTIONS}, got {self.zz_convention!r}")
        object.__setattr__(self, "w_same", _square(self.w_same, n, "w_same"))
        object.__setattr__(self, "w_cross", _square(self.w_cross, n, "w_cross"))
        if self.t_per_qubit is not None:
            t = tuple(float(v) for v in self.t_per_qubit)
            if len(t) != n or not all(math.isfinite(v) and v > 0 for v in t):
                raise DomainError(f"t_per_qubit must hold {n} positive values, got {self.t_per_qubit}")
            object.__setattr__(self, "t_per_qubit", t)
        bias = (0.0,) * n if self.static_bias is None else tuple(float(v) for v in self.static_bias)
        if len(bias) != n:
            raise DomainError(f"static_bias must hold {n} values, got {len(bias)}")
        object.__setattr__(self, "static_bias", bias)

    @property
    def tunneling(self) -> tuple[float, ...]:
        """Per-qubit T."""
        return self.t_per_qubit or (self.t_tunnel,) * self.n_qubits

    @property
    def w_minus(self) -> np.ndarray:
        return self.w_same - self.w_cross

    @property
    def w_plus(self) -> np.ndarray:
        return self.w_same + self.w_cross

    @property
    def zz(self) -> np.ndarray:
        """Z_pZ_q coefficient matrix (symmetric, zero diagonal)."""
        return self.w_minus / 2.0 if self.zz_convention == "projected" else self.w_minus

    @property
    def kappa(self) -> float:
        """Identity coefficient N(3E_os+3η+U₀+2W₀) + (9/2)Σ_{p<q} W⁺_pq."""
        iu = np.triu_indices(self.n_qubits, 1)
        return self.n_qubits * (3 * self.e_os + 3 * self.eta + self.u0 + 2 * self.w0) + 4.5 * float(
            self.w_plus[iu].sum()
        )

    def with_convention(self, zz_convention: str) -> "QubitParams":
        return replace(self, zz_convention=zz_convention)


def _pair_coulomb(layout: DeviceLayout, eps: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    n = layout.n_pairs
    w_same = np.zeros((n, n))
    w_cross = np.zeros((n, n))
    bias = np.zeros(n)
    for p, q in combinations(range(n), 2):
        (lp, rp), (lq, rq) = layout.pairs[p], layout.pairs[q]
        w = {
            (a, b): screened_coulomb(layout.distance(a, b), eps)
            for a, b in ((lp, lq), (rp, rq), (lp, rq), (rp, lq))
        }
        w_same[p, q] = 0.5 * (w[lp, lq] + w[rp, rq])
        w_cross[p, q] = 0.5 * (w[lp, rq] + w[rp, lq])
        # The neighbour's mean charge of 3/2 per site tilts each pair.
        bias[p] += 1.5 * (w[lp, lq] + w[lp, rq] - w[rp, lq] - w[rp, rq])
        bias[q] += 1.5 * (w[lp, lq] + w[rp, lq] - w[lp, rq] - w[rp, rq])
    return w_same + w_same.T, w_cross + w_cross.T, bias


def geometry_to_params(
    layout: DeviceLayout,
    material: MaterialParams,
    splitting_source: str = "explicit",
    splitting: float = 0.0887,
    calibrated: Optional["CalibratedWell"] = None,
    zz_convention: str = "projected",
    t_per_qubit: Optional[Sequence[float]] = None,
    e_os: Optional[float] = None,
    eta: float = 0.0,
    u0: Optional[float] = None,
    strict: bool = True,
) -> QubitParams:
    """Qubit parameters of a DB layout.

    T is half the tunnel splitting, taken from ``splitting`` or from the calibrated
    well at each pair's separation. W^s and W^c are the means of the two same-side
    and the two cross-side screened Coulomb energies between pairs.

    Raises:
        DomainError: If ``strict`` and the layout violates the separation rules.

    """
    if strict:
        report = validate_layout(layout)
        if not report.ok:
            raise DomainError(f"layout violates {', '.join(sorted(report.kinds()))}")
    if splitting_source == "explicit":
        if not splitting > 0:
            raise DomainError(f"splitting must be > 0 eV, got {splitting}")
        t_values = [splitting / 2.0] * layout.n_pairs
    elif splitting_source == "calibrated_well":
        if calibrated is None:
            raise DomainError("calibrated_well splitting source needs a calibrated well")
        t_values = [calibrated.fd_splitting(s) / 2.0 for s in layout.separations]
    else:
        raise DomainError(f"unknown splitting source {splitting_source!r}")
    if t_per_qubit is None and max(t_values) - min(t_values) > 1e-12 * max(t_values):
        t_per_qubit = t_values

    w_same, w_cross, bias = _pair_coulomb(layout, material.eps_surface)
    w0 = float(np.mean([screened_coulomb(s, material.eps_surface) for s in layout.separations]))
    params = QubitParams(
        n_qubits=layout.n_pairs,
        t_tunnel=float(np.mean(t_values)),
        u0=material.onsite_shift if u0 is None else u0,
        w0=w0,
        e_os=material.neutral_db_level if e_os is None else e_os,
        eta=eta,
        w_same=w_same,
        w_cross=w_cross,
        zz_convention=zz_convention,
        t_per_qubit=None if t_per_qubit is None else tuple(t_per_qubit),
        static_bias=tuple(bias),
    )
    logger.debug("qubit params: T=%s, kappa=%.6g eV", params.tunneling, params.kappa)
    return params


def qubit_params_from_hubbard(params: "HubbardParams", layout: DeviceLayout) -> tuple[QubitParams, tuple[float, ...]]:
    """QubitParams and applied tilts equivalent to uniform-η, uniform-U Hubbard parameters.

    Raises:
        ProjectionError: If η or U differ between sites, or intra-pair W differs between pairs.

    """
    if np.ptp(params.eta) > 1e-12 or np.ptp(params.u_onsite) > 1e-12:
        raise ProjectionError("qubit reduction needs uniform eta and U")
    if np.ptp(params.w_intersite, axis=(1, 3)).max() > 1e-12:
        raise ProjectionError("qubit reduction needs spin-independent W")
    w_site = params.w_intersite.mean(axis=(1, 3))
    n = layout.n_pairs
    w0_values = [w_site[a, b] for a, b in layout.pairs]
    if np.ptp(w0_values) > 1e-12:
        raise ProjectionError("qubit reduction needs equal intra-pair W")

    w_same = np.zeros((n, n))
    w_cross = np.zeros((n, n))
    bias = np.zeros(n)
    for p, q in combinations(range(n), 2):
        (lp, rp), (lq, rq) = layout.pairs[p], layout.pairs[q]
        w_same[p, q] = 0.5 * (w_site[lp, lq] + w_site[rp, rq])
        w_cross[p, q] = 0.5 * (w_site[lp, rq] + w_site[rp, lq])
        bias[p] += 1.5 * (w_site[lp, lq] + w_site[lp, rq] - w_site[rp, lq] - w_site[rp, rq])
        bias[q] += 1.5 * (w_site[lp, lq] + w_site[rp, lq] - w_site[lp, rq] - w_site[rp, rq])

    side = {}
    for p, (left, right) in enumerate(layout.pairs):
        side[left], side[right] = (p, 1.0), (p, -1.0)
    deltav = np.zeros(n)
    for i, j in zip(*np.nonzero(np.triu(params.v_bias, 1))):
        v = params.v_bias[i, j]
        p, sign = side[int(i)]
        deltav[p] += 0.5 * v * sign
        p, sign = side[int(j)]
        deltav[p] -= 0.5 * v * sign

    t_values = tuple(float(params.t_hop[a, b]) for a, b in layout.pairs)
    if min(t_values) <= 0:
        raise ProjectionError("every pair needs a positive hopping T")
    uniform = max(t_values) - min(t_values) <= 1e-12 * max(t_values)
    qp = QubitParams(
        n_qubits=n,
        t_tunnel=float(np.mean(t_values)),
        u0=float(params.u_onsite[0]),
        w0=float(w0_values[0]),
        e_os=params.e_os,
        eta=float(params.eta[0]),
        w_same=w_same + w_same.T,
        w_cross=w_cross + w_cross.T,
        t_per_qubit=None if uniform else t_values,
        static_bias=tuple(bias),
    )
    return qp, tuple(deltav)


def z_signs(n_qubits: int) -> np.ndarray:
    """(2^N, N) table of Z eigenvalues, row k holding qubit p at column p."""
    k = np.arange(2**n_qubits)
    bits = (k[:, None] >> (n_qubits - 1 - np.arange(n_qubits))) & 1
    return 1.0 - 2.0 * bits


def build_hq(
    params: QubitParams,
    deltav: Sequence[float],
    tunneling: Optional[Sequence[float]] = None,
) -> np.ndarray:
    """Real symmetric 2^N matrix κ𝟙 + Σ[T X + ½(ΔV+b) Z] + Σ_{p<q} c_pq Z_pZ_q.

    ``tunneling`` scales each qubit's T (1 keeps it, 0 switches it off).

    Raises:
        CapacityError: If N exceeds the state-vector cap.
        ScheduleError: If a tilt or multiplier is non-finite.

    """
    n = params.n_qubits
    if n > STATEVECTOR_QUBIT_CAP:
        raise CapacityError(f"{n} qubits exceeds the state-vector cap of {STATEVECTOR_QUBIT_CAP}")
    dv = np.asarray(deltav, dtype=float)
    scale = np.ones(n) if tunneling is None else np.asarray(tunneling, dtype=float)
    if dv.shape != (n,) or scale.shape != (n,):
        raise DomainError(f"deltav and tunneling must hold {n} values")
    if not (np.all(np.isfinite(dv)) and np.all(np.isfinite(scale))):
        raise ScheduleError(f"non-finite segment values: deltav={dv.tolist()}, tunneling={scale.tolist()}")

    z = z_signs(n)
    fields = 0.5 * (dv + np.asarray(params.static_bias))
    diag = params.kappa + z @ fields
    zz = params.zz
    for p, q in combinations(range(n), 2):
        if zz[p, q]:
            diag += zz[p, q] * z[:, p] * z[:, q]
    H = np.diag(diag)
    k = np.arange(2**n)
    for p, t in enumerate(np.asarray(params.tunneling) * scale):
        if t:
            H[k ^ (1 << (n - 1 - p)), k] += t
    return H


def conjugate_basis_states() -> tuple[np.ndarray, np.ndarray]:
    """(|+⟩, |−⟩) = (|0⟩ ± |1⟩)/√2."""
    r = 1.0 / math.sqrt(2.0)
    return np.array([r, r], dtype=complex), np.array([r, -r], dtype=complex)


@dataclass(frozen=True)
class Segment:
    """Constant controls for ``duration`` fs: per-qubit tilt ΔV (eV) and T multiplier."""

    duration: float
    deltav: tuple[float, ...]
    tunneling: Optional[tuple[float, ...]] = None

    def __post_init__(self):
        object.__setattr__(self, "deltav", tuple(float(v) for v in self.deltav))
        if self.tunneling is not None:
            object.__setattr__(self, "tunneling", tuple(float(v) for v in self.tunneling))
        if not (math.isfinite(self.duration) and self.duration > 0):
            raise ScheduleError(f"segment duration must be finite and > 0 fs, got {self.duration}")
        values = self.deltav + (self.tunneling or ())
        if not all(math.isfinite(v) for v in values):
            raise ScheduleError(f"segment has non-finite values: {self}")
        if self.tunneling is not None and len(self.tunneling) != len(self.deltav):
            raise ScheduleError("tunneling multipliers and deltav differ in length")

    @property
    def n_qubits(self) -> int:
        return len(self.deltav)

    def hamiltonian(self, params: QubitParams) -> np.ndarray:
        return build_hq(params, self.deltav, self.tunneling)


@dataclass(frozen=True)
class PulseSchedule:
    """Piecewise-constant control sequence, right-continuous in time."""

    segments: tuple[Segment, ...] = ()
    _edges: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        segments = tuple(self.segments)
        object.__setattr__(self, "segments", segments)
        if len({seg.n_qubits for seg in segments}) > 1:
            raise ScheduleError("segments act on different numbers of qubits")
        edges = np.concatenate([[0.0], np.cumsum([seg.duration for seg in segments])])
        edges.setflags(write=False)
        object.__setattr__(self, "_edges", edges)

    @classmethod
    def constant(
        cls, duration: float, deltav: Sequence[float], tunneling: Optional[Sequence[float]] = None
    ) -> "PulseSchedule":
        return cls((Segment(duration, tuple(deltav), None if tunneling is None else tuple(tunneling)),))

    @classmethod
    def from_settings(cls, settings: "PulseSettings") -> "PulseSchedule":
        return cls(tuple(Segment(s.duration_fs, s.deltav, s.tunneling) for s in settings.segments))

    @classmethod
    def from_pieces(cls, pieces: Iterable[tuple[float, Sequence[float]]]) -> "PulseSchedule":
        return cls(tuple(Segment(d, tuple(dv)) for d, dv in pieces))

    def __len__(self) -> int:
        return len(self.segments)

    def __add__(self, other: "PulseSchedule") -> "PulseSchedule":
        return PulseSchedule(self.segments + other.segments)

    @property
    def n_qubits(self) -> Optional[int]:
        return self.segments[0].n_qubits if self.segments else None

    @property
    def total_duration(self) -> float:
        return float(self._edges[-1])

    @property
    def edges(self) -> np.ndarray:
        """Segment boundaries, starting at 0 and ending at the total duration."""
        return self._edges

    def segment_index(self, t: float) -> int:
        if not self.segments:
            raise ScheduleError("empty schedule")
        if not 0 <= t <= self.total_duration:
            raise DomainError(f"t={t} fs outside [0, {self.total_duration}]")
        return min(int(np.searchsorted(self._edges, t, side="right")) - 1, len(self.segments) - 1)

    def deltav_at(self, t: float) -> tuple[float, ...]:
        return self.segments[self.segment_index(t)].deltav

    def shifted(self, deltav: Sequence[float]) -> "PulseSchedule":
        """Copy with ``deltav`` added to every segment's tilt."""
        extra = tuple(float(v) for v in deltav)
        return PulseSchedule(
            tuple(
                Segment(seg.duration, tuple(a + b for a, b in zip(seg.deltav, extra)), seg.tunneling)
                for seg in self.segments
            )
        )
