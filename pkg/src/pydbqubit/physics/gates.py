"""Gate synthesis as pulse schedules, gate fidelities and pulse-duration search.

Single-qubit X rotations come from free tunneling (ΔV = 0), Z rotations from a
large tilt, and the two-qubit phase gate from the ZZ term. Durations are
quantized to :data:`TIME_QUANTUM`.
"""

from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.linalg import expm

from ..errors import CouplingError, DomainError, RegimeError
from .defines import HBAR, TIME_QUANTUM
from .dynamics import LindbladChannel, QuantumState, process_superoperator, schedule_unitary
from .qubit import PAULI, PulseSchedule, QubitParams, Segment

__all__ = [
    "RZ_REGIME_RATIO",
    "DEFAULT_ECHO_TILT_RATIO",
    "GateTarget",
    "rx",
    "rz",
    "x_gate",
    "cphase",
    "zz_phase",
    "FidelityReport",
    "gate_fidelity",
    "channel_fidelity",
    "simulate_fidelity",
    "concurrence",
    "quantize",
    "GateSynthesis",
    "rx_duration",
    "rx_schedule",
    "rz_schedule",
    "cphase_duration",
    "cphase_schedule",
    "x_sandwich_echo",
    "GateReport",
    "DurationOptimum",
    "golden_section",
    "optimize_duration",
]

logger = logging.getLogger(__name__)

RZ_REGIME_RATIO = 20.0
DEFAULT_ECHO_TILT_RATIO = 100.0
INV_PHI = (math.sqrt(5) - 1) / 2
INV_PHI_SQUARE = (3 - math.sqrt(5)) / 2


@dataclass(frozen=True)
class GateTarget:
    unitary: np.ndarray
    label: str = "custom"

    def __post_init__(self):
        u = np.array(self.unitary, dtype=complex)
        if u.shape not in ((2, 2), (4, 4)):
            raise DomainError(f"gate targets act on 1 or 2 qubits, got shape {u.shape}")
        if np.max(np.abs(u.conj().T @ u - np.eye(len(u)))) > 1e-10:
            raise DomainError(f"target {self.label} is not unitary")
        u.setflags(write=False)
        object.__setattr__(self, "unitary", u)

    @property
    def dimension(self) -> int:
        return len(self.unitary)


def rx(theta: float) -> GateTarget:
    return GateTarget(expm(-0.5j * theta * PAULI["X"]), f"Rx({theta:.6g})")


def rz(theta: float) -> GateTarget:
    return GateTarget(np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)]), f"Rz({theta:.6g})")


def x_gate() -> GateTarget:
    return GateTarget(PAULI["X"], "X")


def cphase(phi: float) -> GateTarget:
    return GateTarget(np.diag([1.0, 1.0, 1.0, np.exp(1j * phi)]), f"CPHASE({phi:.6g})")


def zz_phase(phi: float, sign: float = 1.0) -> GateTarget:
    """exp(−i·sign·φ/4·Z⊗Z): CPHASE(−sign·φ) up to single-qubit Z rotations."""
    zz = np.array([1.0, -1.0, -1.0, 1.0])
    return GateTarget(np.diag(np.exp(-0.25j * np.sign(sign) * phi * zz)), f"ZZ({np.sign(sign) * phi:.6g})")


@dataclass(frozen=True)
class FidelityReport:
    process_fidelity: float
    average_gate_fidelity: float
    label: str = "custom"
    noisy: bool = False

    @property
    def infidelity(self) -> float:
        return 1.0 - self.average_gate_fidelity


def _target_matrix(target: GateTarget | np.ndarray) -> tuple[np.ndarray, str]:
    if isinstance(target, GateTarget):
        return target.unitary, target.label
    return np.asarray(target, dtype=complex), "custom"


def gate_fidelity(achieved: np.ndarray, target: GateTarget | np.ndarray) -> FidelityReport:
    """Fidelity of a unitary (d×d) or column-stacking superoperator (d²×d²) to a target.

    F_avg = (d·F_pro + 1)/(d + 1); for unitaries F_pro = |Tr(U†V)|²/d².
    """
    V, label = _target_matrix(target)
    d = len(V)
    achieved = np.asarray(achieved, dtype=complex)
    if achieved.shape == (d, d):
        f_pro = abs(np.trace(V.conj().T @ achieved)) ** 2 / d**2
        noisy = False
    elif achieved.shape == (d * d, d * d):
        s_target = np.kron(V.conj(), V)
        f_pro = float(np.real(np.trace(s_target.conj().T @ achieved))) / d**2
        noisy = True
    else:
        raise DomainError(f"achieved shape {achieved.shape} does not match a {d}-dimensional target")
    f_pro = float(min(max(f_pro, 0.0), 1.0))
    return FidelityReport(f_pro, (d * f_pro + 1.0) / (d + 1.0), label, noisy)


def channel_fidelity(superoperator: np.ndarray, target: GateTarget | np.ndarray) -> FidelityReport:
    return gate_fidelity(superoperator, target)


def simulate_fidelity(
    params: QubitParams,
    schedule: PulseSchedule,
    target: GateTarget,
    channels: Sequence[LindbladChannel] = (),
) -> FidelityReport:
    """Closed-system fidelity when ``channels`` is empty, channel fidelity otherwise."""
    if any(ch.rate_hz > 0 for ch in channels):
        return channel_fidelity(process_superoperator(params, schedule, channels), target)
    return gate_fidelity(schedule_unitary(params, schedule), target)


def concurrence(state: QuantumState | np.ndarray) -> float:
    """Wootters concurrence of a two-qubit state."""
    state = state if isinstance(state, QuantumState) else QuantumState(np.asarray(state))
    if state.n_qubits != 2:
        raise DomainError(f"concurrence needs two qubits, got {state.n_qubits}")
    yy = np.kron(PAULI["Y"], PAULI["Y"])
    if not state.is_density:
        psi = state.data
        return float(abs(psi @ yy @ psi))
    rho = state.data
    tilde = yy @ rho.conj() @ yy
    eig = np.sqrt(np.clip(np.real(np.linalg.eigvals(rho @ tilde)), 0.0, None))
    eig = np.sort(eig)[::-1]
    return float(max(0.0, eig[0] - eig[1] - eig[2] - eig[3]))


def quantize(duration: float) -> float:
    """Round a duration to the schedule time quantum; sub-fs results are flagged in the log."""
    q = round(duration / TIME_QUANTUM) * TIME_QUANTUM
    q = float(round(q, 9))
    if 0 < q < 1.0:
        logger.warning("schedule segment of %.3g fs is below 1 fs", q)
    return q


@dataclass(frozen=True)
class GateSynthesis:
    schedule: PulseSchedule
    target: GateTarget
    bound: float
    """Reported upper bound on the closed-system infidelity."""

    mode: str = "exact"


def rx_duration(theta: float, t_tunnel: float) -> float:
    """Free-tunneling time for Rx(θ): t = θħ/(2T), in fs."""
    if theta < 0:
        raise DomainError(f"theta must be >= 0, got {theta}")
    if not t_tunnel > 0:
        raise DomainError(f"t_tunnel must be > 0 eV, got {t_tunnel}")
    return theta * HBAR / (2.0 * t_tunnel)


def _single_qubit(params: QubitParams) -> None:
    if params.n_qubits != 1:
        raise DomainError(f"single-qubit synthesis needs a 1-qubit register, got {params.n_qubits}")


def rx_schedule(theta: float, params: QubitParams) -> GateSynthesis:
    """Rx(θ) by free tunneling; the static bias is nulled by the tilt."""
    _single_qubit(params)
    t_tunnel = params.tunneling[0]
    duration = quantize(rx_duration(theta, t_tunnel))
    segments = () if duration == 0 else (Segment(duration, (-params.static_bias[0],)),)
    angle_error = 2.0 * t_tunnel * 0.5 * TIME_QUANTUM / HBAR
    return GateSynthesis(PulseSchedule(segments), rx(theta), angle_error**2 / 6.0)


def rz_schedule(theta: float, deltav: float, t_tunnel: float) -> GateSynthesis:
    """Rz(±θ) by a tilt ΔV with always-on tunneling.

    The rotation sign follows ΔV. The bound (2T/ΔV)² covers the tunneling admixture,
    plus the duration quantization.

    Raises:
        RegimeError: If |ΔV| < 20·T.

    """
    if theta < 0:
        raise DomainError(f"theta must be >= 0, got {theta}")
    if not t_tunnel > 0:
        raise DomainError(f"t_tunnel must be > 0 eV, got {t_tunnel}")
    if abs(deltav) < RZ_REGIME_RATIO * t_tunnel:
        raise RegimeError(
            f"|deltav|={abs(deltav):.4g} eV below {RZ_REGIME_RATIO:g}·T={RZ_REGIME_RATIO * t_tunnel:.4g} eV"
        )
    duration = quantize(theta * HBAR / abs(deltav))
    segments = () if duration == 0 else (Segment(duration, (deltav,)),)
    quantization = (abs(deltav) * 0.5 * TIME_QUANTUM / HBAR) ** 2 / 6.0
    bound = (2.0 * t_tunnel / deltav) ** 2 + quantization
    return GateSynthesis(PulseSchedule(segments), rz(math.copysign(theta, deltav)), bound, "tilt")


def cphase_duration(phi: float, zz_coeff: float) -> float:
    """Time for a conditional phase of magnitude φ under c·Z⊗Z: t = φħ/(4|c|).

    The conditional phase is φ₀₀ + φ₁₁ − φ₀₁ − φ₁₀.

    Raises:
        CouplingError: If ``zz_coeff`` is zero.

    """
    if phi < 0:
        raise DomainError(f"phi must be >= 0, got {phi}")
    if zz_coeff == 0 or not math.isfinite(zz_coeff):
        raise CouplingError(f"ZZ coupling is {zz_coeff} eV; no two-qubit phase can accumulate")
    return phi * HBAR / (4.0 * abs(zz_coeff))


def cphase_schedule(
    phi: float, params: QubitParams, mode: str = "ideal", tilt: Optional[float] = None
) -> GateSynthesis:
    """Two-qubit phase gate exp(∓iφ/4·Z⊗Z) on a 2-qubit register.

    ``ideal`` switches tunneling off and nulls the static bias for the whole gate.
    ``echo`` keeps T on and reverses a common tilt halfway, [+ΔV, t/2][−ΔV, t/2],
    so the single-qubit phases cancel; its bound is (4r + φr²)² with
    r = 2T/(|ΔV| − 2|c|).

    Raises:
        CouplingError: If the qubits are not coupled.
        RegimeError: If the echo tilt is below 20·T.

    """
    if params.n_qubits != 2:
        raise DomainError(f"CPHASE synthesis needs a 2-qubit register, got {params.n_qubits}")
    c = float(params.zz[0, 1])
    duration = cphase_duration(phi, c)
    target = zz_phase(phi, math.copysign(1.0, c))
    nulled = tuple(-b for b in params.static_bias)
    angle_error = abs(c) * TIME_QUANTUM / HBAR
    if mode == "ideal":
        t = quantize(duration)
        segments = () if t == 0 else (Segment(t, nulled, (0.0, 0.0)),)
        return GateSynthesis(PulseSchedule(segments), target, 0.8 * (0.5 * angle_error) ** 2, mode)
    if mode != "echo":
        raise DomainError(f"unknown CPHASE mode {mode!r}")

    t_max = max(params.tunneling)
    tilt = DEFAULT_ECHO_TILT_RATIO * t_max if tilt is None else abs(tilt)
    if tilt < RZ_REGIME_RATIO * t_max or tilt <= 2 * abs(c):
        raise RegimeError(f"echo tilt {tilt:.4g} eV below {RZ_REGIME_RATIO:g}·T={RZ_REGIME_RATIO * t_max:.4g} eV")
    half = quantize(duration / 2.0)
    segments = ()
    if half > 0:
        segments = (
            Segment(half, tuple(tilt + v for v in nulled)),
            Segment(half, tuple(-tilt + v for v in nulled)),
        )
    r = 2.0 * t_max / (tilt - 2.0 * abs(c))
    bound = (4.0 * r + phi * r * r) ** 2 + 0.8 * angle_error**2
    return GateSynthesis(PulseSchedule(segments), target, bound, mode)


def x_sandwich_echo(half: PulseSchedule, t_tunnel: float) -> PulseSchedule:
    """[half][π_X][half][π_X] with π pulses by free tunneling on every qubit.

    X⊗X conjugation flips single-qubit Z terms and keeps Z⊗Z, so the Z phases of
    the two halves cancel.
    """
    if not half.segments:
        return half
    pi_pulse = Segment(quantize(rx_duration(math.pi, t_tunnel)), (0.0,) * half.n_qubits)
    flip = PulseSchedule((pi_pulse,))
    return half + flip + half + flip


@dataclass
class GateReport:
    """Structured record of a synthesized gate and its simulated fidelities."""

    label: str
    mode: str
    segments: list[dict]
    bound: float
    closed: FidelityReport
    noisy: Optional[FidelityReport] = None
    noise: dict = field(default_factory=dict)
    sub_fs_segments: int = 0

    @classmethod
    def build(
        cls,
        synthesis: GateSynthesis,
        params: QubitParams,
        channels: Sequence[LindbladChannel] = (),
    ) -> "GateReport":
        closed = simulate_fidelity(params, synthesis.schedule, synthesis.target)
        noisy = None
        if any(ch.rate_hz > 0 for ch in channels):
            noisy = simulate_fidelity(params, synthesis.schedule, synthesis.target, channels)
        segments = [
            {
                "duration_fs": s.duration,
                "deltav": list(s.deltav),
                "tunneling": None if s.tunneling is None else list(s.tunneling),
            }
            for s in synthesis.schedule.segments
        ]
        return cls(
            label=synthesis.target.label,
            mode=synthesis.mode,
            segments=segments,
            bound=synthesis.bound,
            closed=closed,
            noisy=noisy,
            noise={f"{ch.kind}_q{ch.qubit}": ch.rate_hz for ch in channels},
            sub_fs_segments=sum(1 for s in synthesis.schedule.segments if s.duration < 1.0),
        )

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


@dataclass(frozen=True)
class DurationOptimum:
    duration: float
    infidelity: float
    evaluations: int
    unimodal: bool = True
    starts: tuple[float, ...] = ()


def golden_section(f: Callable[[float], float], a: float, b: float, tol: float = 1e-4) -> tuple[float, float, int]:
    """Golden-section search; returns the final bracket (c, d) with d − c ≤ tol and the evaluation count."""
    a, b = min(a, b), max(a, b)
    h = b - a
    if h <= tol:
        return a, b, 0
    n = int(math.ceil(math.log(tol / h) / math.log(INV_PHI)))
    c = a + INV_PHI_SQUARE * h
    d = a + INV_PHI * h
    yc, yd = f(c), f(d)
    evaluations = 2
    for _ in range(n - 1):
        if yc < yd:
            b, d, yd = d, c, yc
            h *= INV_PHI
            c = a + INV_PHI_SQUARE * h
            yc = f(c)
        else:
            a, c, yc = c, d, yd
            h *= INV_PHI
            d = a + INV_PHI * h
            yd = f(d)
        evaluations += 1
    return (a, d, evaluations) if yc < yd else (c, b, evaluations)


def _local_minima(values: np.ndarray) -> list[int]:
    minima = []
    for i, v in enumerate(values):
        left = values[i - 1] if i > 0 else np.inf
        right = values[i + 1] if i + 1 < len(values) else np.inf
        if v <= left and v <= right and (v < left or v < right):
            minima.append(i)
    return minima


def optimize_duration(
    objective: Callable[[float], float],
    bracket: tuple[float, float],
    tol: float = 1e-4,
    samples: int = 16,
    workers: int = 1,
) -> DurationOptimum:
    """Minimize a simulated infidelity over a pulse duration (fs).

    The bracket is sampled first; a unimodal profile gets one golden-section search,
    otherwise every sampled local minimum is refined and the best one kept.
    """
    a, b = sorted(float(x) for x in bracket)
    if not b > a:
        raise DomainError(f"bracket must have positive width, got {bracket}")
    grid = np.linspace(a, b, samples + 1)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = np.array(list(pool.map(objective, grid)), dtype=float)
    else:
        values = np.array([objective(t) for t in grid], dtype=float)
    evaluations = len(grid)

    minima = _local_minima(values)
    unimodal = len(minima) <= 1
    if unimodal:
        windows = [(a, b)]
    else:
        logger.warning("objective is not unimodal on [%g, %g]; refining %d local minima", a, b, len(minima))
        windows = [(grid[max(i - 1, 0)], grid[min(i + 1, samples)]) for i in minima]

    best: Optional[tuple[float, float]] = None
    for lo, hi in windows:
        c, d, n = golden_section(objective, lo, hi, tol)
        evaluations += n + 1
        t = 0.5 * (c + d)
        value = float(objective(t))
        if best is None or value < best[1]:
            best = (t, value)
    assert best is not None
    return DurationOptimum(
        duration=best[0],
        infidelity=best[1],
        evaluations=evaluations,
        unimodal=unimodal,
        starts=tuple(float(grid[i]) for i in minima) if not unimodal else (),
    )
