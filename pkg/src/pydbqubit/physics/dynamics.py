"""Time evolution of qubit registers under piecewise-constant H_q(t).

Pure states evolve exactly, segment by segment, through the eigendecomposition
of each segment's Hamiltonian. Density matrices follow the Lindblad equation,
either with fixed-step RK4 or with the exact segment propagator exp(𝓛·Δt).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.linalg import eigh, expm

from ..errors import CapacityError, DomainError, ScheduleError, StepSizeError
from ..tables import ResultTable
from .defines import (
    DENSITY_QUBIT_CAP,
    HBAR,
    HZ_PER_INVERSE_FS,
    LINDBLAD_STEP_CONTRACT,
    STATEVECTOR_QUBIT_CAP,
)
from .qubit import PAULI, PulseSchedule, QubitParams, Segment, embed, z_signs

__all__ = [
    "EXACT_PROPAGATOR_QUBIT_CAP",
    "QuantumState",
    "Trajectory",
    "evolve_unitary",
    "schedule_unitary",
    "LindbladChannel",
    "dephasing_channels",
    "relaxation_channels",
    "custom_channel",
    "liouvillian",
    "process_superoperator",
    "step_budget",
    "evolve_lindblad",
    "apply_readout_confusion",
    "corrected_p1",
    "measure_z",
]

logger = logging.getLogger(__name__)

EXACT_PROPAGATOR_QUBIT_CAP = 4
_TIME_TOL = 1e-9


def _qubit_count(dim: int) -> int:
    n = int(round(math.log2(dim))) if dim > 0 else -1
    if n < 0 or 2**n != dim:
        raise DomainError(f"state dimension {dim} is not a power of two")
    return n


@dataclass(frozen=True)
class QuantumState:
    """State vector (2^N,) or density matrix (2^N, 2^N) at ``time`` fs."""

    data: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        data = np.array(self.data, dtype=complex)
        if data.ndim == 1:
            _qubit_count(len(data))
            norm = np.linalg.norm(data)
            if abs(norm - 1.0) > 1e-9:
                raise DomainError(f"state vector norm is {norm}, expected 1")
        elif data.ndim == 2 and data.shape[0] == data.shape[1]:
            _qubit_count(len(data))
            if np.max(np.abs(data - data.conj().T)) > 1e-10:
                raise DomainError("density matrix is not Hermitian")
            if abs(np.trace(data).real - 1.0) > 1e-9:
                raise DomainError(f"density matrix trace is {np.trace(data).real}, expected 1")
        else:
            raise DomainError(f"expected a vector or square matrix, got shape {data.shape}")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @classmethod
    def basis(cls, n_qubits: int, index: int = 0) -> "QuantumState":
        psi = np.zeros(2**n_qubits, dtype=complex)
        psi[index] = 1.0
        return cls(psi)

    @classmethod
    def from_bits(cls, bits: str) -> "QuantumState":
        """Computational state such as ``"01"``; qubit 0 is the leftmost character."""
        return cls.basis(len(bits), int(bits, 2))

    @classmethod
    def plus(cls, n_qubits: int) -> "QuantumState":
        d = 2**n_qubits
        return cls(np.full(d, 1.0 / math.sqrt(d), dtype=complex))

    @classmethod
    def maximally_mixed(cls, n_qubits: int) -> "QuantumState":
        d = 2**n_qubits
        return cls(np.eye(d, dtype=complex) / d)

    @property
    def is_density(self) -> bool:
        return self.data.ndim == 2

    @property
    def n_qubits(self) -> int:
        return _qubit_count(len(self.data))

    def density(self) -> "QuantumState":
        if self.is_density:
            return self
        return QuantumState(np.outer(self.data, self.data.conj()), self.time)

    def probabilities(self) -> np.ndarray:
        if self.is_density:
            return np.clip(np.real(np.diag(self.data)), 0.0, None)
        return np.abs(self.data) ** 2

    def populations(self) -> np.ndarray:
        """P(qubit p = 1) for every qubit."""
        return self.probabilities() @ _one_table(self.n_qubits)

    def purity(self) -> float:
        if not self.is_density:
            return 1.0
        return float(np.real(np.einsum("ij,ji->", self.data, self.data)))

    def fidelity(self, other: "QuantumState") -> float:
        """⟨ψ|ρ|ψ⟩ against a pure ``other`` (or |⟨φ|ψ⟩|² for two pure states)."""
        if other.is_density:
            raise DomainError("fidelity reference must be a pure state")
        phi = other.data
        if self.is_density:
            return float(np.real(phi.conj() @ self.data @ phi))
        return float(abs(np.vdot(phi, self.data)) ** 2)


def _one_table(n_qubits: int) -> np.ndarray:
    return (1.0 - z_signs(n_qubits)) / 2.0


def _as_state(state) -> QuantumState:
    return state if isinstance(state, QuantumState) else QuantumState(np.asarray(state))


@dataclass(frozen=True)
class Trajectory:
    """States sampled at ``times`` (fs); ``states`` is (T, d) or (T, d, d)."""

    times: np.ndarray
    states: np.ndarray
    trace_drift: float = 0.0
    """Largest |Tr ρ − 1| seen; the integrator does not renormalize."""

    @property
    def n_qubits(self) -> int:
        return _qubit_count(self.states.shape[1])

    @property
    def is_density(self) -> bool:
        return self.states.ndim == 3

    def __len__(self) -> int:
        return len(self.times)

    def probabilities(self) -> np.ndarray:
        if self.is_density:
            return np.real(np.einsum("tii->ti", self.states))
        return np.abs(self.states) ** 2

    def populations(self) -> np.ndarray:
        """(T, N) array of P(qubit p = 1)."""
        return self.probabilities() @ _one_table(self.n_qubits)

    def purity(self) -> np.ndarray:
        if not self.is_density:
            return np.ones(len(self.times))
        return np.real(np.einsum("tij,tji->t", self.states, self.states))

    def traces(self) -> np.ndarray:
        return self.probabilities().sum(axis=1)

    def min_eigenvalue(self) -> float:
        if not self.is_density:
            return 0.0
        return float(min(np.linalg.eigvalsh(rho).min() for rho in self.states))

    def state(self, i: int) -> QuantumState:
        data = self.states[i]
        if self.is_density:
            data = 0.5 * (data + data.conj().T)
            data = data / np.trace(data).real
        else:
            data = data / np.linalg.norm(data)
        return QuantumState(data, float(self.times[i]))

    def final(self) -> QuantumState:
        return self.state(len(self.times) - 1)

    def to_table(self) -> ResultTable:
        """Columns ``time_fs``, ``p1_q<p>`` per qubit and ``purity``."""
        pops = self.populations()
        columns = {"time_fs": self.times.tolist()}
        for p in range(self.n_qubits):
            columns[f"p1_q{p}"] = pops[:, p].tolist()
        columns["purity"] = self.purity().tolist()
        return ResultTable.from_pydict(columns)


def _sample_times(schedule: PulseSchedule, times: Optional[Sequence[float]]) -> np.ndarray:
    if times is None:
        return np.array(schedule.edges, dtype=float)
    t = np.asarray(times, dtype=float)
    if t.ndim != 1 or t.size == 0 or not np.all(np.isfinite(t)):
        raise DomainError("sample times must be a non-empty finite 1-D sequence")
    if np.any(np.diff(t) < 0):
        raise DomainError("sample times must be non-decreasing")
    if t[0] < -_TIME_TOL or t[-1] > schedule.total_duration + _TIME_TOL:
        raise DomainError(f"sample times must lie in [0, {schedule.total_duration}] fs")
    return np.clip(t, 0.0, schedule.total_duration)


def _segment_of(schedule: PulseSchedule, times: np.ndarray) -> np.ndarray:
    if not schedule.segments:
        return np.zeros(len(times), dtype=int)
    idx = np.searchsorted(schedule.edges, times, side="right") - 1
    return np.clip(idx, 0, len(schedule.segments) - 1)


def _check_register(params: QubitParams, schedule: PulseSchedule, n_state: int, cap: int) -> None:
    if params.n_qubits != n_state:
        raise DomainError(f"state has {n_state} qubits, params describe {params.n_qubits}")
    if schedule.n_qubits not in (None, n_state):
        raise ScheduleError(f"schedule drives {schedule.n_qubits} qubits, state has {n_state}")
    if n_state > cap:
        raise CapacityError(f"{n_state} qubits exceeds the cap of {cap} for this representation")


class _EigenCache:
    def __init__(self, params: QubitParams):
        self._params = params
        self._cache: dict[tuple, tuple[np.ndarray, np.ndarray]] = {}

    def __call__(self, seg: Segment) -> tuple[np.ndarray, np.ndarray]:
        key = (seg.deltav, seg.tunneling)
        if key not in self._cache:
            self._cache[key] = eigh(seg.hamiltonian(self._params))
        return self._cache[key]


def evolve_unitary(
    state: QuantumState | np.ndarray,
    params: QubitParams,
    schedule: PulseSchedule,
    times: Optional[Sequence[float]] = None,
) -> Trajectory:
    """Exact closed-system evolution, sampled at ``times`` (default: segment edges).

    Each segment applies V·exp(−i·w·Δt/ħ)·V† from the eigendecomposition H = V·diag(w)·V†.
    """
    state = _as_state(state)
    if state.is_density:
        raise DomainError("evolve_unitary needs a state vector; use evolve_lindblad for density matrices")
    _check_register(params, schedule, state.n_qubits, STATEVECTOR_QUBIT_CAP)
    times = _sample_times(schedule, times)
    which = _segment_of(schedule, times)
    psi = state.data.copy()
    out = np.empty((len(times), len(psi)), dtype=complex)
    if not schedule.segments:
        out[:] = psi
        return Trajectory(times, out)
    eigen = _EigenCache(params)
    edges = schedule.edges
    for k, seg in enumerate(schedule.segments):
        w, V = eigen(seg)
        c = V.conj().T @ psi
        sel = np.nonzero(which == k)[0]
        if sel.size:
            phases = np.exp(-1j * np.outer(times[sel] - edges[k], w) / HBAR)
            out[sel] = (phases * c) @ V.T
        psi = V @ (np.exp(-1j * w * seg.duration / HBAR) * c)
    return Trajectory(times, out)


def schedule_unitary(params: QubitParams, schedule: PulseSchedule) -> np.ndarray:
    """Propagator of the whole schedule."""
    d = 2**params.n_qubits
    U = np.eye(d, dtype=complex)
    eigen = _EigenCache(params)
    for seg in schedule.segments:
        w, V = eigen(seg)
        U = (V * np.exp(-1j * w * seg.duration / HBAR)) @ V.conj().T @ U
    return U


@dataclass(frozen=True)
class LindbladChannel:
    """Jump operator with a rate in Hz.

    ``kind`` is ``dephasing`` (Z on ``qubit``), ``relaxation`` (lowering operator of
    ``qubit`` in the eigenbasis of its local field in each segment) or ``custom``
    (the fixed ``operator``).
    """

    rate_hz: float
    kind: str = "custom"
    qubit: Optional[int] = None
    operator: Optional[np.ndarray] = None

    def __post_init__(self):
        if not (math.isfinite(self.rate_hz) and self.rate_hz >= 0):
            raise DomainError(f"channel rate must be >= 0 Hz, got {self.rate_hz}")
        if self.kind not in ("dephasing", "relaxation", "custom"):
            raise DomainError(f"unknown channel kind {self.kind!r}")
        if self.kind == "custom" and self.operator is None:
            raise DomainError("custom channel needs an operator")
        if self.kind != "custom" and self.qubit is None:
            raise DomainError(f"{self.kind} channel needs a qubit index")

    @property
    def rate(self) -> float:
        """Rate in 1/fs."""
        return self.rate_hz / HZ_PER_INVERSE_FS

    def resolve(self, params: QubitParams, segment: Optional[Segment]) -> np.ndarray:
        n = params.n_qubits
        if self.kind == "custom":
            op = np.asarray(self.operator, dtype=complex)
            if op.shape != (2**n, 2**n):
                raise DomainError(f"channel operator shape {op.shape} does not match {n} qubits")
            return op
        if self.kind == "dephasing":
            return embed(PAULI["Z"], self.qubit, n).astype(complex)
        q = self.qubit
        t = params.tunneling[q]
        dv = 0.0
        if segment is not None:
            t *= 1.0 if segment.tunneling is None else segment.tunneling[q]
            dv = segment.deltav[q]
        h = t * PAULI["X"] + 0.5 * (dv + params.static_bias[q]) * PAULI["Z"]
        _, v = np.linalg.eigh(h)
        lowering = np.outer(v[:, 0], v[:, 1].conj())
        return embed(lowering, q, n).astype(complex)


def dephasing_channels(rate_hz: float, qubits: Sequence[int]) -> list[LindbladChannel]:
    return [LindbladChannel(rate_hz, "dephasing", q) for q in qubits]


def relaxation_channels(rate_hz: float, qubits: Sequence[int]) -> list[LindbladChannel]:
    return [LindbladChannel(rate_hz, "relaxation", q) for q in qubits]


def custom_channel(operator: np.ndarray, rate_hz: float) -> LindbladChannel:
    return LindbladChannel(rate_hz, "custom", operator=np.asarray(operator, dtype=complex))


def liouvillian(H: np.ndarray, jumps: Sequence[tuple[float, np.ndarray]]) -> np.ndarray:
    """Superoperator of the Lindblad equation acting on column-stacked ρ.

    ``jumps`` holds (rate in 1/fs, operator) pairs.
    """
    d = len(H)
    eye = np.eye(d)
    L = -1j / HBAR * (np.kron(eye, H) - np.kron(H.T, eye))
    for rate, op in jumps:
        if rate == 0:
            continue
        k = op.conj().T @ op
        L += rate * (np.kron(op.conj(), op) - 0.5 * np.kron(eye, k) - 0.5 * np.kron(k.T, eye))
    return L


def _jumps(params: QubitParams, segment: Segment, channels: Sequence[LindbladChannel]):
    return [(ch.rate, ch.resolve(params, segment)) for ch in channels if ch.rate_hz > 0]


def process_superoperator(
    params: QubitParams, schedule: PulseSchedule, channels: Sequence[LindbladChannel] = ()
) -> np.ndarray:
    """Column-stacking superoperator of the whole schedule with the given noise."""
    if params.n_qubits > EXACT_PROPAGATOR_QUBIT_CAP:
        raise CapacityError(f"superoperators are limited to {EXACT_PROPAGATOR_QUBIT_CAP} qubits")
    d = 2**params.n_qubits
    S = np.eye(d * d, dtype=complex)
    for seg in schedule.segments:
        S = expm(liouvillian(seg.hamiltonian(params), _jumps(params, seg, channels)) * seg.duration) @ S
    return S


def _rk4_rhs(H: np.ndarray, jumps) -> Callable[[np.ndarray], np.ndarray]:
    prepared = [(rate, op, op.conj().T, op.conj().T @ op) for rate, op in jumps]

    def rhs(rho: np.ndarray) -> np.ndarray:
        out = (-1j / HBAR) * (H @ rho - rho @ H)
        for rate, op, op_dag, k in prepared:
            out += rate * (op @ rho @ op_dag - 0.5 * (k @ rho + rho @ k))
        return out

    return rhs


def step_budget(H: np.ndarray, jumps) -> float:
    """‖H − Tr(H)/d‖/ħ + Σγ in 1/fs; dt times this must stay within the contract.

    The norm is taken on the traceless part of H: an identity shift drops out of
    the commutator and leaves the RK4 error unchanged.
    """
    d = len(H)
    traceless = H - np.trace(H) / d * np.eye(d)
    return float(np.linalg.norm(traceless, 2)) / HBAR + sum(rate for rate, _ in jumps)


def evolve_lindblad(
    state: QuantumState | np.ndarray,
    params: QubitParams,
    schedule: PulseSchedule,
    channels: Sequence[LindbladChannel] = (),
    dt: Optional[float] = None,
    times: Optional[Sequence[float]] = None,
    integrator: str = "rk4",
) -> Trajectory:
    """Open-system evolution dρ/dt = −(i/ħ)[H,ρ] + Σγ(LρL† − ½{L†L,ρ}).

    ``rk4`` takes fixed steps of at most ``dt`` fs and requires
    dt·(‖H₀‖/ħ + Σγ) ≤ 0.05 in every segment, H₀ being the traceless part of H;
    ``exact`` applies exp(𝓛·Δt) between samples and ignores ``dt``. Pure inputs
    are promoted to density matrices.

    Raises:
        StepSizeError: If ``dt`` violates the RK4 step-size contract.

    """
    state = _as_state(state).density()
    _check_register(params, schedule, state.n_qubits, DENSITY_QUBIT_CAP)
    if integrator not in ("rk4", "exact"):
        raise DomainError(f"unknown integrator {integrator!r}")
    if integrator == "exact" and state.n_qubits > EXACT_PROPAGATOR_QUBIT_CAP:
        raise CapacityError(f"exact propagation is limited to {EXACT_PROPAGATOR_QUBIT_CAP} qubits")
    if integrator == "rk4" and not (dt is not None and dt > 0):
        raise DomainError(f"rk4 integration needs dt > 0 fs, got {dt}")

    times = _sample_times(schedule, times)
    which = _segment_of(schedule, times)
    rho = np.array(state.data)
    d = len(rho)
    out = np.empty((len(times), d, d), dtype=complex)
    if not schedule.segments:
        out[:] = rho
        return Trajectory(times, out)

    prepared = []
    for seg in schedule.segments:
        H = seg.hamiltonian(params)
        jumps = _jumps(params, seg, channels)
        if integrator == "rk4":
            budget = step_budget(H, jumps)
            if dt * budget > LINDBLAD_STEP_CONTRACT:
                raise StepSizeError(
                    f"dt={dt} fs gives dt·(‖H₀‖/ħ + Σγ) = {dt * budget:.3g} > {LINDBLAD_STEP_CONTRACT}",
                    LINDBLAD_STEP_CONTRACT / budget,
                )
        prepared.append((H, jumps))

    edges = schedule.edges
    for k, seg in enumerate(schedule.segments):
        H, jumps = prepared[k]
        advance = _rk4_advance(H, jumps, dt) if integrator == "rk4" else _exact_advance(H, jumps)
        now = edges[k]
        for i in np.nonzero(which == k)[0]:
            rho = advance(rho, times[i] - now)
            now = times[i]
            out[i] = rho
        rho = advance(rho, edges[k + 1] - now)

    drift = float(np.max(np.abs(np.real(np.einsum("tii->t", out)) - 1.0)))
    if drift > 1e-9:
        logger.warning("Lindblad trace drifted by %.3g", drift)
    return Trajectory(times, out, trace_drift=drift)


def _rk4_advance(H: np.ndarray, jumps, dt: float):
    rhs = _rk4_rhs(H, jumps)

    def advance(rho: np.ndarray, gap: float) -> np.ndarray:
        if gap <= 0:
            return rho
        n = max(1, math.ceil(gap / dt - 1e-9))
        h = gap / n
        for _ in range(n):
            k1 = rhs(rho)
            k2 = rhs(rho + 0.5 * h * k1)
            k3 = rhs(rho + 0.5 * h * k2)
            k4 = rhs(rho + h * k3)
            rho = rho + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        return rho

    return advance


def _exact_advance(H: np.ndarray, jumps):
    generator = liouvillian(H, jumps)
    cache: dict[float, np.ndarray] = {}
    d = len(H)

    def advance(rho: np.ndarray, gap: float) -> np.ndarray:
        if gap <= 0:
            return rho
        key = round(gap, 9)
        if key not in cache:
            cache[key] = expm(generator * gap)
        vec = cache[key] @ rho.reshape(-1, order="F")
        return vec.reshape(d, d, order="F")

    return advance


def apply_readout_confusion(p1: float | np.ndarray, readout_error: float) -> float | np.ndarray:
    """Probability of reading 1 through a symmetric flip channel."""
    _check_readout_error(readout_error)
    return p1 * (1.0 - readout_error) + (1.0 - p1) * readout_error


def corrected_p1(observed: float | np.ndarray, readout_error: float) -> float | np.ndarray:
    """Invert the symmetric confusion channel: (f − e)/(1 − 2e)."""
    _check_readout_error(readout_error)
    return (observed - readout_error) / (1.0 - 2.0 * readout_error)


def _check_readout_error(readout_error: float) -> None:
    if not 0.0 <= readout_error < 0.5:
        raise DomainError(f"readout error must lie in [0, 0.5), got {readout_error}")


def measure_z(
    state: QuantumState | np.ndarray,
    qubit_index: int,
    shots: int,
    seed: Optional[int] = None,
    readout_error: float = 0.0,
) -> dict[int, int]:
    """Sample Z outcomes of one qubit; returns ``{0: n0, 1: n1}``.

    Uses ``numpy.random.default_rng(seed)``; equal seeds give equal counts.
    """
    state = _as_state(state)
    if not 0 <= qubit_index < state.n_qubits:
        raise DomainError(f"qubit index {qubit_index} out of range for {state.n_qubits} qubits")
    if shots < 1:
        raise DomainError(f"shots must be >= 1, got {shots}")
    p1 = float(np.clip(state.populations()[qubit_index], 0.0, 1.0))
    p1 = float(apply_readout_confusion(p1, readout_error))
    n1 = int(np.random.default_rng(seed).binomial(shots, p1))
    return {0: shots - n1, 1: n1}
