import json
import math

import numpy as np
import pytest

from pydbqubit.errors import CouplingError, DomainError, RegimeError
from pydbqubit.physics.defines import HBAR
from pydbqubit.physics.dynamics import QuantumState, dephasing_channels, evolve_unitary, schedule_unitary
from pydbqubit.physics.gates import (
    GateReport,
    concurrence,
    cphase,
    cphase_duration,
    cphase_schedule,
    gate_fidelity,
    golden_section,
    optimize_duration,
    quantize,
    rx,
    rx_duration,
    rx_schedule,
    rz_schedule,
    simulate_fidelity,
    x_gate,
    x_sandwich_echo,
    zz_phase,
)
from pydbqubit.physics.model import DeviceLayout, MaterialParams
from pydbqubit.physics.qubit import PulseSchedule, QubitParams, geometry_to_params

T = 0.0887 / 2


@pytest.fixture
def qubit() -> QubitParams:
    return QubitParams(n_qubits=1, t_tunnel=T)


@pytest.fixture
def pair() -> QubitParams:
    return geometry_to_params(DeviceLayout.parallel_pairs(7.68, 20.0), MaterialParams())


def test_gate_fidelity_of_targets():
    assert gate_fidelity(x_gate().unitary, x_gate()).average_gate_fidelity == pytest.approx(1.0)
    # A global phase does not matter.
    assert gate_fidelity(1j * x_gate().unitary, x_gate()).process_fidelity == pytest.approx(1.0)
    report = gate_fidelity(np.eye(2), x_gate())
    assert report.process_fidelity == pytest.approx(0.0)
    assert report.average_gate_fidelity == pytest.approx(1.0 / 3.0)
    with pytest.raises(DomainError):
        gate_fidelity(np.eye(3), x_gate())


def test_zz_phase_equals_cphase_up_to_local_z():
    # exp(−iπ/4·ZZ)·exp(+iπ/4·(ZI + IZ)) is CPHASE(π) up to a global phase.
    z_local = np.diag(np.exp(0.25j * math.pi * np.array([2.0, 0.0, 0.0, -2.0])))
    achieved = zz_phase(math.pi).unitary @ z_local
    assert gate_fidelity(achieved, cphase(math.pi)).process_fidelity == pytest.approx(1.0)


def test_rx_schedule_implements_the_rotation(qubit):
    assert rx_duration(math.pi, T) == pytest.approx(math.pi * HBAR / (2 * T))
    synthesis = rx_schedule(math.pi, qubit)
    U = schedule_unitary(qubit, synthesis.schedule)
    report = gate_fidelity(U, rx(math.pi))
    assert report.infidelity <= synthesis.bound + 1e-12
    assert rx_schedule(0.0, qubit).schedule.segments == ()


def test_rz_schedule_regime(qubit):
    with pytest.raises(RegimeError):
        rz_schedule(math.pi / 2, 10 * T, T)
    synthesis = rz_schedule(math.pi / 2, 40 * T, T)
    U = schedule_unitary(qubit, synthesis.schedule)
    report = gate_fidelity(U, synthesis.target)
    assert report.infidelity <= synthesis.bound
    assert synthesis.mode == "tilt"


def test_cphase_duration_and_coupling():
    assert cphase_duration(math.pi, 0.00377) == pytest.approx(math.pi * HBAR / (4 * 0.00377))
    with pytest.raises(CouplingError):
        cphase_duration(math.pi, 0.0)
    with pytest.raises(CouplingError):
        cphase_schedule(math.pi, QubitParams(n_qubits=2, t_tunnel=T))


def test_ideal_cphase_makes_a_bell_state(pair):
    synthesis = cphase_schedule(math.pi, pair, mode="ideal")
    assert synthesis.schedule.total_duration == pytest.approx(137.1, abs=0.5)
    U = schedule_unitary(pair, synthesis.schedule)
    report = gate_fidelity(U, synthesis.target)
    assert report.infidelity <= synthesis.bound + 1e-12
    traj = evolve_unitary(QuantumState.plus(2), pair, synthesis.schedule)
    assert concurrence(traj.final()) == pytest.approx(1.0, abs=1e-5)


def test_echo_cphase_stays_within_its_bound(pair):
    synthesis = cphase_schedule(math.pi, pair, mode="echo")
    assert len(synthesis.schedule) == 2
    U = schedule_unitary(pair, synthesis.schedule)
    report = gate_fidelity(U, synthesis.target)
    assert report.infidelity <= synthesis.bound
    with pytest.raises(RegimeError):
        cphase_schedule(math.pi, pair, mode="echo", tilt=5 * T)
    with pytest.raises(DomainError):
        cphase_schedule(math.pi, pair, mode="magic")


def test_x_sandwich_echo_keeps_total_phase(pair):
    half = PulseSchedule.constant(10.0, [0.3, 0.3], tunneling=[0.0, 0.0])
    echo = x_sandwich_echo(half, pair.t_tunnel)
    assert len(echo) == 4
    assert x_sandwich_echo(PulseSchedule(), pair.t_tunnel).segments == ()


def test_concurrence():
    assert concurrence(QuantumState.from_bits("00")) == pytest.approx(0.0)
    bell = QuantumState(np.array([1.0, 0.0, 0.0, 1.0]) / math.sqrt(2))
    assert concurrence(bell) == pytest.approx(1.0)
    assert concurrence(bell.density()) == pytest.approx(1.0)
    assert concurrence(QuantumState.maximally_mixed(2)) == pytest.approx(0.0)
    with pytest.raises(DomainError):
        concurrence(QuantumState.basis(1, 0))


def test_dephasing_during_an_x_gate(qubit):
    """Infidelity of a free-tunneling X under Z dephasing grows as (2/3)·γ·t."""
    rate_hz = 1.0e9
    synthesis = rx_schedule(math.pi, qubit)
    report = simulate_fidelity(qubit, synthesis.schedule, x_gate(), dephasing_channels(rate_hz, [0]))
    assert report.noisy
    expected = 2.0 / 3.0 * rate_hz / 1e15 * synthesis.schedule.total_duration
    assert report.infidelity == pytest.approx(expected, rel=5e-2)


def test_gate_report_is_json_ready(pair):
    synthesis = cphase_schedule(math.pi, pair)
    report = GateReport.build(synthesis, pair, dephasing_channels(1.0e9, [0, 1]))
    assert report.noisy is not None
    assert report.noisy.infidelity > report.closed.infidelity
    data = json.loads(report.to_json())
    assert data["mode"] == "ideal"
    assert data["segments"][0]["tunneling"] == [0.0, 0.0]
    assert data["noise"] == {"dephasing_q0": 1.0e9, "dephasing_q1": 1.0e9}


def test_quantize():
    assert quantize(1.23456) == pytest.approx(1.235)
    assert quantize(0.0) == 0.0


def test_golden_section_finds_a_parabola_minimum():
    c, d, evaluations = golden_section(lambda x: (x - 1.3) ** 2, 0.0, 4.0, tol=1e-6)
    assert d - c <= 1e-6 * 1.0001
    assert c - 1e-6 <= 1.3 <= d + 1e-6
    assert evaluations > 2


def test_optimize_duration_handles_several_minima():
    objective = lambda t: 1.0 - math.cos(t) ** 2 * math.exp(-0.01 * t)
    best = optimize_duration(objective, (1.0, 8.0), tol=1e-6)
    assert not best.unimodal
    assert best.duration == pytest.approx(math.pi, abs=1e-2)
    single = optimize_duration(lambda t: (t - 2.0) ** 2, (0.0, 5.0), tol=1e-6, workers=2)
    assert single.unimodal
    assert single.duration == pytest.approx(2.0, abs=1e-5)


def test_optimizer_recovers_the_x_duration(qubit):
    def infidelity(t: float) -> float:
        U = schedule_unitary(qubit, PulseSchedule.constant(t, [0.0]))
        return gate_fidelity(U, x_gate()).infidelity

    best = optimize_duration(infidelity, (10.0, 40.0), tol=1e-6)
    assert best.unimodal
    assert best.duration == pytest.approx(rx_duration(math.pi, T), abs=1e-3)


def test_closed_form_durations():
    assert rz_schedule(math.pi, 2.0, 0.05).schedule.total_duration == pytest.approx(1.034, abs=1e-3)
    assert rz_schedule(math.pi, 2.0, 0.05).bound == pytest.approx(0.0025, abs=1e-4)
    assert cphase_duration(math.pi, 0.05) == pytest.approx(10.34, abs=1e-2)
