import math

import numpy as np
import pytest

from pydbqubit.errors import CapacityError, DomainError, ScheduleError
from pydbqubit.physics.defines import COULOMB_K
from pydbqubit.physics.model import DeviceLayout, MaterialParams
from pydbqubit.physics.qubit import (
    PAULI,
    PulseSchedule,
    QubitParams,
    Segment,
    build_hq,
    conjugate_basis_states,
    embed,
    geometry_to_params,
    pauli_coefficients,
    pauli_operator,
    z_signs,
)


@pytest.fixture
def pair_params() -> QubitParams:
    return geometry_to_params(DeviceLayout.parallel_pairs(7.68, 20.0), MaterialParams())


def test_z_signs_put_qubit_zero_in_the_high_bit():
    assert z_signs(2).tolist() == [[1, 1], [1, -1], [-1, 1], [-1, -1]]


def test_embed_matches_pauli_labels():
    assert np.array_equal(embed(PAULI["X"], 0, 2), pauli_operator("XI"))
    assert np.array_equal(embed(PAULI["Z"], 1, 2), pauli_operator("IZ"))
    with pytest.raises(DomainError):
        pauli_operator("XQ")
    with pytest.raises(DomainError):
        embed(PAULI["X"], 2, 2)


def test_single_qubit_hamiltonian():
    params = QubitParams(n_qubits=1, t_tunnel=0.1, u0=0.5, w0=0.2, e_os=0.35)
    H = build_hq(params, [0.2])
    expected = params.kappa * np.eye(2) + 0.1 * PAULI["X"] + 0.1 * PAULI["Z"]
    assert H == pytest.approx(expected)
    assert params.kappa == pytest.approx(3 * 0.35 + 0.5 + 2 * 0.2)
    # |0> (left) is the low-energy state under a negative tilt.
    w, v = np.linalg.eigh(build_hq(params, [-2.0]))
    assert abs(v[0, 0]) ** 2 > 0.99


def test_geometry_of_parallel_pairs(pair_params):
    eps = 6.35
    w_same = COULOMB_K / (eps * 20.0)
    w_cross = COULOMB_K / (eps * math.hypot(7.68, 20.0))
    assert pair_params.n_qubits == 2
    assert pair_params.t_tunnel == pytest.approx(0.0887 / 2)
    assert pair_params.w0 == pytest.approx(COULOMB_K / (eps * 7.68))
    assert pair_params.w_minus[0, 1] == pytest.approx(w_same - w_cross)
    assert pair_params.zz[0, 1] == pytest.approx(0.5 * (w_same - w_cross))
    assert pair_params.zz[0, 1] == pytest.approx(0.00377, rel=1e-2)
    assert pair_params.static_bias == pytest.approx((0.0, 0.0), abs=1e-12)
    assert pair_params.with_convention("literal").zz[0, 1] == pytest.approx(2 * pair_params.zz[0, 1])
    kappa = 2 * (3 * 0.35 + 0.5 + 2 * pair_params.w0) + 4.5 * (w_same + w_cross)
    assert pair_params.kappa == pytest.approx(kappa)


def test_pauli_expansion_of_two_qubits(pair_params):
    H = build_hq(pair_params, [0.1, -0.04], tunneling=[1.0, 0.5])
    coeffs = pauli_coefficients(H, 2, tol=1e-14)
    t = pair_params.t_tunnel
    assert coeffs == pytest.approx(
        {
            "II": pair_params.kappa,
            "XI": t,
            "IX": 0.5 * t,
            "ZI": 0.05,
            "IZ": -0.02,
            "ZZ": pair_params.zz[0, 1],
        }
    )
    assert np.allclose(H, H.T)


def test_tunneling_can_be_switched_off(pair_params):
    H = build_hq(pair_params, [0.0, 0.0], tunneling=[0.0, 0.0])
    assert np.count_nonzero(H - np.diag(np.diag(H))) == 0


def test_build_hq_rejects_bad_controls(pair_params):
    with pytest.raises(ScheduleError):
        build_hq(pair_params, [math.inf, 0.0])
    with pytest.raises(DomainError):
        build_hq(pair_params, [0.0])
    with pytest.raises(CapacityError):
        build_hq(QubitParams(n_qubits=13, t_tunnel=0.04), [0.0] * 13)


def test_qubit_params_validation():
    with pytest.raises(DomainError):
        QubitParams(n_qubits=1, t_tunnel=0.0)
    with pytest.raises(DomainError):
        QubitParams(n_qubits=2, t_tunnel=0.04, t_per_qubit=(0.04,))
    with pytest.raises(DomainError):
        QubitParams(n_qubits=1, t_tunnel=0.04, zz_convention="textbook")
    params = QubitParams(n_qubits=2, t_tunnel=0.04, t_per_qubit=(0.03, 0.05))
    assert params.tunneling == (0.03, 0.05)


def test_geometry_to_params_checks_the_layout():
    with pytest.raises(DomainError):
        geometry_to_params(DeviceLayout.parallel_pairs(7.68, 10.0), MaterialParams())
    loose = geometry_to_params(DeviceLayout.parallel_pairs(7.68, 10.0), MaterialParams(), strict=False)
    assert loose.n_qubits == 2
    with pytest.raises(DomainError):
        geometry_to_params(DeviceLayout.single_pair(7.72), MaterialParams(), splitting_source="calibrated_well")


def test_offset_pairs_feel_a_static_bias():
    layout = DeviceLayout(sites=((0, 0), (7.68, 0), (4, 20), (11.68, 20)), pairs=((0, 1), (2, 3)))
    params = geometry_to_params(layout, MaterialParams())
    assert params.static_bias[0] != pytest.approx(0.0, abs=1e-6)
    assert params.static_bias[0] == pytest.approx(-params.static_bias[1])


def test_segment_and_schedule():
    with pytest.raises(ScheduleError):
        Segment(0.0, (0.0,))
    with pytest.raises(ScheduleError):
        Segment(1.0, (math.nan,))
    with pytest.raises(ScheduleError):
        PulseSchedule((Segment(1.0, (0.0,)), Segment(1.0, (0.0, 0.0))))

    schedule = PulseSchedule.from_pieces([(2.0, [0.1]), (3.0, [-0.1])])
    assert schedule.total_duration == 5.0
    assert schedule.edges.tolist() == [0.0, 2.0, 5.0]
    assert schedule.deltav_at(0.0) == (0.1,)
    assert schedule.deltav_at(2.0) == (-0.1,)
    assert schedule.deltav_at(5.0) == (-0.1,)
    with pytest.raises(DomainError):
        schedule.segment_index(6.0)

    longer = schedule + PulseSchedule.constant(1.0, [0.0])
    assert len(longer) == 3
    assert longer.total_duration == 6.0
    assert schedule.shifted([0.5]).deltav_at(0.0) == pytest.approx((0.6,))


def test_conjugate_basis_states_are_x_eigenstates():
    plus, minus = conjugate_basis_states()
    assert PAULI["X"] @ plus == pytest.approx(plus)
    assert PAULI["X"] @ minus == pytest.approx(-minus)
    assert abs(np.vdot(plus, minus)) == pytest.approx(0.0)
