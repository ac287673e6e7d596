import math

import numpy as np
import pytest

from pydbqubit.errors import CapacityError, DomainError, ProjectionError
from pydbqubit.physics.hubbard import (
    HubbardParams,
    build_basis,
    build_hamiltonian,
    configuration_states,
    dump_triplets,
    full_basis,
    ground_and_spectrum,
    hop,
    project_to_qubits,
)
from pydbqubit.physics.model import DeviceLayout, MaterialParams
from pydbqubit.physics.qubit import build_hq, qubit_params_from_hubbard

T = 0.0887 / 2


def dimer(e_os=0.3, u=1.0, t=0.1) -> HubbardParams:
    return HubbardParams(
        n_sites=2,
        e_os=e_os,
        eta=0.0,
        t_hop=np.array([[0.0, t], [t, 0.0]]),
        u_onsite=u,
        w_intersite=np.zeros((2, 2)),
    )


def test_sector_dimensions():
    assert build_basis(4, 6, 1.0).dimension == 6
    assert build_basis(2, 2, 0.0).dimension == 4
    assert build_basis(2, 3, 0.5).states.tolist() == [7, 13]
    assert len(full_basis(2)) == 16


@pytest.mark.parametrize("n_electrons, sz", [(3, 0.0), (2, 0.25), (5, 0.5), (2, 1.5)])
def test_bad_sectors(n_electrons, sz):
    with pytest.raises(DomainError):
        build_basis(2, n_electrons, sz)


def test_dimension_cap():
    with pytest.raises(CapacityError):
        build_basis(8, 8, 0.0)
    with pytest.raises(CapacityError):
        full_basis(7)
    with pytest.raises(CapacityError):
        ground_and_spectrum(np.broadcast_to(0.0, (5000, 5000)))


def test_hop_signs():
    # Moving the spin-down electron of 7 from site 0 to site 1 passes the up electron on site 1.
    assert hop(7, 3, 1) == (13, -1)
    assert hop(13, 1, 3) == (7, -1)
    assert hop(5, 0, 2) is None
    assert hop(5, 3, 1) is None
    assert hop(5, 0, 0) == (5, 1)


def test_hubbard_dimer_ground_state():
    params = dimer()
    H = build_hamiltonian(params, build_basis(2, 2, 0.0))
    spectrum = ground_and_spectrum(H)
    expected = 2 * 0.3 + 0.5 * (1.0 - math.sqrt(1.0 + 16 * 0.1**2))
    assert spectrum.energies[0] == pytest.approx(expected, abs=1e-12)
    assert np.all(np.diff(spectrum.energies) >= 0)
    assert spectrum.max_residual < 1e-12
    assert np.allclose(H, H.T)


def test_params_validation():
    with pytest.raises(DomainError):
        dimer(t=-0.1)
    zeros = np.zeros((2, 2))
    with pytest.raises(DomainError):
        HubbardParams(n_sites=2, e_os=0.3, eta=0.0, t_hop=np.zeros((3, 3)), u_onsite=1.0, w_intersite=zeros)
    with pytest.raises(DomainError):
        HubbardParams(n_sites=2, e_os=0.3, eta=0.0, t_hop=zeros, u_onsite=1.0, w_intersite=np.array([[0, 1], [2, 0]]))
    with pytest.raises(DomainError):
        HubbardParams(n_sites=2, e_os=math.nan, eta=0.0, t_hop=zeros, u_onsite=1.0, w_intersite=zeros)
    with pytest.raises(DomainError):
        build_hamiltonian(dimer(), build_basis(3, 3, 0.5))


def test_configuration_states_follow_qubit_order():
    assert configuration_states(1) == [7, 13]
    states = configuration_states(2)
    # Qubit 0 is the high bit: index 1 moves the excess electron of pair 1 only.
    assert states[1] ^ states[0] == (1 << 5) | (1 << 7)
    assert states[2] ^ states[0] == (1 << 1) | (1 << 3)


def test_single_pair_projection():
    material = MaterialParams()
    layout = DeviceLayout.single_pair(7.72)
    params = HubbardParams.from_layout(layout, material, t_tunnel=T)
    coeffs = project_to_qubits(params, layout)
    w0 = params.w_intersite[0, 0, 1, 0]
    assert coeffs.x == pytest.approx((T,))
    assert coeffs.z == pytest.approx((0.0,), abs=1e-15)
    assert coeffs.identity == pytest.approx(3 * material.neutral_db_level + material.onsite_shift + 2 * w0)
    assert coeffs.leakage == 0.0
    assert coeffs.residual < 1e-12


@pytest.mark.parametrize(
    "layout",
    [
        DeviceLayout.parallel_pairs(7.68, 20.0),
        # Pairs listed out of site order, offset to give a static bias.
        DeviceLayout(sites=((0.0, 20.0), (7.68, 20.0), (4.0, 0.0), (11.68, 0.0)), pairs=((2, 3), (1, 0))),
    ],
)
def test_two_pair_projection_matches_build_hq(layout):
    material = MaterialParams()
    v_bias = np.zeros((4, 4))
    v_bias[0, 1] = 0.07
    v_bias[1, 2] = -0.03
    v_bias[0, 3] = 0.05
    params = HubbardParams.from_layout(layout, material, t_tunnel=T, eta=0.02, v_bias=v_bias)
    coeffs = project_to_qubits(params, layout)
    qp, deltav = qubit_params_from_hubbard(params, layout)
    assert coeffs.n_qubits == 2
    assert coeffs.leakage == 0.0
    assert coeffs.residual < 1e-12
    assert np.max(np.abs(coeffs.matrix - build_hq(qp, deltav))) < 1e-10
    assert coeffs.zz[0, 1] == pytest.approx(qp.zz[0, 1])
    assert coeffs.x == pytest.approx((T, T))


def test_projection_rejects_cross_pair_hopping():
    layout = DeviceLayout.parallel_pairs(7.68, 20.0)
    params = HubbardParams.from_layout(layout, MaterialParams(), t_tunnel=T)
    t_hop = np.array(params.t_hop)
    t_hop[1, 2] = t_hop[2, 1] = 0.01
    leaky = HubbardParams(
        n_sites=4,
        e_os=params.e_os,
        eta=params.eta,
        t_hop=t_hop,
        u_onsite=params.u_onsite,
        w_intersite=params.w_intersite,
    )
    with pytest.raises(ProjectionError):
        project_to_qubits(leaky, layout)
    with pytest.raises(ProjectionError):
        project_to_qubits(dimer(), layout)


def test_dump_triplets(tmp_path):
    path = tmp_path / "h.csv"
    dump_triplets(np.array([[1.0, 0.0], [0.25, -2.0]]), path)
    assert path.read_text().splitlines() == ["row,col,value_ev", "0,0,1.0", "1,0,0.25", "1,1,-2.0"]
    dump_triplets(np.array([[1.0, 1e-9], [1e-9, -2.0]]), path, threshold=1e-6)
    assert len(path.read_text().splitlines()) == 3


def test_hamiltonian_keeps_particle_number_and_spin():
    params = HubbardParams(
        n_sites=2,
        e_os=0.3,
        eta=np.array([0.0, 0.05]),
        t_hop=np.array([[0.0, 0.1], [0.1, 0.0]]),
        u_onsite=1.0,
        w_intersite=np.array([[0.0, 0.2], [0.2, 0.0]]),
        v_bias=np.array([[0.0, 0.07], [0.0, 0.0]]),
    )
    basis = full_basis(2)
    H = build_hamiltonian(params, basis)
    occ = basis.occupations()
    number = occ.sum(axis=(1, 2))
    twice_sz = occ[:, :, 0].sum(axis=1) - occ[:, :, 1].sum(axis=1)
    mixed = (number[:, None] != number[None, :]) | (twice_sz[:, None] != twice_sz[None, :])
    assert np.any(H[~mixed] != 0.0)
    assert np.max(np.abs(H[mixed])) == 0.0


def test_spectrum_is_unchanged_by_hopping_sign():
    layout = DeviceLayout.parallel_pairs(7.68, 20.0)
    params = HubbardParams.from_layout(layout, MaterialParams(), t_tunnel=T, eta=0.01)
    static = HubbardParams.from_layout(layout, MaterialParams(), t_tunnel=0.0, eta=0.01)
    basis = build_basis(4, 6, 1.0)
    H = build_hamiltonian(params, basis)
    # 2·H(0) − H(T) is H with every hopping amplitude negated.
    flipped = 2.0 * build_hamiltonian(static, basis) - H
    assert np.allclose(np.linalg.eigvalsh(flipped), np.linalg.eigvalsh(H), rtol=0.0, atol=1e-12)


def test_projected_levels_are_exact_sector_levels():
    layout = DeviceLayout.parallel_pairs(7.68, 20.0)
    v_bias = np.zeros((4, 4))
    v_bias[0, 1] = 0.04
    params = HubbardParams.from_layout(layout, MaterialParams(), t_tunnel=T, eta=0.02, v_bias=v_bias)
    coeffs = project_to_qubits(params, layout)
    qp, deltav = qubit_params_from_hubbard(params, layout)
    projected = np.linalg.eigvalsh(build_hq(qp, deltav))
    sector = np.linalg.eigvalsh(build_hamiltonian(params, build_basis(4, 6, 1.0)))
    assert coeffs.leakage == 0.0
    assert len(projected) == 4
    for level in projected:
        assert np.min(np.abs(sector - level)) < 1e-10
