import math

import numpy as np
import pytest
from scipy.stats import linregress

from pydbqubit.errors import CalibrationError, DomainError, NoTunnelingError
from pydbqubit.physics.defines import HBAR2_OVER_2ME
from pydbqubit.physics.well1d import (
    DoubleWellPotential,
    WellShape,
    calibrate_anchor_depth,
    calibrate_well,
    evaluate_potential,
    fit_anchor_width,
    single_well_levels,
    solve_bound_states,
    splitting_to_rate,
    sweep_separation,
    wkb_action,
    wkb_splitting,
)
from pydbqubit.settings import load_config

# Square double well with m* = 1, width 3 Å, depth 3 eV at s = 7.72 Å. The
# transcendental matching conditions give E0 = -1.764651 eV and E1 = -1.704435 eV;
# the isolated well binds a single level at -1.735391 eV.
SQUARE_E0 = -1.764651
SQUARE_SPLITTING = 0.060216
ISOLATED_E0 = -1.735391

SINGLE_PAIR = """
layout:
  sites: [[0, 0], [7.72, 0]]
  pairs: [[0, 1]]
"""


def square_pair(**kwargs) -> DoubleWellPotential:
    params = dict(s=7.72, well_depth=3.0, well_width=3.0, m_star=1.0)
    params.update(kwargs)
    return DoubleWellPotential(**params)


def test_harmonic_levels():
    """A parabola has equally spaced levels ħω(n + ½) above its floor."""
    pot = DoubleWellPotential(s=0.0, well_depth=10.0, well_width=20.0, well_shape=WellShape.HARMONIC, m_star=1.0)
    hw = math.sqrt(2.0 * HBAR2_OVER_2ME * 2.0 * 10.0 / 10.0**2)
    res = solve_bound_states(pot, n_states=3)
    assert len(res) == 3
    expected = -10.0 + hw * (np.arange(3) + 0.5)
    assert res.energies == pytest.approx(expected, rel=1e-3)
    assert res.norms() == pytest.approx(np.ones(3), abs=1e-9)


def test_square_double_well_matches_matching_conditions():
    res = solve_bound_states(square_pair(), n_states=2)
    assert res.energies[0] == pytest.approx(SQUARE_E0, rel=1e-3)
    assert res.splitting == pytest.approx(SQUARE_SPLITTING, rel=1e-2)
    # Bonding and antibonding levels straddle the isolated level.
    e0, _ = single_well_levels(square_pair())
    assert e0 == pytest.approx(ISOLATED_E0, rel=1e-3)
    assert res.energies[0] < e0 < res.energies[1]


def test_wavefunction_parity_and_normalization():
    res = solve_bound_states(square_pair(), n_states=2)
    x = res.grid
    even, odd = res.wavefunctions
    assert res.norms() == pytest.approx([1.0, 1.0], abs=1e-9)
    mirror = np.interp(-x, x, even)
    assert np.max(np.abs(mirror - even)) < 1e-3 * np.max(np.abs(even))
    # Both states are signed positive on the right well.
    right = np.argmin(np.abs(x - 3.86))
    assert even[right] > 0 and odd[right] > 0


def test_splitting_shrinks_with_separation():
    splittings = [solve_bound_states(square_pair(s=s), n_states=2).splitting for s in (5.0, 7.72, 10.0)]
    assert splittings[0] > splittings[1] > splittings[2] > 0


def test_asymmetry_localizes_the_ground_state():
    res = solve_bound_states(square_pair(asymmetry=0.6), n_states=2)
    x = res.grid
    weight_right = np.sum(res.wavefunctions[0][x > 0] ** 2) * res.grid_spacing
    assert weight_right > 0.95
    with pytest.raises(DomainError):
        wkb_splitting(square_pair(asymmetry=0.6))


def test_all_levels_below_the_plateau():
    res = solve_bound_states(square_pair())
    assert len(res) >= 2
    assert np.all(res.energies < 0)


def test_shallow_well_has_no_splitting():
    res = solve_bound_states(square_pair(well_depth=0.3), n_states=2)
    assert len(res) == 1
    with pytest.raises(NoTunnelingError):
        _ = res.splitting


def test_wkb_action_of_a_square_barrier():
    pot = square_pair()
    kappa = math.sqrt(-ISOLATED_E0 / pot.kinetic)
    assert wkb_action(pot, ISOLATED_E0) == pytest.approx(kappa * (7.72 - 3.0), rel=1e-6)
    with pytest.raises(NoTunnelingError):
        wkb_action(pot, 0.5)


def test_wkb_splitting_tracks_fd():
    # A single bound level falls back to ħω₀ = 2(E₀ + D).
    pot = square_pair()
    hw0 = 2.0 * (ISOLATED_E0 + 3.0)
    expected = hw0 / math.pi * math.exp(-math.sqrt(-ISOLATED_E0 / pot.kinetic) * (7.72 - 3.0))
    wkb = wkb_splitting(pot)
    assert wkb == pytest.approx(expected, rel=2e-2)
    assert 1 / 3 < wkb / SQUARE_SPLITTING < 3


def test_evaluate_potential():
    pot = square_pair(asymmetry=0.5)
    assert evaluate_potential(pot, 0.0) == 0.0
    assert evaluate_potential(pot, 3.86) == -3.0
    assert evaluate_potential(pot, -3.86) == -2.5
    with pytest.raises(DomainError):
        evaluate_potential(pot, 1e3)


@pytest.mark.parametrize(
    "kwargs",
    [{"well_depth": 0.0}, {"asymmetry": 4.0}, {"well_width": -1.0}, {"s": -1.0}, {"domain": (-1.0, 1.0)}],
)
def test_potential_rejects_bad_parameters(kwargs):
    with pytest.raises(DomainError):
        square_pair(**kwargs)


def test_splitting_to_rate():
    assert splitting_to_rate(0.3077) == pytest.approx(9.35e14, rel=1e-3)
    assert splitting_to_rate(0.0887) == pytest.approx(2.695e14, rel=1e-3)
    assert splitting_to_rate(np.array([0.0, 0.0887])) == pytest.approx([0.0, 2.695e14], rel=1e-3)
    with pytest.raises(DomainError):
        splitting_to_rate(-0.1)


def test_calibrate_well_places_the_level():
    depth = calibrate_well(0.25, WellShape.SQUARE, width=100.0)
    assert 0.25 < depth < 0.275
    pot = DoubleWellPotential(s=0.0, well_depth=depth, well_width=100.0, isolated=True, margin=160.0)
    assert solve_bound_states(pot, n_states=1).energies[0] == pytest.approx(-0.25, abs=1e-4)


def test_calibrate_anchor_depth_finds_the_first_root():
    depth = calibrate_anchor_depth(7.72, SQUARE_SPLITTING, WellShape.SQUARE, width=3.0, m_star=1.0)
    assert depth == pytest.approx(3.0, abs=0.03)
    with pytest.raises(DomainError):
        calibrate_anchor_depth(7.72, 0.0)


def test_fd_splitting_converges_with_the_grid():
    coarse = solve_bound_states(square_pair(), n_grid=1500, n_states=2).splitting
    fine = solve_bound_states(square_pair(), n_grid=3000, n_states=2).splitting
    assert abs(fine - coarse) / fine < 2e-3


def test_infinite_box_levels_grow_as_n_squared():
    pot = DoubleWellPotential(
        s=0.0, well_depth=50.0, well_width=10.0, m_star=1.0, isolated=True, domain=(-5.0, 5.0)
    )
    res = solve_bound_states(pot, n_grid=999, n_states=4, warn_boundary=False)
    n = np.arange(1, 5)
    kinetic = res.energies + 50.0
    assert kinetic == pytest.approx(pot.kinetic * (n * math.pi / 10.0) ** 2, rel=1e-3)
    assert kinetic / kinetic[0] == pytest.approx(n**2, rel=1e-3)


def test_calibrate_well_depth_against_width():
    assert calibrate_well(0.25, WellShape.SQUARE, 3.0) == pytest.approx(1.4468722603, rel=1e-6)
    assert calibrate_well(0.25, WellShape.SQUARE, 6.0) < calibrate_well(0.25, WellShape.SQUARE, 3.0)
    assert calibrate_well(0.25, WellShape.SQUARE, 2.0) > calibrate_well(0.25, WellShape.SQUARE, 4.0)


def test_calibrate_well_outside_the_bracket():
    with pytest.raises(CalibrationError):
        calibrate_well(0.25, WellShape.SQUARE, 1.5)


def test_sweep_separation_on_the_anchor_well():
    table = sweep_separation(load_config(SINGLE_PAIR), [3.84, 6.0, 7.72, 9.0, 11.5, 13.0, 15.4, 16.0, 21.0], workers=1)
    s = table.column("s_angstrom")
    status = table.to_pydict()["status"]
    assert status[:-1] == ["ok"] * 8
    assert status[-1].startswith("error: DomainError")
    rate_fd = table.column("rate_fd_hz")[:-1]
    rate_wkb = table.column("rate_wkb_hz")[:-1]
    assert np.all(np.diff(rate_fd) < 0)
    assert np.all(np.diff(rate_wkb) < 0)
    assert rate_fd[2] == pytest.approx(splitting_to_rate(0.0887), rel=5e-3)
    window = (s[:-1] >= 6.0) & (s[:-1] <= 16.0)
    fit = linregress(s[:-1][window], np.log(rate_fd[window]))
    assert fit.rvalue**2 >= 0.98
    ratio = rate_wkb[window] / rate_fd[window]
    assert np.all((ratio > 1 / 3) & (ratio < 3))
    assert rate_wkb[s[:-1] == 16.0][0] <= 1e12


def test_sweep_separation_on_a_gaussian_well():
    config = load_config(SINGLE_PAIR + "well: {shape: gaussian}\n")
    table = sweep_separation(config, [15.4, 3.84, 11.5, 7.72], workers=2)
    assert table.column("s_angstrom").tolist() == [3.84, 7.72, 11.5, 15.4]
    status = table.to_pydict()["status"]
    assert "NoTunnelingError" in status[0]
    assert status[1:] == ["ok", "ok", "ok"]
    assert table.column("rate_fd_hz")[1] == pytest.approx(splitting_to_rate(0.0887), rel=5e-3)


def test_fit_anchor_width_flags_a_boundary_fit():
    cal = fit_anchor_width()
    assert cal.source == "anchor+width"
    assert cal.width == pytest.approx(1.0, abs=0.02)
    assert cal.boundary_hit
    assert cal.fit_log_error > 1.0
