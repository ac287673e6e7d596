import math
from dataclasses import replace

import numpy as np
import pytest

from pydbqubit.errors import DomainError
from pydbqubit.physics.decoherence import (
    DriftModel,
    PhononModel,
    drift_bias,
    drift_decoherence_estimate,
    drift_steps,
    phonon_rate,
    phonon_sweep,
)
from pydbqubit.physics.defines import HBAR
from pydbqubit.physics.model import MaterialParams
from pydbqubit.settings import PhononSettings


@pytest.fixture
def model() -> PhononModel:
    return PhononModel.from_material(MaterialParams())


def test_envelope_radius_defaults_to_the_bohr_radius(model):
    assert model.envelope_radius == pytest.approx(MaterialParams().effective_bohr_radius)
    custom = PhononModel.from_material(MaterialParams(), PhononSettings(envelope_radius=5.0))
    assert custom.envelope_radius == 5.0


def test_default_phonon_rates(model):
    assert phonon_rate(model, 7.68) == pytest.approx(3.4842e8, rel=1e-3)
    assert phonon_rate(model, 15.36) / phonon_rate(model, 3.84) == pytest.approx(3.0, rel=1e-2)
    assert phonon_rate(model, 0.0) == 0.0


def test_phonon_rate_scales_as_fifth_power_at_low_energy(model):
    low = phonon_rate(model, 7.68, energy=1e-5)
    high = phonon_rate(model, 7.68, energy=1e-3)
    slope = math.log(high / low) / math.log(100.0)
    assert slope == pytest.approx(5.0, rel=2e-2)


def test_phonon_rate_vanishes_above_debye(model):
    assert phonon_rate(model, 7.68, energy=0.06) == 0.0
    assert np.all(phonon_rate(model, np.array([3.84, 7.68]), energy=0.06) == 0.0)


def test_phonon_rate_domain(model):
    with pytest.raises(DomainError):
        phonon_rate(model, -1.0)
    with pytest.raises(DomainError):
        phonon_rate(model, 7.68, energy=0.0)
    with pytest.raises(DomainError):
        PhononModel(phonon_energy=0.1, debye_energy=0.055)


def test_phonon_sweep_matches_pointwise(model):
    s = [3.84, 7.68, 15.36]
    assert phonon_sweep(model, s) == pytest.approx([phonon_rate(model, v) for v in s])


def test_drift_bias_decays():
    drift = DriftModel(eta0=0.5, tau_relax=100.0)
    assert drift_bias(drift, 0.0) == 0.5
    assert drift_bias(drift, 100.0) == pytest.approx(0.5 / math.e)
    assert drift_bias(drift, np.array([0.0, 200.0])) == pytest.approx([0.5, 0.5 * math.exp(-2.0)])
    with pytest.raises(DomainError):
        drift_bias(drift, -1.0)
    with pytest.raises(DomainError):
        DriftModel(tau_relax=0.0)


def test_drift_steps_preserve_the_integral():
    drift = DriftModel(eta0=0.5, tau_relax=100.0)
    pieces = drift_steps(drift, 10.0, 110.0, 7.0)
    assert len(pieces) == 15
    assert sum(d for d, _ in pieces) == pytest.approx(100.0)
    assert max(d for d, _ in pieces) <= 7.0
    integral = sum(d * b for d, b in pieces)
    assert integral == pytest.approx(0.5 * 100.0 * (math.exp(-0.1) - math.exp(-1.1)))
    biases = [b for _, b in pieces]
    assert all(a > b for a, b in zip(biases, biases[1:]))
    with pytest.raises(DomainError):
        drift_steps(drift, 5.0, 5.0, 1.0)


def test_drift_decoherence_estimate():
    drift = DriftModel(tau_relax=1.0e6)
    assert drift_decoherence_estimate(drift, 0.04435) == pytest.approx(HBAR / 1.0e6 / 0.0887)
    with pytest.raises(DomainError):
        drift_decoherence_estimate(drift, 0.0)


def test_default_relaxation_time_is_nanoseconds(model):
    lifetime_ns = 1e9 / phonon_rate(model, 7.68)
    assert 1.0 <= lifetime_ns <= 100.0


def test_phonon_rate_goes_as_the_square_of_the_deformation_potential(model):
    stronger = replace(model, deformation_potential=2.0 * model.deformation_potential)
    s = np.array([3.84, 7.68, 15.36])
    assert phonon_rate(stronger, s) == pytest.approx(4.0 * phonon_rate(model, s), rel=1e-12)
    grid = phonon_sweep(model, np.linspace(0.0, 20.0, 401))
    assert np.all(np.isfinite(grid)) and np.all(grid >= 0.0)


def test_drift_bias_is_a_convex_semigroup():
    drift = DriftModel(eta0=0.5, tau_relax=300.0)
    for t1, t2 in [(0.0, 10.0), (120.0, 45.0), (900.0, 1500.0)]:
        joint = drift_bias(drift, t1 + t2) * drift.eta0
        assert joint == pytest.approx(drift_bias(drift, t1) * drift_bias(drift, t2), rel=1e-12)
    values = drift_bias(drift, np.linspace(0.0, 3000.0, 301))
    assert np.all(np.diff(values) < 0)
    assert np.all(np.diff(values, 2) >= 0)
