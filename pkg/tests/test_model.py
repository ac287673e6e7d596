import math

import pytest

from pydbqubit.errors import DomainError, LayoutStructureError
from pydbqubit.physics.defines import COULOMB_K
from pydbqubit.physics.model import DeviceLayout, MaterialParams, screened_coulomb, validate_layout


def test_material_defaults():
    material = MaterialParams()
    assert material.binding_target == pytest.approx(0.25)
    assert material.effective_bohr_radius == pytest.approx(0.529177210903 * 6.35 / 0.26)


@pytest.mark.parametrize(
    "kwargs", [{"band_gap": 0.8}, {"eps_surface": 0.5}, {"density": -1.0}, {"onsite_shift": math.nan}]
)
def test_material_rejects_bad_values(kwargs):
    with pytest.raises(DomainError):
        MaterialParams(**kwargs)


def test_layout_structure_errors():
    with pytest.raises(LayoutStructureError):
        DeviceLayout(sites=((0, 0), (5, 0)), pairs=((0, 2),))
    with pytest.raises(LayoutStructureError):
        DeviceLayout(sites=((0, 0), (5, 0), (10, 0)), pairs=((0, 1), (1, 2)))
    with pytest.raises(LayoutStructureError):
        DeviceLayout(sites=((0, 0), (5, 0)), pairs=((1, 1),))
    with pytest.raises(LayoutStructureError):
        validate_layout(DeviceLayout(sites=((0, 0),), pairs=()))


def test_layout_geometry():
    layout = DeviceLayout.parallel_pairs(7.68, 20.0)
    assert layout.n_sites == 4
    assert layout.n_pairs == 2
    assert layout.separations == pytest.approx((7.68, 7.68))
    assert layout.distance(0, 3) == pytest.approx(math.hypot(7.68, 20.0))
    assert layout.pair_of_site() == {0: 0, 1: 0, 2: 1, 3: 1}


def test_validate_layout_separation_bounds():
    assert validate_layout(DeviceLayout.single_pair(3.84)).ok
    assert validate_layout(DeviceLayout.single_pair(16.0)).ok
    assert validate_layout(DeviceLayout.single_pair(3.0)).kinds() == {"min-separation"}
    assert validate_layout(DeviceLayout.single_pair(16.5)).kinds() == {"tunnel-range"}


def test_validate_layout_cross_pair_isolation():
    assert validate_layout(DeviceLayout.parallel_pairs(7.68, 20.0))
    report = validate_layout(DeviceLayout.parallel_pairs(7.68, 16.0))
    assert not report
    assert report.kinds() == {"cross-pair-isolation"}
    assert all(v.subject == (0, 1) for v in report.violations)


def test_screened_coulomb():
    assert screened_coulomb(10.0, 1.0) == pytest.approx(COULOMB_K / 10.0)
    assert screened_coulomb([10.0, 20.0], 2.0) == pytest.approx([COULOMB_K / 20.0, COULOMB_K / 40.0])
    with pytest.raises(DomainError):
        screened_coulomb(0.0, 6.35)
    with pytest.raises(DomainError):
        screened_coulomb(5.0, 0.5)
