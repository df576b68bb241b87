import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lightfl.optics import (
    HarvesterParams,
    OpticalLink,
    channel_gain,
    concentrator_gain,
    harvested_power,
    lambertian_order,
    total_harvested_energy,
)

# high-precision (mpmath, 40 digits) evaluations of the closed forms
G_N15_FOV70 = 2.548067245721537
H_BORESIGHT_22 = 1.424408565553982e-3
EH_28W = 7.266273009890666e-3


def boresight(distance=2.2, **kw):
    params = dict(
        active_area=85e-4,
        distance=distance,
        irradiation_angle=0.0,
        incidence_angle=0.0,
        fov=math.radians(70),
        semi_angle_half_power=math.radians(60),
        filter_gain=1.0,
        concentrator_index=1.5,
    )
    params.update(kw)
    return OpticalLink(**params)


class TestLambertianOrder:
    def test_sixty_degrees_is_one(self):
        assert lambertian_order(math.radians(60)) == pytest.approx(1.0, rel=1e-14)

    def test_fortyfive_degrees(self):
        assert lambertian_order(math.radians(45)) == pytest.approx(2.0, rel=1e-14)

    def test_narrow_beam_grows(self):
        assert lambertian_order(math.radians(1)) > lambertian_order(math.radians(20)) > 1.0

    @pytest.mark.parametrize("angle", [0.0, -0.1, math.pi / 2, 2.0, 1e-10])
    def test_rejects_out_of_range(self, angle):
        with pytest.raises(ValueError):
            lambertian_order(angle)


class TestConcentratorGain:
    def test_outside_fov_is_zero(self):
        assert concentrator_gain(boresight(incidence_angle=math.radians(71))) == 0.0

    def test_default_index(self):
        assert concentrator_gain(boresight()) == pytest.approx(G_N15_FOV70, rel=1e-13)

    def test_unit_index_full_hemisphere(self):
        assert concentrator_gain(boresight(concentrator_index=1.0, fov=math.pi / 2)) == pytest.approx(1.0)


class TestChannelGain:
    def test_boresight_value(self):
        assert channel_gain(boresight()) == pytest.approx(H_BORESIGHT_22, rel=1e-12)

    def test_zero_outside_fov(self):
        assert channel_gain(boresight(incidence_angle=math.radians(75))) == 0.0

    def test_inverse_square(self):
        near = boresight(2.2, irradiation_angle=0.3, incidence_angle=0.3)
        far = boresight(4.4, irradiation_angle=0.3, incidence_angle=0.3)
        assert channel_gain(near) / channel_gain(far) == pytest.approx(4.0, abs=1e-12)

    @given(
        d=st.floats(0.1, 20),
        phi=st.floats(0, 1.5),
        psi=st.floats(0, math.pi / 2),
        semi=st.floats(0.05, 1.5),
    )
    def test_nonnegative_and_zero_iff_outside(self, d, phi, psi, semi):
        lk = boresight(d, irradiation_angle=phi, incidence_angle=psi, semi_angle_half_power=semi)
        h = channel_gain(lk)
        assert h >= 0
        if psi > lk.fov:
            assert h == 0

    def test_invalid_links(self):
        with pytest.raises(ValueError):
            boresight(distance=0.0)
        with pytest.raises(ValueError):
            boresight(fov=2.0)
        with pytest.raises(ValueError):
            boresight(active_area=-1.0)


class TestHarvest:
    hp = HarvesterParams()

    def test_zero_power(self):
        assert harvested_power(boresight(), self.hp, 0.0) == 0.0

    def test_table_value_at_28w(self):
        assert harvested_power(boresight(), self.hp, 28.0) == pytest.approx(EH_28W, rel=1e-12)

    def test_array_matches_scalar(self):
        p = np.array([0.0, 1.0, 28.0, 500.0])
        arr = harvested_power(boresight(), self.hp, p)
        assert arr == pytest.approx([harvested_power(boresight(), self.hp, float(x)) for x in p], rel=1e-14)

    def test_negative_power_rejected(self):
        with pytest.raises(ValueError):
            harvested_power(boresight(), self.hp, -1.0)
        with pytest.raises(ValueError):
            harvested_power(boresight(), self.hp, np.array([1.0, -1.0]))

    @given(st.floats(1e-6, 1e4), st.floats(1e-6, 1.0))
    def test_strictly_increasing(self, p, frac):
        lk = boresight()
        assert harvested_power(lk, self.hp, p * (1 + frac)) > harvested_power(lk, self.hp, p)

    @settings(max_examples=50)
    @given(st.floats(1e-3, 1e4))
    def test_positive_finite_difference_slope(self, p):
        h = 1e-6 * p
        lk = boresight()
        assert harvested_power(lk, self.hp, p + h) - harvested_power(lk, self.hp, p - h) > 0

    def test_harvester_validation(self):
        with pytest.raises(ValueError):
            HarvesterParams(fill_factor=1.2)
        with pytest.raises(ValueError):
            HarvesterParams(dark_current=0.0)


class TestTotalEnergy:
    hp = HarvesterParams()

    def test_zero_powers(self):
        assert total_harvested_energy(boresight(), boresight(), self.hp, 0.0, 0.0, 1.0) == 0.0

    def test_linear_in_frame(self):
        e1 = total_harvested_energy(boresight(), boresight(), self.hp, 28.0, 40.0, 1.0)
        e2 = total_harvested_energy(boresight(), boresight(), self.hp, 28.0, 40.0, 2.0)
        assert e2 == pytest.approx(2 * e1, rel=1e-15)

    def test_vl_only(self):
        e = total_harvested_energy(boresight(), boresight(), self.hp, 28.0, 0.0, 0.5)
        assert e == pytest.approx(0.5 * EH_28W, rel=1e-12)

    def test_rejects_nonpositive_frame(self):
        with pytest.raises(ValueError):
            total_harvested_energy(boresight(), boresight(), self.hp, 1.0, 1.0, 0.0)
