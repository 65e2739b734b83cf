import math

import pytest
from hypothesis import given, strategies as st

from paramarray.errors import InvalidMediumError
from paramarray.medium import (DB_PER_NEPER, METRES_PER_KYD, MediumParams,
                               absorption_db_per_kyd, absorption_np_per_m, absorption_range,
                               particle_velocity, rayleigh_distance, relaxation_frequency_khz,
                               shock_distance)

TANK = MediumParams()
AREA = 0.075 * 0.075
F0 = 855e3


def independent_absorption_db_per_kyd(f_khz, temp_c, salinity):
    # transcribed separately from the module; f and f_T in kHz
    f_t = 21.9 * 10 ** (6 - 1520 / (temp_c + 273))
    return 0.0186 * salinity * f_t * f_khz ** 2 / (f_t ** 2 + f_khz ** 2) + 0.0268 * f_khz ** 2 / f_t


def test_relaxation_frequency_at_tank_temperature():
    assert relaxation_frequency_khz(10.0) == pytest.approx(93.20, abs=0.01)


def test_absorption_at_855_khz():
    assert absorption_db_per_kyd(855.0, TANK) == pytest.approx(210.2, abs=0.05)


def test_absorption_matches_term_by_term_evaluation():
    for f_khz in (1.0, 100.0, 855.0, 2000.0):
        for medium in (TANK, MediumParams(temperature_c=25.0, salinity_ppt=35.0)):
            expected = independent_absorption_db_per_kyd(f_khz, medium.temperature_c,
                                                         medium.salinity_ppt)
            assert absorption_db_per_kyd(f_khz, medium) == pytest.approx(expected, rel=1e-12)


def test_absorption_zero_at_dc():
    assert absorption_db_per_kyd(0.0, TANK) == 0.0
    assert absorption_np_per_m(0.0, TANK) == 0.0


def test_zero_salinity_is_pure_freshwater_term():
    # with S = 0 the value is proportional to f^2
    a1 = absorption_db_per_kyd(100.0, TANK)
    a2 = absorption_db_per_kyd(300.0, TANK)
    assert a2 / a1 == pytest.approx(9.0, rel=1e-12)


def test_unit_conversion():
    assert METRES_PER_KYD == 914.4
    assert DB_PER_NEPER == pytest.approx(8.6859, abs=1e-4)
    assert absorption_np_per_m(F0, TANK) == pytest.approx(0.02647, abs=1e-5)
    assert absorption_np_per_m(F0, TANK) == pytest.approx(
        absorption_db_per_kyd(855.0, TANK) / 914.4 / DB_PER_NEPER, rel=1e-12)


def test_absorption_range():
    assert absorption_range(F0, TANK) == pytest.approx(37.8, abs=0.05)
    assert absorption_range(2 * F0, TANK) == pytest.approx(37.8 / 4, rel=1e-3)


def test_absorption_range_unbounded_when_lossless():
    # f^2 underflows to zero here; the range is reported as unbounded
    assert absorption_range(1e-300, TANK) == math.inf


def test_absorption_range_rejects_nonpositive_frequency():
    with pytest.raises(ValueError):
        absorption_range(0.0, TANK)


def test_rayleigh_distance():
    assert rayleigh_distance(AREA, F0, TANK) == pytest.approx(3.25, abs=0.005)
    assert rayleigh_distance(AREA, 2 * F0, TANK) == pytest.approx(
        2 * rayleigh_distance(AREA, F0, TANK), rel=1e-15)
    assert rayleigh_distance(1e-12, F0, TANK) == pytest.approx(0.0, abs=1e-8)


def test_shock_distance():
    assert particle_velocity(20e3, TANK) == pytest.approx(20e3 / (1000 * 1480))
    assert shock_distance(20e3, F0, TANK) == pytest.approx(13.54, abs=0.01)
    assert shock_distance(40e3, F0, TANK) == shock_distance(20e3, F0, TANK) / 2
    doubled_beta = MediumParams(beta=7.0)
    assert shock_distance(20e3, F0, doubled_beta) == pytest.approx(
        shock_distance(20e3, F0, TANK) / 2, rel=1e-15)


@pytest.mark.parametrize("kwargs", [
    dict(density=0.0), dict(sound_speed=-1.0), dict(beta=0.0),
    dict(salinity_ppt=-0.1), dict(salinity_ppt=45.1),
    dict(temperature_c=-2.5), dict(temperature_c=40.5), dict(sound_speed=float("nan")),
])
def test_invalid_medium_is_an_error(kwargs):
    with pytest.raises(InvalidMediumError):
        MediumParams(**kwargs)


media = st.builds(MediumParams,
                  temperature_c=st.floats(-2.0, 40.0),
                  salinity_ppt=st.floats(0.0, 45.0))


@given(media, st.floats(0.0, 5e3), st.floats(0.0, 5e3))
def test_absorption_monotone_in_frequency(medium, f1, f2):
    lo, hi = sorted((f1, f2))
    assert absorption_db_per_kyd(lo, medium) <= absorption_db_per_kyd(hi, medium)


@given(media, st.floats(1e3, 5e6))
def test_range_times_absorption_is_one(medium, f):
    product = absorption_range(f, medium) * absorption_np_per_m(f, medium)
    assert abs(product - 1.0) < 1e-12


@given(st.floats(1e-4, 1.0), st.floats(1e3, 5e6), st.floats(0.1, 10.0))
def test_rayleigh_linear_in_area(area, f, k):
    assert rayleigh_distance(k * area, f, TANK) == pytest.approx(
        k * rayleigh_distance(area, f, TANK), rel=1e-13)


@given(st.floats(1.0, 1e7), st.floats(1e3, 5e6))
def test_shock_distance_halves_with_doubled_pressure(p0, f):
    assert shock_distance(2 * p0, f, TANK) == pytest.approx(shock_distance(p0, f, TANK) / 2,
                                                            rel=1e-15)
