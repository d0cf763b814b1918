import math

import pytest

from rdclass.errors import ConfigError
from rdclass.radar_design import (
    MAX_CHIRPS,
    SPEED_OF_LIGHT,
    RadarConfig,
    derive_params,
    next_power_of_two,
    raw_chirp_count,
)


def test_default_design_values(radar):
    d = derive_params(radar)
    assert d.range_resolution == pytest.approx(0.075, rel=0.01)
    assert d.samples_per_chirp == 67
    assert d.max_velocity == pytest.approx(6.0, rel=0.01)
    assert d.chirps_per_frame == 128
    assert d.frame_duration == pytest.approx(0.064, rel=1e-12)


def test_derived_values_match_closed_form(radar):
    d = derive_params(radar)
    c = SPEED_OF_LIGHT
    assert d.range_resolution == c / (2 * 2e9)
    assert d.samples_per_chirp == math.ceil(2 * 2e9 * 5.0 / c)
    assert d.max_velocity == c / (4 * 25e9 * 0.5e-3)
    assert raw_chirp_count(radar) == pytest.approx(119.916983, rel=1e-8)


def test_bandwidth_doubling_halves_resolution():
    a = derive_params(RadarConfig(bandwidth=1e9))
    b = derive_params(RadarConfig(bandwidth=2e9))
    assert a.range_resolution == pytest.approx(2 * b.range_resolution)


def test_velocity_resolution_already_power_of_two():
    c = SPEED_OF_LIGHT
    vres = c / (2 * 25e9 * 0.5e-3 * 128)
    assert derive_params(RadarConfig(velocity_resolution=vres)).chirps_per_frame == 128


@pytest.mark.parametrize("x,expected", [(1, 1), (1.5, 2), (2, 2), (3, 4), (119.9, 128), (128, 128), (129, 256)])
def test_next_power_of_two(x, expected):
    assert next_power_of_two(x) == expected


@pytest.mark.parametrize("field", ["carrier_frequency", "bandwidth", "chirp_duration", "max_range", "velocity_resolution"])
def test_non_positive_inputs_rejected(field):
    with pytest.raises(ConfigError):
        derive_params(RadarConfig(**{field: 0.0}))
    with pytest.raises(ConfigError):
        derive_params(RadarConfig(**{field: float("nan")}))


def test_coarse_velocity_resolution_rejected():
    with pytest.raises(ConfigError):
        derive_params(RadarConfig(velocity_resolution=100.0))


def test_chirp_cap():
    with pytest.raises(ConfigError, match="cap"):
        derive_params(RadarConfig(velocity_resolution=1e-5))
    assert MAX_CHIRPS == 65536
