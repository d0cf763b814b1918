"""FMCW waveform design: resolutions and sample counts from the radar parameters."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from rdclass.errors import ConfigError

SPEED_OF_LIGHT = 299_792_458.0  # m/s
MAX_CHIRPS = 65536


@dataclass(frozen=True)
class RadarConfig:
    carrier_frequency: float = 25e9  # Hz
    bandwidth: float = 2e9  # Hz
    chirp_duration: float = 0.5e-3  # s
    max_range: float = 5.0  # m
    velocity_resolution: float = 0.1  # m/s

    def validate(self) -> "RadarConfig":
        for name, value in asdict(self).items():
            if not isinstance(value, (int, float)) or not math.isfinite(value) or value <= 0:
                raise ConfigError(f"{name} must be a positive finite number, got {value!r}")
        if self.carrier_frequency <= self.bandwidth:
            raise ConfigError("carrier_frequency must exceed bandwidth")
        return self


@dataclass(frozen=True)
class DerivedParams:
    range_resolution: float  # m
    samples_per_chirp: int
    max_velocity: float  # m/s
    chirps_per_frame: int
    frame_duration: float  # s


def next_power_of_two(x: float) -> int:
    p = 1
    while p < x:
        p *= 2
    return p


def derive_params(cfg: RadarConfig) -> DerivedParams:
    """Range resolution, samples per chirp, unambiguous velocity and chirp count."""
    cfg.validate()
    c = SPEED_OF_LIGHT
    fc, bw, tp = cfg.carrier_frequency, cfg.bandwidth, cfg.chirp_duration

    range_resolution = c / (2.0 * bw)
    # ceiling so the sampled beat band always covers max_range
    ns = math.ceil(2.0 * bw * cfg.max_range / c)
    max_velocity = c / (4.0 * fc * tp)
    raw_np = c / (2.0 * fc * tp * cfg.velocity_resolution)
    if raw_np < 1.0:
        raise ConfigError(
            f"velocity_resolution {cfg.velocity_resolution} exceeds the unambiguous span "
            f"{2 * max_velocity:.4g} m/s"
        )
    np_ = next_power_of_two(raw_np)
    if np_ > MAX_CHIRPS:
        raise ConfigError(f"{np_} chirps per frame exceeds the cap of {MAX_CHIRPS}")
    return DerivedParams(
        range_resolution=range_resolution,
        samples_per_chirp=ns,
        max_velocity=max_velocity,
        chirps_per_frame=np_,
        frame_duration=np_ * tp,
    )


def raw_chirp_count(cfg: RadarConfig) -> float:
    """Chirp count before rounding up to a power of two."""
    return SPEED_OF_LIGHT / (2.0 * cfg.carrier_frequency * cfg.chirp_duration * cfg.velocity_resolution)
