"""Point-scatterer FMCW scene simulation for walking humans and rigid robots.

Random numbers come from numpy's PCG64. Every frame draws from its own
substream seeded with ``SeedSequence([seed, frame_index])`` so a frame's
content does not depend on the order (or the process) it is generated in.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from rdclass import HUMAN, ROBOT
from rdclass.errors import DataError
from rdclass.radar_design import SPEED_OF_LIGHT, RadarConfig, derive_params

CUBE_MAGIC = b"RDC1"
_CUBE_HEADER = struct.Struct("<4sIIddd")

WALK_MARGIN = 0.3  # m, keep the target this far from both range limits


@dataclass(frozen=True)
class Scatterer:
    range: float  # m
    velocity: float  # m/s, positive = receding
    amplitude: float = 1.0


@dataclass
class ChirpCube:
    """One frame of dechirped samples, shape (Ns, Np); column p is chirp p."""

    samples: np.ndarray
    carrier_frequency: float
    bandwidth: float
    chirp_duration: float
    frame_index: int = 0

    def __post_init__(self):
        self.samples = np.asarray(self.samples)
        if self.samples.ndim != 2:
            raise DataError(f"chirp cube must be 2-D, got shape {self.samples.shape}")
        if not np.all(np.isfinite(self.samples)):
            raise DataError("chirp cube contains non-finite samples")

    @property
    def shape(self) -> tuple[int, int]:
        return self.samples.shape


def frame_rng(seed: int, frame_index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(frame_index)])))


def _check_scatterers(cfg: RadarConfig, scatterers: Sequence[Scatterer]) -> None:
    if len(scatterers) == 0:
        raise DataError("at least one scatterer is required")
    vmax = derive_params(cfg).max_velocity
    for s in scatterers:
        if not 0.0 <= s.range <= cfg.max_range:
            raise DataError(f"scatterer range {s.range:.4f} m outside [0, {cfg.max_range}]")
        if abs(s.velocity) > vmax:
            raise DataError(f"scatterer velocity {s.velocity:.4f} m/s exceeds vmax {vmax:.4f}")
        if s.amplitude < 0:
            raise DataError("scatterer amplitude must be non-negative")


def point_scatterer_cube(
    cfg: RadarConfig,
    scatterers: Sequence[Scatterer],
    snr_db: float | None = None,
    rng_seed: int | None = None,
    frame_index: int = 0,
    range_migration: bool = True,
) -> ChirpCube:
    """Sum of dechirped point-scatterer returns plus circular Gaussian noise.

    ``snr_db=None`` gives a noiseless cube. ``range_migration=False`` drops the
    slow-time range walk ``v * p * Tp`` from the beat frequency, which makes a
    velocity change a pure Doppler shift.
    """
    _check_scatterers(cfg, scatterers)
    derived = derive_params(cfg)
    ns, np_ = derived.samples_per_chirp, derived.chirps_per_frame
    c = SPEED_OF_LIGHT
    n = np.arange(ns, dtype=np.float64)[:, None]
    p = np.arange(np_, dtype=np.float64)[None, :]
    tp = cfg.chirp_duration

    samples = np.zeros((ns, np_), dtype=np.complex128)
    beat_per_metre = 2.0 * cfg.bandwidth / (c * ns)  # cycles per sample per metre
    for s in scatterers:
        r = s.range + s.velocity * p * tp if range_migration else s.range + 0.0 * p
        doppler = 2.0 * cfg.carrier_frequency * s.velocity / c * tp  # cycles per chirp
        phase = 2.0 * np.pi * (beat_per_metre * r * n + doppler * p)
        samples += s.amplitude * np.exp(1j * phase)

    if snr_db is not None:
        signal_power = float(np.mean(np.abs(samples) ** 2))
        noise_power = signal_power / 10.0 ** (snr_db / 10.0)
        rng = frame_rng(0 if rng_seed is None else rng_seed, frame_index)
        noise = rng.standard_normal((ns, np_)) + 1j * rng.standard_normal((ns, np_))
        samples += math.sqrt(noise_power / 2.0) * noise

    return ChirpCube(samples, cfg.carrier_frequency, cfg.bandwidth, tp, frame_index)


@dataclass(frozen=True)
class GaitParams:
    bulk_velocity: float = 1.2  # m/s, torso speed along the walking direction
    peak_foot_velocity: float = 4.5  # m/s
    gait_period: float = 1.0  # s
    stance_fraction: float = 0.6
    aspect_angle: float = 0.0  # rad, 0 = walking along the line of sight
    snr_db: float | None = 20.0
    start_range: float = 2.5  # m
    direction: int = -1  # -1 approaching, +1 receding
    gait_phase: float = 0.0  # cycle fraction at t = 0

    def validate(self) -> "GaitParams":
        if not 0 < self.bulk_velocity <= self.peak_foot_velocity <= 4.5:
            raise DataError("need 0 < bulk_velocity <= peak_foot_velocity <= 4.5 m/s")
        if not 0.0 < self.stance_fraction < 1.0:
            raise DataError("stance_fraction must lie in (0, 1)")
        if abs(self.aspect_angle) >= math.radians(80):
            raise DataError("aspect angle must be within +-80 degrees")
        if self.gait_period <= 0:
            raise DataError("gait_period must be positive")
        if self.direction not in (-1, 1):
            raise DataError("direction must be +1 or -1")
        return self


@dataclass(frozen=True)
class RobotParams:
    peak_velocity: float = 1.0  # m/s along the motion axis
    ramp_time: float = 0.5  # s
    cruise_time: float = 2.0  # s
    dwell_time: float = 0.0  # s at rest between moves
    reciprocating: bool = False  # reverse direction after every move
    offsets: tuple[float, ...] = (0.0, 0.15, 0.3, 0.45)  # m, radial depth of each scatterer
    amplitudes: tuple[float, ...] = (1.0, 0.8, 0.6, 0.7)
    aspect_angle: float = 0.0
    snr_db: float | None = 20.0
    start_range: float = 2.5
    direction: int = -1
    time_offset: float = 0.0  # s into the motion profile at frame 0

    @property
    def n_scatterers(self) -> int:
        return len(self.offsets)

    def validate(self, vmax: float) -> "RobotParams":
        if len(self.offsets) != len(self.amplitudes) or not self.offsets:
            raise DataError("robot needs matching, non-empty offsets and amplitudes")
        if min(self.offsets) < 0 or min(self.amplitudes) < 0:
            raise DataError("robot offsets and amplitudes must be non-negative")
        if abs(self.aspect_angle) >= math.radians(80):
            raise DataError("aspect angle must be within +-80 degrees")
        if self.peak_velocity < 0 or self.peak_velocity > vmax * math.cos(self.aspect_angle):
            raise DataError("robot peak velocity exceeds vmax * cos(aspect)")
        if self.ramp_time < 0 or self.cruise_time < 0 or self.dwell_time < 0:
            raise DataError("profile durations must be non-negative")
        if self.direction not in (-1, 1):
            raise DataError("direction must be +1 or -1")
        return self

    def speed(self, t: float) -> float:
        """Signed speed along the motion axis at time t (trapezoidal moves)."""
        v, ramp, cruise = self.peak_velocity, self.ramp_time, self.cruise_time
        move = 2 * ramp + cruise
        period = move + self.dwell_time
        if period <= 0:
            return v
        k, tau = divmod(t, period)
        sign = -1.0 if (self.reciprocating and int(k) % 2) else 1.0
        if tau >= move:
            mag = 0.0
        elif tau < ramp:
            mag = v * tau / ramp
        elif tau < ramp + cruise:
            mag = v
        else:
            mag = v * (move - tau) / ramp if ramp > 0 else 0.0
        return sign * mag


@dataclass
class Simulation:
    """Frames of one experiment plus per-frame bookkeeping."""

    label: int
    frames: list[ChirpCube] = field(default_factory=list)
    frame_info: list[dict] = field(default_factory=list)
    truncated: int = 0  # frames dropped because the target left the walk window

    def __iter__(self) -> Iterator[tuple[ChirpCube, int]]:
        return ((cube, self.label) for cube in self.frames)

    def __len__(self) -> int:
        return len(self.frames)


def swing_envelope(u: float, window: float) -> float:
    """Leg swing modulation at gait-cycle fraction u: a half-sine pulse
    raised to 1.5, compressed into [0, window) and zero elsewhere."""
    u = u % 1.0
    if window <= 0 or u >= window:
        return 0.0
    return math.sin(math.pi * u / window) ** 1.5


# body part: (speed model, range offset amplitude [m], offset phase [cycles], amplitude)
_TORSO_DEPTHS = (-0.1, 0.0, 0.1)
_TORSO_AMPS = (1.0, 0.7, 0.7)
_HEAD_AMP = 0.35
_ARM_AMP, _LEG_AMP, _FOOT_AMP = 0.25, 0.3, 0.15
_ARM_SWING, _LEG_SWING, _FOOT_SWING = 0.12, 0.2, 0.3  # m micro-range excursion


def human_scatterers(gait: GaitParams, torso_range: float, t: float) -> tuple[list[Scatterer], bool]:
    """Ten body scatterers at time t; also reports whether a leg is swinging."""
    u = t / gait.gait_period + gait.gait_phase
    window = (1.0 - gait.stance_fraction) / 2.0
    swing = (swing_envelope(u, window), swing_envelope(u - 0.5, window))
    arm = math.sin(2.0 * math.pi * u)
    vb, vp = gait.bulk_velocity, gait.peak_foot_velocity
    excess = vp - vb
    radial = gait.direction * math.cos(gait.aspect_angle)

    parts: list[tuple[float, float, float]] = []  # (speed, offset, amplitude)
    for depth, amp in zip(_TORSO_DEPTHS, _TORSO_AMPS):
        parts.append((vb, depth, amp))
    parts.append((vb, 0.0, _HEAD_AMP))
    for sign in (1.0, -1.0):
        parts.append((vb + sign * 0.35 * excess * arm, sign * _ARM_SWING * arm, _ARM_AMP))
    for leg, phase in zip(swing, (0.0, 0.5)):
        stride = math.cos(2.0 * math.pi * (u - phase))
        parts.append((vb + (0.7 * vp - vb) * leg, _LEG_SWING * stride, _LEG_AMP))
        parts.append((vb + excess * leg, _FOOT_SWING * stride, _FOOT_AMP))

    scatterers = [
        Scatterer(torso_range + radial * offset, radial * speed, amp)
        for speed, offset, amp in parts
    ]
    return scatterers, swing[0] > 0 or swing[1] > 0


def _walk_ok(cfg: RadarConfig, r: float) -> bool:
    return WALK_MARGIN <= r <= cfg.max_range - WALK_MARGIN


def simulate_human(
    cfg: RadarConfig,
    gait: GaitParams,
    n_frames: int,
    rng_seed: int,
    range_migration: bool = True,
) -> Simulation:
    """Consecutive frames of a walking person.

    The torso advances by ``bulk_velocity * cos(aspect) * frame_duration`` per
    frame. Generation stops early (``truncated`` > 0) once the torso leaves
    [0.3 m, max_range - 0.3 m].
    """
    gait.validate()
    frame_duration = derive_params(cfg).frame_duration
    sim = Simulation(label=HUMAN)
    step = gait.direction * gait.bulk_velocity * math.cos(gait.aspect_angle) * frame_duration
    for k in range(n_frames):
        torso = gait.start_range + k * step
        if not _walk_ok(cfg, torso):
            sim.truncated = n_frames - k
            break
        t = (k + 0.5) * frame_duration
        scatterers, swinging = human_scatterers(gait, torso, t)
        sim.frames.append(
            point_scatterer_cube(cfg, scatterers, gait.snr_db, rng_seed, k, range_migration)
        )
        sim.frame_info.append({"time": t, "range": torso, "phase": "swing" if swinging else "stance"})
    return sim


def simulate_robot(
    cfg: RadarConfig,
    robot: RobotParams,
    n_frames: int,
    rng_seed: int,
    range_migration: bool = True,
) -> Simulation:
    """Consecutive frames of a rigid robot: every scatterer shares one radial velocity."""
    derived = derive_params(cfg)
    robot.validate(derived.max_velocity)
    frame_duration = derived.frame_duration
    radial = robot.direction * math.cos(robot.aspect_angle)
    sim = Simulation(label=ROBOT)
    base = robot.start_range
    depth = abs(radial) * max(robot.offsets)
    for k in range(n_frames):
        if not (_walk_ok(cfg, base) and _walk_ok(cfg, base + depth)):
            sim.truncated = n_frames - k
            break
        t = robot.time_offset + (k + 0.5) * frame_duration
        v = radial * robot.speed(t)
        scatterers = [
            Scatterer(base + abs(radial) * off, v, amp)
            for off, amp in zip(robot.offsets, robot.amplitudes)
        ]
        sim.frames.append(
            point_scatterer_cube(cfg, scatterers, robot.snr_db, rng_seed, k, range_migration)
        )
        sim.frame_info.append({"time": t, "range": base, "velocity": v})
        base += v * frame_duration
    return sim


def write_cube(path: str | Path, cube: ChirpCube) -> None:
    ns, np_ = cube.shape
    header = _CUBE_HEADER.pack(CUBE_MAGIC, ns, np_, cube.carrier_frequency, cube.bandwidth, cube.chirp_duration)
    # chirp-major: each chirp's Ns samples are contiguous
    body = np.empty((np_, ns, 2), dtype="<f4")
    body[..., 0] = cube.samples.real.T
    body[..., 1] = cube.samples.imag.T
    Path(path).write_bytes(header + body.tobytes())


def read_cube(path: str | Path, frame_index: int = 0) -> ChirpCube:
    data = Path(path).read_bytes()
    if len(data) < _CUBE_HEADER.size:
        raise DataError(f"{path}: truncated chirp cube header")
    magic, ns, np_, fc, bw, tp = _CUBE_HEADER.unpack_from(data)
    if magic != CUBE_MAGIC:
        raise DataError(f"{path}: bad magic {magic!r}")
    expected = _CUBE_HEADER.size + ns * np_ * 8
    if len(data) != expected:
        raise DataError(f"{path}: expected {expected} bytes, found {len(data)}")
    body = np.frombuffer(data, dtype="<f4", offset=_CUBE_HEADER.size).reshape(np_, ns, 2)
    samples = (body[..., 0].astype(np.float64) + 1j * body[..., 1].astype(np.float64)).T
    return ChirpCube(np.ascontiguousarray(samples), fc, bw, tp, frame_index)
