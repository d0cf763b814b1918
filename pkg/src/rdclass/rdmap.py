"""Chirp cube -> 512x512 8-bit range-Doppler map, and CNN input preparation.

Pixel layout: rows are range bins (0 = nearest), columns are Doppler bins with
zero velocity at column 256.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from rdclass.errors import DataError
from rdclass.radar_design import SPEED_OF_LIGHT
from rdclass.simulator import ChirpCube

NFFT = 512
DYNAMIC_RANGE_DB = 60.0
NET_SIZE = 200


@dataclass
class RDMap:
    pixels: np.ndarray  # (512, 512) uint8, [range, doppler]
    range_axis: float  # metres per range bin
    doppler_axis: float  # m/s per Doppler bin
    label: int | None = None
    experiment_id: int | None = None
    frame_index: int = 0

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels)
        if self.pixels.shape != (NFFT, NFFT) or self.pixels.dtype != np.uint8:
            raise DataError(f"RD map must be uint8 {NFFT}x{NFFT}, got {self.pixels.dtype} {self.pixels.shape}")

    def range_of(self, row: float) -> float:
        return row * self.range_axis

    def velocity_of(self, col: float) -> float:
        return (col - NFFT // 2) * self.doppler_axis


def range_fft(samples: np.ndarray) -> np.ndarray:
    """Hann-windowed, zero-padded FFT down each chirp (axis 0)."""
    window = np.hanning(samples.shape[0])[:, None]
    return np.fft.fft(samples * window, n=NFFT, axis=0)


def doppler_fft(range_profiles: np.ndarray) -> np.ndarray:
    """Hann-windowed, zero-padded, centre-shifted FFT across chirps (axis 1)."""
    window = np.hanning(range_profiles.shape[1])[None, :]
    return np.fft.fftshift(np.fft.fft(range_profiles * window, n=NFFT, axis=1), axes=1)


def rd_spectrum(cube: ChirpCube) -> np.ndarray:
    """Complex 512x512 range-Doppler spectrum before any magnitude mapping."""
    samples = np.asarray(cube.samples)
    if not np.all(np.isfinite(samples)):
        raise DataError("chirp cube contains non-finite samples")
    return doppler_fft(range_fft(samples))


def spectrum_db(spectrum: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return 20.0 * np.log10(np.abs(spectrum))


def quantize_db(db: np.ndarray, dynamic_range: float = DYNAMIC_RANGE_DB) -> np.ndarray:
    """Map [peak - dynamic_range, peak] dB affinely onto 0..255.

    A spectrum with no energy at all (peak = -inf) maps to all zeros.
    """
    peak = float(np.max(db))
    if not np.isfinite(peak):
        return np.zeros(db.shape, dtype=np.uint8)
    floor = peak - dynamic_range
    scaled = (np.clip(db, floor, peak) - floor) * (255.0 / dynamic_range)
    return np.rint(scaled).astype(np.uint8)


def axis_scales(cube: ChirpCube) -> tuple[float, float]:
    ns, np_ = cube.shape
    range_per_bin = SPEED_OF_LIGHT * ns / (2.0 * cube.bandwidth * NFFT)
    velocity_per_bin = SPEED_OF_LIGHT / (2.0 * cube.carrier_frequency * cube.chirp_duration * NFFT)
    return range_per_bin, velocity_per_bin


def compute_rd_map(cube: ChirpCube, label: int | None = None, experiment_id: int | None = None) -> RDMap:
    pixels = quantize_db(spectrum_db(rd_spectrum(cube)))
    range_per_bin, velocity_per_bin = axis_scales(cube)
    return RDMap(pixels, range_per_bin, velocity_per_bin, label, experiment_id, cube.frame_index)


@lru_cache(maxsize=8)
def box_average_matrix(n_in: int = NFFT, n_out: int = NET_SIZE) -> np.ndarray:
    """(n_out, n_in) weights; row i averages the input cells overlapping
    [i * n_in / n_out, (i + 1) * n_in / n_out), weighted by overlap length."""
    scale = n_in / n_out
    edges = np.arange(n_out + 1) * scale
    lo, hi = edges[:-1, None], edges[1:, None]
    cells = np.arange(n_in)[None, :]
    overlap = np.clip(np.minimum(hi, cells + 1) - np.maximum(lo, cells), 0.0, None)
    weights = overlap / scale
    weights.setflags(write=False)
    return weights


def to_network_input(rd: RDMap | np.ndarray, size: int = NET_SIZE) -> np.ndarray:
    """Area-average the map down to size x size grayscale in [0, 1]."""
    pixels = rd.pixels if isinstance(rd, RDMap) else np.asarray(rd)
    if pixels.shape != (NFFT, NFFT):
        raise DataError(f"expected a {NFFT}x{NFFT} map, got {pixels.shape}")
    m = box_average_matrix(NFFT, size)
    out = m @ (pixels.astype(np.float64) / 255.0) @ m.T
    return np.clip(out, 0.0, 1.0)


def write_pgm(path: str | Path, pixels: np.ndarray) -> None:
    pixels = np.asarray(pixels)
    if pixels.dtype != np.uint8 or pixels.ndim != 2:
        raise DataError("PGM writer expects a 2-D uint8 array")
    height, width = pixels.shape
    Path(path).write_bytes(b"P5\n%d %d\n255\n" % (width, height) + np.ascontiguousarray(pixels).tobytes())


def _pgm_tokens(data: bytes, count: int) -> tuple[list[int], int]:
    tokens, pos = [], 0
    while len(tokens) < count:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise DataError("truncated PGM header")
        tokens.append(data[start:pos])
    return tokens, pos + 1  # exactly one whitespace byte before the raster


def read_pgm(path: str | Path) -> np.ndarray:
    data = Path(path).read_bytes()
    tokens, offset = _pgm_tokens(data, 4)
    if tokens[0] != b"P5":
        raise DataError(f"{path}: not a binary PGM (magic {tokens[0]!r})")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError as exc:
        raise DataError(f"{path}: malformed PGM header") from exc
    if maxval != 255:
        raise DataError(f"{path}: only maxval 255 is supported, got {maxval}")
    raster = data[offset : offset + width * height]
    if len(raster) != width * height:
        raise DataError(f"{path}: truncated PGM raster")
    return np.frombuffer(raster, dtype=np.uint8).reshape(height, width).copy()


def load_rd_map(path: str | Path, label: int | None = None, experiment_id: int | None = None,
                frame_index: int = 0, range_axis: float = float("nan"),
                doppler_axis: float = float("nan")) -> RDMap:
    return RDMap(read_pgm(path), range_axis, doppler_axis, label, experiment_id, frame_index)
