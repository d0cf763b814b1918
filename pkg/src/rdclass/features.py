"""Seven distribution features of the retained target pixels, and sample buffers."""

from __future__ import annotations

from dataclasses import astuple, dataclass
from typing import Sequence

import numpy as np

from rdclass.errors import DataError, EmptyTargetError
from rdclass.thresholding import LevelMask

N_FEATURES = 7
FEATURE_NAMES = ("d_extent", "r_extent", "sigma_v", "sigma_r", "var_v", "var_r", "cov_rv")


@dataclass(frozen=True)
class FeatureVector:
    d_extent: float
    r_extent: float
    sigma_v: float
    sigma_r: float
    var_v: float
    var_r: float
    cov_rv: float

    def as_array(self) -> np.ndarray:
        return np.array(astuple(self), dtype=np.float64)


def features_from_points(rows, cols, weights=None) -> FeatureVector:
    """Extents and (weighted) second moments of pixel coordinates, in bins."""
    rows = np.asarray(rows, dtype=np.float64)
    cols = np.asarray(cols, dtype=np.float64)
    if rows.size == 0:
        raise EmptyTargetError("no retained pixels")
    if weights is None:
        w = np.full(rows.size, 1.0 / rows.size)
    else:
        w = np.asarray(weights, dtype=np.float64)
        total = w.sum()
        if total <= 0:
            raise EmptyTargetError("retained pixels carry no weight")
        w = w / total
    mu_r, mu_d = w @ rows, w @ cols
    dr, dd = rows - mu_r, cols - mu_d
    var_r = float(w @ (dr * dr))
    var_v = float(w @ (dd * dd))
    cov = float(w @ (dr * dd))
    sigma_r, sigma_v = np.sqrt(var_r), np.sqrt(var_v)
    # rounding can push |cov| a hair past the Cauchy-Schwarz bound
    bound = sigma_r * sigma_v
    cov = float(np.clip(cov, -bound, bound))
    return FeatureVector(
        d_extent=float(cols.max() - cols.min()),
        r_extent=float(rows.max() - rows.min()),
        sigma_v=float(sigma_v),
        sigma_r=float(sigma_r),
        var_v=var_v,
        var_r=var_r,
        cov_rv=cov,
    )


def extract_features(mask: LevelMask, weighted: bool = True) -> FeatureVector:
    """Features over the retained pixels; weights are the pixel intensities
    when ``weighted`` (normalised to sum to one), uniform otherwise."""
    rows, cols = np.nonzero(mask.retained)
    if rows.size == 0:
        raise EmptyTargetError("mask has no retained pixels")
    weights = None
    if weighted:
        if mask.source is None:
            raise DataError("intensity weighting needs the source RD map")
        weights = mask.source.pixels[rows, cols].astype(np.float64)
    return features_from_points(rows, cols, weights)


def buffer_concat(frames: Sequence[FeatureVector | np.ndarray], b: int) -> np.ndarray:
    """Concatenate b consecutive frames' features in temporal order (length 7*b)."""
    if b < 1 or len(frames) != b:
        raise DataError(f"buffer of size {b} needs exactly {b} frames, got {len(frames)}")
    parts = [f.as_array() if isinstance(f, FeatureVector) else np.asarray(f, dtype=np.float64) for f in frames]
    for part in parts:
        if part.shape != (N_FEATURES,):
            raise DataError(f"each frame needs {N_FEATURES} features, got shape {part.shape}")
    return np.concatenate(parts)


def buffered_windows(frame_indices: Sequence[int], b: int) -> list[tuple[int, ...]]:
    """Stride-1 windows of b consecutive positions over one experiment's frames.

    ``frame_indices`` holds the frame numbers that produced features (frames
    without a target are absent); a window is kept only if its frame numbers are
    contiguous.
    """
    out = []
    for start in range(len(frame_indices) - b + 1):
        window = frame_indices[start : start + b]
        if window[-1] - window[0] == b - 1:
            out.append(tuple(range(start, start + b)))
    return out
