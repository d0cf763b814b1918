"""Multi-level Otsu thresholding and the 10-level noise cut on RD maps."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from rdclass.errors import DegenerateInputError
from rdclass.rdmap import RDMap

N_LEVELS = 10
N_DISCARDED = 5
_TIE_RTOL = 1e-12


def _class_terms(hist: np.ndarray) -> np.ndarray:
    """terms[a, b] = S(a, b)^2 / P(a, b) for the bin range [a, b), 0 when empty.

    P and S are the zeroth and first moments of the normalised histogram,
    taken from cumulative tables so each entry costs O(1).
    """
    total = hist.sum()
    prob = hist / total
    p_cum = np.concatenate(([0.0], np.cumsum(prob)))
    s_cum = np.concatenate(([0.0], np.cumsum(prob * np.arange(hist.size))))
    mass = p_cum[None, :] - p_cum[:, None]
    moment = s_cum[None, :] - s_cum[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(mass > 0, moment**2 / np.where(mass > 0, mass, 1.0), 0.0)
    return terms


def between_class_variance(hist, thresholds) -> float:
    """Between-class variance of the classes cut at ``thresholds``.

    A threshold t puts intensity t into the upper class.
    """
    hist = np.asarray(hist, dtype=np.float64)
    prob = hist / hist.sum()
    levels = np.arange(hist.size)
    mu = float(prob @ levels)
    edges = [0, *thresholds, hist.size]
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        w = prob[a:b].sum()
        if w > 0:
            total += (prob[a:b] @ levels[a:b]) ** 2 / w
    return total - mu * mu


def multi_otsu(histogram, k: int) -> tuple[int, ...]:
    """k thresholds maximising between-class variance.

    Exact over every strictly increasing tuple in [1, L-1] (L = number of bins),
    found by dynamic programming over the class-term table. Among equal optima
    the lexicographically smallest tuple is returned.
    """
    hist = np.asarray(histogram, dtype=np.float64)
    if hist.ndim != 1 or np.any(hist < 0) or not np.all(np.isfinite(hist)):
        raise ValueError("histogram must be a finite, non-negative 1-D vector")
    if hist.sum() <= 0:
        raise DegenerateInputError("histogram is empty")
    populated = int(np.count_nonzero(hist))
    if k < 1 or k > populated - 1:
        raise DegenerateInputError(
            f"cannot place {k} thresholds on a histogram with {populated} populated bins"
        )
    n = hist.size
    terms = _class_terms(hist)

    # best[m][a]: max sum of class terms splitting [a, n) into m classes
    best = np.full((k + 2, n + 1), -np.inf)
    best[1, :n] = terms[:n, n]
    idx = np.arange(n + 1)
    for m in range(2, k + 2):
        # first cut t must satisfy a < t <= n - m + 1
        valid = (idx[None, :] > idx[:, None]) & (idx[None, :] <= n - m + 1)
        candidates = np.where(valid, terms + best[m - 1][None, :], -np.inf)
        best[m, : n - m + 1] = candidates[: n - m + 1].max(axis=1)

    thresholds = []
    a = 0
    for m in range(k + 1, 1, -1):
        cuts = np.arange(a + 1, n - m + 2)
        values = terms[a, cuts] + best[m - 1, cuts]
        target = best[m, a]
        tol = _TIE_RTOL * max(abs(target), 1e-300)
        a = int(cuts[np.argmax(values >= target - tol)])
        thresholds.append(a)
    return tuple(thresholds)


@dataclass
class LevelMask:
    levels: np.ndarray  # (512, 512) uint8 level index 0..9
    retained: np.ndarray  # bool, level >= 5
    thresholds: tuple[int, ...]
    source: RDMap | None = None
    metadata: dict = field(default_factory=dict)

    def debug_pixels(self) -> np.ndarray:
        """Levels scaled by 28 for viewing as an 8-bit image."""
        return (self.levels.astype(np.uint16) * 28).astype(np.uint8)


def equal_width_levels(pixels: np.ndarray, n_levels: int = N_LEVELS) -> np.ndarray:
    return (pixels.astype(np.int32) * n_levels // 256).astype(np.uint8)


def quantize_and_denoise(rd: RDMap) -> LevelMask:
    """Quantise intensities into 10 Otsu levels and keep the upper 5.

    Maps with fewer than 10 distinct intensities fall back to equal-width
    levels (flagged in ``metadata['fallback']``); all-zero pixels are never kept.
    """
    pixels = rd.pixels
    hist = np.bincount(pixels.ravel(), minlength=256)
    if np.count_nonzero(hist) >= N_LEVELS:
        thresholds = multi_otsu(hist, N_LEVELS - 1)
        levels = np.searchsorted(np.asarray(thresholds), pixels, side="right").astype(np.uint8)
        fallback = False
    else:
        thresholds = tuple(int(np.ceil(256 * i / N_LEVELS)) for i in range(1, N_LEVELS))
        levels = equal_width_levels(pixels)
        fallback = True
    retained = (levels >= N_DISCARDED) & (pixels > 0)
    return LevelMask(levels, retained, thresholds, rd, {"fallback": fallback})
