"""Shift-normalised Doppler/range profiles for the ensemble learners.

The map is averaged down to a Doppler profile and a range profile. Each profile
is rolled so its power centroid lands on index 256, then the outer 128 bins on
each side are dropped; the two 256-bin halves form one 512-vector.
"""

from __future__ import annotations

import numpy as np

from rdclass.errors import EmptyTargetError
from rdclass.rdmap import NFFT, RDMap

CENTER = NFFT // 2
CROP = 128


def profiles(rd: RDMap | np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(doppler_profile, range_profile): column means and row means of the pixels."""
    pixels = rd.pixels if isinstance(rd, RDMap) else np.asarray(rd)
    pixels = pixels.astype(np.float64)
    return pixels.mean(axis=0), pixels.mean(axis=1)


def centroid_index(profile: np.ndarray) -> int:
    profile = np.asarray(profile, dtype=np.float64)
    total = profile.sum()
    if not total > 0:
        raise EmptyTargetError("profile has no energy")
    centroid = (np.arange(profile.size) @ profile) / total
    return int(np.floor(centroid + 0.5))


def center_shift(profile: np.ndarray) -> np.ndarray:
    profile = np.asarray(profile, dtype=np.float64)
    return np.roll(profile, profile.size // 2 - centroid_index(profile))


def crop_concat(doppler: np.ndarray, range_: np.ndarray) -> np.ndarray:
    return np.concatenate((doppler[CROP : NFFT - CROP], range_[CROP : NFFT - CROP]))


def restructure(rd: RDMap | np.ndarray, normalize: bool = False) -> np.ndarray:
    """512-element profile vector; ``normalize`` scales each profile to unit sum."""
    dp, rp = profiles(rd)
    dp, rp = center_shift(dp), center_shift(rp)
    if normalize:
        dp, rp = dp / dp.sum(), rp / rp.sum()
    return crop_concat(dp, rp)


def retained_energy_fraction(rd: RDMap | np.ndarray) -> float:
    """Share of the shifted profiles' total mass that survives the crop."""
    dp, rp = profiles(rd)
    dp, rp = center_shift(dp), center_shift(rp)
    return float(crop_concat(dp, rp).sum() / (dp.sum() + rp.sum()))
