import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import otsu_exhaustive
from rdclass.errors import DegenerateInputError
from rdclass.rdmap import RDMap
from rdclass.thresholding import (
    N_LEVELS,
    between_class_variance,
    equal_width_levels,
    multi_otsu,
    quantize_and_denoise,
)


def _rd(pixels):
    return RDMap(np.asarray(pixels, dtype=np.uint8), 1.0, 1.0)


def test_bimodal_single_threshold():
    hist = np.zeros(256)
    hist[10], hist[200] = 500, 300
    (t,) = multi_otsu(hist, 1)
    assert 11 <= t <= 200
    assert t == 11  # flat optimum: the smallest cut wins


def test_three_blocks_two_thresholds():
    hist = np.zeros(32)
    hist[2:5], hist[14:17], hist[27:30] = 10, 10, 10
    assert multi_otsu(hist, 2) == (5, 17)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_matches_exhaustive_search(k, rng):
    for _ in range(60):
        hist = rng.integers(0, 50, 32) * (rng.random(32) < 0.7)
        if np.count_nonzero(hist) <= k:
            continue
        assert multi_otsu(hist, k) == otsu_exhaustive(hist, k)


def test_between_class_variance_agrees_with_oracle_definition(rng):
    hist = rng.integers(1, 30, 16).astype(float)
    p = hist / hist.sum()
    mu = (p * np.arange(16)).sum()
    t = (4, 9)
    direct = 0.0
    for a, b in ((0, 4), (4, 9), (9, 16)):
        w = p[a:b].sum()
        direct += w * ((p[a:b] * np.arange(a, b)).sum() / w - mu) ** 2
    assert between_class_variance(hist, t) == pytest.approx(direct, rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 20), min_size=12, max_size=12), st.integers(1, 3))
def test_optimum_dominates_random_tuples(counts, k):
    hist = np.array(counts, dtype=float)
    if np.count_nonzero(hist) <= k:
        return
    best = between_class_variance(hist, multi_otsu(hist, k))
    rng = np.random.default_rng(0)
    for _ in range(20):
        t = tuple(sorted(rng.choice(np.arange(1, 12), k, replace=False)))
        assert between_class_variance(hist, t) <= best + 1e-12


def test_invalid_histograms():
    with pytest.raises(DegenerateInputError):
        multi_otsu(np.zeros(8), 1)
    with pytest.raises(DegenerateInputError):
        multi_otsu(np.array([0, 5, 0, 0]), 1)
    with pytest.raises(ValueError):
        multi_otsu(np.array([1, -1, 3]), 1)


def test_ten_levels_on_rich_map(rng):
    px = rng.integers(0, 256, (512, 512))
    mask = quantize_and_denoise(_rd(px))
    assert len(mask.thresholds) == N_LEVELS - 1
    assert mask.levels.max() == N_LEVELS - 1 and mask.levels.min() == 0
    assert not mask.metadata["fallback"]
    # a threshold value lands in the upper class
    t = mask.thresholds[4]
    assert np.all(mask.levels[px == t] == 5)
    assert np.array_equal(mask.retained, mask.levels >= 5)
    assert np.all(np.diff(mask.thresholds) > 0)


def test_retained_is_upper_half_of_levels(rng):
    px = np.zeros((512, 512), np.uint8)
    px[200:220, 250:262] = rng.integers(100, 256, (20, 12))
    px[:5] = rng.integers(1, 40, (5, 512))
    mask = quantize_and_denoise(_rd(px))
    assert mask.retained[200:220, 250:262].any()
    assert not mask.retained[px == 0].any()


def test_fallback_for_few_intensities():
    px = np.zeros((512, 512), np.uint8)
    px[10, 10], px[20, 20], px[30, 30] = 255, 128, 40
    mask = quantize_and_denoise(_rd(px))
    assert mask.metadata["fallback"]
    assert np.array_equal(mask.levels, equal_width_levels(px))
    assert mask.retained[10, 10] and mask.retained[20, 20] and not mask.retained[30, 30]


def test_all_zero_map_keeps_nothing():
    mask = quantize_and_denoise(_rd(np.zeros((512, 512))))
    assert not mask.retained.any()


def test_debug_pixels():
    mask = quantize_and_denoise(_rd(np.full((512, 512), 255)))
    assert mask.debug_pixels().max() == 9 * 28
