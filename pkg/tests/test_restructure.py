import numpy as np
import pytest

from rdclass.errors import EmptyTargetError
from rdclass.radar_design import SPEED_OF_LIGHT
from rdclass.rdmap import compute_rd_map
from rdclass.restructure import (
    center_shift,
    centroid_index,
    crop_concat,
    profiles,
    restructure,
    retained_energy_fraction,
)
from rdclass.simulator import GaitParams, RobotParams, Scatterer, human_scatterers, point_scatterer_cube, simulate_human, simulate_robot

RANGE_BIN = SPEED_OF_LIGHT * 67 / (2 * 2e9 * 512)
DOPPLER_BIN = SPEED_OF_LIGHT / (2 * 25e9 * 0.5e-3 * 512)


def test_constant_map():
    dp, rp = profiles(np.full((512, 512), 7, np.uint8))
    assert np.all(dp == 7) and np.all(rp == 7)


def test_single_pixel_profile():
    px = np.zeros((512, 512), np.uint8)
    px[100, 300] = 255
    dp, rp = profiles(px)
    assert dp[300] == 255 / 512 and np.count_nonzero(dp) == 1
    assert rp[100] == 255 / 512 and np.count_nonzero(rp) == 1


def test_profile_sums(rng):
    px = rng.integers(0, 256, (512, 512), dtype=np.uint8)
    dp, rp = profiles(px)
    total = px.astype(np.int64).sum() / 512
    assert dp.sum() == pytest.approx(total, rel=1e-12)
    assert rp.sum() == pytest.approx(total, rel=1e-12)


def test_delta_moves_to_center():
    p = np.zeros(512)
    p[100] = 3.0
    out = center_shift(p)
    assert out[256] == 3.0 and np.count_nonzero(out) == 1
    assert np.array_equal(center_shift(out), out)


def test_round_half_up():
    p = np.zeros(512)
    p[10], p[11] = 1.0, 1.0  # centroid 10.5 -> 11
    assert centroid_index(p) == 11
    assert centroid_index(np.ones(512)) == 256  # 255.5 -> 256


def test_shifted_copy_gives_same_output(rng):
    p = np.zeros(512)
    p[200:260] = rng.random(60)
    for s in (-150, -3, 1, 77, 200):
        assert np.array_equal(center_shift(np.roll(p, s)), center_shift(p))


def test_centered_output_centroid(rng):
    p = np.zeros(512)
    p[30:90] = rng.random(60)
    out = center_shift(p)
    c = (np.arange(512) @ out) / out.sum()
    assert abs(c - 256) <= 1


def test_zero_profile():
    with pytest.raises(EmptyTargetError):
        center_shift(np.zeros(512))


def test_crop_concat():
    d, r = np.zeros(512), np.zeros(512)
    d[256] = r[256] = 1
    out = crop_concat(d, r)
    assert out.shape == (512,) and np.flatnonzero(out).tolist() == [128, 384]
    assert np.all(crop_concat(np.ones(512), np.ones(512)) == 1)


def test_restructure_normalize(rng):
    px = np.zeros((512, 512), np.uint8)
    px[100:140, 200:260] = rng.integers(1, 256, (40, 60))
    v = restructure(px, normalize=True)
    assert v[:256].sum() == pytest.approx(1.0) and v[256:].sum() == pytest.approx(1.0)
    assert np.all(restructure(px) >= 0)


def test_energy_retained_on_noiseless_frames(radar):
    frames = simulate_human(radar, GaitParams(snr_db=None), 6, 0).frames
    frames += simulate_robot(radar, RobotParams(snr_db=None), 3, 0).frames
    for cube in frames:
        assert retained_energy_fraction(compute_rd_map(cube)) >= 0.99


def test_shift_invariance_small(radar, rng):
    for _ in range(5):
        gait = GaitParams(snr_db=None, gait_phase=float(rng.random()))
        base, _ = human_scatterers(gait, 2.0, 0.032)
        q, s = int(rng.integers(-8, 9)), int(rng.integers(-30, 31))
        moved = [Scatterer(x.range + q * RANGE_BIN, x.velocity + s * DOPPLER_BIN, x.amplitude) for x in base]
        a = restructure(compute_rd_map(point_scatterer_cube(radar, base, range_migration=False)))
        b = restructure(compute_rd_map(point_scatterer_cube(radar, moved, range_migration=False)))
        assert np.max(np.abs(a - b)) <= 1e-9
