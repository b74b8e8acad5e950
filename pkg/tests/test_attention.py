import math

import numpy as np
import pytest

from gazescan.attention import (
    GazeSample,
    HeatmapParams,
    box_diffuse,
    gaze_to_heatmap,
    generate_pseudo_heatmap,
    label_centroid,
    plateau_heatmap,
    pseudo_heatmap_batch,
    zero_heatmap,
)
from gazescan.errors import DomainError
from gazescan.geometry import ImageGeometry


def naive_box_conv(impulses: np.ndarray, k: int) -> np.ndarray:
    """Direct window-sum oracle for the all-ones kernel (anchor k//2)."""
    h, w = impulses.shape
    off = k // 2
    out = np.zeros((h, w))
    for i in range(h):
        for j in range(w):
            r0, r1 = max(0, i - off), min(h, i - off + k)
            c0, c1 = max(0, j - off), min(w, j - off + k)
            out[i, j] = impulses[r0:r1, c0:c1].sum()
    return out


def test_box_diffuse_matches_naive_oracle(rng):
    for _ in range(10):
        imp = (rng.random((40, 37)) < 0.05).astype(float)
        got = box_diffuse(imp, 30)
        want = naive_box_conv(imp, 30)
        np.testing.assert_array_equal(got, want)


def test_box_diffuse_small_kernels(rng):
    for k in (1, 2, 3, 5):
        imp = (rng.random((17, 23)) < 0.2).astype(float)
        np.testing.assert_array_equal(box_diffuse(imp, k), naive_box_conv(imp, k))


def test_degenerate_plateau_exact():
    geom = ImageGeometry(256, 256, 1.0)
    params = HeatmapParams(sigma_c=0.0, sigma_m=0.0, n_points=1)
    label = np.zeros((256, 256), dtype=bool)
    label[100, 100] = True
    hm = generate_pseudo_heatmap(label, params, seed=0, geom=geom).values
    assert hm.sum() == 900.0
    assert set(np.unique(hm)) == {0.0, 1.0}
    rows, cols = np.nonzero(hm)
    assert rows.min() == 86 and rows.max() == 115
    assert cols.min() == 86 and cols.max() == 115


def test_coincident_points_match_single():
    geom = ImageGeometry(256, 256, 1.0)
    label = np.zeros((256, 256), dtype=bool)
    label[100, 100] = True
    one = generate_pseudo_heatmap(
        label, HeatmapParams(sigma_c=0.0, sigma_m=0.0, n_points=1), seed=0, geom=geom
    )
    five = generate_pseudo_heatmap(
        label, HeatmapParams(sigma_c=0.0, sigma_m=0.0, n_points=5), seed=0, geom=geom
    )
    np.testing.assert_array_equal(one.values, five.values)


def test_translation_equivariance():
    geom = ImageGeometry(256, 256, 1.0)
    params = HeatmapParams(sigma_c=0.0, sigma_m=0.0, n_points=1)
    maps = {}
    for cx, cy in ((100, 100), (140, 90)):
        label = np.zeros((256, 256), dtype=bool)
        label[cy, cx] = True
        maps[(cx, cy)] = generate_pseudo_heatmap(label, params, seed=0, geom=geom).values
    shifted = np.roll(np.roll(maps[(100, 100)], 40, axis=1), -10, axis=0)
    np.testing.assert_array_equal(shifted, maps[(140, 90)])


def test_max_normalization():
    geom = ImageGeometry(128, 128, 1.0)
    label = np.zeros((128, 128), dtype=bool)
    label[60:70, 60:70] = True
    for seed in range(5):
        hm = generate_pseudo_heatmap(label, HeatmapParams(), seed=seed, geom=geom).values
        assert hm.max() == 1.0
        assert hm.min() >= 0.0


def test_mean_argmax_near_centroid():
    # Monte-Carlo check: the average of many sampled heatmaps peaks near the
    # label centroid; the bound was computed once from the default scatter
    # scales (3 * sqrt(15 + 25) ~ 19 px) and then frozen.
    geom = ImageGeometry(256, 256, 1.0)
    label = np.zeros((256, 256), dtype=bool)
    label[100, 100] = True
    acc = np.zeros((256, 256))
    for seed in range(100):
        acc += generate_pseudo_heatmap(label, HeatmapParams(), seed=seed, geom=geom).values
    r, c = np.unravel_index(np.argmax(acc), acc.shape)
    assert math.hypot(c - 100, r - 100) <= 3 * math.sqrt(15 + 25)


def test_label_centroid_and_empty():
    label = np.zeros((16, 16), dtype=bool)
    label[4, 6] = True
    label[8, 10] = True
    cx, cy = label_centroid(label)
    assert (cx, cy) == (8.0, 6.0)
    with pytest.raises(DomainError):
        label_centroid(np.zeros((8, 8), dtype=bool))


def test_pseudo_rejects_mismatched_grid():
    geom = ImageGeometry(64, 64, 1.0)
    label = np.zeros((32, 32), dtype=bool)
    label[4, 4] = True
    with pytest.raises(DomainError):
        generate_pseudo_heatmap(label, HeatmapParams(), seed=0, geom=geom)


def test_batch_zero_fraction_statistics():
    geom = ImageGeometry(64, 64, 1.0)
    label = np.zeros((64, 64), dtype=bool)
    label[30, 30] = True
    maps = pseudo_heatmap_batch([label] * 400, HeatmapParams(), seed=7, geom=geom)
    zeros = sum(1 for m in maps if m.kind == "zero")
    assert zeros == sum(1 for m in maps if m.values.sum() == 0)
    assert 0.05 <= zeros / 400 <= 0.15  # zero_fraction=0.10 within sampling noise


def test_zero_heatmap_is_all_zero(geom):
    z = zero_heatmap(geom)
    assert z.kind == "zero"
    assert z.values.sum() == 0.0
    assert z.values.shape == geom.shape()


# -- raw gaze ----------------------------------------------------------------


def test_gaze_empty_window_zero_kind(geom):
    hm = gaze_to_heatmap([], HeatmapParams(), geom)
    assert hm.kind == "zero"
    assert hm.values.sum() == 0.0


def test_gaze_invalid_only_gives_zero(geom):
    samples = [GazeSample(0, 100.0, 100.0, valid=False)]
    hm = gaze_to_heatmap(samples, HeatmapParams(), geom)
    assert hm.kind == "zero"


def test_gaze_single_center_sample_plateau():
    geom = ImageGeometry(256, 256, 1.0)
    hm = gaze_to_heatmap([GazeSample(0, 128.0, 128.0)], HeatmapParams(), geom).values
    assert hm.sum() == 900.0
    rows, cols = np.nonzero(hm)
    assert rows.min() == 114 and rows.max() == 143
    assert cols.min() == 114 and cols.max() == 143


def test_gaze_unequal_counts_scale_plateaus():
    geom = ImageGeometry(256, 256, 1.0)
    left = [GazeSample(t, 20.0, 128.0) for t in range(3)]
    right = [GazeSample(3, 220.0, 128.0)]
    hm = gaze_to_heatmap(left + right, HeatmapParams(), geom).values
    assert hm[128, 20] == 1.0
    assert hm[128, 220] == pytest.approx(1.0 / 3.0)
    # plateaus 200 px apart never overlap with a 30 px kernel
    assert hm[128, 120] == 0.0


def test_gaze_off_image_samples_dropped(geom):
    samples = [GazeSample(0, -50.0, 10.0), GazeSample(0, 10.0, 9999.0)]
    hm = gaze_to_heatmap(samples, HeatmapParams(), geom)
    assert hm.kind == "zero"


def test_plateau_heatmap_kind(geom):
    hm = plateau_heatmap((100.0, 80.0), HeatmapParams(), geom)
    assert hm.kind == "stabilized"
    assert hm.values.max() == 1.0


def test_gaze_stream_round_trip(tmp_path):
    from gazescan.attention import load_gaze_stream, save_gaze_stream

    samples = [
        GazeSample(0, 1.5, 2.25, True),
        GazeSample(1, 100.0, 200.0, False),
        GazeSample(5, 0.1, 0.2, True),
    ]
    p = tmp_path / "gaze.txt"
    save_gaze_stream(p, samples)
    back = load_gaze_stream(p)
    assert back == samples


def test_gaze_stream_rejects_malformed(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("0 1.0 2.0\n")
    with pytest.raises(DomainError):
        from gazescan.attention import load_gaze_stream

        load_gaze_stream(p)
