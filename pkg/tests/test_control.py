import math

import numpy as np
import pytest

from gazescan.control import (
    ControlParams,
    ProbeState,
    centerline_offset,
    confidence_centroid,
    correction_angle,
    servo_terms,
    step,
)
from gazescan.errors import DomainError
from gazescan.geometry import ImageGeometry
from gazescan.imaging import ConfidenceMap
from gazescan.phantom import SurfaceProfile
from gazescan.segmentation import SegmentationResult


def cmap_of(values, pitch=0.1):
    values = np.asarray(values, dtype=float)
    geom = ImageGeometry(values.shape[1], values.shape[0], pitch)
    return ConfidenceMap(values=values, geometry=geom)


# -- centroid -------------------------------------------------------------------


def test_symmetric_map_centroid_exact(rng):
    half = rng.random((12, 8))
    values = np.hstack([half, half[:, ::-1]])
    assert confidence_centroid(cmap_of(values)) == (16 - 1) / 2


def test_two_by_two_hand_case():
    # only the second row carries weight; its mass sits in the right column
    assert confidence_centroid(cmap_of([[1.0, 1.0], [0.0, 1.0]])) == 1.0


def test_uniform_map_centroid():
    assert confidence_centroid(cmap_of(np.ones((6, 9)))) == 4.0


def test_zero_mass_is_domain_error():
    values = np.zeros((4, 4))
    values[0, :] = 1.0  # row 0 carries no depth weight
    with pytest.raises(DomainError):
        confidence_centroid(cmap_of(values))


def test_centroid_scale_invariant(rng):
    values = rng.random((10, 10)) + 0.1
    a = confidence_centroid(cmap_of(values))
    b = confidence_centroid(cmap_of(4.2 * values))
    assert a == pytest.approx(b, abs=1e-12)


# -- offset and angle -------------------------------------------------------------


def test_offset_zero_at_center():
    geom = ImageGeometry(64, 64, 0.1)
    assert centerline_offset(geom.center_col, geom) == 0.0


def test_offset_ten_px():
    geom = ImageGeometry(64, 64, 0.1)
    assert centerline_offset(geom.center_col + 10, geom) == pytest.approx(1.0)


def test_offset_symmetric_map(rng):
    half = rng.random((12, 8))
    values = np.hstack([half, half[:, ::-1]])
    cm = cmap_of(values)
    assert centerline_offset(confidence_centroid(cm), cm.geometry) == 0.0


def test_correction_angle_cases():
    assert correction_angle(0.0, 100.0) == 0.0
    assert abs(correction_angle(100.0, 100.0) - math.pi / 4) <= 1e-12
    assert correction_angle(17.6, 100.0) == pytest.approx(0.17422, abs=1e-5)


def test_correction_angle_odd():
    for d in (0.5, 3.3, 17.6, 120.0):
        assert correction_angle(-d, 100.0) == -correction_angle(d, 100.0)


def test_correction_angle_requires_positive_radius():
    with pytest.raises(DomainError):
        correction_angle(1.0, 0.0)
    with pytest.raises(DomainError):
        correction_angle(1.0, -5.0)


def test_servo_terms_degenerate_map():
    values = np.zeros((4, 4))
    values[0, :] = 1.0
    assert servo_terms(cmap_of(values), ControlParams()) == (None, None, None)


# -- step -------------------------------------------------------------------------


FLAT = SurfaceProfile("flat", ((-30.0, 30.0), (-10.0, 140.0)))
NO_SELECTION = SegmentationResult(candidates=[], selected=None, attention_used="zero")


def shifted_cmap(geom, shift_px):
    # triangular lateral profile peaking shift_px right of center
    cols = np.arange(geom.width_px, dtype=float)
    peak = geom.center_col + shift_px
    lateral = np.clip(1.0 - np.abs(cols - peak) / geom.width_px, 0.01, None)
    depth = np.linspace(1.0, 0.2, geom.depth_px)[:, None]
    return ConfidenceMap(values=depth * lateral[None, :], geometry=geom)


def test_step_requires_positive_dt():
    geom = ImageGeometry(64, 64, 0.15)
    probe = ProbeState(0.0, 0.0, -2.5, 0.0)
    with pytest.raises(DomainError):
        step(probe, shifted_cmap(geom, 0), NO_SELECTION, FLAT, ControlParams(), 0.0)


def test_step_deadband_freezes_theta():
    geom = ImageGeometry(64, 64, 0.15)
    probe = ProbeState(0.0, 0.0, -2.5, 0.05)
    cm = shifted_cmap(geom, 1)  # 0.15 mm offset, inside the 0.3 mm deadband
    out = step(probe, cm, NO_SELECTION, FLAT, ControlParams(scan_speed_mm_s=0.0), 1 / 30)
    assert out.theta == probe.theta


def test_step_theta_moves_toward_offset():
    geom = ImageGeometry(64, 64, 0.15)
    probe = ProbeState(0.0, 0.0, -2.5, 0.0)
    cm = shifted_cmap(geom, 12)  # +1.8 mm offset
    out = step(probe, cm, NO_SELECTION, FLAT, ControlParams(scan_speed_mm_s=0.0), 1 / 30)
    assert out.theta > 0


def test_step_correction_off_freezes_theta():
    geom = ImageGeometry(64, 64, 0.15)
    probe = ProbeState(0.0, 0.0, -2.5, 0.1)
    cm = shifted_cmap(geom, 12)
    params = ControlParams(scan_speed_mm_s=0.0, correction=False)
    out = step(probe, cm, NO_SELECTION, FLAT, params, 1 / 30)
    assert out.theta == probe.theta


def test_step_theta_clamped():
    geom = ImageGeometry(64, 64, 0.15)
    probe = ProbeState(0.0, 0.0, -2.5, 0.349)
    cm = shifted_cmap(geom, 30)
    params = ControlParams(scan_speed_mm_s=0.0, k_theta=100.0)
    out = step(probe, cm, NO_SELECTION, FLAT, params, 1 / 30)
    assert out.theta == pytest.approx(0.35)


def test_step_advances_y():
    geom = ImageGeometry(64, 64, 0.15)
    probe = ProbeState(0.0, 0.0, -2.5, 0.0)
    out = step(probe, shifted_cmap(geom, 0), NO_SELECTION, FLAT, ControlParams(), 1 / 30)
    assert out.y == pytest.approx(10.0 / 30)


def test_step_x_frozen_without_selection():
    geom = ImageGeometry(64, 64, 0.15)
    probe = ProbeState(1.0, 0.0, -2.5, 0.0)
    out = step(probe, shifted_cmap(geom, 0), NO_SELECTION, FLAT, ControlParams(), 1 / 30)
    assert out.x == probe.x


def test_step_x_tracks_selected_candidate():
    geom = ImageGeometry(64, 64, 0.15)
    from gazescan.segmentation import Candidate

    mask = np.zeros(geom.shape(), dtype=bool)
    mask[30:36, 40:46] = True
    cand = Candidate(mask=mask, centroid_px=(42.5, 32.5), area_px=36, branch_id=1)
    seg = SegmentationResult(candidates=[cand], selected=0, attention_used="stabilized")
    probe = ProbeState(0.0, 0.0, -2.5, 0.0)
    out = step(probe, shifted_cmap(geom, 0), seg, FLAT, ControlParams(), 1 / 30)
    want = 1.2 * (42.5 - geom.center_col) * 0.15 / 30
    assert out.x == pytest.approx(want)


def test_step_force_settles_to_target():
    geom = ImageGeometry(64, 64, 0.15)
    params = ControlParams(scan_speed_mm_s=0.0)
    probe = ProbeState(0.0, 0.0, 1.0, 0.0)  # hovering 1 mm above the skin
    cm = shifted_cmap(geom, 0)
    for _ in range(120):  # 4 s, several spring-damper time constants
        probe = step(probe, cm, NO_SELECTION, FLAT, params, 1 / 30)
    assert probe.force == pytest.approx(5.0, rel=0.02)
    assert probe.z == pytest.approx(-2.5, abs=0.1)
