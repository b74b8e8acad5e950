import dataclasses
import json

import numpy as np
import pytest

from gazescan import runtime
from gazescan.attention import GazeSample, save_gaze_stream
from gazescan.errors import (
    RecordCorruptError,
    RecordVersionError,
    ReplayMismatchError,
)
from gazescan.scenario import GazeConfig, preset


def short(name, ticks):
    sc = preset(name)
    sc.duration_ticks = ticks
    return sc


# -- run ------------------------------------------------------------------------


def test_zero_duration_gives_header_only(tmp_path):
    rec = runtime.run(short("flat_centered", 1), ticks=0)
    assert rec.ticks == []
    assert rec.header["record_schema"] == runtime.RECORD_SCHEMA
    assert rec.header["duration_ticks"] == 0
    p = tmp_path / "empty.jsonl"
    rec.save(p)
    back = runtime.RunRecord.load(p)
    assert back.ticks == []
    m = runtime.metrics(back)
    assert m["ticks"] == 0
    assert m["d_c_abs_mean_mm"] is None
    assert m["dice_per_branch"] == {}
    assert m["switches"] == []


def test_headless_determinism():
    sc = short("lateral_offset", 50)
    a = runtime.run(sc)
    b = runtime.run(sc)
    assert a.payload_lines() == b.payload_lines()
    assert a.header["scenario_sha256"] == b.header["scenario_sha256"]


def test_seed_changes_stream():
    sc1 = short("lateral_offset", 30)
    sc2 = short("lateral_offset", 30)
    sc2.seed += 1
    assert runtime.run(sc1).payload_lines() != runtime.run(sc2).payload_lines()


def test_flat_scene_settles_to_target_force():
    rec = runtime.run(short("flat_centered", 150))
    tail = rec.ticks[-30:]
    for t in tail:
        assert t["telemetry"]["force_n"] == pytest.approx(5.0, rel=0.02)
        assert t["telemetry"]["theta_rad"] == 0.0  # centered scene, deadband holds
    xs = {t["telemetry"]["x_mm"] for t in rec.ticks}
    assert xs == {0.0}  # no gaze, no selection, no lateral motion


def test_lateral_offset_centers_within_100_ticks():
    rec = runtime.run(short("lateral_offset", 120))
    # servo drives the probe over the vessel at x = +6 mm
    for t in rec.ticks[100:]:
        assert abs(t["telemetry"]["x_mm"] - 6.0) < 0.5


def test_scripted_gaze_file_drives_selection(tmp_path):
    sc = short("lateral_offset", 40)
    # vessel starts 40 px right of center; stare at it explicitly
    samples = [GazeSample(t, 167.5, 50.0) for t in range(40)]
    path = tmp_path / "stare.txt"
    save_gaze_stream(path, samples)
    sc.gaze = GazeConfig(source="file", path=str(path))
    rec = runtime.run(sc)
    assert any(t["selected_id"] is not None for t in rec.ticks[2:])
    got = [tuple(g) for g in rec.ticks[0]["gaze"]]
    assert got == [(0, 167.5, 50.0, 1)]


def test_correction_off_freezes_theta_but_logs_terms():
    sc = short("cylinder_correction", 40)
    sc.control = dataclasses.replace(sc.control, correction=False)
    rec = runtime.run(sc)
    thetas = {t["telemetry"]["theta_rad"] for t in rec.ticks}
    assert thetas == {0.34}
    assert all(t["telemetry"]["theta_c_rad"] is not None for t in rec.ticks)


# -- record files -----------------------------------------------------------------


def test_record_save_load_round_trip(tmp_path):
    rec = runtime.run(short("flat_centered", 20))
    p = tmp_path / "run.jsonl"
    rec.save(p)
    back = runtime.RunRecord.load(p)
    assert back.payload_lines() == rec.payload_lines()
    assert back.footer is not None and "tick_ms_mean" in back.footer


def test_record_rejects_truncation(tmp_path):
    rec = runtime.run(short("flat_centered", 20))
    p = tmp_path / "run.jsonl"
    rec.save(p)
    lines = p.read_text().splitlines()
    p.write_text("\n".join(lines[:-3]) + "\n")  # drop footer and two ticks
    with pytest.raises(RecordCorruptError):
        runtime.RunRecord.load(p)


def test_record_rejects_garbage_line(tmp_path):
    rec = runtime.run(short("flat_centered", 5))
    p = tmp_path / "run.jsonl"
    rec.save(p)
    lines = p.read_text().splitlines()
    lines[2] = '{"broken'
    p.write_text("\n".join(lines) + "\n")
    with pytest.raises(RecordCorruptError):
        runtime.RunRecord.load(p)


def test_record_rejects_foreign_schema(tmp_path):
    rec = runtime.run(short("flat_centered", 5))
    p = tmp_path / "run.jsonl"
    rec.save(p)
    lines = p.read_text().splitlines()
    header = json.loads(lines[0])
    header["record_schema"] = 99
    lines[0] = json.dumps(header)
    p.write_text("\n".join(lines) + "\n")
    with pytest.raises(RecordVersionError):
        runtime.RunRecord.load(p)


def test_record_rejects_missing_header(tmp_path):
    p = tmp_path / "run.jsonl"
    p.write_text('{"type":"tick","tick":0}\n')
    with pytest.raises(RecordCorruptError):
        runtime.RunRecord.load(p)


# -- replay -----------------------------------------------------------------------


def test_replay_reproduces_run():
    rec = runtime.run(short("lateral_offset", 40))
    fresh = runtime.replay(rec)
    assert fresh.payload_lines() == rec.payload_lines()


def test_replay_detects_tampering():
    rec = runtime.run(short("lateral_offset", 30))
    rec.ticks[17]["telemetry"]["x_mm"] += 1e-9
    with pytest.raises(ReplayMismatchError):
        runtime.replay(rec)


# -- reconstruction -----------------------------------------------------------------


def test_reconstruct_straight_vessel_under_1mm():
    rec = runtime.run(short("straight", 240))
    paths = runtime.reconstruct(rec)
    assert len(paths) >= 1
    assert runtime.reconstruction_rms_mm(rec, paths) < 1.0
    for p in paths:
        ys = p.points_mm[:, 1]
        assert np.all(np.diff(ys) >= 0)  # ordered by scan position


def test_reconstruct_no_selection_is_empty():
    rec = runtime.run(short("flat_centered", 30))  # no gaze, nothing selected
    assert runtime.reconstruct(rec) == []


def test_reconstruct_branch_switch_splits_paths(bifurcation_record):
    rec, _elapsed = bifurcation_record
    paths = runtime.reconstruct(rec)
    ids = [p.target_id for p in paths]
    assert len(set(ids)) == 2  # trunk-inherited id and the switched-to id


def test_export_formats(tmp_path):
    rec = runtime.run(short("straight", 60))
    paths = runtime.reconstruct(rec)
    csv_p = tmp_path / "out.csv"
    runtime.export_reconstruction(paths, "csv", csv_p)
    rows = csv_p.read_text().splitlines()
    assert rows[0] == "target_id,x_mm,y_mm,z_mm"
    assert len(rows) == 1 + sum(len(p.points_mm) for p in paths)
    cells = rows[1].split(",")
    assert int(cells[0]) == paths[0].target_id
    assert [float(c) for c in cells[1:]] == pytest.approx(paths[0].points_mm[0])
    mesh_p = tmp_path / "out.xyz"
    runtime.export_reconstruction(paths, "mesh-points", mesh_p)
    lines = mesh_p.read_text().splitlines()
    assert lines[0] == f"# target {paths[0].target_id}"
    assert [float(v) for v in lines[1].split()] == pytest.approx(paths[0].points_mm[0])


# -- metrics ----------------------------------------------------------------------


def synthetic_record(d_cs):
    ticks = []
    for i, d in enumerate(d_cs):
        ticks.append(
            {
                "type": "tick",
                "tick": i,
                "telemetry": {"d_c_mm": d},
                "gt": {},
                "selected_id": None,
                "target_id": None,
                "gaze_winner_id": None,
                "candidates": [],
            }
        )
    header = {"type": "header", "record_schema": runtime.RECORD_SCHEMA, "duration_ticks": len(ticks)}
    return runtime.RunRecord(header=header, ticks=ticks)


def test_metrics_constant_offset():
    m = runtime.metrics(synthetic_record([1.0] * 25))
    assert m["d_c_abs_mean_mm"] == pytest.approx(1.0)
    assert m["d_c_abs_std_mm"] == pytest.approx(0.0)


def test_metrics_correction_contrast(cylinder_records):
    on, off, _elapsed = cylinder_records
    m_on = runtime.metrics(on)
    m_off = runtime.metrics(off)
    assert m_on["d_c_abs_mean_mm"] < m_off["d_c_abs_mean_mm"]
    assert m_off["d_c_abs_mean_mm"] > 5.0


def test_metrics_reports_timing():
    rec = runtime.run(short("flat_centered", 10))
    m = runtime.metrics(rec)
    assert m["tick_ms_mean"] > 0
    assert m["tick_ms_max"] >= m["tick_ms_mean"]
