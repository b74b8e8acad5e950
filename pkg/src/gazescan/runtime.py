"""Headless fixed-rate simulation loop, run records, replay, reconstruction.

One tick: slice phantom -> contact -> render -> confidence -> candidate
detection/tracking -> gaze -> intention -> attention-gated selection ->
control step -> telemetry. Headless runs do no wall-clock pacing and are
bit-deterministic for a given scenario; per-tick wall timings go only into
the record footer so payloads stay comparable across machines.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import control as ctl
from .attention import GazeSample, gaze_to_heatmap, load_gaze_stream
from .errors import (
    DomainError,
    RecordCorruptError,
    RecordVersionError,
    ReplayMismatchError,
    ScenarioValidationError,
)
from .imaging import ContactModel, confidence_map, render_bmode
from .intention import HistoryBuffer, TickEntry, reset as intent_reset, update as intent_update
from .phantom import branch_point_at_y, contact_gaps, cross_section, rasterize_labels
from .scenario import Scenario, scenario_from_dict
from .segmentation import CandidateTracker, detect_candidates, dice, segment

RECORD_SCHEMA = 1


def _digest(arr: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(arr, dtype="<f8").tobytes()).hexdigest()


def canonical_line(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


# ---------------------------------------------------------------------------
# Gaze drivers


class NoGaze:
    def samples_for_tick(self, tick, cs, geom):
        return []


class FileGaze:
    """Scripted samples from a line-delimited stream; t is the tick index."""

    def __init__(self, path):
        self._by_tick: dict[int, list[GazeSample]] = {}
        for s in load_gaze_stream(path):
            self._by_tick.setdefault(s.t, []).append(s)

    def samples_for_tick(self, tick, cs, geom):
        return self._by_tick.get(tick, [])


class FollowGaze:
    """Closed-loop script: look where a named branch appears on screen.

    Projects the branch's lumen center for the current tick, with seeded
    jitter and dropout. Mimics an operator tracking a vessel of interest.
    """

    def __init__(self, cfg, seed):
        self.cfg = cfg
        self.seed = seed
        self.schedule = sorted(cfg.schedule, key=lambda s: s.from_tick)

    def _branch_at(self, tick):
        branch = None
        for seg in self.schedule:
            if tick >= seg.from_tick:
                branch = seg.branch
        return branch

    def samples_for_tick(self, tick, cs, geom):
        branch = self._branch_at(tick)
        if branch is None:
            return []
        lum = next((l for l in cs.lumens if l.branch_id == branch), None)
        if lum is None:
            return []
        col = float(geom.mm_to_col(lum.center_mm[0]))
        row = float(geom.mm_to_row(lum.center_mm[1]))
        rng = np.random.default_rng((self.seed, 0x6A5E, tick))
        out = []
        for _ in range(self.cfg.samples_per_tick):
            jx, jy = self.cfg.jitter_px * rng.standard_normal(2)
            valid = bool(rng.random() >= self.cfg.dropout)
            out.append(GazeSample(t=tick, x=col + jx, y=row + jy, valid=valid))
        return out


class ReplayGaze:
    """Feeds back the samples stored in a record."""

    def __init__(self, ticks):
        self._by_tick = {
            t["tick"]: [GazeSample(int(g[0]), float(g[1]), float(g[2]), bool(g[3]))
                        for g in t.get("gaze", [])]
            for t in ticks
        }

    def samples_for_tick(self, tick, cs, geom):
        return self._by_tick.get(tick, [])


def _make_gaze_driver(scenario: Scenario):
    cfg = scenario.gaze
    if cfg.source == "none" or cfg.source == "live":
        return NoGaze()
    if cfg.source == "file":
        return FileGaze(cfg.path)
    if cfg.source == "follow":
        return FollowGaze(cfg, scenario.seed)
    raise ScenarioValidationError([f"gaze.source: unsupported source {cfg.source!r}"])


# ---------------------------------------------------------------------------
# Simulation loop


@dataclass
class TickOutput:
    tick: int
    frame: object
    cmap: object
    raw_gaze: object
    stabilized: object
    candidates: list
    seg: object
    probe: ctl.ProbeState  # pose the frame was rendered at
    record_line: dict


class SimulationLoop:
    """Owns all mutable state of one scan session."""

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self.geom = scenario.geometry
        self.probe = scenario.initial_probe()
        self.tracker = CandidateTracker()
        self.history = HistoryBuffer(scenario.intention.window_ticks)
        self.intent = intent_reset(scenario.intention.window_ticks)
        self.control_params = dataclasses.replace(scenario.control)
        self.gaze_driver = _make_gaze_driver(scenario)
        self.tick_index = 0

    def set_correction(self, enabled: bool) -> None:
        self.control_params = dataclasses.replace(self.control_params, correction=enabled)

    def frame_seed(self, tick: int) -> int:
        return int(np.random.SeedSequence((self.scenario.seed, 0xF7A3E, tick)).generate_state(1)[0])

    def tick(self, injected_gaze: Optional[list[GazeSample]] = None) -> TickOutput:
        sc = self.scenario
        t = self.tick_index
        probe = self.probe

        cs = cross_section(sc.vessels, probe, self.geom)
        gaps, _pen = contact_gaps(sc.surface, probe, self.geom)
        contact = ContactModel(gaps_mm=gaps, gap_limit_mm=sc.gap_limit_mm)
        frame = render_bmode(cs, contact, self.geom, self.frame_seed(t), sc.noise)
        cmap = confidence_map(frame)

        candidates = detect_candidates(frame, cmap=cmap, params=sc.segmentation)
        candidates = self.tracker.update(candidates)

        if injected_gaze is None:
            gaze_samples = self.gaze_driver.samples_for_tick(t, cs, self.geom)
        else:
            gaze_samples = injected_gaze
        raw_gaze = gaze_to_heatmap(gaze_samples, sc.heatmap, self.geom)

        self.history.push(TickEntry(gaze=raw_gaze, candidates=candidates))
        self.intent, stabilized = intent_update(
            self.history, self.intent, sc.intention, self.geom, sc.heatmap
        )

        seg = segment(frame, stabilized, candidates=candidates, cmap=cmap, params=sc.segmentation)

        x_c, d_c, theta_c = ctl.servo_terms(cmap, self.control_params)
        new_probe = ctl.step(probe, cmap, seg, sc.surface, self.control_params, sc.dt)

        gt_masks = rasterize_labels(cs, self.geom)
        gt_dice = None
        gt_branch = None
        if seg.selected is not None:
            sel_mask = seg.candidates[seg.selected].mask
            best = -1.0
            for branch_id, mask in gt_masks:
                d = dice(sel_mask, mask)
                if d > best:
                    best, gt_branch = d, branch_id
            gt_dice = best if best >= 0 else None

        gaze_winner = None
        if raw_gaze.kind != "zero" and candidates:
            masses = {
                c.branch_id: float(raw_gaze.values[c.dilated(sc.intention.dilate_px)].sum())
                for c in candidates
            }
            top = max(masses.values())
            if top > 0:
                gaze_winner = min(i for i, m in masses.items() if m == top)

        line = {
            "type": "tick",
            "tick": t,
            "frame_sha256": _digest(frame.intensity),
            "raw_gaze_sha256": _digest(raw_gaze.values),
            "attention_sha256": _digest(stabilized.values),
            "gaze": [[s.t, s.x, s.y, int(s.valid)] for s in gaze_samples],
            "candidates": [
                {
                    "id": c.branch_id,
                    "centroid_px": [c.centroid_px[0], c.centroid_px[1]],
                    "area_px": c.area_px,
                }
                for c in candidates
            ],
            "selected_id": seg.candidates[seg.selected].branch_id if seg.selected is not None else None,
            "attention_used": seg.attention_used,
            "evidence": {str(k): v for k, v in sorted(self.intent.evidence.items())},
            "target_id": self.intent.target,
            "gaze_winner_id": gaze_winner,
            "telemetry": {
                "x_mm": probe.x,
                "y_mm": probe.y,
                "z_mm": probe.z,
                "theta_rad": probe.theta,
                "force_n": probe.force,
                "x_c_px": x_c,
                "d_c_mm": d_c,
                "theta_c_rad": theta_c,
            },
            "gt": {
                "lumen_count": len(cs.lumens),
                "branch": gt_branch,
                "dice": gt_dice,
            },
        }

        out = TickOutput(
            tick=t,
            frame=frame,
            cmap=cmap,
            raw_gaze=raw_gaze,
            stabilized=stabilized,
            candidates=candidates,
            seg=seg,
            probe=probe,
            record_line=line,
        )
        self.probe = new_probe
        self.tick_index += 1
        return out


# ---------------------------------------------------------------------------
# Run records


@dataclass
class RunRecord:
    header: dict
    ticks: list[dict]
    footer: Optional[dict] = None

    def scenario(self) -> Scenario:
        return scenario_from_dict(self.header["scenario"])

    def payload_lines(self) -> list[str]:
        return [canonical_line(t) for t in self.ticks]

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(canonical_line(self.header) + "\n")
            for t in self.ticks:
                fh.write(canonical_line(t) + "\n")
            if self.footer is not None:
                fh.write(canonical_line(self.footer) + "\n")

    @classmethod
    def load(cls, path) -> "RunRecord":
        lines = []
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, 1):
                raw = raw.strip()
                if not raw:
                    continue
                try:
                    lines.append(json.loads(raw))
                except json.JSONDecodeError as exc:
                    raise RecordCorruptError(f"{path}:{lineno}: invalid JSON ({exc})")
        if not lines or lines[0].get("type") != "header":
            raise RecordCorruptError(f"{path}: missing header line")
        header = lines[0]
        version = header.get("record_schema")
        if version != RECORD_SCHEMA:
            raise RecordVersionError(
                f"{path}: record schema {version} unsupported (expected {RECORD_SCHEMA})"
            )
        footer = None
        body = lines[1:]
        if body and body[-1].get("type") == "footer":
            footer = body[-1]
            body = body[:-1]
        for i, t in enumerate(body):
            if t.get("type") != "tick" or t.get("tick") != i:
                raise RecordCorruptError(f"{path}: tick line {i} malformed or out of order")
        expected = header.get("duration_ticks")
        if expected is not None and len(body) != expected:
            raise RecordCorruptError(
                f"{path}: {len(body)} tick lines, header declares {expected} (truncated?)"
            )
        return cls(header=header, ticks=body, footer=footer)


def run(
    scenario: Scenario,
    ticks: Optional[int] = None,
    gaze_driver=None,
    collect_wall_times: bool = True,
) -> RunRecord:
    """Headless run of a scenario. Bit-deterministic tick payloads."""
    loop = SimulationLoop(scenario)
    if gaze_driver is not None:
        loop.gaze_driver = gaze_driver
    n = ticks if ticks is not None else scenario.duration_ticks
    header = {
        "type": "header",
        "record_schema": RECORD_SCHEMA,
        "scenario": scenario.to_dict(),
        "scenario_sha256": scenario.sha256(),
        "tick_rate_hz": scenario.tick_rate_hz,
        "duration_ticks": n,
        "created_unix": time.time(),  # wall clock; excluded from comparisons
    }
    tick_lines = []
    wall_ms = []
    for _ in range(n):
        t0 = time.perf_counter()
        out = loop.tick()
        wall_ms.append((time.perf_counter() - t0) * 1e3)
        tick_lines.append(out.record_line)
    footer = None
    if collect_wall_times and wall_ms:
        arr = np.asarray(wall_ms)
        footer = {
            "type": "footer",
            "tick_ms_mean": float(arr.mean()),
            "tick_ms_p95": float(np.percentile(arr, 95)),
            "tick_ms_max": float(arr.max()),
        }
    return RunRecord(header=header, ticks=tick_lines, footer=footer)


def replay(record: RunRecord) -> RunRecord:
    """Re-run the embedded scenario against recorded gaze; verify bit-equality."""
    scenario = record.scenario()
    fresh = run(
        scenario,
        ticks=len(record.ticks),
        gaze_driver=ReplayGaze(record.ticks),
        collect_wall_times=False,
    )
    want = record.payload_lines()
    got = fresh.payload_lines()
    for i, (a, b) in enumerate(zip(want, got)):
        if a != b:
            raise ReplayMismatchError(f"tick {i}: recomputed payload differs from record")
    if len(want) != len(got):
        raise ReplayMismatchError(f"tick count differs: {len(want)} recorded, {len(got)} replayed")
    return fresh


# ---------------------------------------------------------------------------
# Reconstruction


@dataclass
class ReconstructedPath:
    target_id: int
    points_mm: np.ndarray  # (N, 3) world coordinates


def reconstruct(record: RunRecord) -> list[ReconstructedPath]:
    """Map selected-candidate centroids through the probe pose to world mm.

    Consecutive ticks with the same selected target form one polyline;
    target switches (and selection gaps) split paths.
    """
    scenario = record.scenario()
    geom = scenario.geometry
    paths: list[ReconstructedPath] = []
    cur_id = None
    cur_pts: list[list[float]] = []

    def flush():
        nonlocal cur_pts, cur_id
        if cur_id is not None and len(cur_pts) >= 2:
            paths.append(ReconstructedPath(cur_id, np.asarray(cur_pts)))
        cur_pts = []

    for t in record.ticks:
        sel = t.get("selected_id")
        if sel is None:
            flush()
            cur_id = None
            continue
        cand = next((c for c in t["candidates"] if c["id"] == sel), None)
        if cand is None:
            flush()
            cur_id = None
            continue
        if sel != cur_id:
            flush()
            cur_id = sel
        tel = t["telemetry"]
        col, row = cand["centroid_px"]
        xi = (col - geom.center_col) * geom.pixel_pitch_mm
        eta = row * geom.pixel_pitch_mm
        th = tel["theta_rad"]
        ct, st = math.cos(th), math.sin(th)
        # u = (ct, 0, st), d = (st, 0, -ct)
        wx = tel["x_mm"] + xi * ct + eta * st
        wy = tel["y_mm"]
        wz = tel["z_mm"] + xi * st - eta * ct
        cur_pts.append([wx, wy, wz])
    flush()
    return paths


def export_reconstruction(paths: list[ReconstructedPath], fmt: str, path) -> None:
    if fmt == "csv":
        with open(path, "w", encoding="ascii") as fh:
            fh.write("target_id,x_mm,y_mm,z_mm\n")
            for p in paths:
                for x, y, z in p.points_mm:
                    fh.write(f"{p.target_id},{float(x)!r},{float(y)!r},{float(z)!r}\n")
    elif fmt == "mesh-points":
        with open(path, "w", encoding="ascii") as fh:
            for p in paths:
                fh.write(f"# target {p.target_id}\n")
                for x, y, z in p.points_mm:
                    fh.write(f"{float(x)!r} {float(y)!r} {float(z)!r}\n")
    else:
        raise DomainError(f"unknown reconstruction format {fmt!r}")


def reconstruction_rms_mm(record: RunRecord, paths: list[ReconstructedPath]) -> float:
    """RMS distance from reconstructed points to the true centerline at equal y."""
    scenario = record.scenario()
    errs = []
    for p in paths:
        for x, y, z in p.points_mm:
            best = None
            for b in scenario.vessels.branches:
                pt = branch_point_at_y(b, y)
                if pt is None:
                    continue
                d = math.hypot(x - pt[0], z - pt[2])
                best = d if best is None else min(best, d)
            if best is not None:
                errs.append(best * best)
    if not errs:
        raise DomainError("no reconstructed points matched the phantom")
    return float(math.sqrt(sum(errs) / len(errs)))


# ---------------------------------------------------------------------------
# Metrics


def metrics(record: RunRecord) -> dict:
    """Sweep summary: centerline offset, per-branch Dice, switch latency, timing."""
    d_cs = [
        abs(t["telemetry"]["d_c_mm"])
        for t in record.ticks
        if t["telemetry"]["d_c_mm"] is not None
    ]
    branch_dice: dict[str, list[float]] = {}
    for t in record.ticks:
        gt = t.get("gt", {})
        if gt.get("dice") is not None and gt.get("branch") is not None:
            branch_dice.setdefault(gt["branch"], []).append(gt["dice"])

    switches = []
    prev_target = None
    for i, t in enumerate(record.ticks):
        target = t.get("target_id")
        if target is not None and prev_target is not None and target != prev_target:
            # latency: consecutive gaze-winner run for the new target up to here
            n = 0
            j = i
            while j >= 0:
                w = record.ticks[j].get("gaze_winner_id")
                if w == target:
                    n += 1
                    j -= 1
                elif w is None and n > 0:
                    j -= 1  # gaze dropouts inside the run do not break it
                else:
                    break
            switches.append({"tick": i, "to": target, "latency_ticks": n})
        prev_target = target

    out = {
        "ticks": len(record.ticks),
        "selected_fraction": (
            sum(1 for t in record.ticks if t.get("selected_id") is not None) / len(record.ticks)
            if record.ticks
            else 0.0
        ),
        "d_c_abs_mean_mm": float(np.mean(d_cs)) if d_cs else None,
        "d_c_abs_std_mm": float(np.std(d_cs)) if d_cs else None,
        "dice_per_branch": {
            b: {"mean": float(np.mean(v)), "std": float(np.std(v)), "n": len(v)}
            for b, v in sorted(branch_dice.items())
        },
        "switches": switches,
    }
    if record.footer is not None:
        out["tick_ms_mean"] = record.footer.get("tick_ms_mean")
        out["tick_ms_p95"] = record.footer.get("tick_ms_p95")
        out["tick_ms_max"] = record.footer.get("tick_ms_max")
    return out
