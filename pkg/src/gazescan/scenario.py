"""Scenario files: the declarative description of one simulated scan.

JSON documents (key-value + arrays) with a schema_version field. Validation
collects every problem with its path before failing. A scenario fully
determines a headless run: phantom, image geometry, noise, attention,
intention, segmentation and control parameters, probe start pose, gaze
source, seed, and duration.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .attention import HeatmapParams
from .control import ControlParams, ProbeState
from .errors import ScenarioValidationError
from .geometry import ImageGeometry
from .imaging import DEFAULT_GAP_LIMIT_MM, NoiseParams
from .intention import IntentParams
from .phantom import SurfaceProfile, VesselBranch, VesselTree, validate_phantom
from .segmentation import SegmentationParams

SCHEMA_VERSION = 1
GAZE_SOURCES = ("none", "file", "follow", "live")


@dataclass
class FollowSegment:
    from_tick: int
    branch: Optional[str]  # None = look away


@dataclass
class GazeConfig:
    source: str = "none"
    path: Optional[str] = None  # for source == "file"
    schedule: list[FollowSegment] = field(default_factory=list)  # for "follow"
    jitter_px: float = 4.0
    dropout: float = 0.1
    samples_per_tick: int = 3


@dataclass
class ProbeInit:
    x_mm: float = 0.0
    y_mm: float = 0.0
    theta_rad: float = 0.0
    z_mm: Optional[float] = None  # None = settle at the target contact force


@dataclass
class Scenario:
    name: str
    seed: int
    duration_ticks: int
    tick_rate_hz: float
    surface: SurfaceProfile
    vessels: VesselTree
    geometry: ImageGeometry
    noise: NoiseParams
    heatmap: HeatmapParams
    intention: IntentParams
    segmentation: SegmentationParams
    control: ControlParams
    probe: ProbeInit
    gaze: GazeConfig
    gap_limit_mm: float = DEFAULT_GAP_LIMIT_MM

    @property
    def dt(self) -> float:
        return 1.0 / self.tick_rate_hz

    def initial_probe(self) -> ProbeState:
        """Start pose; z settles so the face meets the target contact force."""
        p = ProbeState(
            x=self.probe.x_mm,
            y=self.probe.y_mm,
            z=self.probe.z_mm if self.probe.z_mm is not None else 0.0,
            theta=self.probe.theta_rad,
        )
        if self.probe.z_mm is None:
            from .phantom import surface_height

            xi = self.geometry.col_offsets_mm()
            face = xi * math.sin(p.theta)  # face line height relative to probe z
            (x0, x1), (y0, y1) = self.surface.extent_mm
            wx = np.clip(p.x + xi * math.cos(p.theta), x0, x1)
            wy = min(max(p.y, y0), y1)
            h = surface_height(self.surface, wx, wy)
            touch = float((h - face).max())  # z at which the face first touches
            depth = self.control.target_force_n / self.control.spring_n_per_mm
            p = dataclasses.replace(p, z=touch - depth, force=self.control.target_force_n)
        return p

    def to_dict(self) -> dict:
        g = self.gaze
        return {
            "schema_version": SCHEMA_VERSION,
            "name": self.name,
            "seed": self.seed,
            "duration_ticks": self.duration_ticks,
            "tick_rate_hz": self.tick_rate_hz,
            "surface": _surface_to_dict(self.surface),
            "vessels": {
                "root": self.vessels.root,
                "branches": [
                    {
                        "id": b.branch_id,
                        "parent": b.parent,
                        "centerline_mm": b.centerline_mm.tolist(),
                        "radius_mm": b.radius_mm.tolist(),
                    }
                    for b in self.vessels.branches
                ],
            },
            "geometry": {
                "width_px": self.geometry.width_px,
                "depth_px": self.geometry.depth_px,
                "pixel_pitch_mm": self.geometry.pixel_pitch_mm,
            },
            "noise": dataclasses.asdict(self.noise) | {"speckle_clip": list(self.noise.speckle_clip)},
            "heatmap": dataclasses.asdict(self.heatmap),
            "intention": dataclasses.asdict(self.intention),
            "segmentation": dataclasses.asdict(self.segmentation),
            "control": dataclasses.asdict(self.control),
            "probe": dataclasses.asdict(self.probe),
            "gaze": {
                "source": g.source,
                "path": g.path,
                "schedule": [{"from_tick": s.from_tick, "branch": s.branch} for s in g.schedule],
                "jitter_px": g.jitter_px,
                "dropout": g.dropout,
                "samples_per_tick": g.samples_per_tick,
            },
            "gap_limit_mm": self.gap_limit_mm,
        }

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def sha256(self) -> str:
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()


def _surface_to_dict(s: SurfaceProfile) -> dict:
    d = {
        "kind": s.kind,
        "extent_mm": [list(s.extent_mm[0]), list(s.extent_mm[1])],
    }
    if s.radius_mm is not None:
        d["radius_mm"] = s.radius_mm
    if s.heights_mm is not None:
        d["heights_mm"] = np.asarray(s.heights_mm).tolist()
    return d


class _Checker:
    """Collects validation errors with JSON-ish paths."""

    def __init__(self):
        self.errors: list[str] = []

    def fail(self, path, msg):
        self.errors.append(f"{path}: {msg}")

    def get(self, d, path, key, types, required=False, default=None):
        if key not in d:
            if required:
                self.fail(f"{path}.{key}" if path else key, "missing required field")
            return default
        v = d[key]
        if types is not None and not isinstance(v, types):
            self.fail(f"{path}.{key}" if path else key, f"expected {types}, got {type(v).__name__}")
            return default
        return v

    def raise_if_failed(self):
        if self.errors:
            raise ScenarioValidationError(self.errors)


_NUM = (int, float)


def _params_from_dict(cls, d: dict, path: str, chk: _Checker):
    """Populate a params dataclass from a dict, flagging unknown keys."""
    known = {f.name for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in (d or {}).items():
        if key not in known:
            chk.fail(f"{path}.{key}", "unknown field")
            continue
        kwargs[key] = value
    if cls is NoiseParams and "speckle_clip" in kwargs:
        kwargs["speckle_clip"] = tuple(kwargs["speckle_clip"])
    try:
        return cls(**kwargs)
    except Exception as exc:  # invalid values surface as one path-tagged error
        chk.fail(path, str(exc))
        return cls()


def scenario_from_dict(doc: dict, base_dir: Optional[Path] = None) -> Scenario:
    chk = _Checker()
    if not isinstance(doc, dict):
        raise ScenarioValidationError(["document root must be an object"])
    version = chk.get(doc, "", "schema_version", int, required=True)
    if version is not None and version != SCHEMA_VERSION:
        chk.fail("schema_version", f"unsupported version {version} (supported: {SCHEMA_VERSION})")
    name = chk.get(doc, "", "name", str, default="unnamed")
    seed = chk.get(doc, "", "seed", int, required=True, default=0)
    ticks = chk.get(doc, "", "duration_ticks", int, required=True, default=1)
    if ticks is not None and ticks < 1:
        chk.fail("duration_ticks", "must be >= 1")
    rate = chk.get(doc, "", "tick_rate_hz", _NUM, default=30.0)
    if rate is not None and not rate > 0:
        chk.fail("tick_rate_hz", "must be > 0")

    geom = None
    gd = chk.get(doc, "", "geometry", dict, required=True, default={})
    try:
        geom = ImageGeometry(
            width_px=int(gd.get("width_px", 256)),
            depth_px=int(gd.get("depth_px", 256)),
            pixel_pitch_mm=float(gd.get("pixel_pitch_mm", 0.15)),
        )
    except Exception as exc:
        chk.fail("geometry", str(exc))

    surface = None
    sd = chk.get(doc, "", "surface", dict, required=True, default={})
    try:
        extent = sd.get("extent_mm", [[-30.0, 30.0], [-10.0, 140.0]])
        surface = SurfaceProfile(
            kind=sd.get("kind", "flat"),
            extent_mm=((float(extent[0][0]), float(extent[0][1])),
                       (float(extent[1][0]), float(extent[1][1]))),
            radius_mm=sd.get("radius_mm"),
            heights_mm=np.asarray(sd["heights_mm"], dtype=float) if "heights_mm" in sd else None,
        )
    except Exception as exc:
        chk.fail("surface", str(exc))

    tree = None
    vd = chk.get(doc, "", "vessels", dict, required=True, default={})
    if vd:
        branches = []
        for i, bd in enumerate(vd.get("branches", [])):
            try:
                branches.append(
                    VesselBranch(
                        branch_id=str(bd["id"]),
                        centerline_mm=np.asarray(bd["centerline_mm"], dtype=float),
                        radius_mm=np.asarray(bd["radius_mm"], dtype=float),
                        parent=bd.get("parent"),
                    )
                )
            except Exception as exc:
                chk.fail(f"vessels.branches[{i}]", str(exc))
        if branches:
            try:
                tree = VesselTree(branches=branches, root=vd.get("root", branches[0].branch_id))
            except Exception as exc:
                chk.fail("vessels", str(exc))
        else:
            chk.fail("vessels.branches", "at least one branch required")

    noise = _params_from_dict(NoiseParams, doc.get("noise", {}), "noise", chk)
    heatmap = _params_from_dict(HeatmapParams, doc.get("heatmap", {}), "heatmap", chk)
    intent = _params_from_dict(IntentParams, doc.get("intention", {}), "intention", chk)
    seg = _params_from_dict(SegmentationParams, doc.get("segmentation", {}), "segmentation", chk)
    ctrl = _params_from_dict(ControlParams, doc.get("control", {}), "control", chk)
    probe = _params_from_dict(ProbeInit, doc.get("probe", {}), "probe", chk)

    gaze = GazeConfig()
    gz = doc.get("gaze", {"source": "none"})
    src = gz.get("source", "none")
    if src not in GAZE_SOURCES:
        chk.fail("gaze.source", f"must be one of {GAZE_SOURCES}")
    else:
        schedule = []
        for i, seg_d in enumerate(gz.get("schedule", []) or []):
            try:
                schedule.append(
                    FollowSegment(from_tick=int(seg_d["from_tick"]), branch=seg_d.get("branch"))
                )
            except Exception as exc:
                chk.fail(f"gaze.schedule[{i}]", str(exc))
        path = gz.get("path")
        if src == "file":
            if not path:
                chk.fail("gaze.path", "required for source=file")
            elif base_dir is not None and not Path(path).is_absolute():
                path = str(base_dir / path)
        if src == "follow" and not schedule:
            chk.fail("gaze.schedule", "required for source=follow")
        gaze = GazeConfig(
            source=src,
            path=path,
            schedule=schedule,
            jitter_px=float(gz.get("jitter_px", 4.0)),
            dropout=float(gz.get("dropout", 0.1)),
            samples_per_tick=int(gz.get("samples_per_tick", 3)),
        )
        if not 0.0 <= gaze.dropout < 1.0:
            chk.fail("gaze.dropout", "must be in [0, 1)")

    gap_limit = float(doc.get("gap_limit_mm", DEFAULT_GAP_LIMIT_MM))
    if not gap_limit > 0:
        chk.fail("gap_limit_mm", "must be > 0")

    if surface is not None and tree is not None:
        try:
            validate_phantom(surface, tree)
        except Exception as exc:
            chk.fail("vessels", str(exc))
        if gaze.source == "follow":
            ids = {b.branch_id for b in tree.branches}
            for i, s in enumerate(gaze.schedule):
                if s.branch is not None and s.branch not in ids:
                    chk.fail(f"gaze.schedule[{i}].branch", f"unknown branch {s.branch!r}")

    chk.raise_if_failed()
    return Scenario(
        name=name,
        seed=seed,
        duration_ticks=ticks,
        tick_rate_hz=float(rate),
        surface=surface,
        vessels=tree,
        geometry=geom,
        noise=noise,
        heatmap=heatmap,
        intention=intent,
        segmentation=seg,
        control=ctrl,
        probe=probe,
        gaze=gaze,
        gap_limit_mm=gap_limit,
    )


def load_scenario(path) -> Scenario:
    p = Path(path)
    try:
        doc = json.loads(p.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ScenarioValidationError([f"{path}: no such file"])
    except json.JSONDecodeError as exc:
        raise ScenarioValidationError([f"{path}: invalid JSON ({exc})"])
    return scenario_from_dict(doc, base_dir=p.parent)


def save_scenario(scenario: Scenario, path) -> None:
    Path(path).write_text(json.dumps(scenario.to_dict(), indent=2) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# Presets: hand-designed phantoms used by tests, demos, and shipped scenarios.


def _smoothstep(t):
    t = np.clip(t, 0.0, 1.0)
    return t * t * (3.0 - 2.0 * t)


def _straight_branch(bid, x, z, y0, y1, r, step=5.0):
    ys = np.arange(y0, y1 + step / 2, step)
    line = np.column_stack([np.full_like(ys, x), ys, np.full_like(ys, z)])
    return VesselBranch(bid, line, np.full(len(ys), r))


def _bend_branch(bid, parent, junction, y1, dx, dz, r0, r1, step=2.5, ease_mm=35.0):
    jx, jy, jz = junction
    ys = np.arange(jy, y1 + step / 2, step)
    s = _smoothstep((ys - jy) / ease_mm)
    xs = jx + dx * s
    zs = jz + dz * s
    rr = np.linspace(r0, r1, len(ys))
    return VesselBranch(bid, np.column_stack([xs, ys, zs]), rr, parent=parent)


def preset(name: str) -> Scenario:
    """Built-in scenarios: flat_centered, cylinder_correction, lateral_offset,
    straight, bifurcation."""
    geom = ImageGeometry(256, 256, 0.15)
    seg = SegmentationParams.for_geometry(geom)
    base = dict(
        tick_rate_hz=30.0,
        geometry=geom,
        noise=NoiseParams(),
        heatmap=HeatmapParams(),
        intention=IntentParams(),
        segmentation=seg,
        probe=ProbeInit(),
        gaze=GazeConfig(source="none"),
    )
    if name == "flat_centered":
        surface = SurfaceProfile("flat", ((-30.0, 30.0), (-10.0, 40.0)))
        tree = VesselTree([_straight_branch("trunk", 0.0, -10.0, -10.0, 40.0, 2.7)], "trunk")
        return Scenario(
            name=name, seed=101, duration_ticks=240, surface=surface, vessels=tree,
            control=ControlParams(scan_speed_mm_s=0.0), **base,
        )
    if name == "cylinder_correction":
        surface = SurfaceProfile("cylinder", ((-30.0, 30.0), (-10.0, 40.0)), radius_mm=45.0)
        tree = VesselTree([_straight_branch("trunk", 0.0, 35.0, -10.0, 40.0, 2.7)], "trunk")
        # large tilt mismatch the servo must unwind; gain calibrated once on
        # this phantom so the initial offset (~8.7 mm) settles in ~2 s
        base["probe"] = ProbeInit(theta_rad=0.34)
        return Scenario(
            name=name, seed=202, duration_ticks=450, surface=surface, vessels=tree,
            control=ControlParams(scan_speed_mm_s=0.0, k_theta=3.0), **base,
        )
    if name == "lateral_offset":
        surface = SurfaceProfile("flat", ((-30.0, 30.0), (-10.0, 40.0)))
        tree = VesselTree([_straight_branch("trunk", 6.0, -10.0, -10.0, 40.0, 2.7)], "trunk")
        sc = Scenario(
            name=name, seed=303, duration_ticks=200, surface=surface, vessels=tree,
            control=ControlParams(scan_speed_mm_s=0.0), **base,
        )
        sc.gaze = GazeConfig(
            source="follow", schedule=[FollowSegment(0, "trunk")], jitter_px=3.0, dropout=0.05
        )
        return sc
    if name == "straight":
        surface = SurfaceProfile("cylinder", ((-30.0, 30.0), (-10.0, 140.0)), radius_mm=45.0)
        tree = VesselTree([_straight_branch("trunk", 0.0, 35.0, -10.0, 140.0, 2.7)], "trunk")
        sc = Scenario(
            name=name, seed=404, duration_ticks=390, surface=surface, vessels=tree,
            control=ControlParams(), **base,
        )
        sc.gaze = GazeConfig(
            source="follow", schedule=[FollowSegment(0, "trunk")], jitter_px=4.0, dropout=0.1
        )
        return sc
    if name == "bifurcation":
        surface = SurfaceProfile("cylinder", ((-30.0, 30.0), (-10.0, 140.0)), radius_mm=45.0)
        junction = (0.0, 57.0, 35.0)
        trunk = _straight_branch("trunk", 0.0, 35.0, -10.0, 57.0, 2.7, step=2.5)
        left = _bend_branch("left", "trunk", junction, 135.0, -6.0, 0.0, 2.7, 2.2)
        right = _bend_branch("right", "trunk", junction, 135.0, 8.0, -4.0, 2.7, 1.8)
        tree = VesselTree([trunk, left, right], "trunk")
        sc = Scenario(
            name=name, seed=505, duration_ticks=420, surface=surface, vessels=tree,
            control=ControlParams(), **base,
        )
        sc.gaze = GazeConfig(
            source="follow",
            schedule=[FollowSegment(0, "trunk"), FollowSegment(215, "right")],
            jitter_px=4.0,
            dropout=0.1,
        )
        return sc
    raise ScenarioValidationError([f"unknown preset {name!r}"])
