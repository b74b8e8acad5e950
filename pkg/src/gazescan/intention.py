"""Intention stabilizer: turns raw gaze into a stable scanning target.

A short history window fuses two cues per candidate: where the freshest gaze
heatmap mass lies (weight alpha) and which candidate was recently the emitted
target (weight beta, fraction of the window). A challenger must beat the
current target for switch_ticks consecutive gaze-bearing ticks before a
switch commits, so glances and distractions do not retarget the probe.
The emitted heatmap is a deterministic kernel plateau at the target centroid.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Optional

from .attention import KIND_ZERO, AttentionHeatmap, HeatmapParams, plateau_heatmap, zero_heatmap
from .errors import DomainError
from .geometry import ImageGeometry
from .segmentation import Candidate


@dataclass
class IntentParams:
    window_ticks: int = 64
    switch_ticks: int = 32
    alpha: float = 0.7  # gaze-mass weight
    beta: float = 0.3  # target-history weight
    dilate_px: int = 8

    def __post_init__(self):
        if self.window_ticks < 1 or not 0 < self.switch_ticks <= self.window_ticks:
            raise DomainError("need 0 < switch_ticks <= window_ticks")


@dataclass
class TickEntry:
    gaze: AttentionHeatmap  # raw gaze heatmap for the tick (zero kind if none)
    candidates: list[Candidate]


class HistoryBuffer:
    """Ring buffer of the last window_ticks (gaze heatmap, candidates) pairs."""

    def __init__(self, window_ticks: int = 64):
        self.window_ticks = window_ticks
        self._entries: deque[TickEntry] = deque(maxlen=window_ticks)

    def push(self, entry: TickEntry) -> None:
        self._entries.append(entry)

    def __len__(self) -> int:
        return len(self._entries)

    def latest(self) -> TickEntry:
        if not self._entries:
            raise DomainError("history buffer is empty")
        return self._entries[-1]

    def entries(self):
        return tuple(self._entries)

    def clear(self) -> None:
        self._entries.clear()


@dataclass
class IntentState:
    target: Optional[int] = None  # tracked candidate id
    evidence: dict = field(default_factory=dict)  # id -> fused evidence in [0, 1]
    dwell: int = 0  # consecutive superior-challenger ticks
    challenger: Optional[int] = None
    target_history: deque = field(default_factory=lambda: deque(maxlen=64))


def reset(window_ticks: int = 64) -> IntentState:
    return IntentState(target_history=deque(maxlen=window_ticks))


def _gaze_masses(gaze: AttentionHeatmap, candidates: list[Candidate], dilate_px: int) -> dict:
    return {
        cand.branch_id: float(gaze.values[cand.dilated(dilate_px)].sum()) for cand in candidates
    }


def update(
    history: HistoryBuffer,
    state: IntentState,
    params: IntentParams,
    geom: ImageGeometry,
    heatmap_params: Optional[HeatmapParams] = None,
) -> tuple[IntentState, AttentionHeatmap]:
    """Advance the stabilizer by one tick (the freshest history entry).

    Returns the updated state and the stabilized heatmap to hand to
    segmentation. With no gaze anywhere in the window the output is the zero
    heatmap (all-candidates mode). Ticks without gaze evidence freeze the
    switch dwell counter; contradicting evidence resets it.
    """
    heatmap_params = heatmap_params or HeatmapParams()
    entry = history.latest()
    candidates = entry.candidates
    ids = [c.branch_id for c in candidates]
    if any(i is None for i in ids):
        raise DomainError("candidates must carry tracker ids before intention update")

    gaze_present = entry.gaze.kind != KIND_ZERO and entry.gaze.values.max() > 0
    masses = _gaze_masses(entry.gaze, candidates, params.dilate_px) if gaze_present else {}
    total_mass = float(entry.gaze.values.sum()) if gaze_present else 0.0
    denom = max(total_mass, sum(masses.values()), 1e-12)

    hist = tuple(state.target_history)
    window = max(len(hist), 1)
    scored = set(ids)
    if state.target is not None:
        scored.add(state.target)
    evidence = {}
    for i in sorted(scored):
        g = masses.get(i, 0.0) / denom if gaze_present else 0.0
        f = sum(1 for t in hist if t == i) / window
        evidence[i] = params.alpha * g + params.beta * f

    new_state = IntentState(
        target=state.target,
        evidence=evidence,
        dwell=state.dwell,
        challenger=state.challenger,
        target_history=state.target_history,
    )

    if new_state.target is None:
        if evidence and max(evidence.values()) > 0:
            new_state.target = min(i for i, e in evidence.items() if e == max(evidence.values()))
            new_state.dwell = 0
            new_state.challenger = None
    elif gaze_present:
        cur = evidence.get(new_state.target, 0.0)
        others = {i: e for i, e in evidence.items() if i != new_state.target}
        challenger = None
        if others:
            best = max(others.values())
            if best > cur:
                challenger = min(i for i, e in others.items() if e == best)
        if challenger is None:
            new_state.dwell = 0
            new_state.challenger = None
        else:
            if challenger == new_state.challenger:
                new_state.dwell += 1
            else:
                new_state.challenger = challenger
                new_state.dwell = 1
            if new_state.dwell >= params.switch_ticks:
                new_state.target = challenger
                new_state.dwell = 0
                new_state.challenger = None
    # no gaze this tick: dwell freezes

    new_state.target_history.append(new_state.target)

    window_entries = history.entries()
    any_gaze = any(e.gaze.kind != KIND_ZERO and e.gaze.values.max() > 0 for e in window_entries)
    if not any_gaze or new_state.target is None:
        return new_state, zero_heatmap(geom)

    centroid = None
    for e in reversed(window_entries):
        for cand in e.candidates:
            if cand.branch_id == new_state.target:
                centroid = cand.centroid_px
                break
        if centroid is not None:
            break
    if centroid is None:
        return new_state, zero_heatmap(geom)
    return new_state, plateau_heatmap(centroid, heatmap_params, geom)
