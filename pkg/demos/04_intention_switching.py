"""Glances versus intentional attention switches.

Two vessel candidates sit side by side. The operator stares at the left
one, glances at the right a few times, then deliberately moves over.
The stabilizer ignores every glance and commits the switch only after 32
consecutive ticks of superior evidence.
"""

import numpy as np

from gazescan.attention import GazeSample, HeatmapParams, gaze_to_heatmap, zero_heatmap
from gazescan.geometry import ImageGeometry
from gazescan.intention import HistoryBuffer, IntentParams, TickEntry, reset, update
from gazescan.segmentation import Candidate

geom = ImageGeometry(256, 256, 0.15)
params = IntentParams()
hp = HeatmapParams()


def candidate(cid, col, row=128):
    mask = np.zeros(geom.shape(), dtype=bool)
    mask[row - 8 : row + 9, col - 8 : col + 9] = True
    return Candidate(mask=mask, centroid_px=(float(col), float(row)),
                     area_px=int(mask.sum()), branch_id=cid)


CANDS = [candidate(1, 70), candidate(2, 190)]
LEFT, RIGHT = (70.0, 128.0), (190.0, 128.0)

history = HistoryBuffer(params.window_ticks)
state = reset(params.window_ticks)
tick = 0


def look_at(pos, n, label):
    global state, tick
    for _ in range(n):
        gaze = gaze_to_heatmap([GazeSample(tick, *pos)], hp, geom) if pos else zero_heatmap(geom)
        history.push(TickEntry(gaze=gaze, candidates=CANDS))
        state, _hm = update(history, state, params, geom, hp)
        tick += 1
    print(f"t={tick:4d} after {n:3d} ticks {label:<28} "
          f"target={state.target} dwell={state.dwell:2d}")


look_at(LEFT, 40, "staring at left vessel")
look_at(RIGHT, 8, "quick glance right")
look_at(LEFT, 6, "back to left (dwell resets)")
look_at(RIGHT, 15, "longer distraction right")
look_at(None, 10, "eyes off screen (dwell frozen)")
look_at(RIGHT, 5, "distraction resumes (dwell continues)")
look_at(LEFT, 6, "back to left, still the target")

print("\nnow a deliberate switch: hold gaze on the right vessel")
switched_at = None
for k in range(1, 64):
    gaze = gaze_to_heatmap([GazeSample(tick, *RIGHT)], hp, geom)
    history.push(TickEntry(gaze=gaze, candidates=CANDS))
    state, _hm = update(history, state, params, geom, hp)
    tick += 1
    if state.target == 2:
        switched_at = k
        break
print(f"target switched to right after exactly {switched_at} sustained ticks "
      f"(threshold {params.switch_ticks})")
assert switched_at == params.switch_ticks
