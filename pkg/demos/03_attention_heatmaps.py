"""The three attention heatmap flavors.

Pseudo (label-derived, for dataset generation), raw gaze (sample counting),
and the degenerate plateau the intention stabilizer emits. Outputs land in
demos/out/.
"""

import pathlib

import numpy as np

from gazescan.attention import (
    GazeSample,
    HeatmapParams,
    gaze_to_heatmap,
    generate_pseudo_heatmap,
    plateau_heatmap,
    pseudo_heatmap_batch,
)
from gazescan.geometry import ImageGeometry
from gazescan.gridio import save_pgm

out = pathlib.Path(__file__).parent / "out"
out.mkdir(exist_ok=True)

geom = ImageGeometry(256, 256, 0.15)
label = np.zeros(geom.shape(), dtype=bool)
label[118:140, 96:120] = True  # a vessel-ish blob left of center

# Pseudo heatmaps scatter a map center around the label centroid, then rain
# point samples around that center; the diffused result mimics where an
# operator's eyes would pool while looking at the structure.
params = HeatmapParams()
hm = generate_pseudo_heatmap(label, params, seed=11, geom=geom)
peak = np.unravel_index(np.argmax(hm.values), hm.values.shape)
print(f"pseudo heatmap: kind={hm.kind} max={hm.values.max():.1f} "
      f"peak at (row {peak[0]}, col {peak[1]})")
save_pgm(out / "attention_pseudo.pgm", hm.values)

# With both scatters at zero and a single point, the output is exactly one
# 30x30 kernel plateau: the deterministic building block everything else
# blurs around.
flat = plateau_heatmap((128.0, 128.0), params, geom)
rows = np.flatnonzero(flat.values.max(axis=1) == 1.0)
print(f"degenerate plateau: rows {rows[0]}..{rows[-1]}, value 1 everywhere inside")

# Raw gaze heatmaps count repeated fixations: three hits on the left blob vs
# one on the right makes the right plateau a third as strong.
window = [
    GazeSample(0, 40.0, 128.0), GazeSample(1, 40.0, 128.0), GazeSample(2, 40.0, 128.0),
    GazeSample(3, 240.0, 128.0),
]
raw = gaze_to_heatmap(window, params, geom)
print(f"raw gaze: left peak {raw.values[128, 40]:.3f}, right peak "
      f"{raw.values[128, 240]:.3f} (counting, then shared max-normalization)")
save_pgm(out / "attention_raw_gaze.pgm", raw.values)

# Dataset batches deliberately blank a fraction of maps so downstream
# consumers learn to run without attention.
batch = pseudo_heatmap_batch([label] * 200, params, seed=5, geom=geom)
zeros = sum(1 for h in batch if h.kind == "zero")
print(f"batch of 200: {zeros} zero maps ({zeros / 2:.0f}% heatmap dropout)")
