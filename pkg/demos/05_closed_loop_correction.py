"""Orientation correction, on versus off.

Runs the cylinder scenario twice: once with the confidence servo active,
once frozen. Prints convergence milestones and writes a comparison plot
if matplotlib is importable.
"""

import dataclasses
import pathlib

import numpy as np

from gazescan import runtime
from gazescan.scenario import preset

out = pathlib.Path(__file__).parent / "out"
out.mkdir(exist_ok=True)

sc_on = preset("cylinder_correction")
sc_off = preset("cylinder_correction")
sc_off.control = dataclasses.replace(sc_off.control, correction=False)

print("running paired cylinder sweeps (450 ticks each)...")
rec_on = runtime.run(sc_on)
rec_off = runtime.run(sc_off)

d_on = np.array([t["telemetry"]["d_c_mm"] for t in rec_on.ticks])
d_off = np.array([t["telemetry"]["d_c_mm"] for t in rec_off.ticks])
theta = np.array([t["telemetry"]["theta_rad"] for t in rec_on.ticks])

first_in = int(np.argmax(np.abs(d_on) < 2.0))
print(f"\nstart:        |d_c| = {abs(d_on[0]):.2f} mm, theta = {theta[0]:+.2f} rad")
print(f"correction on: |d_c| < 2 mm first at tick {first_in} "
      f"({first_in / 30:.1f} s), final {abs(d_on[-1]):.3f} mm, theta -> {theta[-1]:+.3f} rad")
print(f"correction off: |d_c| mean {np.abs(d_off).mean():.2f} mm over the whole sweep")

m_on, m_off = runtime.metrics(rec_on), runtime.metrics(rec_off)
print(f"\nmetrics: on mean {m_on['d_c_abs_mean_mm']:.3f} mm "
      f"vs off mean {m_off['d_c_abs_mean_mm']:.3f} mm")

forces = [t["telemetry"]["force_n"] for t in rec_on.ticks[-60:]]
print(f"contact force held at {np.mean(forces):.2f} N "
      f"(target {sc_on.control.target_force_n} N) while the probe rotated")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7, 3.5))
    t = np.arange(len(d_on)) / 30.0
    ax.plot(t, np.abs(d_on), label="correction on")
    ax.plot(t, np.abs(d_off), label="correction off", ls="--")
    ax.axhline(2.0, color="gray", lw=0.8)
    ax.set_xlabel("time (s)")
    ax.set_ylabel("|d_c| (mm)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out / "correction_contrast.png", dpi=120)
    print("wrote", out / "correction_contrast.png")
except ImportError:
    print("matplotlib not available; skipped the plot")
