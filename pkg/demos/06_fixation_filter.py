#!/usr/bin/env python3
"""Run the dispersion-threshold fixation filter on a synthetic trace.

The trace dwells on two targets with a quick jump in between. With a
5-percent dispersion threshold and a 100 ms duration threshold the
filter reports exactly the two dwells; the jump samples belong to
neither fixation.
"""

import random

from glasskit import GazePosition2D, IdtConfig, idt_fixations

rng = random.Random(7)
samples = []
ts = 0


def dwell(target, n):
    global ts
    for _ in range(n):
        samples.append(
            GazePosition2D(
                ts=ts,
                s=0,
                gidx=len(samples),
                gp=(target[0] + rng.gauss(0, 0.004), target[1] + rng.gauss(0, 0.004)),
            )
        )
        ts += 10_000  # 100 Hz


dwell((0.3, 0.3), 30)       # 300 ms on the first target
dwell((0.44, 0.44), 1)      # saccade passes through
dwell((0.58, 0.58), 1)
dwell((0.7, 0.7), 30)       # 300 ms on the second target

fixations = idt_fixations(samples, IdtConfig(dispersion_threshold=5, duration_threshold=100))
print(f"{len(fixations)} fixations in {len(samples)} samples:")
for i, fix in enumerate(fixations, start=1):
    cx, cy = fix.centroid
    print(
        f"  #{i}: onset {fix.onset_ts / 1000:.0f} ms, {fix.duration_ms:.0f} ms, "
        f"centroid ({cx:.3f}, {cy:.3f}), {fix.n_samples} samples"
    )
