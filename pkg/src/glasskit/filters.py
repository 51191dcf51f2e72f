"""Dispersion-threshold (I-DT) fixation detection.

A fixation is an interval whose samples stay within a small spatial
dispersion, D = (max x - min x) + (max y - min y), for at least a
minimum duration. The filter slides a window over the valid gaze
samples: the window is first widened to cover the duration threshold,
then, if its dispersion is within the threshold, grown sample by sample
until the next sample would push dispersion over; the window is emitted
as a fixation and scanning restarts after it. Otherwise the window
slides forward by one sample.

Thresholds are expressed in percent of the normalized scene extent
(dispersion_threshold=5 means 0.05 in normalized units) and in
milliseconds. Dropouts are not bridged: a gap of more than twice the
nominal sample period splits the input, and windows never span a split.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .errors import ConfigInvalid
from .livedata import GazePosition2D

GAP_PERIOD_FACTOR = 2.0


@dataclass(frozen=True)
class IdtConfig:
    """I-DT thresholds: dispersion in percent of scene extent, duration
    in milliseconds. Both must be strictly positive."""

    dispersion_threshold: float = 5.0
    duration_threshold: float = 100.0

    def validate(self) -> None:
        if not (self.dispersion_threshold > 0):
            raise ConfigInvalid("dispersion_threshold must be > 0")
        if not (self.duration_threshold > 0):
            raise ConfigInvalid("duration_threshold must be > 0")


@dataclass(frozen=True)
class Fixation:
    """One detected fixation: onset timestamp (us), duration (ms),
    centroid in normalized coordinates, and member sample count."""

    onset_ts: int
    duration_ms: float
    centroid: Tuple[float, float]
    n_samples: int


def idt_fixations(samples: Sequence[GazePosition2D], cfg: IdtConfig) -> List[Fixation]:
    """Detect fixations in timestamp-ordered valid gaze samples.

    Empty input yields an empty list. Raises ConfigInvalid for bad
    thresholds and ValueError if the input is unordered or contains
    invalid samples.
    """
    cfg.validate()
    if not samples:
        return []
    for p in samples:
        if p.s != 0 or p.gp is None:
            raise ValueError("idt_fixations expects valid samples only")

    ts = np.array([p.ts for p in samples], dtype=np.int64)
    if np.any(np.diff(ts) < 0):
        raise ValueError("samples must be ordered by timestamp")
    xs = np.array([p.gp[0] for p in samples], dtype=np.float64)
    ys = np.array([p.gp[1] for p in samples], dtype=np.float64)

    fixations: List[Fixation] = []
    for lo, hi in _gap_free_runs(ts):
        fixations.extend(
            _idt_run(ts[lo:hi], xs[lo:hi] * 100.0, ys[lo:hi] * 100.0, xs[lo:hi], ys[lo:hi], cfg)
        )
    return fixations


def _gap_free_runs(ts: np.ndarray):
    """Split indices into runs with no inter-sample gap above the limit."""
    n = len(ts)
    if n < 2:
        return [(0, n)]
    diffs = np.diff(ts)
    limit = GAP_PERIOD_FACTOR * float(np.median(diffs))
    breaks = np.nonzero(diffs > limit)[0]
    runs = []
    lo = 0
    for b in breaks:
        runs.append((lo, int(b) + 1))
        lo = int(b) + 1
    runs.append((lo, n))
    return runs


def _idt_run(ts, pct_x, pct_y, raw_x, raw_y, cfg: IdtConfig) -> List[Fixation]:
    """Core window scan over one gap-free run.

    Dispersion is evaluated on the percent-scaled coordinates; centroids
    are reported in the raw normalized coordinates.
    """
    n = len(ts)
    dur_us = cfg.duration_threshold * 1000.0
    thr = cfg.dispersion_threshold
    out: List[Fixation] = []

    i = 0
    while i < n:
        j = i
        while j < n and ts[j] - ts[i] < dur_us:
            j += 1
        if j == n:
            break  # remaining span cannot cover the duration threshold
        min_x = max_x = pct_x[i]
        min_y = max_y = pct_y[i]
        for k in range(i + 1, j + 1):
            min_x = min(min_x, pct_x[k])
            max_x = max(max_x, pct_x[k])
            min_y = min(min_y, pct_y[k])
            max_y = max(max_y, pct_y[k])
        if (max_x - min_x) + (max_y - min_y) <= thr:
            while j + 1 < n:
                cand_min_x = min(min_x, pct_x[j + 1])
                cand_max_x = max(max_x, pct_x[j + 1])
                cand_min_y = min(min_y, pct_y[j + 1])
                cand_max_y = max(max_y, pct_y[j + 1])
                if (cand_max_x - cand_min_x) + (cand_max_y - cand_min_y) > thr:
                    break
                min_x, max_x, min_y, max_y = cand_min_x, cand_max_x, cand_min_y, cand_max_y
                j += 1
            count = j - i + 1
            centroid = (
                math.fsum(raw_x[i : j + 1]) / count,
                math.fsum(raw_y[i : j + 1]) / count,
            )
            out.append(
                Fixation(
                    onset_ts=int(ts[i]),
                    duration_ms=float(int(ts[j]) - int(ts[i])) / 1000.0,
                    centroid=centroid,
                    n_samples=count,
                )
            )
            i = j + 1
        else:
            i += 1
    return out
