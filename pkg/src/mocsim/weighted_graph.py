"""Measure-weighted edge graphs: the average circuit structure given a hit.

Per realization, the 0/1 bond-openness grid is convolved to homogenize the
two edge orientations (each edge averaged with its two nearest
other-orientation edges on the following row), then accumulated with the
entanglement measure as statistical weight. Normalizing by the summed
measure gives the average edge-weight map conditioned on a hit.
"""
from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from numba import njit

from .ensembles import RealizationWeights


class NoHitsError(RuntimeError):
    """Nothing accumulated: the caller must widen statistics."""


def convolve(raw: RealizationWeights) -> RealizationWeights:
    """Mix each edge with the mean of its two nearest cross-orientation
    neighbors on the next row; the top vertical row has no row above and
    keeps its raw value. 0/1 inputs land in [0, 1]."""
    h, v = raw.horizontal, raw.vertical
    d, n = h.shape
    ch = 0.5 * h + 0.25 * (v + np.roll(v, -1, axis=1))
    cv = np.empty_like(v, dtype=float)
    if d > 1:
        cv[:-1] = 0.5 * v[:-1] + 0.25 * (np.roll(h[1:], 1, axis=1) + h[1:])
    cv[-1] = v[-1]
    return RealizationWeights(ch, cv)


@dataclass
class WeightedGraphAccumulator:
    """Mergeable tallies of measure-weighted convolved edge grids."""

    sum_horizontal: np.ndarray
    sum_vertical: np.ndarray
    sum_measure: float = 0.0
    count: int = 0

    @classmethod
    def zeros(cls, depth: int, num_sites: int) -> "WeightedGraphAccumulator":
        return cls(np.zeros((depth, num_sites)), np.zeros((depth, num_sites)))

    def accumulate(self, weights: RealizationWeights, measure_value: float) -> None:
        if measure_value < 0:
            raise ValueError("measure must be nonnegative")
        if measure_value > 0:
            self.sum_horizontal += measure_value * weights.horizontal
            self.sum_vertical += measure_value * weights.vertical
            self.sum_measure += measure_value
        self.count += 1

    def merge(self, other: "WeightedGraphAccumulator") -> None:
        self.sum_horizontal += other.sum_horizontal
        self.sum_vertical += other.sum_vertical
        self.sum_measure += other.sum_measure
        self.count += other.count

    def finalize(self) -> RealizationWeights:
        if self.sum_measure <= 0:
            raise NoHitsError("no weighted events accumulated")
        return RealizationWeights(self.sum_horizontal / self.sum_measure,
                                  self.sum_vertical / self.sum_measure)


def graph_to_csv(grid: np.ndarray) -> str:
    """One orientation as a CSV matrix: layer rows, site columns."""
    buf = io.StringIO()
    np.savetxt(buf, grid, delimiter=",", fmt="%.10g")
    return buf.getvalue()


@njit(cache=True)
def accumulate_window(raw_h, raw_v, start, measure, sum_h, sum_v):
    """Jitted path of convolve+accumulate over a ring buffer of raw rows.

    ``raw_h``/``raw_v`` hold the last T rows with physical index
    (start + logical) % T; logical row T-1 is the final circuit row.
    """
    t_rows, n = raw_h.shape
    for t in range(t_rows):
        pt = (start + t) % t_rows
        pt1 = (start + t + 1) % t_rows
        last = t == t_rows - 1
        for i in range(n):
            ip1 = i + 1 if i + 1 < n else 0
            im1 = i - 1 if i > 0 else n - 1
            sum_h[t, i] += measure * (0.5 * raw_h[pt, i]
                                      + 0.25 * (raw_v[pt, i] + raw_v[pt, ip1]))
            if last:
                sum_v[t, i] += measure * raw_v[pt, i]
            else:
                sum_v[t, i] += measure * (0.5 * raw_v[pt, i]
                                          + 0.25 * (raw_h[pt1, im1] + raw_h[pt1, i]))
