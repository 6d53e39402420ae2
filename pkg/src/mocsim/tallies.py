"""Mergeable Monte Carlo tallies keyed by subregion geometry.

One row per (k, geometry, displacement); translated placements of the same
geometry pool into one row. Counters are integers (MI is tallied in exact
ln-2 units), so merging and worker count can never change a tally byte.
"""
from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Sequence

import numpy as np

CSV_HEADER = "family,k,width_or_radius,dx,dy,eta,hits,mi_sum_ln2,indirect_hits,iterations"


@dataclass(frozen=True)
class TallyRow:
    family: str
    k: int
    width_or_radius: float   # interval width (1D) or disk radius (2D)
    dx: float
    dy: float
    eta: float


@dataclass
class TallyTable:
    """Counters per row, plus between-block second moments.

    Pooled translated placements are correlated within a realization, so
    binomial errors understate the sampling noise; when per-block sums of
    squares are available (in-memory runs and checkpoints, not the CSV),
    stderr estimates use the between-block variance instead.
    """

    rows: list[TallyRow]
    hits: np.ndarray            # int64 per row
    mi_sum: np.ndarray          # int64, ln-2 units
    mi_sumsq: np.ndarray        # int64, per-realization squares
    indirect_hits: np.ndarray   # int64
    iterations: np.ndarray      # int64
    hits_bsq: np.ndarray = None         # int64, sum of per-block sums squared
    mi_bsq: np.ndarray = None
    indirect_bsq: np.ndarray = None
    blocks: int = 0
    mi_var_known: bool = True   # False when loaded from CSV (no sumsq column)

    @classmethod
    def zeros(cls, rows: Sequence[TallyRow]) -> "TallyTable":
        n = len(rows)
        z = lambda: np.zeros(n, dtype=np.int64)
        return cls(list(rows), z(), z(), z(), z(), z(), z(), z(), z())

    def _block_stderr(self, total: np.ndarray, bsq: np.ndarray, i: int) -> float:
        """Std error of total/iterations from between-block dispersion."""
        b = self.blocks
        mean_b = total[i] / b
        var_b = max(bsq[i] / b - mean_b * mean_b, 0.0)
        return float(np.sqrt(b * var_b) / self.iterations[i])

    def _have_blocks(self) -> bool:
        return self.blocks >= 8 and self.hits_bsq is not None

    def merge(self, other: "TallyTable") -> None:
        if self.rows != other.rows:
            raise ValueError("tally tables have different row keys")
        self.hits += other.hits
        self.mi_sum += other.mi_sum
        self.mi_sumsq += other.mi_sumsq
        self.indirect_hits += other.indirect_hits
        self.iterations += other.iterations
        if self.hits_bsq is not None and other.hits_bsq is not None:
            self.hits_bsq += other.hits_bsq
            self.mi_bsq += other.mi_bsq
            self.indirect_bsq += other.indirect_bsq
            self.blocks += other.blocks

    def _fmt_num(self, v: float) -> str:
        return str(int(v)) if float(v).is_integer() else repr(float(v))

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write(CSV_HEADER + "\n")
        for i, r in enumerate(self.rows):
            out.write(",".join([
                r.family,
                str(r.k),
                self._fmt_num(r.width_or_radius),
                self._fmt_num(r.dx),
                self._fmt_num(r.dy),
                repr(float(r.eta)),
                str(int(self.hits[i])),
                str(int(self.mi_sum[i])),
                str(int(self.indirect_hits[i])),
                str(int(self.iterations[i])),
            ]) + "\n")
        return out.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "TallyTable":
        lines = [ln for ln in text.strip().splitlines() if ln]
        if not lines or lines[0] != CSV_HEADER:
            raise ValueError("unrecognized tally CSV header")
        rows = []
        cols: list[list[int]] = [[], [], [], []]
        for ln in lines[1:]:
            parts = ln.split(",")
            if len(parts) != 10:
                raise ValueError(f"malformed tally row: {ln!r}")
            rows.append(TallyRow(parts[0], int(parts[1]), float(parts[2]),
                                 float(parts[3]), float(parts[4]), float(parts[5])))
            for c, p in zip(cols, parts[6:]):
                c.append(int(p))
        table = cls.zeros(rows)
        table.hits[:] = cols[0]
        table.mi_sum[:] = cols[1]
        table.indirect_hits[:] = cols[2]
        table.iterations[:] = cols[3]
        table.mi_var_known = False
        return table

    def rate(self, i: int) -> float:
        return self.hits[i] / self.iterations[i]

    def rate_stderr(self, i: int) -> float:
        if self._have_blocks():
            return self._block_stderr(self.hits, self.hits_bsq, i)
        # binomial shot noise, sigma = sqrt(rate / n)
        return float(np.sqrt(self.rate(i) / self.iterations[i]))

    def mi_rate(self, i: int) -> float:
        return self.mi_sum[i] / self.iterations[i]

    def mi_stderr(self, i: int) -> float:
        if self._have_blocks():
            return self._block_stderr(self.mi_sum, self.mi_bsq, i)
        n = self.iterations[i]
        mean = self.mi_sum[i] / n
        if not self.mi_var_known:
            return float(np.sqrt(mean / n))
        var = max(self.mi_sumsq[i] / n - mean * mean, 0.0)
        return float(np.sqrt(var / n))

    def indirect_rate(self, i: int) -> float:
        return self.indirect_hits[i] / self.iterations[i]

    def indirect_stderr(self, i: int) -> float:
        if self._have_blocks():
            return self._block_stderr(self.indirect_hits, self.indirect_bsq, i)
        return float(np.sqrt(self.indirect_rate(i) / self.iterations[i]))
