"""Experiment orchestration: config, fused Monte Carlo drivers, parallel
execution with deterministic block accumulation, checkpoints and reports.

Realizations are processed in fixed-size blocks. Block b always covers the
same realization indices whatever the worker count, per-block tallies are
folded in block order, and every random draw is counter-addressed, so a
(config, master_seed) pair fully determines all outputs.
"""
from __future__ import annotations

import hashlib
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Literal, Optional

import numpy as np
from numba import njit
from pydantic import BaseModel, Field, model_validator

from . import analysis
from .analysis import AnalysisError, EtaPoint
from .clusters import FreeListExhausted, _advance, _find, _union
from .ensembles import EnsembleConfig, Family, chain_adjacency, torus_adjacency
from .measures import (GeometryTable, SubregionSet, flatten_geometries,
                       place_subregions_1d, place_subregions_2d,
                       surface_sizes, tally_geometries)
from .rng import TAG_BONDS, TAG_OFFSET, bernoulli_threshold, fill_bernoulli, \
    fill_uniform_u64, key_for_seed
from .tallies import TallyRow, TallyTable
from .weighted_graph import accumulate_window

CHECKPOINT_VERSION = 1


class ConfigError(ValueError):
    pass


class MeasureFlags(BaseModel):
    gme: bool = True
    mi: bool = True
    indirect: bool = True


class Grid1D(BaseModel):
    """One explicit (k, width) row with its own spacing list."""
    k: int = Field(ge=2)
    width: int = Field(ge=1)
    spacings: list[int]


class Geometry1D(BaseModel):
    """Equal-width interval grids on the ring.

    Either a full cartesian product (ks x widths x spacings, optionally per-k
    spacing lists) or explicit ``grids`` rows; every listed combination must
    place without overlap, which is validated up front.
    """
    ks: list[int] = []
    widths: list[int] = []
    spacings: list[int] = []
    spacings_by_k: dict[int, list[int]] = {}
    grids: list[Grid1D] = []
    offsets: list[int] = [0]

    def spacing_list(self, k: int) -> list[int]:
        if k in self.spacings_by_k:
            return self.spacings_by_k[k]
        return self.spacings

    def triples(self) -> list[tuple[int, int, int]]:
        out = [(g.k, g.width, s) for g in self.grids for s in g.spacings]
        out.extend((k, w, s) for k in self.ks for w in self.widths
                   for s in self.spacing_list(k))
        return out


class Geometry2D(BaseModel):
    """Disk subregions on square-corner displacements, one octant of (x, y)."""
    ks: list[int] = [2]
    radii_sq: list[float]
    eta_min: float = 0.02
    offsets: list[tuple[int, int]] = [(0, 0)]


class GeometryPairs(BaseModel):
    """Site pairs at fixed distances (pair-connection families)."""
    distances: list[int]
    all_positions: bool = False


class FitOptions(BaseModel):
    enabled: bool = True
    min_events: int = 10
    gme_window: tuple[float, float] = (0.01, 0.3)
    mi_window: tuple[float, float] = (0.001, 0.3)
    gme_windows: dict[int, tuple[float, float]] = {}
    mi_windows: dict[int, tuple[float, float]] = {}
    num_angles: int = 64
    eta2d_windows: dict[int, tuple[float, float]] = {2: (0.2, 0.85),
                                                     3: (0.4, 0.85),
                                                     4: (0.6, 0.85)}
    eta2d_points: int = 12
    distance_window: tuple[float, float] = (8.5, 1e12)

    def window_for(self, k: int, measure: str) -> tuple[float, float]:
        if measure == "mi":
            return self.mi_windows.get(k, self.mi_window)
        return self.gme_windows.get(k, self.gme_window)


class WeightedGraphOptions(BaseModel):
    enabled: bool = True
    measure: Literal["gme", "mi"] = "gme"
    k: int = 2
    width: int = 4
    spacing: int = 12
    offset: int = 0
    depth_window: Optional[int] = None


class RunConfig(BaseModel):
    family: Family
    num_sites: int = Field(ge=1)
    depth: int = Field(ge=1)
    prob: float = Field(ge=0.0, le=1.0)
    aux_prob: Optional[float] = None
    iterations: int = Field(ge=1)
    master_seed: int = 0
    workers: int = Field(default=1, ge=1)
    block_size: int = Field(default=4096, ge=1)
    measures: MeasureFlags = MeasureFlags()
    geometry_1d: Optional[Geometry1D] = None
    geometry_2d: Optional[Geometry2D] = None
    geometry_pairs: Optional[GeometryPairs] = None
    fit: FitOptions = FitOptions()
    weighted_graph: Optional[WeightedGraphOptions] = None
    out_dir: Optional[str] = None
    checkpoint_every_blocks: Optional[int] = None
    resume: bool = True

    @model_validator(mode="after")
    def _check_sections(self):
        needed = {Family.MOC1D: "geometry_1d", Family.MOC2D: "geometry_2d",
                  Family.DYCK: "geometry_pairs", Family.HYPERBOLIC: "geometry_pairs"}
        if getattr(self, needed[self.family]) is None:
            raise ValueError(f"{self.family.value} runs need the "
                             f"{needed[self.family]} section")
        if self.weighted_graph is not None and self.weighted_graph.enabled \
                and self.family is not Family.MOC1D:
            raise ValueError("weighted-graph accumulation is defined for the "
                             "chain family")
        return self

    def ensemble(self) -> EnsembleConfig:
        try:
            return EnsembleConfig(self.family, self.num_sites, self.depth,
                                  self.prob, self.aux_prob)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def config_hash(self) -> str:
        """Identity of the sampled stream: excludes runtime knobs (workers,
        output paths) and the iteration target, so a checkpoint can resume
        into an extended run; block boundaries stay pinned via block_size."""
        payload = self.model_dump(exclude={"workers", "out_dir", "resume",
                                           "checkpoint_every_blocks",
                                           "iterations"}, mode="json")
        text = json.dumps(payload, sort_keys=True)
        return hashlib.sha256(text.encode()).hexdigest()[:16]


def load_config(path: str | Path) -> RunConfig:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(data)


def parse_config(data: dict) -> RunConfig:
    try:
        return RunConfig.model_validate(data)
    except Exception as exc:
        raise ConfigError(f"invalid run config: {exc}") from exc


# ---------------------------------------------------------------------------
# Geometry grids

def build_geometries(config: RunConfig
                     ) -> tuple[list[SubregionSet], list[int], list[TallyRow]]:
    """Expand the configured grid into SubregionSets and their tally rows.

    Translated placements (offsets) share the row of their base geometry.
    Invalid explicit combinations are a config error; for the auto-generated
    2D displacement grid, combinations whose placement cannot fit are part
    of the (deterministic) generation rule and are skipped.
    """
    fam = config.family
    n = config.num_sites
    sets: list[SubregionSet] = []
    row_of: list[int] = []
    rows: list[TallyRow] = []

    def add(base: SubregionSet, others: list[SubregionSet], row: TallyRow):
        rows.append(row)
        rid = len(rows) - 1
        for s in [base, *others]:
            sets.append(s)
            row_of.append(rid)

    if fam is Family.MOC1D:
        g = config.geometry_1d
        for k, w, spacing in g.triples():
            try:
                base = place_subregions_1d(k, w, n, spacing, g.offsets[0])
                others = [place_subregions_1d(k, w, n, spacing, off)
                          for off in g.offsets[1:]]
            except ValueError as exc:
                raise ConfigError(
                    f"invalid 1D geometry k={k} w={w} spacing={spacing}: "
                    f"{exc}") from exc
            add(base, others,
                TallyRow(fam.value, k, w, spacing, 0, analysis.eta_1d(base)))
    elif fam is Family.MOC2D:
        g = config.geometry_2d
        side = int(round(n ** 0.5))
        for k in g.ks:
            for r_sq in g.radii_sq:
                for x in range(1, side // 2 + 1):
                    for y in range(0, x + 1):
                        if x * x + y * y <= 4 * r_sq:
                            continue
                        eta = analysis.eta_2d(r_sq, x, y, side)
                        if eta < g.eta_min:
                            continue
                        try:
                            placed = [place_subregions_2d(k, r_sq, x, y, side, off)
                                      for off in g.offsets]
                        except ValueError:
                            continue   # wraparound overlap: outside the grid rule
                        add(placed[0], placed[1:],
                            TallyRow(fam.value, k, math.sqrt(r_sq), x, y, eta))
    else:
        g = config.geometry_pairs
        offsets = list(range(n)) if g.all_positions else [0]
        for x in g.distances:
            try:
                placed = [place_subregions_1d(2, 1, n, x, off) for off in offsets]
            except ValueError as exc:
                raise ConfigError(f"invalid pair distance {x}: {exc}") from exc
            add(placed[0], placed[1:],
                TallyRow(fam.value, 2, 1, x, 0, analysis.eta_1d(placed[0])))
    if not sets:
        raise ConfigError("geometry grid is empty")
    return sets, row_of, rows


# ---------------------------------------------------------------------------
# Fused drivers (hot path)

@njit(cache=True, nogil=True)
def _drive_static(k0, k1, real_start, real_end, depth, thresh, intra_a, intra_b,
                  num_sites, geo_k, geo_row, geo_ptr, geo_sites, geo_region,
                  do_indirect, hits, mi_sum, mi_sumsq, ind_hits,
                  wg_geo, wg_use_mi, raw_h, raw_v, wg_sum_h, wg_sum_v):
    """Chain and torus families: fixed intralayer adjacency, per-site cuts."""
    n_intra = intra_a.shape[0]
    cap = 2 * num_sites
    cluster = np.empty(num_sites, np.int32)
    parent = np.empty(cap, np.int32)
    in_use = np.empty(cap, np.uint8)
    old = np.empty(num_sites, np.int32)
    sizes = np.empty(cap, np.int32)
    seen = np.zeros(cap, np.int64)
    maskv = np.empty(cap, np.int32)
    inside = np.empty(cap, np.int32)
    identity = np.empty(num_sites, np.int32)
    for i in range(num_sites):
        identity[i] = i
    bonds = np.empty(n_intra + num_sites, np.uint8)
    n_geo = geo_k.shape[0]
    mi_of_geo = np.empty(n_geo, np.int32)
    gme_of_geo = np.empty(n_geo, np.uint8)
    t_win = raw_h.shape[0]
    stamp = np.int64(1)
    wg_msum = 0.0
    wg_count = 0
    for real in range(real_start, real_end):
        for i in range(num_sites):
            cluster[i] = i
            parent[i] = i
        for layer in range(depth):
            fill_bernoulli(k0, k1, real, layer, TAG_BONDS, thresh, bonds)
            st = _advance(cluster, parent, in_use, old, intra_a, intra_b,
                          bonds[:n_intra], bonds[n_intra:], identity)
            if st != 0:
                return wg_msum, wg_count, 1
            if wg_geo >= 0:
                pt = layer % t_win
                for i in range(num_sites):
                    raw_h[pt, i] = bonds[i]
                    raw_v[pt, i] = bonds[n_intra + i]
        surface_sizes(cluster, sizes)
        stamp = tally_geometries(cluster, sizes, geo_k, geo_row, geo_ptr,
                                 geo_sites, geo_region, seen, maskv, inside,
                                 stamp, do_indirect, hits, mi_sum, mi_sumsq,
                                 ind_hits, mi_of_geo, gme_of_geo)
        if wg_geo >= 0:
            m = float(mi_of_geo[wg_geo]) if wg_use_mi else float(gme_of_geo[wg_geo])
            if m > 0.0:
                accumulate_window(raw_h, raw_v, depth % t_win, m, wg_sum_h, wg_sum_v)
                wg_msum += m
            wg_count += 1
    return wg_msum, wg_count, 0


@njit(cache=True)
def _dyck_layer(cluster, parent, in_use, old, gates, phase):
    """Net percolation effect of one brickwork layer: the measure composite
    merges the pair's past clusters then restarts both sites in one fresh
    cluster; a swap crosses the interlayer bonds."""
    n = cluster.shape[0]
    cap = parent.shape[0]
    half = n // 2
    for g in range(half):
        if gates[g]:
            a = (2 * g + phase) % n
            _union(parent, cluster[a], cluster[(a + 1) % n])
    for i in range(cap):
        in_use[i] = 0
    for i in range(n):
        r = _find(parent, cluster[i])
        cluster[i] = r
        in_use[r] = 1
        old[i] = r
    cursor = 0
    for g in range(half):
        a = (2 * g + phase) % n
        b = (a + 1) % n
        if gates[g]:
            while cursor < cap and in_use[cursor]:
                cursor += 1
            if cursor >= cap:
                return 1
            parent[cursor] = cursor
            in_use[cursor] = 1
            cluster[a] = cursor
            cluster[b] = cursor
            cursor += 1
        else:
            cluster[a] = old[b]
            cluster[b] = old[a]
    return 0


@njit(cache=True, nogil=True)
def _drive_dyck(k0, k1, real_start, real_end, num_sites, depth, thresh,
                geo_k, geo_row, geo_ptr, geo_sites, geo_region, do_indirect,
                hits, mi_sum, mi_sumsq, ind_hits):
    cap = 2 * num_sites
    cluster = np.empty(num_sites, np.int32)
    parent = np.empty(cap, np.int32)
    in_use = np.empty(cap, np.uint8)
    old = np.empty(num_sites, np.int32)
    sizes = np.empty(cap, np.int32)
    seen = np.zeros(cap, np.int64)
    maskv = np.empty(cap, np.int32)
    inside = np.empty(cap, np.int32)
    gates = np.empty(num_sites // 2, np.uint8)
    n_geo = geo_k.shape[0]
    mi_of_geo = np.empty(n_geo, np.int32)
    gme_of_geo = np.empty(n_geo, np.uint8)
    stamp = np.int64(1)
    for real in range(real_start, real_end):
        for i in range(num_sites):
            cluster[i] = i
            parent[i] = i
        for layer in range(depth):
            fill_bernoulli(k0, k1, real, layer, TAG_BONDS, thresh, gates)
            st = _dyck_layer(cluster, parent, in_use, old, gates, layer & 1)
            if st != 0:
                return 1
        surface_sizes(cluster, sizes)
        stamp = tally_geometries(cluster, sizes, geo_k, geo_row, geo_ptr,
                                 geo_sites, geo_region, seen, maskv, inside,
                                 stamp, do_indirect, hits, mi_sum, mi_sumsq,
                                 ind_hits, mi_of_geo, gme_of_geo)
    return 0


@njit(cache=True, nogil=True)
def _drive_tree(k0, k1, real_start, real_end, num_sites, levels, p, q,
                geo_k, geo_row, geo_ptr, geo_sites, geo_region, do_indirect,
                hits, mi_sum, mi_sumsq, ind_hits):
    cap = 2 * num_sites
    cluster = np.empty(num_sites, np.int32)
    parent = np.empty(cap, np.int32)
    in_use = np.empty(cap, np.uint8)
    old = np.empty(num_sites, np.int32)
    sizes = np.empty(cap, np.int32)
    seen = np.zeros(cap, np.int64)
    maskv = np.empty(cap, np.int32)
    inside = np.empty(cap, np.int32)
    identity = np.empty(num_sites, np.int32)
    for i in range(num_sites):
        identity[i] = i
    words = np.empty(max(num_sites // 2, 1), np.uint64)
    intra_a = np.empty(num_sites, np.int32)
    intra_b = np.empty(num_sites, np.int32)
    open_buf = np.ones(num_sites, np.uint8)
    pre = np.empty(num_sites, np.uint8)
    post = np.empty(num_sites, np.uint8)
    empty_i32 = np.zeros(0, np.int32)
    empty_u8 = np.zeros(0, np.uint8)
    tmp = np.empty(1, np.uint64)
    n_geo = geo_k.shape[0]
    mi_of_geo = np.empty(n_geo, np.int32)
    gme_of_geo = np.empty(n_geo, np.uint8)
    stamp = np.int64(1)
    for real in range(real_start, real_end):
        for i in range(num_sites):
            cluster[i] = i
            parent[i] = i
        fill_uniform_u64(k0, k1, real, 0, TAG_OFFSET, tmp)
        off = int(tmp[0] % np.uint64(num_sites))
        for level in range(levels):
            size = 1 << (levels - level)
            ng = num_sites // size
            fill_uniform_u64(k0, k1, real, level, TAG_BONDS, words[:ng])
            for i in range(num_sites):
                pre[i] = 1
                post[i] = 1
            m = 0
            for g in range(ng):
                u = float(words[g] >> np.uint64(11)) * 2.0 ** -53
                base = off + g * size
                for j in range(size - 1):
                    intra_a[m] = (base + j) % num_sites
                    intra_b[m] = (base + j + 1) % num_sites
                    m += 1
                if u < p * 0.5:
                    for j in range(size // 2):
                        post[(base + j) % num_sites] = 0
                elif u < p:
                    for j in range(size // 2, size):
                        post[(base + j) % num_sites] = 0
                elif u < p + q:
                    pass
                else:
                    for j in range(size):
                        pre[(base + j) % num_sites] = 0
            st = _advance(cluster, parent, in_use, old, empty_i32, empty_i32,
                          empty_u8, pre, identity)
            if st != 0:
                return 1
            st = _advance(cluster, parent, in_use, old, intra_a[:m], intra_b[:m],
                          open_buf[:m], post, identity)
            if st != 0:
                return 1
        surface_sizes(cluster, sizes)
        stamp = tally_geometries(cluster, sizes, geo_k, geo_row, geo_ptr,
                                 geo_sites, geo_region, seen, maskv, inside,
                                 stamp, do_indirect, hits, mi_sum, mi_sumsq,
                                 ind_hits, mi_of_geo, gme_of_geo)
    return 0


# ---------------------------------------------------------------------------
# Parallel execution with deterministic folding

@dataclass
class RunResult:
    config: RunConfig
    table: TallyTable
    report: Optional[dict]
    weighted_graph: Optional[dict]
    meta: dict
    out_files: dict


def _checkpoint_paths(out_dir: Path) -> tuple[Path, Path]:
    return out_dir / "checkpoint.npz", out_dir / "checkpoint.json"


def run_experiment(config: RunConfig,
                   progress: Optional[Callable[[int, int], None]] = None
                   ) -> RunResult:
    """Run the configured Monte Carlo experiment and build its outputs."""
    ens = config.ensemble()
    sets, row_of, rows = build_geometries(config)
    wg = config.weighted_graph if config.weighted_graph \
        and config.weighted_graph.enabled else None
    wg_geo = -1
    if wg is not None:
        try:
            wg_set = place_subregions_1d(wg.k, wg.width, config.num_sites,
                                         wg.spacing, wg.offset)
        except ValueError as exc:
            raise ConfigError(f"invalid weighted-graph geometry: {exc}") from exc
        rows.append(TallyRow(config.family.value, wg.k, wg.width, wg.spacing, 0,
                             analysis.eta_1d(wg_set)))
        sets.append(wg_set)
        row_of.append(len(rows) - 1)
        wg_geo = len(sets) - 1
    geo = flatten_geometries(sets, row_of, len(rows))
    k0, k1 = key_for_seed(config.master_seed)
    k0, k1 = np.uint64(k0), np.uint64(k1)
    thresh = np.uint64(bernoulli_threshold(config.prob))
    n = config.num_sites
    do_ind = config.measures.indirect
    t_win = 1
    if wg is not None:
        t_win = min(config.depth, wg.depth_window or n)

    if config.family is Family.MOC1D:
        intra_a, intra_b = chain_adjacency(n)
    elif config.family is Family.MOC2D:
        intra_a, intra_b = torus_adjacency(ens.side)
    else:
        intra_a = intra_b = None

    n_rows = len(rows)
    n_blocks = (config.iterations + config.block_size - 1) // config.block_size

    def run_block(bid: int) -> dict:
        start = bid * config.block_size
        end = min(config.iterations, start + config.block_size)
        out = {
            "hits": np.zeros(n_rows, np.int64),
            "mi_sum": np.zeros(n_rows, np.int64),
            "mi_sumsq": np.zeros(n_rows, np.int64),
            "ind": np.zeros(n_rows, np.int64),
            "count": end - start,
        }
        if wg is not None:
            out["wg_sum_h"] = np.zeros((t_win, n))
            out["wg_sum_v"] = np.zeros((t_win, n))
            raw_h = np.empty((t_win, n), np.uint8)
            raw_v = np.empty((t_win, n), np.uint8)
        else:
            out["wg_sum_h"] = np.zeros((1, 1))
            out["wg_sum_v"] = np.zeros((1, 1))
            raw_h = np.empty((1, 1), np.uint8)
            raw_v = np.empty((1, 1), np.uint8)
        if config.family in (Family.MOC1D, Family.MOC2D):
            msum, mcount, st = _drive_static(
                k0, k1, start, end, config.depth, thresh, intra_a, intra_b, n,
                geo.k, geo.row, geo.ptr, geo.sites, geo.region, do_ind,
                out["hits"], out["mi_sum"], out["mi_sumsq"], out["ind"],
                wg_geo, wg is not None and wg.measure == "mi",
                raw_h, raw_v, out["wg_sum_h"], out["wg_sum_v"])
            out["wg_msum"], out["wg_count"] = msum, mcount
        elif config.family is Family.DYCK:
            st = _drive_dyck(k0, k1, start, end, n, config.depth, thresh,
                             geo.k, geo.row, geo.ptr, geo.sites, geo.region,
                             do_ind, out["hits"], out["mi_sum"],
                             out["mi_sumsq"], out["ind"])
            out["wg_msum"], out["wg_count"] = 0.0, 0
        else:
            st = _drive_tree(k0, k1, start, end, n, ens.tree_levels,
                             config.prob, config.aux_prob or 0.0,
                             geo.k, geo.row, geo.ptr, geo.sites, geo.region,
                             do_ind, out["hits"], out["mi_sum"],
                             out["mi_sumsq"], out["ind"])
            out["wg_msum"], out["wg_count"] = 0.0, 0
        if st != 0:
            raise FreeListExhausted("cluster index demand exceeded 2N")
        return out

    totals = TallyTable.zeros(rows)
    wg_state = {"sum_h": np.zeros((t_win, n)) if wg else None,
                "sum_v": np.zeros((t_win, n)) if wg else None,
                "msum": 0.0, "count": 0}
    placements = geo.placements

    out_dir = Path(config.out_dir) if config.out_dir else None
    next_block = 0
    cfg_hash = config.config_hash()
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        next_block = _try_resume(config, out_dir, cfg_hash, totals, wg_state)

    def fold(block: dict) -> None:
        totals.hits += block["hits"]
        totals.mi_sum += block["mi_sum"]
        totals.mi_sumsq += block["mi_sumsq"]
        totals.indirect_hits += block["ind"]
        totals.iterations += block["count"] * placements
        totals.hits_bsq += block["hits"] ** 2
        totals.mi_bsq += block["mi_sum"] ** 2
        totals.indirect_bsq += block["ind"] ** 2
        totals.blocks += 1
        if wg is not None:
            wg_state["sum_h"] += block["wg_sum_h"]
            wg_state["sum_v"] += block["wg_sum_v"]
            wg_state["msum"] += block["wg_msum"]
            wg_state["count"] += block["wg_count"]

    t0 = time.perf_counter()
    pending: dict[int, dict] = {}
    folded = next_block
    if next_block < n_blocks:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            futures = {pool.submit(run_block, b): b
                       for b in range(next_block, n_blocks)}
            for fut in as_completed(futures):
                pending[futures[fut]] = fut.result()
                while folded in pending:
                    fold(pending.pop(folded))
                    folded += 1
                    if out_dir is not None and config.checkpoint_every_blocks \
                            and folded % config.checkpoint_every_blocks == 0:
                        _write_checkpoint(out_dir, cfg_hash, folded,
                                          config.block_size, config.iterations,
                                          totals, wg_state)
                if progress is not None:
                    progress(folded, n_blocks)
        if out_dir is not None and config.checkpoint_every_blocks:
            _write_checkpoint(out_dir, cfg_hash, folded, config.block_size,
                              config.iterations, totals, wg_state)
    duration = time.perf_counter() - t0

    report = None
    if config.fit.enabled:
        report = build_fit_report(totals, config.family, config.num_sites,
                                  config.prob, config.fit, config.iterations,
                                  config.measures)
    wg_out = None
    if wg is not None:
        wg_out = {
            "measure": wg.measure,
            "sum_measure": wg_state["msum"],
            "count": wg_state["count"],
            "horizontal": (wg_state["sum_h"] / wg_state["msum"]
                           if wg_state["msum"] > 0 else None),
            "vertical": (wg_state["sum_v"] / wg_state["msum"]
                         if wg_state["msum"] > 0 else None),
        }
    meta = {
        "config_hash": cfg_hash,
        "iterations": config.iterations,
        "zero_hit_rows": int((totals.hits == 0).sum()),
        "blocks": n_blocks,
        "workers": config.workers,
        "duration_s": duration,
        "realizations_per_s": (config.iterations - next_block * config.block_size)
        / duration if duration > 0 else None,
        "rows": len(rows),
        "subregion_sets": len(sets),
    }
    out_files = {}
    if out_dir is not None:
        out_files = _write_outputs(config, out_dir, totals, report, wg_out, meta)
    return RunResult(config, totals, report, wg_out, meta, out_files)


def _try_resume(config, out_dir, cfg_hash, totals, wg_state) -> int:
    npz_path, json_path = _checkpoint_paths(out_dir)
    if not (config.resume and npz_path.exists() and json_path.exists()):
        return 0
    meta = json.loads(json_path.read_text())
    if meta.get("version") != CHECKPOINT_VERSION or meta.get("config_hash") != cfg_hash:
        return 0
    # only whole folded blocks can seed an extended run
    next_block = int(meta["next_block"])
    n_blocks = (config.iterations + config.block_size - 1) // config.block_size
    if next_block > n_blocks or             meta.get("complete_through") != next_block * config.block_size:
        return 0
    data = np.load(npz_path)
    if data["hits"].shape != totals.hits.shape or "blocks" not in data:
        return 0
    totals.hits[:] = data["hits"]
    totals.mi_sum[:] = data["mi_sum"]
    totals.mi_sumsq[:] = data["mi_sumsq"]
    totals.indirect_hits[:] = data["indirect_hits"]
    totals.iterations[:] = data["iterations"]
    totals.hits_bsq[:] = data["hits_bsq"]
    totals.mi_bsq[:] = data["mi_bsq"]
    totals.indirect_bsq[:] = data["indirect_bsq"]
    totals.blocks = int(data["blocks"][0])
    if wg_state["sum_h"] is not None and "wg_sum_h" in data:
        wg_state["sum_h"][:] = data["wg_sum_h"]
        wg_state["sum_v"][:] = data["wg_sum_v"]
        wg_state["msum"] = float(meta["wg_msum"])
        wg_state["count"] = int(meta["wg_count"])
    return next_block


def _write_checkpoint(out_dir, cfg_hash, next_block, block_size, iterations,
                      totals, wg_state) -> None:
    npz_path, json_path = _checkpoint_paths(out_dir)
    arrays = dict(hits=totals.hits, mi_sum=totals.mi_sum, mi_sumsq=totals.mi_sumsq,
                  indirect_hits=totals.indirect_hits, iterations=totals.iterations,
                  hits_bsq=totals.hits_bsq, mi_bsq=totals.mi_bsq,
                  indirect_bsq=totals.indirect_bsq,
                  blocks=np.array([totals.blocks], dtype=np.int64))
    if wg_state["sum_h"] is not None:
        arrays["wg_sum_h"] = wg_state["sum_h"]
        arrays["wg_sum_v"] = wg_state["sum_v"]
    tmp = npz_path.with_suffix(".npz.tmp")
    with open(tmp, "wb") as fh:
        np.savez(fh, **arrays)
    os.replace(tmp, npz_path)
    meta = {"version": CHECKPOINT_VERSION, "config_hash": cfg_hash,
            "next_block": next_block,
            "complete_through": min(next_block * block_size, iterations),
            "wg_msum": wg_state["msum"], "wg_count": wg_state["count"]}
    tmp = json_path.with_suffix(".json.tmp")
    tmp.write_text(json.dumps(meta))
    os.replace(tmp, json_path)


def _write_outputs(config, out_dir: Path, totals, report, wg_out, meta) -> dict:
    from .weighted_graph import graph_to_csv
    out_files = {}
    tally_path = out_dir / "tally.csv"
    tally_path.write_text(totals.to_csv())
    out_files["tally"] = str(tally_path)
    if report is not None:
        p = out_dir / "fit_report.json"
        p.write_text(json.dumps(report, indent=2))
        out_files["fit_report"] = str(p)
    if wg_out is not None and wg_out["horizontal"] is not None:
        for orient in ("horizontal", "vertical"):
            p = out_dir / f"weighted_graph_{orient}.csv"
            p.write_text(graph_to_csv(wg_out[orient]))
            out_files[f"weighted_graph_{orient}"] = str(p)
    p = out_dir / "run_meta.json"
    p.write_text(json.dumps({**meta, "config": config.model_dump(mode="json")},
                            indent=2))
    out_files["run_meta"] = str(p)
    return out_files


# ---------------------------------------------------------------------------
# Fit reports

def _fit_result_dict(fit: analysis.FitResult) -> dict:
    return {"alpha": fit.alpha, "alpha_err": fit.alpha_err,
            "prefactor": fit.prefactor, "window": list(fit.window),
            "chi2_per_dof": fit.chi2_per_dof, "n_points": fit.n_points}


def eta_points(table: TallyTable, k: int, measure: str,
               min_events: int) -> list[EtaPoint]:
    pts = []
    for i, row in enumerate(table.rows):
        if row.k != k:
            continue
        if measure == "gme":
            events, rate, err = table.hits[i], table.rate(i), table.rate_stderr(i)
        elif measure == "mi":
            events, rate, err = table.mi_sum[i], table.mi_rate(i), table.mi_stderr(i)
        else:
            events, rate, err = (table.indirect_hits[i], table.indirect_rate(i),
                                 table.indirect_stderr(i))
        if events < min_events:
            continue
        pts.append(EtaPoint(row.eta, rate, err, {"k": k, "row": i}))
    return pts


def displacement_rate_grids(table: TallyTable, k: int, radius: float
                            ) -> tuple[np.ndarray, np.ndarray, float]:
    """Quadrant rate grids (GME, MI; NaN where unmeasured) from octant rows,
    mirrored across the diagonal; returns (gme_grid, mi_grid, iterations)."""
    idx = [i for i, r in enumerate(table.rows)
           if r.k == k and abs(r.width_or_radius - radius) < 1e-9]
    if not idx:
        raise AnalysisError(f"no rows for k={k} radius={radius}")
    max_c = int(max(max(table.rows[i].dx, table.rows[i].dy) for i in idx))
    grid_g = np.full((max_c + 1, max_c + 1), np.nan)
    grid_m = np.full((max_c + 1, max_c + 1), np.nan)
    omega = float(table.iterations[idx[0]])
    for i in idx:
        x, y = int(table.rows[i].dx), int(table.rows[i].dy)
        grid_g[x, y] = grid_g[y, x] = table.rate(i)
        grid_m[x, y] = grid_m[y, x] = table.mi_rate(i)
    return grid_g, grid_m, omega


def _fit_2d(fitopt: FitOptions, num_sites: int, table: TallyTable, k: int,
            measure: str) -> dict:
    """Angle-averaged per-radius fits plus finite-size extrapolation."""
    side = int(round(num_sites ** 0.5))
    window = fitopt.eta2d_windows.get(k, (0.2, 0.85))
    per_radius = []
    radii = sorted({r.width_or_radius for r in table.rows if r.k == k})
    details = []
    for radius in radii:
        grid_g, grid_m, omega = displacement_rate_grids(table, k, radius)
        grid = grid_g if measure == "gme" else grid_m
        pts = []
        for eta in np.geomspace(window[0], window[1], fitopt.eta2d_points):
            try:
                rate, err = analysis.angle_average(grid, omega, float(eta),
                                                   radius * radius, side,
                                                   fitopt.num_angles)
            except AnalysisError:
                continue
            if rate > 0 and rate * omega >= fitopt.min_events:
                pts.append(EtaPoint(float(eta), rate, err, {"radius": radius}))
        try:
            fit = analysis.fit_power_law(pts, window)
        except AnalysisError as exc:
            details.append({"radius": radius, "error": str(exc)})
            continue
        per_radius.append((radius, fit))
        details.append({"radius": radius, **_fit_result_dict(fit)})
    out = {"per_radius": details}
    if per_radius:
        fss = analysis.fss_extrapolate(per_radius)
        out["fss"] = {"alpha": fss.alpha, "spread": fss.spread,
                      "used_radii": list(fss.used_radii), "degraded": fss.degraded}
    return out


def _flat_records(report: dict) -> list[dict]:
    """Flat array view of every fitted exponent record."""
    records = []
    for measure in ("gme", "mi"):
        for k, entry in report.get(measure, {}).items():
            if "alpha" in entry:
                records.append({"measure": measure, "k": int(k), **entry})
            elif "fss" in entry:
                records.append({"measure": measure, "k": int(k),
                                "alpha": entry["fss"]["alpha"],
                                "alpha_err": entry["fss"]["spread"],
                                "finite_size": entry["per_radius"]})
    if "pair_decay" in report and "alpha" in report["pair_decay"]:
        records.append({"measure": "pair_decay", "k": 2,
                        **report["pair_decay"]})
    return records


def build_fit_report(table: TallyTable, family: Family, num_sites: int,
                     prob: float, fitopt: FitOptions,
                     iterations: Optional[int] = None,
                     measures: Optional[MeasureFlags] = None) -> dict:
    """Exponent fits plus relation checks, shaped by family; ``records``
    carries the flat array view of all fitted exponents. Disabled measures
    keep their tally columns but are left out of the report."""
    measures = measures or MeasureFlags()
    sections = [m for m, on in (("gme", measures.gme), ("mi", measures.mi))
                if on]
    report: dict = {"family": family.value, "iterations": iterations}
    if family is Family.MOC1D:
        all_fits: dict[str, dict[int, analysis.FitResult]] = {"gme": {},
                                                              "mi": {}}
        ks = sorted({r.k for r in table.rows})
        for measure in sections:
            block = {}
            for k in ks:
                pts = eta_points(table, k, measure, fitopt.min_events)
                try:
                    fit = analysis.fit_power_law(pts, fitopt.window_for(k, measure))
                    all_fits[measure][k] = fit
                    block[k] = _fit_result_dict(fit)
                except AnalysisError as exc:
                    block[k] = {"error": str(exc)}
            report[measure] = block
        if "gme" in sections:
            report["relation_checks"] = analysis.check_exponent_relations(
                all_fits["gme"], all_fits["mi"])
        report["predicted"] = {
            "gme": {k: analysis.predicted_exponent_1d(k) for k in ks},
            "mi": {k: analysis.predicted_mi_exponent_1d(k) for k in ks},
        }
    elif family is Family.MOC2D:
        ks = sorted({r.k for r in table.rows})
        for measure in sections:
            report[measure] = {k: _fit_2d(fitopt, num_sites, table, k, measure)
                               for k in ks}
    else:
        pts = [(table.rows[i].dx, table.rate(i), table.rate_stderr(i))
               for i in range(len(table.rows))
               if table.hits[i] >= fitopt.min_events]
        try:
            fit = analysis.fit_distance_decay(pts, fitopt.distance_window)
            report["pair_decay"] = _fit_result_dict(fit)
        except AnalysisError as exc:
            report["pair_decay"] = {"error": str(exc)}
        if family is Family.HYPERBOLIC:
            report["predicted_pair_decay"] = (2 * math.log2(2 / prob)
                                              if prob > 0 else None)
    report["records"] = _flat_records(report)
    return report
