"""Entanglement observables evaluated on a surface partition.

For k disjoint subregions A_1..A_k of the final layer:

- a GME hit is a cluster surface that touches every A_i and nothing else;
- the k-party mutual information (in units of ln 2) collects, from every
  cluster touching all A_i, 1 if the cluster also touches the exterior,
  and 2 (even k) or 0 (odd k) if it is confined to the union;
- an indirect hit is a chain of confined lower-party clusters that links
  all subregions when no direct hit exists.

Object-level functions work on explicit partitions; the jitted kernel at
the bottom evaluates many subregion sets per realization in O(sites
touched), for the Monte Carlo drivers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from numba import njit

from .clusters import SurfacePartition


@dataclass(frozen=True)
class SubregionSet:
    """k pairwise-disjoint site sets plus the geometry that produced them."""

    k: int
    regions: tuple[tuple[int, ...], ...]
    num_sites: int
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.k < 2:
            raise ValueError("need at least 2 subregions")
        if len(self.regions) != self.k:
            raise ValueError("region count does not match k")
        allsites = [s for r in self.regions for s in r]
        if len(set(allsites)) != len(allsites):
            raise ValueError("subregions overlap")
        if allsites and (min(allsites) < 0 or max(allsites) >= self.num_sites):
            raise ValueError("site index out of range")
        if any(len(r) == 0 for r in self.regions):
            raise ValueError("empty subregion")


def place_subregions_1d(k: int, width: int, num_sites: int,
                        spacing: Optional[int] = None, offset: int = 0) -> SubregionSet:
    """k intervals of equal width on the ring.

    With ``spacing`` given, consecutive left endpoints sit ``spacing`` apart;
    without it the intervals are evenly spaced at separation N/k (N must be
    divisible by k). Overlapping placements are rejected.
    """
    if width < 1:
        raise ValueError("width must be positive")
    if k * width > num_sites:
        raise ValueError(f"{k} regions of width {width} do not fit on {num_sites} sites")
    if spacing is None:
        if num_sites % k != 0:
            raise ValueError("even spacing needs num_sites divisible by k")
        spacing = num_sites // k
    regions = tuple(
        tuple(sorted((offset + m * spacing + j) % num_sites for j in range(width)))
        for m in range(k)
    )
    meta = {"width": width, "spacing": spacing, "num_sites": num_sites, "offset": offset}
    return SubregionSet(k, regions, num_sites, meta)


def disk_offsets(radius_sq: float) -> list[tuple[int, int]]:
    """Lattice points strictly inside the circle: squared distance < r^2."""
    rmax = int(math.isqrt(int(math.ceil(radius_sq))))
    pts = [(i, j) for i in range(-rmax, rmax + 1) for j in range(-rmax, rmax + 1)
           if i * i + j * j < radius_sq]
    return sorted(pts)


def square_corner_centers(x: int, y: int) -> list[tuple[int, int]]:
    """Centers (0,0), (x,y), (-y,x), (x-y,x+y): corners of a square of side
    sqrt(x^2+y^2), picked up one at a time as the party count grows."""
    return [(0, 0), (x, y), (-y, x), (x - y, x + y)]


def place_subregions_2d(k: int, radius_sq: float, x: int, y: int, side: int,
                        offset: tuple[int, int] = (0, 0)) -> SubregionSet:
    """k disk subregions on the torus, on corners of a displacement square."""
    if k not in (2, 3, 4):
        raise ValueError("2D placement supports k in {2, 3, 4}")
    if x * x + y * y <= 4 * radius_sq:
        raise ValueError("subregions intersect: need x^2 + y^2 > (2r)^2")
    disk = disk_offsets(radius_sq)
    if not disk:
        raise ValueError(f"radius_sq={radius_sq} encloses no lattice point")
    regions = []
    for cx, cy in square_corner_centers(x, y)[:k]:
        cx += offset[0]
        cy += offset[1]
        regions.append(tuple(sorted(((cy + j) % side) * side + ((cx + i) % side)
                                    for i, j in disk)))
    meta = {"radius_sq": radius_sq, "dx": x, "dy": y, "side": side, "offset": offset}
    return SubregionSet(k, tuple(regions), side * side, meta)


@dataclass(frozen=True)
class MeasureOutcome:
    gme_hit: bool
    mi_units: int          # in units of ln 2
    indirect_hit: bool


def _cluster_stats(partition: SurfacePartition, subs: SubregionSet):
    """Per cluster touching any region: (touch set, sites inside union, size)."""
    region_of = {}
    for ridx, region in enumerate(subs.regions):
        for s in region:
            region_of[s] = ridx
    stats = []
    for cl in partition:
        touched = set()
        inside = 0
        for s in cl:
            r = region_of.get(s)
            if r is not None:
                touched.add(r)
                inside += 1
        if touched:
            stats.append((touched, inside, len(cl)))
    return stats


def gme_hit(partition: SurfacePartition, subs: SubregionSet) -> bool:
    """Some cluster touches every subregion and lies inside their union."""
    for touched, inside, size in _cluster_stats(partition, subs):
        if len(touched) == subs.k and inside == size:
            return True
    return False


def mi_value(partition: SurfacePartition, subs: SubregionSet) -> int:
    """k-party mutual information in units of ln 2."""
    total = 0
    for touched, inside, size in _cluster_stats(partition, subs):
        if len(touched) != subs.k:
            continue
        if inside < size:
            total += 1
        elif subs.k % 2 == 0:
            total += 2
    return total


def indirect_gme_hit(partition: SurfacePartition, subs: SubregionSet) -> bool:
    """No direct hit, but confined clusters chain all subregions together."""
    if gme_hit(partition, subs):
        return False
    root = list(range(subs.k))

    def find(a):
        while root[a] != a:
            root[a] = root[root[a]]
            a = root[a]
        return a

    for touched, inside, size in _cluster_stats(partition, subs):
        if inside == size and len(touched) >= 2:
            it = iter(sorted(touched))
            first = find(next(it))
            for other in it:
                root[find(other)] = first
                first = find(first)
    return len({find(r) for r in range(subs.k)}) == 1


def measure_all(partition: SurfacePartition, subs: SubregionSet) -> MeasureOutcome:
    return MeasureOutcome(gme_hit(partition, subs), mi_value(partition, subs),
                          indirect_gme_hit(partition, subs))


# ---------------------------------------------------------------------------
# Flattened geometry tables + jitted tally kernel (hot path)

@dataclass
class GeometryTable:
    """Many SubregionSets flattened for the per-realization kernel.

    Several sets may share a tally row (translated placements of the same
    geometry); ``placements[row]`` counts them.
    """

    k: np.ndarray            # int32[G]
    row: np.ndarray          # int32[G]
    ptr: np.ndarray          # int64[G+1] into sites/region
    sites: np.ndarray        # int32[total]
    region: np.ndarray       # int8[total]
    num_rows: int
    placements: np.ndarray   # int64[num_rows]


def flatten_geometries(sets: Sequence[SubregionSet], rows: Sequence[int],
                       num_rows: int) -> GeometryTable:
    g = len(sets)
    k = np.empty(g, dtype=np.int32)
    row = np.empty(g, dtype=np.int32)
    ptr = np.zeros(g + 1, dtype=np.int64)
    sites_l: list[int] = []
    region_l: list[int] = []
    placements = np.zeros(num_rows, dtype=np.int64)
    for i, (subs, r) in enumerate(zip(sets, rows)):
        k[i] = subs.k
        row[i] = r
        placements[r] += 1
        for ridx, reg in enumerate(subs.regions):
            sites_l.extend(reg)
            region_l.extend([ridx] * len(reg))
        ptr[i + 1] = len(sites_l)
    return GeometryTable(k, row, ptr, np.asarray(sites_l, dtype=np.int32),
                         np.asarray(region_l, dtype=np.int8), num_rows, placements)


@njit(cache=True)
def surface_sizes(cluster, sizes):
    for i in range(sizes.shape[0]):
        sizes[i] = 0
    for i in range(cluster.shape[0]):
        sizes[cluster[i]] += 1


@njit(cache=True)
def tally_geometries(cluster, sizes, geo_k, geo_row, geo_ptr, geo_sites, geo_region,
                     seen, mask, inside, stamp0, do_indirect,
                     hits, mi_sum, mi_sumsq, ind_hits, mi_of_geo, gme_of_geo):
    """Evaluate every flattened SubregionSet against one realization.

    ``seen``/``mask``/``inside`` are 2N scratch arrays reused across calls via
    the ``stamp0`` counter. Returns the next free stamp. ``mi_of_geo`` and
    ``gme_of_geo`` get the per-geometry values (the weighted-graph driver
    reuses them as statistical weights).
    """
    g_count = geo_k.shape[0]
    max_sites = 0
    for g in range(g_count):
        span = geo_ptr[g + 1] - geo_ptr[g]
        if span > max_sites:
            max_sites = span
    uniq = np.empty(max(max_sites, 1), dtype=np.int32)
    rparent = np.empty(8, dtype=np.int32)
    for g in range(g_count):
        stamp = stamp0 + g + 1
        kk = geo_k[g]
        full_mask = (1 << kk) - 1
        n_uniq = 0
        for t in range(geo_ptr[g], geo_ptr[g + 1]):
            cid = cluster[geo_sites[t]]
            if seen[cid] != stamp:
                seen[cid] = stamp
                mask[cid] = 0
                inside[cid] = 0
                uniq[n_uniq] = cid
                n_uniq += 1
            mask[cid] |= 1 << geo_region[t]
            inside[cid] += 1
        got_gme = False
        mi = 0
        for r in range(kk):
            rparent[r] = r
        for u in range(n_uniq):
            cid = uniq[u]
            confined = inside[cid] == sizes[cid]
            if mask[cid] == full_mask:
                if confined:
                    got_gme = True
                    if kk % 2 == 0:
                        mi += 2
                else:
                    mi += 1
            if do_indirect and confined:
                base = -1
                for r in range(kk):
                    if mask[cid] & (1 << r):
                        a = r
                        while rparent[a] != a:
                            a = rparent[a]
                        if base < 0:
                            base = a
                        elif a != base:
                            rparent[a] = base
        rid = geo_row[g]
        if got_gme:
            hits[rid] += 1
        mi_sum[rid] += mi
        mi_sumsq[rid] += mi * mi
        mi_of_geo[g] = mi
        gme_of_geo[g] = 1 if got_gme else 0
        if do_indirect and not got_gme:
            connected = True
            a0 = 0
            while rparent[a0] != a0:
                a0 = rparent[a0]
            for r in range(1, kk):
                a = r
                while rparent[a] != a:
                    a = rparent[a]
                if a != a0:
                    connected = False
                    break
            if connected:
                ind_hits[rid] += 1
    return stamp0 + g_count + 1
