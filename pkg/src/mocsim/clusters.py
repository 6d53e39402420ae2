"""Rolling union-find over one layer of the percolation model.

Memory stays O(N) at any depth: cluster indices live in [0, 2N), merge
trees are collapsed at the end of every layer, and indices that left the
surface are recycled end-of-layer through an in-use scan. Union ties break
toward the smaller root index, which is observable in tests.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .ensembles import EnsembleConfig, LayerBonds, realization_layers

SurfacePartition = list[list[int]]


class FreeListExhausted(RuntimeError):
    """The 2N cluster-index bound was violated: an engine bug, not user error."""


@njit(inline="always", cache=True)
def _find(parent, idx):
    # path halving keeps per-find cost near constant without recursion
    while parent[idx] != idx:
        parent[idx] = parent[parent[idx]]
        idx = parent[idx]
    return idx


@njit(inline="always", cache=True)
def _union(parent, a, b):
    ra = _find(parent, a)
    rb = _find(parent, b)
    if ra < rb:
        parent[rb] = ra
    elif rb < ra:
        parent[ra] = rb


@njit(cache=True)
def _advance(cluster, parent, in_use, old, intra_a, intra_b, intra_open,
             inter_open, perm_src):
    n = cluster.shape[0]
    cap = parent.shape[0]
    for m in range(intra_a.shape[0]):
        if intra_open[m]:
            _union(parent, cluster[intra_a[m]], cluster[intra_b[m]])
    # collapse every site to its merge-tree root, then rebuild the in-use set
    for i in range(cap):
        in_use[i] = 0
    for i in range(n):
        r = _find(parent, cluster[i])
        cluster[i] = r
        in_use[r] = 1
        old[i] = r
    cursor = 0
    for j in range(n):
        src = perm_src[j]
        if inter_open[src]:
            cluster[j] = old[src]
        else:
            while cursor < cap and in_use[cursor]:
                cursor += 1
            if cursor >= cap:
                return 1
            cluster[j] = cursor
            parent[cursor] = cursor
            in_use[cursor] = 1
            cursor += 1
    return 0


@njit(cache=True)
def _merge_sites(cluster, parent, i, j):
    _union(parent, cluster[i], cluster[j])


@dataclass
class ClusterState:
    num_sites: int
    cluster: np.ndarray   # int32[N], cluster index per site
    parent: np.ndarray    # int32[2N], merge-tree parent links
    in_use: np.ndarray    # uint8[2N]
    _old: np.ndarray      # scratch, int32[N]
    _identity: np.ndarray

    def live_indices(self) -> np.ndarray:
        return np.flatnonzero(self.in_use).astype(np.int32)


def init_state(num_sites: int) -> ClusterState:
    if num_sites < 1:
        raise ValueError("num_sites must be positive")
    n = num_sites
    cluster = np.arange(n, dtype=np.int32)
    parent = np.arange(2 * n, dtype=np.int32)
    in_use = np.zeros(2 * n, dtype=np.uint8)
    in_use[:n] = 1
    return ClusterState(n, cluster, parent, in_use,
                        np.empty(n, dtype=np.int32),
                        np.arange(n, dtype=np.int32))


def merge(state: ClusterState, i: int, j: int) -> None:
    """Apply a ZZ bond between sites i and j (no-op when already merged)."""
    _merge_sites(state.cluster, state.parent, i, j)


def find_root(state: ClusterState, i: int) -> int:
    return int(_find(state.parent, state.cluster[i]))


def advance_layer(state: ClusterState, bonds: LayerBonds) -> None:
    """Apply one LayerBonds row: open intra bonds merge, closed interlayer
    bonds hand their site a fresh index (ascending site order), and all
    indices are collapsed to their merge-tree roots."""
    if bonds.num_sites != state.num_sites:
        raise ValueError("bond row does not match state size")
    perm = bonds.perm_src if bonds.perm_src is not None else state._identity
    status = _advance(state.cluster, state.parent, state.in_use, state._old,
                      bonds.intra_a, bonds.intra_b, bonds.intra_open,
                      bonds.inter_open, perm)
    if status != 0:
        raise FreeListExhausted("cluster index demand exceeded 2N")


def surface_partition(state: ClusterState) -> SurfacePartition:
    """Sites grouped by root cluster index, ordered by minimum site index."""
    groups: dict[int, list[int]] = {}
    for i in range(state.num_sites):
        r = int(_find(state.parent, state.cluster[i]))
        groups.setdefault(r, []).append(i)
    return list(groups.values())


def run_realization(cfg: EnsembleConfig, master_seed: int,
                    realization: int) -> ClusterState:
    """Object-path driver: advance a fresh state through a whole realization."""
    state = init_state(cfg.num_sites)
    for row in realization_layers(cfg, master_seed, realization):
        advance_layer(state, row)
    return state
