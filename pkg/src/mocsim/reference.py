"""Independent flood-fill oracle on the fully materialized space-time graph.

Used to certify the rolling cluster engine: the whole realization is laid
out as an explicit graph (one node layer per bond row, plus the surface)
and clusters are found by breadth-first search, with no shared code with
the union-find engine.
"""
from __future__ import annotations

from collections import deque

from .clusters import SurfacePartition
from .ensembles import EnsembleConfig, realization_layers


def materialized_surface_partition(cfg: EnsembleConfig, master_seed: int,
                                   realization: int) -> SurfacePartition:
    rows = list(realization_layers(cfg, master_seed, realization))
    n = cfg.num_sites
    num_levels = len(rows) + 1
    adj: list[list[int]] = [[] for _ in range(num_levels * n)]

    def node(level: int, site: int) -> int:
        return level * n + site

    for r, row in enumerate(rows):
        for m in range(len(row.intra_a)):
            if row.intra_open[m]:
                u, v = node(r, int(row.intra_a[m])), node(r, int(row.intra_b[m]))
                adj[u].append(v)
                adj[v].append(u)
        for j in range(n):
            src = int(row.perm_src[j]) if row.perm_src is not None else j
            if row.inter_open[src]:
                u, v = node(r, src), node(r + 1, j)
                adj[u].append(v)
                adj[v].append(u)

    label = [-1] * (num_levels * n)
    next_label = 0
    for start in range(num_levels * n):
        if label[start] >= 0:
            continue
        queue = deque([start])
        label[start] = next_label
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                if label[v] < 0:
                    label[v] = next_label
                    queue.append(v)
        next_label += 1

    top = len(rows)
    groups: dict[int, list[int]] = {}
    for site in range(n):
        groups.setdefault(label[node(top, site)], []).append(site)
    return list(groups.values())


def canonical(partition: SurfacePartition) -> list[tuple[int, ...]]:
    """Order-independent form for comparing partitions from different engines."""
    return sorted(tuple(sorted(c)) for c in partition)
