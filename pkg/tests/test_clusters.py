"""Rolling union-find engine: spec examples, invariants, and the flood-fill
equivalence oracle on materialized space-time graphs."""
import numpy as np
import pytest

from mocsim.clusters import (advance_layer, find_root, init_state, merge,
                             run_realization, surface_partition)
from mocsim.ensembles import EnsembleConfig, Family, LayerBonds, chain_adjacency
from mocsim.reference import canonical, materialized_surface_partition


def chain_row(n, intra_open, inter_open):
    a, b = chain_adjacency(n)
    return LayerBonds(n, a, b, np.asarray(intra_open, dtype=np.uint8),
                      np.asarray(inter_open, dtype=np.uint8))


class TestInit:
    def test_single_site(self):
        assert surface_partition(init_state(1)) == [[0]]

    def test_four_sites(self):
        assert surface_partition(init_state(4)) == [[0], [1], [2], [3]]

    def test_roots_are_identity(self):
        st = init_state(6)
        assert all(find_root(st, i) == i for i in range(6))


class TestMerge:
    def test_min_root_rule(self):
        st = init_state(5)
        merge(st, 1, 2)
        merge(st, 2, 3)
        assert find_root(st, 1) == find_root(st, 2) == find_root(st, 3) == 1

    def test_self_merge_noop(self):
        st = init_state(4)
        merge(st, 2, 2)
        assert surface_partition(st) == [[0], [1], [2], [3]]

    def test_matches_flood_fill_on_random_bond_set(self):
        rng = np.random.default_rng(0)
        n = 64
        st = init_state(n)
        bonds = [(int(i), int((i + 1) % n)) for i in range(n)
                 if rng.random() < 0.5]
        for i, j in bonds:
            merge(st, i, j)
        # independent reachability closure over the same bonds
        adj = {i: set() for i in range(n)}
        for i, j in bonds:
            adj[i].add(j)
            adj[j].add(i)
        seen, groups = set(), []
        for s in range(n):
            if s in seen:
                continue
            stack, comp = [s], set()
            while stack:
                u = stack.pop()
                if u in comp:
                    continue
                comp.add(u)
                stack.extend(adj[u] - comp)
            seen |= comp
            groups.append(tuple(sorted(comp)))
        assert canonical(surface_partition(st)) == sorted(groups)


class TestAdvance:
    def test_all_cut_resets_to_singletons(self):
        st = init_state(6)
        advance_layer(st, chain_row(6, [1] * 6, [0] * 6))
        assert surface_partition(st) == [[0], [1], [2], [3], [4], [5]]
        # fresh indices were assigned in ascending site order
        assert st.cluster.tolist() == sorted(st.cluster.tolist())

    def test_all_open_single_cluster(self):
        st = init_state(6)
        advance_layer(st, chain_row(6, [1] * 6, [1] * 6))
        assert surface_partition(st) == [[0, 1, 2, 3, 4, 5]]

    def test_partition_covers_all_sites(self):
        cfg = EnsembleConfig(Family.MOC1D, 32, 16, 0.5)
        st = run_realization(cfg, 3, 0)
        part = surface_partition(st)
        assert sorted(s for c in part for s in c) == list(range(32))

    def test_index_bound_two_n(self):
        # stress p near 0, 0.5 and 1: live indices never exceed 2N
        for p in (0.02, 0.5, 0.98):
            cfg = EnsembleConfig(Family.MOC1D, 24, 200, p)
            st = init_state(24)
            from mocsim.ensembles import realization_layers
            for row in realization_layers(cfg, 5, 0):
                advance_layer(st, row)
                live = int(st.in_use.sum())
                assert live <= 2 * 24
                assert max(st.cluster.tolist()) < 2 * 24


class TestHandTracedRealization:
    """Six-site circuit built to leave a 2-cat on {0,1}, a 3-cat on {2,4,5}
    and site 3 unentangled; the percolation trace was done by hand."""

    def rows(self):
        return [
            chain_row(6, [1, 0, 1, 0, 1, 0], [1, 1, 1, 0, 1, 1]),
            chain_row(6, [0, 0, 1, 1, 0, 0], [1, 1, 1, 0, 1, 1]),
        ]

    def test_engine(self):
        st = init_state(6)
        for row in self.rows():
            advance_layer(st, row)
        assert canonical(surface_partition(st)) == [(0, 1), (2, 4, 5), (3,)]

    def test_flood_fill_agrees(self):
        from mocsim.reference import canonical as canon
        # materialize the same rows through a stub config-independent path
        from collections import deque
        rows = self.rows()
        n = 6
        adj = [[] for _ in range((len(rows) + 1) * n)]
        for r, row in enumerate(rows):
            for m in range(len(row.intra_a)):
                if row.intra_open[m]:
                    u, v = r * n + int(row.intra_a[m]), r * n + int(row.intra_b[m])
                    adj[u].append(v)
                    adj[v].append(u)
            for j in range(n):
                if row.inter_open[j]:
                    adj[r * n + j].append((r + 1) * n + j)
                    adj[(r + 1) * n + j].append(r * n + j)
        label = [-1] * len(adj)
        nxt = 0
        for s in range(len(adj)):
            if label[s] >= 0:
                continue
            q = deque([s])
            label[s] = nxt
            while q:
                u = q.popleft()
                for v in adj[u]:
                    if label[v] < 0:
                        label[v] = nxt
                        q.append(v)
            nxt += 1
        groups = {}
        for site in range(n):
            groups.setdefault(label[len(rows) * n + site], []).append(site)
        assert canon(list(groups.values())) == [(0, 1), (2, 4, 5), (3,)]


FAMILY_CASES = [
    (Family.MOC1D, dict(num_sites=24, depth=24, prob=0.5)),
    (Family.MOC1D, dict(num_sites=64, depth=16, prob=0.3)),
    (Family.MOC2D, dict(num_sites=16, depth=12, prob=0.248812)),
    (Family.MOC2D, dict(num_sites=36, depth=8, prob=0.6)),
    (Family.DYCK, dict(num_sites=24, depth=24, prob=0.5)),
    (Family.DYCK, dict(num_sites=16, depth=12, prob=0.2)),
    (Family.HYPERBOLIC, dict(num_sites=32, depth=1, prob=0.6, aux_prob=0.2)),
    (Family.HYPERBOLIC, dict(num_sites=16, depth=1, prob=0.4, aux_prob=0.4)),
]


@pytest.mark.parametrize("family,kw", FAMILY_CASES)
def test_engine_equals_flood_fill(family, kw):
    cfg = EnsembleConfig(family, **kw)
    for real in range(30):
        got = canonical(surface_partition(run_realization(cfg, 11, real)))
        want = canonical(materialized_surface_partition(cfg, 11, real))
        assert got == want, (family, real)


def test_determinism_across_runs():
    cfg = EnsembleConfig(Family.MOC1D, 48, 32, 0.5)
    a = [canonical(surface_partition(run_realization(cfg, 9, r))) for r in range(5)]
    b = [canonical(surface_partition(run_realization(cfg, 9, r))) for r in range(5)]
    assert a == b
