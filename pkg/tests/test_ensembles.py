"""Family samplers: structure of the emitted bond rows and their statistics."""
import numpy as np
import pytest

from mocsim.ensembles import (EnsembleConfig, Family, chain_adjacency,
                              realization_layers, sample_dyck_layer,
                              sample_hyperbolic_realization, sample_moc1d_layer,
                              sample_moc2d_layer, torus_adjacency)


def cfg1d(n=16, d=8, p=0.5):
    return EnsembleConfig(Family.MOC1D, n, d, p)


class TestConfigValidation:
    def test_prob_range(self):
        with pytest.raises(ValueError):
            EnsembleConfig(Family.MOC1D, 8, 4, 1.2)

    def test_2d_needs_square(self):
        with pytest.raises(ValueError):
            EnsembleConfig(Family.MOC2D, 12, 4, 0.5)

    def test_tree_needs_power_of_two(self):
        with pytest.raises(ValueError):
            EnsembleConfig(Family.HYPERBOLIC, 12, 4, 0.5, 0.1)
        with pytest.raises(ValueError):
            EnsembleConfig(Family.HYPERBOLIC, 2, 1, 0.5, 0.1)  # needs n >= 2

    def test_tree_prob_budget(self):
        with pytest.raises(ValueError):
            EnsembleConfig(Family.HYPERBOLIC, 8, 2, 0.8, 0.3)
        EnsembleConfig(Family.HYPERBOLIC, 8, 2, 0.8, 0.2)

    def test_dyck_needs_even(self):
        with pytest.raises(ValueError):
            EnsembleConfig(Family.DYCK, 7, 4, 0.5)

    def test_aux_only_for_tree(self):
        with pytest.raises(ValueError):
            EnsembleConfig(Family.MOC1D, 8, 4, 0.5, 0.1)


class TestChainLayers:
    def test_p_one_everything_open(self):
        lb = sample_moc1d_layer(cfg1d(p=1.0), 0, 0, 0)
        assert lb.intra_open.all() and lb.inter_open.all()

    def test_p_zero_everything_closed(self):
        lb = sample_moc1d_layer(cfg1d(p=0.0), 0, 0, 0)
        assert not lb.intra_open.any() and not lb.inter_open.any()

    def test_adjacency_is_ring(self):
        a, b = chain_adjacency(6)
        assert list(zip(a.tolist(), b.tolist())) == [
            (0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0)]

    def test_mean_open_fraction(self):
        # ~10^6 bonds at p=0.5: within 3-sigma binomial error, fixed seed
        cfg = cfg1d(n=512, d=1, p=0.5)
        total = open_count = 0
        for real in range(1000):
            lb = sample_moc1d_layer(cfg, 7, real, 0)
            open_count += int(lb.intra_open.sum()) + int(lb.inter_open.sum())
            total += 2 * cfg.num_sites
        sigma = np.sqrt(0.25 / total)
        assert abs(open_count / total - 0.5) < 3 * sigma

    def test_deterministic(self):
        lb1 = sample_moc1d_layer(cfg1d(), 42, 3, 5)
        lb2 = sample_moc1d_layer(cfg1d(), 42, 3, 5)
        assert np.array_equal(lb1.intra_open, lb2.intra_open)
        assert np.array_equal(lb1.inter_open, lb2.inter_open)


class TestTorusLayers:
    def test_l2_has_eight_intralayer_bonds(self):
        # each site contributes one +x and one +y bond; for L=2 the wraparound
        # partners coincide as site pairs but stay distinct, independent bonds
        a, b = torus_adjacency(2)
        assert len(a) == 8
        pairs = sorted(zip(a.tolist(), b.tolist()))
        assert len(pairs) == 8
        cfg = EnsembleConfig(Family.MOC2D, 4, 2, 0.7)
        lb = sample_moc2d_layer(cfg, 0, 0, 0)
        assert lb.intra_open.shape == (8,) and lb.inter_open.shape == (4,)

    def test_p_one_fully_open(self):
        cfg = EnsembleConfig(Family.MOC2D, 9, 2, 1.0)
        lb = sample_moc2d_layer(cfg, 0, 0, 0)
        assert lb.intra_open.all() and lb.inter_open.all()

    def test_mean_open_fraction_near_critical_point_per_orientation(self):
        # >= 10^6 bonds per orientation (x, y, interlayer), each within 4 sigma
        p = 0.248812
        n = 32 * 32
        cfg = EnsembleConfig(Family.MOC2D, n, 1, p)
        counts = np.zeros(3, dtype=np.int64)
        per = 0
        for real in range(1000):
            lb = sample_moc2d_layer(cfg, 11, real, 0)
            counts[0] += int(lb.intra_open[:n].sum())     # +x bonds
            counts[1] += int(lb.intra_open[n:].sum())     # +y bonds
            counts[2] += int(lb.inter_open.sum())
            per += n
        sigma = np.sqrt(p * (1 - p) / per)
        for c in counts:
            assert abs(c / per - p) < 4 * sigma


class TestDyckLayers:
    def test_three_sub_rows(self):
        cfg = EnsembleConfig(Family.DYCK, 8, 4, 0.5)
        rows = sample_dyck_layer(cfg, 0, 0, 0)
        assert len(rows) == 3
        zz, xx, zz2 = rows
        assert np.array_equal(zz.intra_open, zz2.intra_open)
        assert zz.perm_src is None and zz2.perm_src is not None

    def test_p_zero_all_swaps(self):
        cfg = EnsembleConfig(Family.DYCK, 8, 4, 0.0)
        zz, xx, zz2 = sample_dyck_layer(cfg, 0, 0, 0)
        assert not zz.intra_open.any()
        assert xx.inter_open.all()          # no X measurements
        perm = zz2.perm_src
        assert sorted(perm.tolist()) == list(range(8))
        assert all(perm[perm[i]] == i and perm[i] != i for i in range(8))

    def test_brickwork_alternates(self):
        cfg = EnsembleConfig(Family.DYCK, 8, 4, 1.0)
        even = sample_dyck_layer(cfg, 0, 0, 0)[0]
        odd = sample_dyck_layer(cfg, 0, 0, 1)[0]
        assert even.intra_a.tolist() == [0, 2, 4, 6]
        assert odd.intra_a.tolist() == [1, 3, 5, 7]

    def test_gate_rate(self):
        # >= 1e6 sampled gate decisions at 4 sigma
        cfg = EnsembleConfig(Family.DYCK, 1024, 1, 0.3)
        total = fired = 0
        for real in range(2000):
            zz, _, _ = sample_dyck_layer(cfg, 3, real, 0)
            fired += int(zz.intra_open.sum())
            total += 512
        sigma = np.sqrt(0.3 * 0.7 / total)
        assert abs(fired / total - 0.3) < 4 * sigma


class TestTreeRealizations:
    def test_n8_structure(self):
        # two gate layers: sizes 4 then 2, each as (pre-cut, chain) sub-rows
        cfg = EnsembleConfig(Family.HYPERBOLIC, 8, 1, 0.5, 0.2)
        assert cfg.tree_levels == 2
        rows = sample_hyperbolic_realization(cfg, 0, 0)
        assert len(rows) == 4
        assert len(rows[0].intra_a) == 0
        assert len(rows[1].intra_a) == 2 * (4 - 1)   # 2 gates of size 4
        assert len(rows[3].intra_a) == 4 * (2 - 1)   # 4 gates of size 2

    def test_p_one_is_all_transmission(self):
        cfg = EnsembleConfig(Family.HYPERBOLIC, 16, 1, 1.0, 0.0)
        rows = sample_hyperbolic_realization(cfg, 5, 9)
        for pre, main in zip(rows[::2], rows[1::2]):
            assert pre.inter_open.all()            # no reflections
            gates = len(main.intra_a) and True
            # each gate cut exactly one half of its output
            assert int(main.inter_open.sum()) == cfg.num_sites // 2

    def test_pattern_frequencies(self):
        p, q = 0.5, 0.2
        cfg = EnsembleConfig(Family.HYPERBOLIC, 64, 1, p, q)
        counts = {"left": 0, "right": 0, "branch": 0, "reflect": 0}
        total = 0
        from mocsim.ensembles import _tree_gate_patterns
        for real in range(32000):
            pat = _tree_gate_patterns(cfg, 17, real, 0, 32)
            counts["left"] += int((pat == 0).sum())
            counts["right"] += int((pat == 1).sum())
            counts["branch"] += int((pat == 2).sum())
            counts["reflect"] += int((pat == 3).sum())
            total += 32
        for name, expected in (("left", p / 2), ("right", p / 2),
                               ("branch", q), ("reflect", 1 - p - q)):
            sigma = np.sqrt(expected * (1 - expected) / total)
            assert abs(counts[name] / total - expected) < 4 * sigma, name

    def test_pure_transmission_leaves_singletons(self):
        # p=1, q=0: every gate transmits, so each tree path keeps a single
        # surviving trajectory and no multi-site cat state can form
        from mocsim.clusters import run_realization, surface_partition
        cfg = EnsembleConfig(Family.HYPERBOLIC, 16, 1, 1.0, 0.0)
        for real in range(10):
            part = surface_partition(run_realization(cfg, 7, real))
            assert all(len(c) == 1 for c in part)
        branchy = EnsembleConfig(Family.HYPERBOLIC, 16, 1, 0.5, 0.4)
        assert any(len(c) > 1
                   for real in range(10)
                   for c in surface_partition(run_realization(branchy, 7, real)))

    def test_claim_bound_exponent_constant(self):
        # 2-party decay target k*log2(2/p) at p=1/2 is 4
        import math
        assert 2 * math.log2(2 / 0.5) == 4.0


def test_stream_lengths():
    assert len(list(realization_layers(cfg1d(n=8, d=5), 0, 0))) == 5
    dyck = EnsembleConfig(Family.DYCK, 8, 5, 0.5)
    assert len(list(realization_layers(dyck, 0, 0))) == 15
    tree = EnsembleConfig(Family.HYPERBOLIC, 16, 1, 0.5, 0.1)
    assert len(list(realization_layers(tree, 0, 0))) == 2 * 3
