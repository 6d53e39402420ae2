"""Stabilizer oracle: measurement updates, canonical-form extraction, and
agreement with the percolation engines on replayed circuits."""
import numpy as np
import pytest

from mocsim.clusters import run_realization, surface_partition
from mocsim.ensembles import EnsembleConfig, Family
from mocsim.reference import canonical
from mocsim.stabilizer import (OutcomeCoins, StructureError, Tableau,
                               replay_realization)
from mocsim.validation import engine_vs_tableau


def coins():
    return OutcomeCoins(0, 0)


class TestMeasurementUpdates:
    def test_x_on_plus_state_leaves_tableau(self):
        tab = Tableau.plus_state(3)
        before = (list(tab.xs), list(tab.zs))
        out = tab.apply_x_measurement(1, coins())
        assert out == 1                      # |+> is the +1 eigenstate
        assert (tab.xs, tab.zs) == before

    def test_zz_builds_bell_pair(self):
        tab = Tableau.plus_state(2)
        tab.apply_zz_measurement(0, 1, coins())
        assert canonical(tab.extract_cat_partition()) == [(0, 1)]

    def test_x_breaks_bell_pair(self):
        tab = Tableau.plus_state(2)
        tab.apply_zz_measurement(0, 1, coins())
        tab.apply_x_measurement(0, coins())
        assert canonical(tab.extract_cat_partition()) == [(0,), (1,)]

    def test_zz_within_cluster_changes_nothing(self):
        tab = Tableau.plus_state(3)
        c = coins()
        tab.apply_zz_measurement(0, 1, c)
        tab.apply_zz_measurement(1, 2, c)
        part = canonical(tab.extract_cat_partition())
        out = tab.apply_zz_measurement(0, 2, c)   # inside the cluster
        assert canonical(tab.extract_cat_partition()) == part
        assert out in (1, -1)

    def test_zz_bridges_two_and_three_site_clusters(self):
        tab = Tableau.plus_state(5)
        c = coins()
        tab.apply_zz_measurement(0, 1, c)
        tab.apply_zz_measurement(2, 3, c)
        tab.apply_zz_measurement(3, 4, c)
        tab.apply_zz_measurement(1, 2, c)
        assert canonical(tab.extract_cat_partition()) == [(0, 1, 2, 3, 4)]

    def test_rank_preserved_on_random_circuit(self):
        rng = np.random.default_rng(1)
        tab = Tableau.plus_state(6)
        c = coins()
        for _ in range(200):
            if rng.random() < 0.5:
                tab.apply_x_measurement(int(rng.integers(6)), c)
            else:
                i = int(rng.integers(6))
                j = (i + 1) % 6
                tab.apply_zz_measurement(i, j, c)
            part = tab.extract_cat_partition()   # raises if not full rank / form
            assert sorted(s for cl in part for s in cl) == list(range(6))

    def test_swap_relabels(self):
        tab = Tableau.plus_state(3)
        tab.apply_zz_measurement(0, 1, coins())
        tab.apply_swap(1, 2)
        assert canonical(tab.extract_cat_partition()) == [(0, 2), (1,)]


class TestStructureChecks:
    def test_fresh_state_all_singletons(self):
        tab = Tableau.plus_state(4)
        assert tab.extract_cat_partition() == [[0], [1], [2], [3]]

    def test_mixed_generator_rejected(self):
        tab = Tableau.plus_state(2)
        tab.xs[0], tab.zs[0] = 1, 2
        with pytest.raises(StructureError):
            tab.extract_cat_partition()

    def test_hand_traced_realization(self):
        # the six-site circuit from test_clusters, replayed as measurements
        tab = Tableau.plus_state(6)
        c = coins()
        for a, b in ((0, 1), (2, 3), (4, 5)):
            tab.apply_zz_measurement(a, b, c)
        tab.apply_x_measurement(3, c)
        for a, b in ((2, 3), (3, 4)):
            tab.apply_zz_measurement(a, b, c)
        tab.apply_x_measurement(3, c)
        assert canonical(tab.extract_cat_partition()) == [(0, 1), (2, 4, 5), (3,)]


class TestOutcomeIndependence:
    def test_partition_ignores_outcome_randomness(self):
        cfg = EnsembleConfig(Family.MOC1D, 8, 8, 0.5)
        for real in range(40):
            a = replay_realization(cfg, 3, real, outcome_salt=0)
            b = replay_realization(cfg, 3, real, outcome_salt=123)
            assert canonical(a.extract_cat_partition()) == \
                canonical(b.extract_cat_partition())


class TestEngineAgreement:
    @pytest.mark.parametrize("family", [Family.MOC1D, Family.MOC2D])
    def test_engine_vs_tableau_sample(self, family):
        report = engine_vs_tableau([family], trials=60, max_sites=8,
                                   max_depth=8, probs=[0.1, 0.5, 0.9], seed=2)
        assert report.passed, report.mismatches[:3]

    def test_dyck_and_tree_also_agree(self):
        report = engine_vs_tableau([Family.DYCK, Family.HYPERBOLIC], trials=30,
                                   max_sites=8, max_depth=6,
                                   probs=[0.3, 0.7], seed=4)
        assert report.passed, report.mismatches[:3]
