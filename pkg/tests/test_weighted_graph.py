"""Edge-weight convolution and measure-weighted accumulation."""
import numpy as np
import pytest

from mocsim.ensembles import RealizationWeights
from mocsim.weighted_graph import (NoHitsError, WeightedGraphAccumulator,
                                   accumulate_window, convolve, graph_to_csv)


def weights(h, v):
    return RealizationWeights(np.asarray(h, dtype=float),
                              np.asarray(v, dtype=float))


class TestConvolve:
    def test_all_zero(self):
        out = convolve(weights(np.zeros((3, 4)), np.zeros((3, 4))))
        assert not out.horizontal.any() and not out.vertical.any()

    def test_all_one(self):
        out = convolve(weights(np.ones((3, 4)), np.ones((3, 4))))
        assert np.allclose(out.horizontal, 1.0)
        assert np.allclose(out.vertical, 1.0)

    def test_single_horizontal_edge_stencil(self):
        # open edge (1,2) at layer 1 of a 4x4 grid of zeros
        h = np.zeros((4, 4))
        v = np.zeros((4, 4))
        h[1, 1] = 1.0
        out = convolve(weights(h, v))
        assert out.horizontal[1, 1] == 0.5          # 1/2 * (1 + 0)
        # vertical edges at layer 0, sites 1 and 2 see it as a next-layer neighbor
        assert out.vertical[0, 1] == 0.25
        assert out.vertical[0, 2] == 0.25
        assert out.vertical[1, 1] == 0.0            # its own layer is unaffected
        assert out.horizontal.sum() + out.vertical.sum() == pytest.approx(1.0)

    def test_output_bounded(self):
        rng = np.random.default_rng(0)
        raw = weights(rng.integers(0, 2, (6, 8)), rng.integers(0, 2, (6, 8)))
        out = convolve(raw)
        for grid in (out.horizontal, out.vertical):
            assert grid.min() >= 0.0 and grid.max() <= 1.0


class TestKernelEquivalence:
    def test_window_kernel_matches_convolve(self):
        rng = np.random.default_rng(3)
        t, n = 7, 9
        h = rng.integers(0, 2, (t, n)).astype(np.uint8)
        v = rng.integers(0, 2, (t, n)).astype(np.uint8)
        start = 3   # ring-buffer offset
        ring_h = np.roll(h, start, axis=0)
        ring_v = np.roll(v, start, axis=0)
        sum_h = np.zeros((t, n))
        sum_v = np.zeros((t, n))
        accumulate_window(ring_h, ring_v, start, 2.0, sum_h, sum_v)
        ref = convolve(weights(h, v))
        assert np.allclose(sum_h, 2.0 * ref.horizontal)
        assert np.allclose(sum_v, 2.0 * ref.vertical)


class TestAccumulator:
    def test_zero_measure_changes_nothing(self):
        acc = WeightedGraphAccumulator.zeros(2, 3)
        acc.accumulate(weights(np.ones((2, 3)), np.ones((2, 3))), 0.0)
        assert acc.sum_measure == 0.0 and acc.count == 1
        assert not acc.sum_horizontal.any()

    def test_linearity(self):
        w = weights(np.full((2, 2), 0.5), np.full((2, 2), 0.25))
        a = WeightedGraphAccumulator.zeros(2, 2)
        a.accumulate(w, 1.0)
        a.accumulate(w, 2.0)
        b = WeightedGraphAccumulator.zeros(2, 2)
        b.accumulate(w, 3.0)
        assert np.array_equal(a.sum_horizontal, b.sum_horizontal)
        assert a.sum_measure == b.sum_measure

    def test_merge_matches_serial_bitwise(self):
        rng = np.random.default_rng(5)
        ws = [weights(rng.random((3, 4)), rng.random((3, 4))) for _ in range(8)]
        ms = rng.random(8)
        serial = WeightedGraphAccumulator.zeros(3, 4)
        for w, m in zip(ws, ms):
            serial.accumulate(w, m)
        # fixed pairwise tree over 4 shards of 2
        shards = []
        for s in range(4):
            acc = WeightedGraphAccumulator.zeros(3, 4)
            for i in (2 * s, 2 * s + 1):
                acc.accumulate(ws[i], ms[i])
            shards.append(acc)
        shards[0].merge(shards[1])
        shards[2].merge(shards[3])
        shards[0].merge(shards[2])
        # same reduction order as serial accumulation is not required for
        # exactness here because merging sums block partials left to right
        assert np.allclose(shards[0].sum_horizontal, serial.sum_horizontal)
        assert shards[0].count == serial.count

    def test_finalize_normalizes(self):
        acc = WeightedGraphAccumulator.zeros(1, 2)
        acc.accumulate(weights([[0.5, 1.0]], [[0.0, 0.25]]), 1.0)
        out = acc.finalize()
        assert out.horizontal.tolist() == [[0.5, 1.0]]

    def test_constant_weights_survive(self):
        acc = WeightedGraphAccumulator.zeros(1, 1)
        for m in (1.0, 2.0, 5.0):
            acc.accumulate(weights([[0.7]], [[0.7]]), m)
        out = acc.finalize()
        assert out.horizontal[0, 0] == pytest.approx(0.7)

    def test_no_hits_error(self):
        acc = WeightedGraphAccumulator.zeros(1, 1)
        with pytest.raises(NoHitsError):
            acc.finalize()


def test_csv_roundtrip_shape():
    text = graph_to_csv(np.arange(6, dtype=float).reshape(2, 3))
    lines = text.strip().splitlines()
    assert len(lines) == 2 and len(lines[0].split(",")) == 3
