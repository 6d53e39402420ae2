"""Random-circuit ensembles in their bond-percolation representation.

Each family is sampled as a stream of ``LayerBonds``: which intralayer
bonds are open (two-site ZZ measurements) and which sites keep their bond
to the next layer (no single-site X measurement). Samplers are pure
functions of (config, master_seed, realization, layer); see :mod:`rng`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, Optional

import numpy as np
from numba import njit

from .rng import (
    TAG_BONDS,
    TAG_OFFSET,
    bernoulli_threshold,
    fill_bernoulli,
    fill_uniform_u64,
    key_for_seed,
    uniform_index,
)


class Family(str, Enum):
    MOC1D = "moc1d"
    MOC2D = "moc2d"
    HYPERBOLIC = "hyperbolic"
    DYCK = "dyck"


@dataclass(frozen=True)
class EnsembleConfig:
    """One member of the circuit-family grid: lattice, depth and gate rates.

    ``num_sites`` is the total site count (for the 2D family it must be a
    perfect square L*L). ``depth`` counts ZZ+X layer pairs; the tree-structured
    family ignores it because its layer count is fixed by the system size.
    ``aux_prob`` is the branching rate q of the tree-structured family.
    """

    family: Family
    num_sites: int
    depth: int
    prob: float
    aux_prob: Optional[float] = None

    def __post_init__(self):
        if self.num_sites < 1:
            raise ValueError("num_sites must be positive")
        if self.depth < 1:
            raise ValueError("depth must be positive")
        if not 0.0 <= self.prob <= 1.0:
            raise ValueError(f"prob must be in [0, 1], got {self.prob}")
        if self.family is Family.MOC1D and self.num_sites < 2:
            raise ValueError("chain needs at least 2 sites")
        if self.family is Family.MOC2D:
            side = int(round(self.num_sites ** 0.5))
            if side * side != self.num_sites or side < 2:
                raise ValueError("2D family needs num_sites = L*L with L >= 2")
        if self.family is Family.HYPERBOLIC:
            n = self.num_sites.bit_length() - 1
            if 2 ** n != self.num_sites or n < 2:
                raise ValueError("tree family needs num_sites = 2**n with n >= 2")
            q = self.aux_prob if self.aux_prob is not None else 0.0
            if q < 0 or self.prob + q > 1.0:
                raise ValueError("need q >= 0 and p + q <= 1")
        elif self.aux_prob not in (None, 0.0):
            raise ValueError("aux_prob is only meaningful for the tree family")
        if self.family is Family.DYCK and self.num_sites % 2 != 0:
            raise ValueError("brickwork pairing needs an even number of sites")

    @property
    def side(self) -> int:
        if self.family is not Family.MOC2D:
            raise ValueError("side is only defined for the 2D family")
        return int(round(self.num_sites ** 0.5))

    @property
    def tree_levels(self) -> int:
        """Number of gate layers of the tree-structured family (n - 1)."""
        if self.family is not Family.HYPERBOLIC:
            raise ValueError("tree_levels is only defined for the tree family")
        return self.num_sites.bit_length() - 2


@dataclass
class LayerBonds:
    """One time-slice of the percolation model.

    ``intra_a[m]``-``intra_b[m]`` are the endpoints of intralayer bond m.
    ``intra_open[m]`` says whether that bond is open. ``inter_open[i]`` says
    whether the bond leaving site i toward the next layer is open (no X
    measurement). ``perm_src[j]``, when present, names the source site whose
    interlayer bond lands on next-layer site j (crossed bonds encode swaps);
    identity when absent.
    """

    num_sites: int
    intra_a: np.ndarray
    intra_b: np.ndarray
    intra_open: np.ndarray
    inter_open: np.ndarray
    perm_src: Optional[np.ndarray] = None

    def open_pairs(self) -> list[tuple[int, int]]:
        m = self.intra_open.astype(bool)
        return list(zip(self.intra_a[m].tolist(), self.intra_b[m].tolist()))


def chain_adjacency(n: int) -> tuple[np.ndarray, np.ndarray]:
    """The N ring bonds (i, i+1 mod N); for N=2 the two parallel bonds."""
    a = np.arange(n, dtype=np.int32)
    return a, (a + 1) % n


def torus_adjacency(side: int) -> tuple[np.ndarray, np.ndarray]:
    """The 2*L*L torus bonds: per site one +x and one +y bond (never deduplicated:
    for L=2 the wraparound partners are distinct, independently-sampled bonds)."""
    n = side * side
    s = np.arange(n, dtype=np.int32)
    x, y = s % side, s // side
    right = y * side + (x + 1) % side
    up = ((y + 1) % side) * side + x
    return (np.concatenate([s, s]).astype(np.int32),
            np.concatenate([right, up]).astype(np.int32))


def _bond_draws(cfg: EnsembleConfig, master_seed: int, realization: int,
                layer: int, count: int) -> np.ndarray:
    k0, k1 = key_for_seed(master_seed)
    out = np.empty(count, dtype=np.uint8)
    fill_bernoulli(k0, k1, realization, layer, TAG_BONDS,
                   np.uint64(bernoulli_threshold(cfg.prob)), out)
    return out


def sample_moc1d_layer(cfg: EnsembleConfig, master_seed: int, realization: int,
                       layer_index: int) -> LayerBonds:
    """Chain layer: N ring bonds open w.p. p, then N interlayer bonds open w.p. p."""
    assert cfg.family is Family.MOC1D and layer_index < cfg.depth
    n = cfg.num_sites
    bits = _bond_draws(cfg, master_seed, realization, layer_index, 2 * n)
    a, b = chain_adjacency(n)
    return LayerBonds(n, a, b, bits[:n].copy(), bits[n:].copy())


def sample_moc2d_layer(cfg: EnsembleConfig, master_seed: int, realization: int,
                       layer_index: int) -> LayerBonds:
    """Torus layer: 2L^2 square-lattice bonds then L^2 interlayer bonds, all w.p. p."""
    assert cfg.family is Family.MOC2D and layer_index < cfg.depth
    n = cfg.num_sites
    bits = _bond_draws(cfg, master_seed, realization, layer_index, 3 * n)
    a, b = torus_adjacency(cfg.side)
    return LayerBonds(n, a, b, bits[: 2 * n].copy(), bits[2 * n:].copy())


def sample_dyck_layer(cfg: EnsembleConfig, master_seed: int, realization: int,
                      layer_index: int) -> list[LayerBonds]:
    """Brickwork layer of two-site gates, emitted as 3 sub-rows.

    Gate on pair (i, j): with probability p the measure composite
    (ZZ, then X on both, then ZZ again); otherwise a swap, encoded as
    crossed interlayer bonds on the last sub-row.
    """
    assert cfg.family is Family.DYCK and layer_index < cfg.depth
    n = cfg.num_sites
    phase = layer_index % 2
    gates = _bond_draws(cfg, master_seed, realization, layer_index, n // 2)
    ga = (2 * np.arange(n // 2, dtype=np.int32) + phase) % n
    gb = (ga + 1) % n
    measured = gates.astype(bool)

    open_all = np.ones(n, dtype=np.uint8)
    cuts = np.ones(n, dtype=np.uint8)
    cuts[ga[measured]] = 0
    cuts[gb[measured]] = 0
    perm = np.arange(n, dtype=np.int32)
    perm[ga[~measured]] = gb[~measured]
    perm[gb[~measured]] = ga[~measured]

    zz = LayerBonds(n, ga, gb, gates.copy(), open_all.copy())
    xx = LayerBonds(n, ga, gb, np.zeros(n // 2, dtype=np.uint8), cuts)
    zz_again = LayerBonds(n, ga, gb, gates.copy(), open_all.copy(), perm_src=perm)
    return [zz, xx, zz_again]


# Gate patterns of the tree-structured family.
_PAT_LEFT, _PAT_RIGHT, _PAT_BRANCH, _PAT_REFLECT = 0, 1, 2, 3


def _tree_gate_patterns(cfg: EnsembleConfig, master_seed: int, realization: int,
                        level: int, num_gates: int) -> np.ndarray:
    k0, k1 = key_for_seed(master_seed)
    words = np.empty(num_gates, dtype=np.uint64)
    fill_uniform_u64(k0, k1, realization, level, TAG_BONDS, words)
    u = (words >> np.uint64(11)).astype(np.float64) * 2.0 ** -53
    p, q = cfg.prob, cfg.aux_prob if cfg.aux_prob is not None else 0.0
    pat = np.full(num_gates, _PAT_REFLECT, dtype=np.int32)
    pat[u < p + q] = _PAT_BRANCH
    pat[u < p] = _PAT_RIGHT
    pat[u < p / 2] = _PAT_LEFT
    return pat


def sample_hyperbolic_realization(cfg: EnsembleConfig, master_seed: int,
                                  realization: int) -> list[LayerBonds]:
    """Whole tree-circuit realization as 2 sub-rows per gate layer.

    A uniformly random circular offset cuts the ring first. Layer t
    (t = 0 first applied) holds gates of size 2**(n-1-t): a ZZ chain across
    each gate's sites, preceded by X on the whole input for reflection gates
    and followed by X on the left/right output half for transmission gates.
    """
    assert cfg.family is Family.HYPERBOLIC
    n = cfg.num_sites
    offset = uniform_index(master_seed, realization, TAG_OFFSET, n)
    rows: list[LayerBonds] = []
    for level in range(cfg.tree_levels):
        size = 2 ** (cfg.tree_levels - level)
        num_gates = n // size
        pat = _tree_gate_patterns(cfg, master_seed, realization, level, num_gates)

        pre_cut = np.ones(n, dtype=np.uint8)
        post_cut = np.ones(n, dtype=np.uint8)
        intra_a = np.empty(num_gates * (size - 1), dtype=np.int32)
        intra_b = np.empty_like(intra_a)
        m = 0
        for g in range(num_gates):
            sites = (offset + g * size + np.arange(size)) % n
            for j in range(size - 1):
                intra_a[m] = sites[j]
                intra_b[m] = sites[j + 1]
                m += 1
            if pat[g] == _PAT_REFLECT:
                pre_cut[sites] = 0
            elif pat[g] == _PAT_LEFT:
                post_cut[sites[: size // 2]] = 0
            elif pat[g] == _PAT_RIGHT:
                post_cut[sites[size // 2:]] = 0
        none = np.zeros(0, dtype=np.int32)
        rows.append(LayerBonds(n, none, none, np.zeros(0, dtype=np.uint8), pre_cut))
        rows.append(LayerBonds(n, intra_a, intra_b,
                               np.ones(m, dtype=np.uint8), post_cut))
    return rows


def realization_layers(cfg: EnsembleConfig, master_seed: int,
                       realization: int) -> Iterator[LayerBonds]:
    """Uniform stream view of one realization, for any family."""
    if cfg.family is Family.MOC1D:
        for t in range(cfg.depth):
            yield sample_moc1d_layer(cfg, master_seed, realization, t)
    elif cfg.family is Family.MOC2D:
        for t in range(cfg.depth):
            yield sample_moc2d_layer(cfg, master_seed, realization, t)
    elif cfg.family is Family.DYCK:
        for t in range(cfg.depth):
            yield from sample_dyck_layer(cfg, master_seed, realization, t)
    elif cfg.family is Family.HYPERBOLIC:
        yield from sample_hyperbolic_realization(cfg, master_seed, realization)
    else:  # pragma: no cover
        raise ValueError(f"unknown family {cfg.family}")


@dataclass
class RealizationWeights:
    """Raw (0/1) or convolved ([0,1]) edge weights on the 1+1D space-time grid.

    ``horizontal[t, i]`` is the ring bond (i, i+1) at layer t; ``vertical[t, i]``
    the interlayer bond leaving site i after layer t's ZZ row.
    """

    horizontal: np.ndarray
    vertical: np.ndarray


def realization_raw_weights(cfg: EnsembleConfig, master_seed: int,
                            realization: int) -> RealizationWeights:
    """Materialize the 0/1 bond-openness grid of one chain-family realization."""
    if cfg.family is not Family.MOC1D:
        raise ValueError("edge-weight grids are defined for the chain family")
    n, d = cfg.num_sites, cfg.depth
    h = np.empty((d, n), dtype=np.float64)
    v = np.empty((d, n), dtype=np.float64)
    for t in range(d):
        lb = sample_moc1d_layer(cfg, master_seed, realization, t)
        h[t] = lb.intra_open
        v[t] = lb.inter_open
    return RealizationWeights(h, v)
