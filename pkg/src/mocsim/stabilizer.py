"""Brute-force stabilizer simulation of small measurement-only circuits.

Generators are Pauli strings stored as X/Z bitmasks with a sign. Circuits
built from X and ZZ measurements on the all-|+> state keep every generator
purely X-type or purely Z-type, which this module asserts throughout; the
canonical form is then one X-string per cat-state cluster plus ZZ pairs
inside clusters, and the cluster partition can be read off directly.

Used as an end-to-end oracle for the percolation mapping on small systems
(N <= 64 so masks fit machine words comfortably as Python ints).
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .clusters import SurfacePartition
from .ensembles import EnsembleConfig, realization_layers
from .rng import TAG_OUTCOMES, draw_u64


class StructureError(RuntimeError):
    """Tableau left the X-string/ZZ-pair form: indicates a simulator bug."""


class OutcomeCoins:
    """Deterministic +-1 coins for random measurement outcomes, on their own
    counter stream so bond randomness and outcomes stay independent."""

    def __init__(self, master_seed: int, realization: int, salt: int = 0):
        self._seed = master_seed
        self._realization = realization
        self._salt = salt
        self._count = 0

    def next_bit(self) -> int:
        word = draw_u64(self._seed, self._realization, self._salt,
                        TAG_OUTCOMES, self._count)
        self._count += 1
        return word & 1


@dataclass
class Tableau:
    """N stabilizer generators over N qubits; sign bit 1 means negated."""

    n: int
    xs: list[int] = field(default_factory=list)
    zs: list[int] = field(default_factory=list)
    signs: list[int] = field(default_factory=list)

    @classmethod
    def plus_state(cls, n: int) -> "Tableau":
        if not 1 <= n <= 64:
            raise ValueError("oracle is sized for 1..64 qubits")
        return cls(n, [1 << i for i in range(n)], [0] * n, [0] * n)

    def _assert_pure(self, g: int) -> None:
        if self.xs[g] and self.zs[g]:
            raise StructureError(f"generator {g} mixes X and Z support")

    def _mul_into(self, g: int, h: int) -> None:
        # product of two same-type real Pauli strings: masks xor, signs xor
        self._assert_pure(g)
        self._assert_pure(h)
        if (self.xs[g] and self.zs[h]) or (self.zs[g] and self.xs[h]):
            raise StructureError("product would mix X and Z sectors")
        self.xs[g] ^= self.xs[h]
        self.zs[g] ^= self.zs[h]
        self.signs[g] ^= self.signs[h]

    def _anticommuting(self, x_p: int, z_p: int) -> list[int]:
        out = []
        for g in range(self.n):
            par = (self.xs[g] & z_p).bit_count() + (self.zs[g] & x_p).bit_count()
            if par % 2 == 1:
                out.append(g)
        return out

    def _measure(self, x_p: int, z_p: int, coins: OutcomeCoins) -> int:
        anti = self._anticommuting(x_p, z_p)
        if anti:
            g0 = anti[0]
            for g in anti[1:]:
                self._mul_into(g, g0)
            outcome_bit = coins.next_bit()
            self.xs[g0] = x_p
            self.zs[g0] = z_p
            self.signs[g0] = outcome_bit
            return -1 if outcome_bit else 1
        return self._deterministic_sign(x_p, z_p)

    def _deterministic_sign(self, x_p: int, z_p: int) -> int:
        """Express +-P over the generators (GF(2) elimination) to get the
        forced outcome. The state is unchanged by a deterministic measurement."""
        basis: dict[int, tuple[int, int]] = {}   # lowest set bit -> (mask, sign)
        for g in range(self.n):
            if not ((x_p and self.xs[g]) or (z_p and self.zs[g])):
                continue
            mask, sign = self.xs[g] | self.zs[g], self.signs[g]
            while mask:
                low = mask & -mask
                if low in basis:
                    bmask, bsign = basis[low]
                    mask ^= bmask
                    sign ^= bsign
                else:
                    basis[low] = (mask, sign)
                    break
        mask, sign = x_p | z_p, 0
        while mask:
            low = mask & -mask
            if low not in basis:
                raise StructureError("operator neither commutes into the group "
                                     "nor anticommutes with any generator")
            bmask, bsign = basis[low]
            mask ^= bmask
            sign ^= bsign
        return -1 if sign else 1

    def apply_x_measurement(self, site: int, coins: OutcomeCoins) -> int:
        return self._measure(1 << site, 0, coins)

    def apply_zz_measurement(self, i: int, j: int, coins: OutcomeCoins) -> int:
        if i == j:
            raise ValueError("ZZ needs two distinct sites")
        return self._measure(0, (1 << i) | (1 << j), coins)

    def apply_swap(self, i: int, j: int) -> None:
        for masks in (self.xs, self.zs):
            for g in range(self.n):
                bi = (masks[g] >> i) & 1
                bj = (masks[g] >> j) & 1
                if bi != bj:
                    masks[g] ^= (1 << i) | (1 << j)

    def extract_cat_partition(self) -> SurfacePartition:
        """Canonicalize and read the cluster partition off the X-strings."""
        x_rows = []
        z_rows = []
        for g in range(self.n):
            self._assert_pure(g)
            if self.xs[g]:
                x_rows.append(self.xs[g])
            elif self.zs[g]:
                z_rows.append(self.zs[g])
            else:
                raise StructureError("identity generator")
        x_red = _rref(x_rows)
        z_red = _rref(z_rows)
        if len(x_red) != len(x_rows) or len(z_red) != len(z_rows):
            raise StructureError("dependent generators")
        covered = 0
        for mask in x_red:
            if mask & covered:
                raise StructureError("canonical X-strings overlap")
            covered |= mask
        if covered != (1 << self.n) - 1:
            raise StructureError("X-strings do not cover every qubit")
        for mask in z_red:
            if mask.bit_count() != 2:
                raise StructureError("canonical Z generator is not a pair")
            if not any(mask & xm == mask for xm in x_red):
                raise StructureError("ZZ pair crosses cluster boundaries")
        clusters = [sorted(i for i in range(self.n) if mask >> i & 1)
                    for mask in x_red]
        return sorted(clusters, key=lambda c: c[0])


def _rref(rows: list[int]) -> list[int]:
    """Reduced row echelon form over GF(2); returns nonzero rows."""
    basis: list[int] = []
    for row in rows:
        for b in basis:
            if row & (b & -b):
                row ^= b
        if row:
            for idx, b in enumerate(basis):
                if b & (row & -row):
                    basis[idx] = b ^ row
            basis.append(row)
    return [b for b in basis if b]


def replay_realization(cfg: EnsembleConfig, master_seed: int, realization: int,
                       outcome_salt: int = 0) -> Tableau:
    """Drive a tableau through the same sampled circuit the percolation
    engines see (same bond stream, independent outcome stream)."""
    tab = Tableau.plus_state(cfg.num_sites)
    coins = OutcomeCoins(master_seed, realization, outcome_salt)
    for row in realization_layers(cfg, master_seed, realization):
        for m in range(len(row.intra_a)):
            if row.intra_open[m]:
                tab.apply_zz_measurement(int(row.intra_a[m]), int(row.intra_b[m]),
                                         coins)
        for site in range(row.num_sites):
            src = site
            if not row.inter_open[src]:
                tab.apply_x_measurement(site, coins)
        if row.perm_src is not None:
            done = set()
            for j in range(row.num_sites):
                src = int(row.perm_src[j])
                if src != j and (j, src) not in done:
                    tab.apply_swap(j, src)
                    done.add((src, j))
    return tab
