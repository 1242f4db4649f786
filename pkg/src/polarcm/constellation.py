"""PAM constellations, bit labelings and the enumeration of labeling classes.

Bit-vector convention used throughout the package: a label ``(b_1, ..., b_m)``
is stored as the integer ``u = sum_j b_j * 2**(j-1)``, i.e. ``b_1`` is the
least significant bit.  ``b_1`` is the first level decoded by the multistage
receiver, so "the prior bits of level j" are always the ``j-1`` low bits.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

MAX_BITS_PER_SYMBOL = 6


class LabelingFamily(enum.Enum):
    NATURAL = "natural"
    GRAY = "gray"
    CANONICAL = "canonical"
    EXPLICIT = "explicit"


@dataclass(frozen=True)
class Constellation:
    """Real one-dimensional constellation with unit average energy."""

    points: np.ndarray = field(repr=False)
    bits_per_symbol: int

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.size != 1 << self.bits_per_symbol:
            raise ValueError("constellation must have 2**bits_per_symbol points")
        if np.any(np.diff(pts) <= 0):
            raise ValueError("constellation points must be strictly increasing")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def order(self) -> int:
        return self.points.size

    @property
    def m(self) -> int:
        return self.bits_per_symbol

    def __eq__(self, other):
        if not isinstance(other, Constellation):
            return NotImplemented
        return self.bits_per_symbol == other.bits_per_symbol and np.array_equal(
            self.points, other.points
        )

    def __hash__(self):
        return hash((self.bits_per_symbol, self.points.tobytes()))


def make_pam(m: int) -> Constellation:
    """Equally spaced 2**m-PAM scaled to unit mean energy."""
    if not isinstance(m, (int, np.integer)) or not 1 <= m <= MAX_BITS_PER_SYMBOL:
        raise ValueError(f"bits per symbol must be in 1..{MAX_BITS_PER_SYMBOL}, got {m!r}")
    M = 1 << m
    raw = 2.0 * np.arange(M) - (M - 1)
    # mean of (2k - (M-1))^2 over k is (M^2 - 1) / 3
    return Constellation(raw / math.sqrt((M * M - 1) / 3.0), int(m))


@dataclass(frozen=True)
class Labeling:
    """Bijection from m-bit labels to constellation point indices.

    ``table[u]`` is the point index carrying the label whose integer value is
    ``u`` (``b_1`` least significant).
    """

    table: tuple
    bits_per_symbol: int
    family: LabelingFamily = field(default=LabelingFamily.EXPLICIT, compare=False)

    def __post_init__(self):
        table = tuple(int(t) for t in self.table)
        if len(table) != 1 << self.bits_per_symbol:
            raise ValueError("labeling table must have 2**m entries")
        if sorted(table) != list(range(len(table))):
            raise ValueError(f"labeling table is not a permutation: {table}")
        object.__setattr__(self, "table", table)

    @property
    def m(self) -> int:
        return self.bits_per_symbol

    @classmethod
    def from_sequence(cls, table: Sequence[int]) -> "Labeling":
        m = len(table).bit_length() - 1
        if len(table) != 1 << m:
            raise ValueError("labeling length must be a power of two")
        return cls(tuple(table), m)

    def inverse(self) -> np.ndarray:
        """``inverse()[k]`` is the integer label of point ``k``."""
        inv = np.empty(len(self.table), dtype=np.int64)
        inv[np.asarray(self.table)] = np.arange(len(self.table))
        return inv

    def labels_of_points(self) -> list[str]:
        """Bit strings ``b_m...b_1`` of each point, in point order."""
        return [format(int(u), f"0{self.m}b") for u in self.inverse()]

    def to_string(self) -> str:
        return "-".join(str(t) for t in self.table)

    @classmethod
    def from_string(cls, text: str) -> "Labeling":
        return cls.from_sequence([int(t) for t in text.strip().split("-")])

    def flip_bit(self, level: int, context: int | None = None) -> "Labeling":
        """Complement bit ``b_level`` of every label.

        With ``context`` given, only labels whose ``level-1`` low bits equal
        ``context`` are complemented.
        """
        if not 1 <= level <= self.m:
            raise ValueError("level out of range")
        mask = 1 << (level - 1)
        low = mask - 1
        new = list(self.table)
        for u in range(len(self.table)):
            if context is None or (u & low) == context:
                new[u ^ mask] = self.table[u]
        return Labeling(tuple(new), self.m)


def _bits_to_int(bits) -> int:
    bits = [int(b) for b in bits]
    if any(b not in (0, 1) for b in bits):
        raise ValueError("bits must be 0 or 1")
    return sum(b << j for j, b in enumerate(bits))


def apply_labeling(lab: Labeling, c: Constellation, bits) -> float:
    """Amplitude of the point labeled by ``bits = (b_1, ..., b_m)``."""
    if lab.m != c.m:
        raise ValueError(f"labeling has m={lab.m} but constellation has m={c.m}")
    if len(bits) != lab.m:
        raise ValueError(f"expected {lab.m} bits, got {len(bits)}")
    return float(c.points[lab.table[_bits_to_int(bits)]])


def modulate(lab: Labeling, c: Constellation, labels: np.ndarray) -> np.ndarray:
    """Vectorised mapping of integer labels to amplitudes."""
    if lab.m != c.m:
        raise ValueError(f"labeling has m={lab.m} but constellation has m={c.m}")
    return c.points[np.asarray(lab.table)[labels]]


def natural_labeling(m: int) -> Labeling:
    return Labeling(tuple(range(1 << m)), m, LabelingFamily.NATURAL)


def gray_labeling(m: int) -> Labeling:
    """Binary-reflected Gray code: point k carries label k ^ (k >> 1)."""
    table = [0] * (1 << m)
    for k in range(1 << m):
        table[k ^ (k >> 1)] = k
    return Labeling(tuple(table), m, LabelingFamily.GRAY)


def count_candidates(m: int) -> int:
    """Number of labeling classes, (2**m)! / 2**(2**m - 1)."""
    if not isinstance(m, (int, np.integer)) or not 1 <= m <= 5:
        raise ValueError(f"count_candidates supports 1 <= m <= 5, got {m!r}")
    M = 1 << m
    return math.factorial(M) >> (M - 1)


def canonicalize(lab: Labeling) -> Labeling:
    """Representative of ``lab`` under the context-wise bit-flip group.

    For each level ``j`` and each value of the ``j-1`` prior bits, the subset
    of points with ``b_j = 0`` must contain the lowest-indexed point of that
    context; otherwise ``b_j`` is complemented within the context.
    """
    cur = lab
    for level in range(1, lab.m + 1):
        mask = 1 << (level - 1)
        for ctx in range(mask):
            table = cur.table
            members = [u for u in range(len(table)) if (u & (mask - 1)) == ctx]
            lowest = min(members, key=lambda u: table[u])
            if lowest & mask:
                cur = cur.flip_bit(level, ctx)
    return Labeling(cur.table, lab.m, LabelingFamily.CANONICAL)


def _partitions(points: tuple) -> Iterator[dict]:
    # yields {point: code}; the top split sets the least significant code bit
    if len(points) == 1:
        yield {points[0]: 0}
        return
    half = len(points) // 2
    first, rest = points[0], points[1:]
    for chosen in itertools.combinations(rest, half - 1):
        zero = (first,) + chosen
        one = tuple(p for p in rest if p not in chosen)
        for left in _partitions(zero):
            for right in _partitions(one):
                code = {p: c << 1 for p, c in left.items()}
                code.update({p: (c << 1) | 1 for p, c in right.items()})
                yield code


def enumerate_canonical_labelings(m: int, allow_large: bool = False) -> Iterator[Labeling]:
    """Yield one labeling per bit-flip equivalence class, depth first.

    The first split partitions all points by ``b_1``; each half is then split
    by ``b_2`` and so on.  The half holding the lowest-indexed point of a
    split always gets bit value 0, and splits are visited in lexicographic
    subset order.
    """
    if not 1 <= m <= 4:
        raise ValueError(f"enumeration supports 1 <= m <= 4, got {m!r}")
    if m == 4 and not allow_large:
        raise ValueError("m=4 yields ~6.4e8 labelings; pass allow_large=True to proceed")
    for code in _partitions(tuple(range(1 << m))):
        table = [0] * (1 << m)
        for point, u in code.items():
            table[u] = point
        yield Labeling(tuple(table), m, LabelingFamily.CANONICAL)


def labeling_for(family: str | LabelingFamily, m: int) -> Labeling:
    family = LabelingFamily(family)
    if family is LabelingFamily.NATURAL:
        return natural_labeling(m)
    if family is LabelingFamily.GRAY:
        return gray_labeling(m)
    raise ValueError(f"no default labeling for family {family.value!r}")
