"""Similar tests for the three-factor product null via Latin squares.

A Latin square of order K assigns each (row band, column band) pair of the
first two statistics a band for the third; the union of the resulting open
boxes in |z|-space rejects with probability exactly alpha = 1/K whenever any
single coordinate has mean zero, because every band carries folded null
mass alpha.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

from .statmath import Interval, folded_interval_prob, std_normal_quantile

__all__ = [
    "LatinSquare",
    "RejectionRegion3D",
    "CornerNormalization",
    "cyclic_latin",
    "conjugate",
    "is_totally_symmetric",
    "normalize_corner",
    "build_latin_region",
    "rejects3",
    "analytic_power3",
    "square_to_json",
    "square_from_json",
]

_UNIT_FRACTION_TOL = 1e-9


@dataclass(frozen=True)
class LatinSquare:
    """Order-K square of symbols 1..K; every row and column is a permutation."""

    k: int
    grid: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        k = self.k
        if k < 1:
            raise ValueError(f"order must be >= 1, got {k!r}")
        grid = tuple(tuple(int(v) for v in row) for row in self.grid)
        object.__setattr__(self, "grid", grid)
        if len(grid) != k or any(len(row) != k for row in grid):
            raise ValueError(f"grid must be {k}x{k}")
        full = set(range(1, k + 1))
        for i, row in enumerate(grid):
            if set(row) != full:
                raise ValueError(f"row {i + 1} is not a permutation of 1..{k}")
        for j in range(k):
            if {row[j] for row in grid} != full:
                raise ValueError(f"column {j + 1} is not a permutation of 1..{k}")

    def __getitem__(self, ij: tuple[int, int]) -> int:
        """1-based entry access: square[i, j] = A_{i,j}."""
        i, j = ij
        return self.grid[i - 1][j - 1]


def cyclic_latin(k: int) -> LatinSquare:
    """The cyclic square A_{i,j} = ((i+j-2) mod K) + 1."""
    if k < 1:
        raise ValueError(f"order must be >= 1, got {k!r}")
    return LatinSquare(k, tuple(
        tuple((i + j) % k + 1 for j in range(k)) for i in range(k)))


def _validated_perm(perm) -> tuple[int, int, int]:
    p = tuple(int(v) for v in perm)
    if sorted(p) != [1, 2, 3]:
        raise ValueError(f"perm must be a permutation of (1, 2, 3), got {perm!r}")
    return p


def conjugate(a: LatinSquare, perm) -> LatinSquare:
    """Conjugate square under a permutation of (row, column, symbol) roles.

    Each cell of ``a`` is an orthogonal-array triple (i, j, A_{i,j}); the
    conjugate is the square whose triples are those with coordinates
    rearranged so that new position m holds old position perm[m]. The
    identity permutation returns an equal square.
    """
    p = _validated_perm(perm)
    k = a.k
    out = [[0] * k for _ in range(k)]
    for i in range(1, k + 1):
        for j in range(1, k + 1):
            triple = (i, j, a[i, j])
            r, c, s = (triple[p[0] - 1], triple[p[1] - 1], triple[p[2] - 1])
            out[r - 1][c - 1] = s
    return LatinSquare(k, tuple(tuple(row) for row in out))


def is_totally_symmetric(a: LatinSquare) -> bool:
    """True iff the square equals all six of its conjugates."""
    return all(conjugate(a, p) == a for p in itertools.permutations((1, 2, 3)))


@dataclass(frozen=True)
class CornerNormalization:
    """Result of corner normalization: the square plus the applied relabelings.

    Each permutation maps old label -> new label at position old-1.
    """

    square: LatinSquare
    row_perm: tuple[int, ...]
    col_perm: tuple[int, ...]
    sym_perm: tuple[int, ...]


def normalize_corner(a: LatinSquare) -> CornerNormalization:
    """Relabel so that the bottom-right entry equals the order K.

    A square with A_{K,K} = K puts the all-large box (c_{K-1}, inf)^3 in the
    region, which is what makes the test consistent along the diagonal. A
    symbol swap suffices; rows and columns are left alone.
    """
    k = a.k
    identity = tuple(range(1, k + 1))
    corner = a[k, k]
    if corner == k:
        return CornerNormalization(a, identity, identity, identity)
    swap = list(identity)
    swap[corner - 1], swap[k - 1] = k, corner
    grid = tuple(tuple(swap[v - 1] for v in row) for row in a.grid)
    return CornerNormalization(LatinSquare(k, grid), identity, identity, tuple(swap))


class RejectionRegion3D:
    """Union of pairwise-disjoint open boxes in the nonnegative |z| octant."""

    __slots__ = ("alpha", "boxes")

    def __init__(self, alpha: float, boxes):
        alpha = float(alpha)
        if not 0.0 < alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {alpha!r}")
        norm = []
        for b in boxes:
            x, y, z = b
            for iv in (x, y, z):
                if not isinstance(iv, Interval):
                    raise ValueError("each box must be a triple of Interval")
                if iv.lo < 0.0:
                    raise ValueError("boxes must lie in the nonnegative octant")
            norm.append((x, y, z))
        for b1, b2 in itertools.combinations(norm, 2):
            if all(min(i1.hi, i2.hi) > max(i1.lo, i2.lo) for i1, i2 in zip(b1, b2)):
                raise ValueError(f"boxes overlap: {b1} and {b2}")
        self.alpha = alpha
        self.boxes = tuple(norm)

    def __eq__(self, other):
        if not isinstance(other, RejectionRegion3D):
            return NotImplemented
        return self.alpha == other.alpha and self.boxes == other.boxes

    def __hash__(self):
        return hash((self.alpha, self.boxes))

    def __repr__(self):
        return f"RejectionRegion3D(alpha={self.alpha!r}, boxes=<{len(self.boxes)}>)"


def build_latin_region(a: LatinSquare, alpha: float) -> RejectionRegion3D:
    """Region of K^2 boxes (c_{i-1},c_i) x (c_{j-1},c_j) x (c_{A_ij-1},c_{A_ij}).

    c_k is the (1+k*alpha)/2 standard-normal quantile, so c_0 = 0 and
    c_K = inf. Requires alpha = 1/K for the square's order K. The square is
    used as given; apply normalize_corner first if consistency at large
    diagonal alternatives is wanted.
    """
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha!r}")
    if abs(1.0 / alpha - a.k) > _UNIT_FRACTION_TOL:
        raise ValueError(
            f"alpha={alpha!r} must be the reciprocal of the square's order {a.k}")
    k = a.k
    c = [std_normal_quantile((1.0 + i * alpha) / 2.0) for i in range(k + 1)]
    c[0] = 0.0
    bands = [Interval(c[i], c[i + 1]) for i in range(k)]
    boxes = []
    for i in range(1, k + 1):
        for j in range(1, k + 1):
            boxes.append((bands[i - 1], bands[j - 1], bands[a[i, j] - 1]))
    return RejectionRegion3D(alpha, boxes)


def _as_xyz(z) -> tuple[float, float, float]:
    z1, z2, z3 = (float(v) for v in z)
    for v in (z1, z2, z3):
        if v != v:
            raise ValueError("statistics must not be NaN")
    return z1, z2, z3


def rejects3(region: RejectionRegion3D, z) -> bool:
    """Open-box membership of (|z1|, |z2|, |z3|)."""
    z1, z2, z3 = _as_xyz(z)
    u = (abs(z1), abs(z2), abs(z3))
    return any(all(iv.contains(t) for iv, t in zip(box, u)) for box in region.boxes)


def analytic_power3(region: RejectionRegion3D, delta_star) -> float:
    """Exact rejection probability at a mean triple: sum over boxes of the
    product of per-axis folded normal masses."""
    d = _as_xyz(delta_star)
    total = 0.0
    for box in region.boxes:
        term = 1.0
        for iv, mu in zip(box, d):
            term *= folded_interval_prob(iv, mu)
            if term == 0.0:
                break
        total += term
    return min(1.0, total)


def square_to_json(a: LatinSquare) -> str:
    """Row-major integer-array document for a square."""
    return json.dumps({"order": a.k, "grid": [list(row) for row in a.grid]})


def square_from_json(text: str) -> LatinSquare:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"invalid square document: {exc}") from None
    if not isinstance(doc, dict) or "order" not in doc or "grid" not in doc:
        raise ValueError("square document must have 'order' and 'grid' fields")
    try:
        return LatinSquare(int(doc["order"]), tuple(tuple(row) for row in doc["grid"]))
    except (TypeError, ValueError) as exc:
        raise ValueError(f"invalid square document: {exc}") from None
