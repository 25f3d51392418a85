"""Three-factor regions built from Latin squares."""

import itertools

import numpy as np
import pytest

from compnull.latin3 import (
    CornerNormalization,
    LatinSquare,
    RejectionRegion3D,
    analytic_power3,
    build_latin_region,
    conjugate,
    cyclic_latin,
    is_totally_symmetric,
    normalize_corner,
    rejects3,
    square_from_json,
    square_to_json,
)
from compnull.statmath import Interval, std_normal_quantile

# mpmath, 50 digits: band edges for alpha = 1/3
C1_THIRD = 0.43072729929545749
C2_THIRD = 0.96742156610170104

# 1e7 Philox(12345) draws on the corner-normalized cyclic square of order 3,
# mean (1, 2, 3): rate and its binomial standard error
MC_POWER_123 = 0.4854659
MC_POWER_123_SE = 0.00015804706891846807

SWAPPED_2 = LatinSquare(2, ((2, 1), (1, 2)))


def test_cyclic_squares():
    assert cyclic_latin(2).grid == ((1, 2), (2, 1))
    assert cyclic_latin(3).grid == ((1, 2, 3), (2, 3, 1), (3, 1, 2))
    big = cyclic_latin(20)
    assert big[1, 1] == 1 and big[20, 20] == 19
    assert big[7, 12] == (7 + 12 - 2) % 20 + 1
    with pytest.raises(ValueError, match="order"):
        cyclic_latin(0)


def test_square_validation():
    with pytest.raises(ValueError, match="row 2"):
        LatinSquare(2, ((1, 2), (2, 2)))
    with pytest.raises(ValueError, match="column 1"):
        LatinSquare(2, ((1, 2), (1, 2)))
    with pytest.raises(ValueError, match="2x2"):
        LatinSquare(2, ((1, 2),))
    with pytest.raises(ValueError, match="order"):
        LatinSquare(0, ())
    a = cyclic_latin(3)
    assert a[1, 1] == 1 and a[2, 3] == 1 and a[3, 2] == 1


def test_conjugate_identity_and_column_symbol_swap():
    a = cyclic_latin(4)
    assert conjugate(a, (1, 2, 3)) == a
    b = conjugate(a, (1, 3, 2))
    for i in range(1, 5):
        for j in range(1, 5):
            assert b[i, a[i, j]] == j
    # transpositions are involutions
    for p in ((1, 3, 2), (3, 2, 1), (2, 1, 3)):
        assert conjugate(conjugate(a, p), p) == a
    with pytest.raises(ValueError, match="perm"):
        conjugate(a, (1, 2, 2))


def test_total_symmetry_census():
    assert is_totally_symmetric(cyclic_latin(1))
    assert is_totally_symmetric(cyclic_latin(2))
    assert is_totally_symmetric(SWAPPED_2)
    assert not is_totally_symmetric(cyclic_latin(3))
    assert not is_totally_symmetric(cyclic_latin(4))
    assert not is_totally_symmetric(cyclic_latin(5))


def test_normalize_corner():
    done = normalize_corner(SWAPPED_2)
    assert done.square == SWAPPED_2
    assert done.sym_perm == (1, 2)

    fixed = normalize_corner(cyclic_latin(3))
    assert isinstance(fixed, CornerNormalization)
    assert fixed.square.grid == ((1, 3, 2), (3, 2, 1), (2, 1, 3))
    assert fixed.square[3, 3] == 3
    assert fixed.row_perm == (1, 2, 3)
    assert fixed.col_perm == (1, 2, 3)
    assert fixed.sym_perm == (1, 3, 2)


def test_build_region_order_two():
    region = build_latin_region(cyclic_latin(2), 0.5)
    assert len(region.boxes) == 4
    c1 = min(b[0].hi for b in region.boxes)
    assert c1 == std_normal_quantile(0.75)
    assert abs(c1 - 0.67448975019608174) < 1e-14
    assert max(b[0].hi for b in region.boxes) == float("inf")
    with pytest.raises(ValueError, match="reciprocal"):
        build_latin_region(cyclic_latin(3), 0.5)
    with pytest.raises(ValueError, match="alpha"):
        build_latin_region(cyclic_latin(2), 0.0)


def test_band_edges_order_three():
    region = build_latin_region(cyclic_latin(3), 1.0 / 3.0)
    edges = sorted({b[0].lo for b in region.boxes} | {b[0].hi for b in region.boxes})
    assert edges[0] == 0.0 and edges[-1] == float("inf")
    assert edges[1] == pytest.approx(C1_THIRD, rel=1e-12)
    assert edges[2] == pytest.approx(C2_THIRD, rel=1e-12)


@pytest.mark.parametrize("k", [2, 3, 4])
def test_similar_on_null_hyperplanes(k):
    # power is exactly alpha whenever any one coordinate has mean zero,
    # whatever the square
    alpha = 1.0 / k
    squares = [cyclic_latin(k), normalize_corner(cyclic_latin(k)).square]
    if k == 2:
        squares.append(SWAPPED_2)
    for sq in squares:
        region = build_latin_region(sq, alpha)
        for t in (0.0, 0.8, 2.3):
            for u in (0.0, 1.4):
                for point in ((t, u, 0.0), (t, 0.0, u), (0.0, t, u)):
                    assert abs(analytic_power3(region, point) - alpha) <= 1e-10


def test_origin_power_is_alpha():
    region = build_latin_region(cyclic_latin(2), 0.5)
    assert abs(analytic_power3(region, (0.0, 0.0, 0.0)) - 0.5) <= 1e-12


def test_corner_normalization_restores_consistency():
    # raw cyclic square of order 3 has the all-large box mapped to band 2,
    # so far-out diagonal alternatives are almost never caught
    raw = build_latin_region(cyclic_latin(3), 1.0 / 3.0)
    assert analytic_power3(raw, (10.0, 10.0, 10.0)) < 0.9
    fixed = build_latin_region(normalize_corner(cyclic_latin(3)).square, 1.0 / 3.0)
    assert analytic_power3(fixed, (10.0, 10.0, 10.0)) >= 0.999


def test_power_matches_simulation():
    fixed = build_latin_region(normalize_corner(cyclic_latin(3)).square, 1.0 / 3.0)
    got = analytic_power3(fixed, (1.0, 2.0, 3.0))
    assert abs(got - MC_POWER_123) <= 4.0 * MC_POWER_123_SE


def test_rejects3_sign_invariance():
    region = build_latin_region(normalize_corner(cyclic_latin(3)).square, 1.0 / 3.0)
    rng = np.random.Generator(np.random.Philox(31))
    pts = rng.normal(scale=1.3, size=(40, 3))
    for p in pts:
        base = rejects3(region, p)
        for signs in itertools.product((1.0, -1.0), repeat=3):
            flipped = tuple(s * v for s, v in zip(signs, p))
            assert rejects3(region, flipped) == base


def test_totally_symmetric_square_gives_exchangeable_region():
    region = build_latin_region(SWAPPED_2, 0.5)
    rng = np.random.Generator(np.random.Philox(32))
    pts = rng.normal(size=(60, 3))
    for p in pts:
        decisions = {rejects3(region, tuple(p[list(perm)]))
                     for perm in itertools.permutations(range(3))}
        assert len(decisions) == 1


def test_cyclic_order_three_is_not_exchangeable():
    # bands (2,1,2) are in the cyclic region, bands (2,2,1) are not
    region = build_latin_region(cyclic_latin(3), 1.0 / 3.0)
    assert rejects3(region, (0.7, 0.2, 0.7))
    assert not rejects3(region, (0.7, 0.7, 0.2))


def test_region_validation():
    band = Interval(0.0, 1.0)
    far = Interval(2.0, 3.0)
    with pytest.raises(ValueError, match="alpha"):
        RejectionRegion3D(1.0, [(band, band, band)])
    with pytest.raises(ValueError, match="Interval"):
        RejectionRegion3D(0.5, [(band, band, (0.0, 1.0))])
    with pytest.raises(ValueError, match="nonnegative"):
        RejectionRegion3D(0.5, [(Interval(-1.0, 1.0), band, band)])
    with pytest.raises(ValueError, match="overlap"):
        RejectionRegion3D(0.5, [(band, band, band),
                                (Interval(0.5, 1.5), band, band)])
    ok = RejectionRegion3D(0.5, [(band, band, band), (far, band, band)])
    assert len(ok.boxes) == 2
    with pytest.raises(ValueError, match="NaN"):
        rejects3(ok, (float("nan"), 0.5, 0.5))


def test_square_json_round_trip():
    a = normalize_corner(cyclic_latin(5)).square
    assert square_from_json(square_to_json(a)) == a
    with pytest.raises(ValueError, match="invalid square document"):
        square_from_json("{not json")
    with pytest.raises(ValueError, match="'order' and 'grid'"):
        square_from_json('{"order": 2}')
    with pytest.raises(ValueError, match="invalid square document"):
        square_from_json('{"order": 2, "grid": [[1, 2], [1, 2]]}')
