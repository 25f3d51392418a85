"""Weighted rectangular rejection regions on the (zx, zy) plane.

A region is a finite union of pairwise-disjoint open rectangles, each
carrying a rejection probability p in [0, 1], plus an optional "outside
rule" that rejects jointly-large statistics beyond the box the cells tile.
Regions serialize to a versioned JSON document so solved regions can be
shipped and reloaded bit-exactly.
"""

from __future__ import annotations

import json
import math
from bisect import bisect_right
from dataclasses import dataclass

import numpy as np

from .statmath import Interval, _cdf_array, gaussian_interval_prob

__all__ = [
    "FORMAT_VERSION",
    "REGION_KINDS",
    "WeightedRect",
    "OutsideRule",
    "EstimateProvenance",
    "TestStatisticPair",
    "RejectionRegion2D",
    "RegionFormatError",
    "RegionValidationError",
    "rejection_prob_at_point",
    "rejection_prob_at_points",
    "analytic_power",
    "analytic_power_batch",
    "serialize",
    "deserialize",
]

FORMAT_VERSION = "region-v1"
REGION_KINDS = frozenset({"minimax", "extended", "joint_significance", "bayes", "custom"})


class RegionFormatError(ValueError):
    """A region document that cannot be parsed; the message names the field."""


class RegionValidationError(ValueError):
    """A parseable region document whose content is inconsistent."""


@dataclass(frozen=True)
class WeightedRect:
    """Open rectangle x-interval times y-interval with rejection probability p."""

    x: Interval
    y: Interval
    p: float = 1.0

    def __post_init__(self) -> None:
        p = float(self.p)
        if math.isnan(p) or not 0.0 <= p <= 1.0:
            raise ValueError(f"cell probability must lie in [0, 1], got {p!r}")
        object.__setattr__(self, "p", p)


@dataclass(frozen=True)
class OutsideRule:
    """Joint-significance rule applied outside the cell box.

    Rejects whenever |zx| >= threshold and |zy| >= threshold and (zx, zy)
    lies outside ``box`` (given as (xlo, xhi, ylo, yhi); None means the
    bounding box of the region's cells).
    """

    threshold: float
    box: tuple[float, float, float, float] | None = None

    def __post_init__(self) -> None:
        t = float(self.threshold)
        if not math.isfinite(t) or t < 0.0:
            raise ValueError(f"outside-rule threshold must be finite and >= 0, got {t!r}")
        object.__setattr__(self, "threshold", t)
        if self.box is not None:
            box = tuple(float(v) for v in self.box)
            if len(box) != 4 or any(math.isnan(v) for v in box):
                raise ValueError(f"outside-rule box must be (xlo, xhi, ylo, yhi), got {self.box!r}")
            if box[0] > box[1] or box[2] > box[3]:
                raise ValueError(f"outside-rule box must be ordered, got {box!r}")
            object.__setattr__(self, "box", box)


@dataclass(frozen=True)
class EstimateProvenance:
    """Where a z-pair came from: effect estimates, their scaled SEs, and n."""

    delta_x_hat: float
    delta_y_hat: float
    se_x: float
    se_y: float
    n: int


@dataclass(frozen=True)
class TestStatisticPair:
    zx: float
    zy: float
    provenance: EstimateProvenance | None = None


def _as_xy(z) -> tuple[float, float]:
    if isinstance(z, TestStatisticPair):
        return float(z.zx), float(z.zy)
    zx, zy = z
    return float(zx), float(zy)


class RejectionRegion2D:
    """A rejection region: disjoint weighted open cells plus an outside rule.

    Construction validates the cell list (probabilities in range, pairwise
    disjoint interiors) and builds the strip index used for point lookups:
    cells sharing an x-interval form a strip; strips and the y-intervals
    inside each strip are kept sorted for binary search.
    """

    __slots__ = (
        "alpha", "kind", "cells", "outside_rule",
        "_strips", "_strip_los", "_strip_his", "_strips_disjoint", "_bbox", "_arrays",
    )

    def __init__(self, alpha, kind, cells, outside_rule=None):
        alpha = float(alpha)
        if not 0.0 < alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {alpha!r}")
        if kind not in REGION_KINDS:
            raise ValueError(f"unknown region kind {kind!r}; expected one of {sorted(REGION_KINDS)}")
        if outside_rule is not None and not isinstance(outside_rule, OutsideRule):
            raise TypeError("outside_rule must be an OutsideRule or None")
        self.alpha = alpha
        self.kind = kind
        self.cells = tuple(cells)
        self.outside_rule = outside_rule
        self._arrays = None
        self._build_index()

    def __eq__(self, other):
        if not isinstance(other, RejectionRegion2D):
            return NotImplemented
        return (self.alpha, self.kind, self.cells, self.outside_rule) == (
            other.alpha, other.kind, other.cells, other.outside_rule)

    def __hash__(self):
        return hash((self.alpha, self.kind, self.cells, self.outside_rule))

    def __repr__(self):
        return (f"RejectionRegion2D(alpha={self.alpha!r}, kind={self.kind!r}, "
                f"cells=<{len(self.cells)}>, outside_rule={self.outside_rule!r})")

    # -- index construction ------------------------------------------------

    def _build_index(self) -> None:
        strips: dict[tuple[float, float], list[WeightedRect]] = {}
        for cell in self.cells:
            if not isinstance(cell, WeightedRect):
                raise TypeError(f"cells must be WeightedRect, got {type(cell).__name__}")
            strips.setdefault((cell.x.lo, cell.x.hi), []).append(cell)

        keyed = sorted(strips.items(), key=lambda kv: kv[0])
        self._strips = []
        for (xlo, xhi), members in keyed:
            members.sort(key=lambda c: c.y.lo)
            ylos = [c.y.lo for c in members]
            yhis = [c.y.hi for c in members]
            ps = [c.p for c in members]
            for k in range(1, len(members)):
                if ylos[k] < yhis[k - 1] and xlo < xhi:
                    raise RegionValidationError(
                        f"overlapping cells in x-strip ({xlo!r}, {xhi!r}): "
                        f"y-intervals ({ylos[k - 1]!r}, {yhis[k - 1]!r}) and ({ylos[k]!r}, {yhis[k]!r})")
            self._strips.append((xlo, xhi, ylos, yhis, ps))

        self._strip_los = [s[0] for s in self._strips]
        self._strip_his = [s[1] for s in self._strips]
        self._strips_disjoint = all(
            self._strips[k + 1][0] >= self._strips[k][1] for k in range(len(self._strips) - 1))
        if not self._strips_disjoint:
            self._check_cross_strip_overlap()

        if self.cells:
            self._bbox = (
                min(c.x.lo for c in self.cells), max(c.x.hi for c in self.cells),
                min(c.y.lo for c in self.cells), max(c.y.hi for c in self.cells))
        else:
            self._bbox = None

    def _check_cross_strip_overlap(self) -> None:
        # Only reachable for irregular cell layouts; strip counts stay small there.
        for i, (xlo_i, xhi_i, ylos_i, yhis_i, _) in enumerate(self._strips):
            for j in range(i + 1, len(self._strips)):
                xlo_j, xhi_j, ylos_j, yhis_j, _ = self._strips[j]
                if xlo_j >= xhi_i:
                    break
                if max(xlo_i, xlo_j) >= min(xhi_i, xhi_j):
                    continue
                a = b = 0
                while a < len(ylos_i) and b < len(ylos_j):
                    if max(ylos_i[a], ylos_j[b]) < min(yhis_i[a], yhis_j[b]):
                        raise RegionValidationError(
                            f"overlapping cells: x-strips ({xlo_i!r}, {xhi_i!r}) and "
                            f"({xlo_j!r}, {xhi_j!r}) share y-interval mass")
                    if yhis_i[a] <= yhis_j[b]:
                        a += 1
                    else:
                        b += 1

    # -- cached numpy view ---------------------------------------------------

    def _cell_arrays(self):
        if self._arrays is None:
            xlo = np.array([c.x.lo for c in self.cells])
            xhi = np.array([c.x.hi for c in self.cells])
            ylo = np.array([c.y.lo for c in self.cells])
            yhi = np.array([c.y.hi for c in self.cells])
            p = np.array([c.p for c in self.cells])
            self._arrays = (xlo, xhi, ylo, yhi, p)
        return self._arrays

    def bounding_box(self):
        """(xlo, xhi, ylo, yhi) of the cells, or None when there are none."""
        return self._bbox

    def rule_box(self):
        """The box outside which the outside rule applies, or None."""
        if self.outside_rule is None:
            return None
        if self.outside_rule.box is not None:
            return self.outside_rule.box
        return self._bbox


def _cell_prob_scalar(region: RejectionRegion2D, zx: float, zy: float) -> float:
    strips = region._strips
    if not strips:
        return 0.0
    if region._strips_disjoint:
        i = bisect_right(region._strip_los, zx) - 1
        candidates = (i,) if i >= 0 else ()
    else:
        hi = bisect_right(region._strip_los, zx)
        candidates = range(hi - 1, -1, -1)
    for i in candidates:
        xlo, xhi, ylos, yhis, ps = strips[i]
        if not xlo < zx < xhi:
            continue
        j = bisect_right(ylos, zy) - 1
        if j >= 0 and ylos[j] < zy < yhis[j]:
            return ps[j]
        if region._strips_disjoint:
            return 0.0
    return 0.0


def _rule_fires_scalar(region: RejectionRegion2D, zx: float, zy: float) -> bool:
    rule = region.outside_rule
    if rule is None:
        return False
    if abs(zx) < rule.threshold or abs(zy) < rule.threshold:
        return False
    box = region.rule_box()
    if box is not None and box[0] <= zx <= box[1] and box[2] <= zy <= box[3]:
        return False
    return True


def rejection_prob_at_point(region: RejectionRegion2D, z) -> float:
    """Rejection probability of the region at a single (zx, zy).

    Cells are open, so points on cell boundaries return 0. The outside rule
    contributes 1 when it fires (|zx| >= t, |zy| >= t, and the point lies
    beyond the rule box).
    """
    zx, zy = _as_xy(z)
    if math.isnan(zx) or math.isnan(zy):
        raise ValueError("test statistics must not be NaN")
    p = _cell_prob_scalar(region, zx, zy)
    if p > 0.0:
        return p
    return 1.0 if _rule_fires_scalar(region, zx, zy) else 0.0


def rejection_prob_at_points(region: RejectionRegion2D, zx, zy) -> np.ndarray:
    """Vectorized :func:`rejection_prob_at_point` over arrays of statistics."""
    zx = np.asarray(zx, dtype=float)
    zy = np.asarray(zy, dtype=float)
    if zx.shape != zy.shape:
        raise ValueError("zx and zy must have matching shapes")
    out = np.zeros(zx.shape, dtype=float)

    if region._strips and region._strips_disjoint:
        los = np.array(region._strip_los)
        his = np.array(region._strip_his)
        idx = np.searchsorted(los, zx, side="right") - 1
        idx_c = np.clip(idx, 0, len(los) - 1)
        valid = (idx >= 0) & (zx > los[idx_c]) & (zx < his[idx_c])
        for s, (_, _, ylos, yhis, ps) in enumerate(region._strips):
            mask = valid & (idx == s)
            if not mask.any():
                continue
            ylos_a = np.array(ylos)
            yhis_a = np.array(yhis)
            ps_a = np.array(ps)
            ys = zy[mask]
            j = np.searchsorted(ylos_a, ys, side="right") - 1
            j_c = np.clip(j, 0, len(ylos_a) - 1)
            ok = (j >= 0) & (ys > ylos_a[j_c]) & (ys < yhis_a[j_c])
            vals = np.zeros(ys.shape)
            vals[ok] = ps_a[j_c[ok]]
            out[mask] = vals
    elif region._strips:
        for xlo, xhi, ylos, yhis, ps in region._strips:
            in_x = (zx > xlo) & (zx < xhi)
            if not in_x.any():
                continue
            for ylo, yhi, p in zip(ylos, yhis, ps):
                out[in_x & (zy > ylo) & (zy < yhi)] = p

    rule = region.outside_rule
    if rule is not None:
        fires = (np.abs(zx) >= rule.threshold) & (np.abs(zy) >= rule.threshold)
        box = region.rule_box()
        if box is not None:
            inside = (zx >= box[0]) & (zx <= box[1]) & (zy >= box[2]) & (zy <= box[3])
            fires &= ~inside
        out = np.where(fires & (out == 0.0), 1.0, out)
    return out


def _abs_tail_in_range(threshold: float, lo: float, hi: float, delta: float) -> float:
    """P(Z in [lo, hi], |Z| >= threshold) for Z ~ N(delta, 1)."""
    total = 0.0
    h1 = min(-threshold, hi)
    if lo < h1:
        total += gaussian_interval_prob(Interval(lo, h1), delta)
    l2 = max(threshold, lo)
    if l2 < hi:
        total += gaussian_interval_prob(Interval(l2, hi), delta)
    return total


def _rule_mass(region: RejectionRegion2D, dx: float, dy: float) -> float:
    rule = region.outside_rule
    if rule is None:
        return 0.0
    t = rule.threshold
    mass = _abs_tail_in_range(t, -math.inf, math.inf, dx) * _abs_tail_in_range(t, -math.inf, math.inf, dy)
    box = region.rule_box()
    if box is not None:
        mass -= _abs_tail_in_range(t, box[0], box[1], dx) * _abs_tail_in_range(t, box[2], box[3], dy)
    return max(0.0, mass)


def analytic_power(region: RejectionRegion2D, delta_star) -> float:
    """Exact rejection probability at delta* = (dx, dy) under unit-variance normals."""
    dx, dy = _as_xy(delta_star)
    return float(analytic_power_batch(region, np.array([[dx, dy]]))[0])


def analytic_power_batch(region: RejectionRegion2D, deltas) -> np.ndarray:
    """Exact rejection probability at each row of an (n, 2) array of shifts."""
    deltas = np.asarray(deltas, dtype=float)
    if deltas.ndim != 2 or deltas.shape[1] != 2:
        raise ValueError("deltas must be an (n, 2) array")
    dx = deltas[:, 0]
    dy = deltas[:, 1]
    power = np.zeros(len(deltas))

    if region.cells:
        xlo, xhi, ylo, yhi, p = region._cell_arrays()
        # Chunk the points so the cells-by-points intermediates stay modest.
        chunk = max(1, int(4e6) // max(1, len(p)))
        for start in range(0, len(deltas), chunk):
            sl = slice(start, start + chunk)
            gx = _cdf_array(xhi[None, :] - dx[sl, None]) - _cdf_array(xlo[None, :] - dx[sl, None])
            gy = _cdf_array(yhi[None, :] - dy[sl, None]) - _cdf_array(ylo[None, :] - dy[sl, None])
            power[sl] = (gx * gy) @ p

    if region.outside_rule is not None:
        power += np.array([_rule_mass(region, dxi, dyi) for dxi, dyi in zip(dx, dy)])
    return np.clip(power, 0.0, 1.0)


# -- serialization ---------------------------------------------------------

def _enc_float(v: float):
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return float(v)


def serialize(region: RejectionRegion2D) -> str:
    """Render a region as a region-v1 JSON document (infinities as strings)."""
    if region.outside_rule is None:
        rule_doc = {"type": "none"}
    else:
        rule_doc = {
            "type": "joint_significance",
            "threshold": _enc_float(region.outside_rule.threshold),
            "box": None if region.outside_rule.box is None
            else [_enc_float(v) for v in region.outside_rule.box],
        }
    doc = {
        "version": FORMAT_VERSION,
        "alpha": float(region.alpha),
        "kind": region.kind,
        "cells": [
            {"x": [_enc_float(c.x.lo), _enc_float(c.x.hi)],
             "y": [_enc_float(c.y.lo), _enc_float(c.y.hi)],
             "p": float(c.p)}
            for c in region.cells
        ],
        "outside_rule": rule_doc,
    }
    return json.dumps(doc, indent=1)


def _dec_float(v, where: str) -> float:
    if isinstance(v, str):
        if v == "inf":
            return math.inf
        if v == "-inf":
            return -math.inf
        raise RegionFormatError(f"{where}: expected a number or 'inf'/'-inf', got {v!r}")
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise RegionFormatError(f"{where}: expected a number, got {v!r}")
    if math.isnan(v):
        raise RegionFormatError(f"{where}: NaN is not allowed")
    return float(v)


def _dec_pair(v, where: str) -> tuple[float, float]:
    if not isinstance(v, list) or len(v) != 2:
        raise RegionFormatError(f"{where}: expected [lo, hi]")
    return _dec_float(v[0], f"{where}[0]"), _dec_float(v[1], f"{where}[1]")


def deserialize(text: str) -> RejectionRegion2D:
    """Parse a region-v1 JSON document, validating structure and disjointness."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise RegionFormatError(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise RegionFormatError("document: expected a JSON object")
    version = doc.get("version")
    if version != FORMAT_VERSION:
        raise RegionFormatError(f"version: expected {FORMAT_VERSION!r}, got {version!r}")
    for key in ("alpha", "kind", "cells", "outside_rule"):
        if key not in doc:
            raise RegionFormatError(f"{key}: missing required field")
    alpha = _dec_float(doc["alpha"], "alpha")
    kind = doc["kind"]
    if kind not in REGION_KINDS:
        raise RegionFormatError(f"kind: expected one of {sorted(REGION_KINDS)}, got {kind!r}")
    if not isinstance(doc["cells"], list):
        raise RegionFormatError("cells: expected a list")

    cells = []
    for i, c in enumerate(doc["cells"]):
        where = f"cells[{i}]"
        if not isinstance(c, dict):
            raise RegionFormatError(f"{where}: expected an object")
        for key in ("x", "y", "p"):
            if key not in c:
                raise RegionFormatError(f"{where}.{key}: missing required field")
        xlo, xhi = _dec_pair(c["x"], f"{where}.x")
        ylo, yhi = _dec_pair(c["y"], f"{where}.y")
        pval = _dec_float(c["p"], f"{where}.p")
        try:
            cells.append(WeightedRect(Interval(xlo, xhi), Interval(ylo, yhi), pval))
        except ValueError as exc:
            raise RegionValidationError(f"{where}: {exc}") from exc

    rule_doc = doc["outside_rule"]
    if not isinstance(rule_doc, dict) or "type" not in rule_doc:
        raise RegionFormatError("outside_rule: expected an object with a 'type'")
    if rule_doc["type"] == "none":
        rule = None
    elif rule_doc["type"] == "joint_significance":
        if "threshold" not in rule_doc:
            raise RegionFormatError("outside_rule.threshold: missing required field")
        threshold = _dec_float(rule_doc["threshold"], "outside_rule.threshold")
        box_doc = rule_doc.get("box")
        if box_doc is None:
            box = None
        else:
            if not isinstance(box_doc, list) or len(box_doc) != 4:
                raise RegionFormatError("outside_rule.box: expected [xlo, xhi, ylo, yhi] or null")
            box = tuple(_dec_float(v, f"outside_rule.box[{k}]") for k, v in enumerate(box_doc))
        try:
            rule = OutsideRule(threshold, box)
        except ValueError as exc:
            raise RegionValidationError(f"outside_rule: {exc}") from exc
    else:
        raise RegionFormatError(
            f"outside_rule.type: expected 'none' or 'joint_significance', got {rule_doc['type']!r}")

    try:
        return RejectionRegion2D(alpha, kind, cells, rule)
    except RegionValidationError:
        raise
    except ValueError as exc:
        raise RegionValidationError(str(exc)) from exc
