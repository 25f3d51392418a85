"""From raw mediation data to a standardized statistic pair.

Fits the mediator and outcome regressions by least squares, extracts the two
product-method coefficients with their standard errors, and standardizes.
SEs are carried on the sqrt(n) scale throughout (the standard deviation of
sqrt(n) times the estimation error), so zx = sqrt(n)*delta_x_hat/se_x is the
usual finite-sample Wald ratio.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .regions import EstimateProvenance, TestStatisticPair

__all__ = [
    "DataError",
    "MediationDataset",
    "OlsFit",
    "FitResult",
    "fit_ols",
    "product_method_stats",
    "standardize_pair",
    "load_csv",
]


class DataError(ValueError):
    """Malformed input data (bad CSV cell, rank deficiency, degenerate fit)."""


@dataclass(frozen=True)
class MediationDataset:
    """Columns y (outcome), a (exposure), m (mediator), c (n x k covariates)."""

    y: np.ndarray
    a: np.ndarray
    m: np.ndarray
    c: np.ndarray
    covariate_names: tuple[str, ...] = ()

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        a = np.asarray(self.a, dtype=float)
        m = np.asarray(self.m, dtype=float)
        c = np.asarray(self.c, dtype=float)
        if c.ndim == 1:
            c = c.reshape(len(c), -1) if c.size else c.reshape(0, 0)
        n = len(y)
        if a.shape != (n,) or m.shape != (n,) or c.shape[0] != n:
            raise DataError("columns must have equal length")
        if c.shape[1] != len(self.covariate_names):
            object.__setattr__(
                self, "covariate_names",
                tuple(f"c{i + 1}" for i in range(c.shape[1])))
        for name, col in (("y", y), ("a", a), ("m", m)):
            if not np.all(np.isfinite(col)):
                raise DataError(f"column {name!r} contains non-finite values")
        if c.size and not np.all(np.isfinite(c)):
            raise DataError("covariate columns contain non-finite values")
        width = 3 + c.shape[1]
        if n <= width + 2:
            raise DataError(
                f"need more than {width + 2} rows for {width} columns, got {n}")
        for field, val in (("y", y), ("a", a), ("m", m), ("c", c)):
            object.__setattr__(self, field, val)

    @property
    def n(self) -> int:
        return len(self.y)


@dataclass(frozen=True)
class OlsFit:
    beta: np.ndarray
    cov: np.ndarray
    sigma2: float
    n: int


def fit_ols(design, response, column_names=None) -> OlsFit:
    """Least squares via column-pivoted QR; no normal-equations inversion.

    Returns coefficients and their covariance sigma2*(X'X)^-1 with
    sigma2 = RSS/(n-p). Rank deficiency raises DataError naming the
    dependent columns.
    """
    x = np.asarray(design, dtype=float)
    y = np.asarray(response, dtype=float)
    if x.ndim != 2 or y.ndim != 1 or x.shape[0] != y.shape[0]:
        raise DataError("design must be n x p and response length n")
    n, p = x.shape
    if n <= p:
        raise DataError(f"need n > p, got n={n}, p={p}")
    names = list(column_names) if column_names is not None else [
        f"x{i}" for i in range(p)]
    if len(names) != p:
        raise DataError("column_names length must match design width")

    q, r, piv = scipy.linalg.qr(x, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    tol = diag[0] * max(n, p) * np.finfo(float).eps if diag.size else 0.0
    rank = int(np.sum(diag > tol))
    if rank < p:
        dropped = sorted(names[j] for j in piv[rank:])
        raise DataError(
            "design is rank deficient; collinear columns: " + ", ".join(dropped))

    qty = q.T @ y
    beta_p = scipy.linalg.solve_triangular(r, qty)
    beta = np.empty(p)
    beta[piv] = beta_p
    resid = y - x @ beta
    rss = float(resid @ resid)
    sigma2 = rss / (n - p)
    rinv = scipy.linalg.solve_triangular(r, np.eye(p))
    cov_p = rinv @ rinv.T
    cov = np.empty((p, p))
    cov[np.ix_(piv, piv)] = cov_p
    return OlsFit(beta, sigma2 * cov, sigma2, n)


@dataclass(frozen=True)
class FitResult:
    """Product-method estimates with sqrt(n)-scale standard errors."""

    delta_x_hat: float
    delta_y_hat: float
    se_x: float
    se_y: float
    n: int
    model: str
    a_prime: float | None = None
    a_dblprime: float | None = None

    def __post_init__(self):
        if self.model not in ("main_effects", "interaction"):
            raise ValueError(f"unknown model {self.model!r}")
        for name in ("delta_x_hat", "delta_y_hat"):
            if not math.isfinite(getattr(self, name)):
                raise DataError(f"{name} is not finite")
        for name in ("se_x", "se_y"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0.0):
                raise DataError(f"{name} must be positive and finite, got {v!r}")


def _pair_from_fit(fit: FitResult) -> TestStatisticPair:
    root_n = math.sqrt(fit.n)
    prov = EstimateProvenance(fit.delta_x_hat, fit.delta_y_hat,
                              fit.se_x, fit.se_y, fit.n)
    return TestStatisticPair(root_n * fit.delta_x_hat / fit.se_x,
                             root_n * fit.delta_y_hat / fit.se_y, prov)


def product_method_stats(data: MediationDataset, model: str = "main_effects",
                         a_prime: float = 1.0, a_dblprime: float = 0.0,
                         ) -> tuple[FitResult, TestStatisticPair]:
    """Fit the mediator and outcome models and standardize the two factors.

    main_effects: the outcome regression y ~ 1 + a + m + c gives
    delta_x_hat (the m coefficient) and the mediator regression
    m ~ 1 + a + c gives delta_y_hat (the a coefficient).

    interaction: the outcome regression gains an a*m column;
    delta_x_hat = theta_m + theta_am * a_prime with the matching
    linear-combination SE, and delta_y_hat = beta_a * (a_prime - a_dblprime).
    """
    if model not in ("main_effects", "interaction"):
        raise ValueError(f"model must be main_effects or interaction, got {model!r}")
    n = data.n
    ones = np.ones(n)
    cov_names = list(data.covariate_names)

    med_design = np.column_stack([ones, data.a, data.c]) if data.c.size \
        else np.column_stack([ones, data.a])
    med_fit = fit_ols(med_design, data.m, ["intercept", "a", *cov_names])
    beta_a = float(med_fit.beta[1])
    se_beta_a = math.sqrt(n * med_fit.cov[1, 1])

    if model == "main_effects":
        cols = [ones, data.a, data.m]
        names = ["intercept", "a", "m"]
        if data.c.size:
            cols.append(data.c)
            names.extend(cov_names)
        out_fit = fit_ols(np.column_stack(cols), data.y, names)
        dx = float(out_fit.beta[2])
        se_x = math.sqrt(n * out_fit.cov[2, 2])
        result = FitResult(dx, beta_a, se_x, se_beta_a, n, "main_effects")
        return result, _pair_from_fit(result)

    a_prime = float(a_prime)
    a_dblprime = float(a_dblprime)
    if a_prime == a_dblprime:
        raise ValueError(
            "interaction model needs distinct exposure levels a_prime != a_dblprime")
    cols = [ones, data.a, data.m, data.a * data.m]
    names = ["intercept", "a", "m", "a:m"]
    if data.c.size:
        cols.append(data.c)
        names.extend(cov_names)
    out_fit = fit_ols(np.column_stack(cols), data.y, names)
    dx = float(out_fit.beta[2] + out_fit.beta[3] * a_prime)
    var_fin = float(out_fit.cov[2, 2] + a_prime * a_prime * out_fit.cov[3, 3]
                    + 2.0 * a_prime * out_fit.cov[2, 3])
    if var_fin <= 0.0:
        raise DataError("degenerate variance for the combined mediator effect")
    se_x = math.sqrt(n * var_fin)
    scale = a_prime - a_dblprime
    dy = beta_a * scale
    se_y = abs(scale) * se_beta_a
    result = FitResult(dx, dy, se_x, se_y, n, "interaction", a_prime, a_dblprime)
    return result, _pair_from_fit(result)


def standardize_pair(delta_x_hat: float, delta_y_hat: float, sigma, n: int,
                     ) -> TestStatisticPair:
    """Standardize a precomputed estimate pair given its asymptotic covariance.

    ``sigma`` is the 2x2 covariance of sqrt(n)*(estimates - truth) and must
    be diagonal: correlated coordinates are rejected, not silently whitened.
    """
    s = np.asarray(sigma, dtype=float)
    if s.shape != (2, 2):
        raise ValueError(f"sigma must be 2x2, got shape {s.shape}")
    if s[0, 1] != 0.0 or s[1, 0] != 0.0:
        raise ValueError(
            "sigma must be diagonal; refusing to whiten correlated estimates")
    if s[0, 0] <= 0.0 or s[1, 1] <= 0.0:
        raise ValueError("sigma diagonal entries must be positive")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n!r}")
    se_x = math.sqrt(s[0, 0])
    se_y = math.sqrt(s[1, 1])
    root_n = math.sqrt(n)
    prov = EstimateProvenance(delta_x_hat, delta_y_hat, se_x, se_y, n)
    return TestStatisticPair(root_n * delta_x_hat / se_x,
                             root_n * delta_y_hat / se_y, prov)


def load_csv(path, y: str, a: str, m: str, covariates=()) -> MediationDataset:
    """Read a mediation dataset, reporting bad cells by row and column.

    Row numbers in errors count data rows from 1 (the header is row 0).
    """
    covariates = list(covariates)
    wanted = [y, a, m, *covariates]
    if len(set(wanted)) != len(wanted):
        raise DataError(f"column roles overlap: {wanted}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file, expected a header row") from None
        header = [h.strip() for h in header]
        missing = [c for c in wanted if c not in header]
        if missing:
            raise DataError(
                f"{path}: missing columns {missing}; header has {header}")
        idx = {c: header.index(c) for c in wanted}
        rows = []
        for rownum, rec in enumerate(reader, start=1):
            if len(rec) != len(header):
                raise DataError(
                    f"{path}: row {rownum} has {len(rec)} fields, expected {len(header)}")
            vals = []
            for c in wanted:
                cell = rec[idx[c]].strip()
                try:
                    v = float(cell)
                except ValueError:
                    raise DataError(
                        f"{path}: row {rownum}, column {c!r}: "
                        f"non-numeric value {cell!r}") from None
                if not math.isfinite(v):
                    raise DataError(
                        f"{path}: row {rownum}, column {c!r}: "
                        f"missing or non-finite value {cell!r}")
                vals.append(v)
            rows.append(vals)
    if not rows:
        raise DataError(f"{path}: no data rows after the header")
    arr = np.asarray(rows, dtype=float)
    k = len(covariates)
    c = arr[:, 3:3 + k] if k else np.empty((len(rows), 0))
    return MediationDataset(arr[:, 0], arr[:, 1], arr[:, 2], c, tuple(covariates))
