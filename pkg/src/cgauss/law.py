"""Normal law of ``X = (w_1 Z_1, ..., w_n Z_n)`` given ``sum(X) = c``.

``Z`` is i.i.d. standard Normal, so ``X ~ N(0, diag(w^2))``. Conditioning on
``sum(X) = c`` (equivalently ``w'Z = c``) pins one coordinate, the *pivot*,
to ``c`` minus the others; the remaining ``n - 1`` coordinates are jointly
Normal with

    mean_i        = c w_i^2 / |w|^2
    cov_ii        = w_i^2 (|w|^2 - w_i^2) / |w|^2
    cov_ij        = -w_i^2 w_j^2 / |w|^2                    (i != j)
    precision     = diag(1 / w_i^2) + (1 / w_pivot^2) 1 1'

The precision is a diagonal-plus-constant matrix, which gives the
normalizing constant ``sqrt(|w|^2) / ((2 pi)^((n-1)/2) |prod w_i|)`` in
closed form.

Indices are 0-based throughout. Retained coordinates keep their original
relative order; ``permutation`` lists them followed by the pivot.
A zero weight makes its coordinate independent of the constraint; that
limit is not modelled and ``ZeroWeight`` is raised instead.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from . import structured
from .errors import BadPivot, DimensionMismatch, ZeroWeight
from .structured import DiagPlusConstantMatrix

LOG_2PI = math.log(2.0 * math.pi)

#: Largest n - 1 for which the dense covariance is materialized.
DENSE_SIGMA_CAP = 10_000


@dataclass(frozen=True)
class WeightVector:
    w: np.ndarray
    norm_sq: float

    @property
    def n(self) -> int:
        return int(self.w.shape[0])

    @classmethod
    def from_values(cls, values) -> "WeightVector":
        w = np.array(values, dtype=np.float64).ravel()
        if w.shape[0] < 2:
            raise DimensionMismatch(f"need at least 2 weights, got {w.shape[0]}")
        for i, wi in enumerate(w):
            if not math.isfinite(wi):
                raise ZeroWeight(i, f"weight w[{i}] = {wi!r} is not finite")
            if wi == 0.0:
                raise ZeroWeight(i)
        # fixed left-to-right accumulation so norm_sq is reproducible
        norm_sq = 0.0
        for wi in w:
            norm_sq += float(wi) * float(wi)
        w.setflags(write=False)
        return cls(w, norm_sq)


def as_weights(w) -> WeightVector:
    return w if isinstance(w, WeightVector) else WeightVector.from_values(w)


@dataclass(frozen=True)
class ConditionalGaussian:
    """The (n-1)-dimensional conditional law over the retained coordinates."""

    mu: np.ndarray
    sigma: np.ndarray | None
    precision: DiagPlusConstantMatrix
    log_norm_const: float
    pivot: int
    permutation: np.ndarray
    c: float
    weights: WeightVector

    @property
    def n(self) -> int:
        return self.weights.n

    @property
    def dim(self) -> int:
        return self.n - 1

    @property
    def retained(self) -> np.ndarray:
        return self.permutation[:-1]

    def to_dict(self) -> dict:
        return {
            "weights": [float(v) for v in self.weights.w],
            "c": self.c,
            "pivot": self.pivot,
            "permutation": [int(i) for i in self.permutation],
            "mu": [float(v) for v in self.mu],
            "sigma": None if self.sigma is None else [[float(v) for v in row] for row in self.sigma],
            "precision": {
                "a0": self.precision.a0,
                "diag": [float(v) for v in self.precision.diag],
            },
            "log_norm_const": self.log_norm_const,
        }

    def to_json(self, indent: int | None = 2) -> str:
        # float repr is the shortest string that round-trips, so reload is bit-exact
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True, allow_nan=False)

    @classmethod
    def from_dict(cls, doc: dict) -> "ConditionalGaussian":
        weights = WeightVector.from_values(doc["weights"])
        mu = np.array(doc["mu"], dtype=np.float64)
        sigma = None if doc.get("sigma") is None else np.array(doc["sigma"], dtype=np.float64)
        prec = structured.build(doc["precision"]["a0"], doc["precision"]["diag"])
        perm = np.array(doc["permutation"], dtype=np.intp)
        for arr in (mu, perm) + (() if sigma is None else (sigma,)):
            arr.setflags(write=False)
        if mu.shape[0] != weights.n - 1 or prec.m != weights.n - 1:
            raise DimensionMismatch("law document has inconsistent dimensions")
        return cls(
            mu=mu,
            sigma=sigma,
            precision=prec,
            log_norm_const=float(doc["log_norm_const"]),
            pivot=int(doc["pivot"]),
            permutation=perm,
            c=float(doc["c"]),
            weights=weights,
        )

    @classmethod
    def from_json(cls, text: str) -> "ConditionalGaussian":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class FullSpacePoint:
    """A full n-vector on the constraint hyperplane, in X or Z coordinates."""

    values: np.ndarray
    space: str
    weights: WeightVector
    c: float

    def residual(self) -> float:
        if self.space == "X":
            return float(abs(np.sum(self.values) - self.c))
        return float(abs(self.weights.w @ self.values - self.c))


def default_pivot(w: WeightVector) -> int:
    """Index of the largest |w_i| (first one on ties)."""
    return int(np.argmax(np.abs(w.w)))


def condition_on_weighted_sum(w, c: float, pivot: int | None = None) -> ConditionalGaussian:
    """Conditional law of ``X = w * Z`` given ``w'Z = c``.

    ``pivot`` selects the eliminated coordinate (0-based). By default the
    coordinate with the largest ``|w_i|`` is eliminated: the pivot weight
    enters as ``1 / w_pivot^2`` and a small one amplifies rounding.
    """
    w = as_weights(w)
    c = float(c)
    if not math.isfinite(c):
        raise ValueError(f"c must be finite, got {c!r}")
    n = w.n
    if pivot is None:
        pivot = default_pivot(w)
    elif isinstance(pivot, bool) or not isinstance(pivot, (int, np.integer)) or not 0 <= pivot < n:
        raise BadPivot(f"pivot must be an integer in [0, {n - 1}], got {pivot!r}")
    pivot = int(pivot)

    retained = np.array([i for i in range(n) if i != pivot], dtype=np.intp)
    permutation = np.append(retained, pivot)
    d = w.w[retained] ** 2
    d_pivot = float(w.w[pivot]) ** 2
    S = w.norm_sq

    mu = c * d / S
    sigma = None
    if n - 1 <= DENSE_SIGMA_CAP:
        # |w|^2 - w_i^2 summed from the other squares, never by subtraction
        others = d_pivot + _sum_excluding(d)
        sigma = -np.outer(d, d) / S
        np.fill_diagonal(sigma, d * others / S)
        sigma.setflags(write=False)

    precision = structured.build(1.0 / d_pivot, 1.0 / d)
    log_k = 0.5 * math.log(S) - 0.5 * (n - 1) * LOG_2PI - float(np.sum(np.log(np.abs(w.w))))

    mu.setflags(write=False)
    retained.setflags(write=False)
    permutation.setflags(write=False)
    return ConditionalGaussian(
        mu=mu,
        sigma=sigma,
        precision=precision,
        log_norm_const=log_k,
        pivot=pivot,
        permutation=permutation,
        c=c,
        weights=w,
    )


def _sum_excluding(d: np.ndarray) -> np.ndarray:
    """For each i, the sum of every entry of ``d`` except ``d[i]``."""
    csum = np.concatenate(([0.0], np.cumsum(d)))
    rcsum = np.concatenate((np.cumsum(d[::-1])[::-1], [0.0]))
    return csum[:-1] + rcsum[1:]


def marginal_sum_density(w, c: float) -> float:
    """Density of ``sum(X) = w'Z`` at ``c``, i.e. ``phi(c; 0, |w|)``."""
    w = as_weights(w)
    return math.exp(-0.5 * c * c / w.norm_sq) / math.sqrt(2.0 * math.pi * w.norm_sq)


def _check_point(law: ConditionalGaussian, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 0 or x.shape[-1] != law.dim:
        raise DimensionMismatch(f"expected {law.dim} retained coordinates, got shape {x.shape}")
    return x


def log_density(law: ConditionalGaussian, x) -> float | np.ndarray:
    """``log K - (x - mu)' P (x - mu) / 2`` using the structured precision P.

    ``x`` holds the retained coordinates; an (N, n-1) array is evaluated
    row-wise.
    """
    x = _check_point(law, x)
    q = law.precision.quad_form(x - law.mu)
    out = law.log_norm_const - 0.5 * q
    return float(out) if np.ndim(out) == 0 else out


def mahalanobis_sq(law: ConditionalGaussian, x) -> float | np.ndarray:
    x = _check_point(law, x)
    q = law.precision.quad_form(x - law.mu)
    return float(q) if np.ndim(q) == 0 else q


def density_self_consistency(law: ConditionalGaussian, x) -> tuple[float, float]:
    """Closed-form log density next to the Bayes-ratio log density.

    The Bayes side is ``sum_i log phi(x_i; 0, |w_i|) - log phi(c; 0, |w|)``
    with the pivot coordinate rebuilt from the constraint. Both values agree
    when the closed-form mean, precision and normalizer are right.
    """
    x = _check_point(law, x)
    if x.ndim != 1:
        raise DimensionMismatch("density_self_consistency takes a single point")
    full = lift(law, x).values
    w = law.weights.w
    log_num = float(np.sum(-0.5 * LOG_2PI - np.log(np.abs(w)) - 0.5 * (full / w) ** 2))
    S = law.weights.norm_sq
    log_den = -0.5 * LOG_2PI - 0.5 * math.log(S) - 0.5 * law.c * law.c / S
    return log_density(law, x), log_num - log_den


def bivariate_law(w1: float, w2: float, c: float) -> tuple[float, float]:
    """Mean and standard deviation of ``X_1`` given ``X_1 + X_2 = c`` (n = 2)."""
    for i, wi in enumerate((w1, w2)):
        if wi == 0 or not math.isfinite(wi):
            raise ZeroWeight(i)
    prec = 1.0 / (w1 * w1) + 1.0 / (w2 * w2)
    sd = 1.0 / math.sqrt(prec)
    mean = c / (w2 * w2 * prec)
    return mean, sd


def z_space_law(law: ConditionalGaussian) -> tuple[np.ndarray, np.ndarray]:
    """Mean and covariance of the retained ``Z_i = X_i / w_i``."""
    wr = law.weights.w[law.retained]
    mean = law.mu / wr
    if law.sigma is None:
        raise DimensionMismatch("dense covariance not available above the size cap")
    cov = law.sigma / np.outer(wr, wr)
    return mean, cov


def lift_matrix(law: ConditionalGaussian) -> np.ndarray:
    """Affine map ``x_full = M x_retained + c e_pivot`` as the n x (n-1) matrix M."""
    n = law.n
    M = np.zeros((n, n - 1))
    M[law.retained, np.arange(n - 1)] = 1.0
    M[law.pivot, :] = -1.0
    return M


def full_space_law(law: ConditionalGaussian, space: str = "X") -> tuple[np.ndarray, np.ndarray]:
    """Degenerate n-dimensional mean and covariance obtained by lifting the law.

    The covariance has rank n - 1. In Z space it is ``I - w w' / |w|^2`` and the
    mean is ``c w / |w|^2`` whatever the pivot.
    """
    if law.sigma is None:
        raise DimensionMismatch("dense covariance not available above the size cap")
    M = lift_matrix(law)
    mean = M @ law.mu
    mean[law.pivot] += law.c
    cov = M @ law.sigma @ M.T
    if space == "Z":
        w = law.weights.w
        mean = mean / w
        cov = cov / np.outer(w, w)
    elif space != "X":
        raise ValueError(f"space must be 'X' or 'Z', got {space!r}")
    return mean, cov


def lift(law: ConditionalGaussian, x, space: str = "X") -> FullSpacePoint:
    """Rebuild the full n-vector (original order) from retained coordinates."""
    x = _check_point(law, x)
    if x.ndim != 1:
        raise DimensionMismatch("lift takes a single point; use lift_rows for batches")
    full = lift_rows(law, x[None, :])[0]
    if space == "Z":
        full = full / law.weights.w
    return FullSpacePoint(values=full, space=space, weights=law.weights, c=law.c)


def lift_rows(law: ConditionalGaussian, x: np.ndarray) -> np.ndarray:
    """Row-wise lift of an (N, n-1) array of retained X coordinates."""
    x = _check_point(law, x)
    out = np.empty((x.shape[0], law.n))
    out[:, law.retained] = x
    out[:, law.pivot] = law.c - x.sum(axis=1)
    return out
