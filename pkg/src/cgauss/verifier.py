"""Independent checks of the closed-form conditional law.

Two oracles share no code with ``cgauss.law``:

* ``dense_conditioning_oracle`` conditions ``N(0, diag(w^2))`` on ``1'X = c``
  with generic dense Gaussian conditioning.
* ``slice_oracle`` is rejection sampling: draw ``Z ~ N(0, I)`` and keep
  draws with ``|w'Z - c| < eps``. Its moments carry an O(eps^2) bias.

``compare`` turns empirical moments into z-scores against the analytic law.
Covariance standard errors use the Normal fourth-moment identity
``Var(s_ij) ~ (s_ii s_jj + s_ij^2) / N``, which is approximate for
non-Gaussian batches.
"""
from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .errors import DimensionMismatch, InsufficientSamples, TooFewAccepted
from .law import ConditionalGaussian, as_weights, marginal_sum_density, mahalanobis_sq, z_space_law

MIN_PROPOSALS = 10_000
MIN_ACCEPTED = 100
MEAN_Z_THRESHOLD = 5.0
COV_Z_THRESHOLD = 6.0
ORACLE_RTOL = 1e-10


class MomentAccumulator:
    """Streaming mean and scatter matrix with an associative merge (Chan et al.)."""

    def __init__(self, dim: int):
        self.count = 0
        self.mean = np.zeros(dim)
        self.m2 = np.zeros((dim, dim))

    def update(self, rows: np.ndarray) -> "MomentAccumulator":
        rows = np.asarray(rows, dtype=np.float64)
        if rows.shape[0] == 0:
            return self
        other = MomentAccumulator(rows.shape[1])
        other.count = rows.shape[0]
        other.mean = rows.mean(axis=0)
        centered = rows - other.mean
        other.m2 = centered.T @ centered
        return self.merge(other)

    def merge(self, other: "MomentAccumulator") -> "MomentAccumulator":
        if other.count == 0:
            return self
        if self.count == 0:
            self.count, self.mean, self.m2 = other.count, other.mean.copy(), other.m2.copy()
            return self
        n = self.count + other.count
        delta = other.mean - self.mean
        self.mean = self.mean + delta * (other.count / n)
        self.m2 = self.m2 + other.m2 + np.outer(delta, delta) * (self.count * other.count / n)
        self.count = n
        return self

    def covariance(self) -> np.ndarray:
        if self.count < 2:
            raise InsufficientSamples("need at least 2 samples for a covariance")
        cov = self.m2 / (self.count - 1)
        return 0.5 * (cov + cov.T)


@dataclass(frozen=True)
class EmpiricalMoments:
    mean: np.ndarray
    covariance: np.ndarray
    count: int
    proposals: int
    band: float | None
    space: str = "Z"
    expected_acceptance: float | None = None


def moments_from_chunks(chunks, space: str, dim: int | None = None) -> EmpiricalMoments:
    acc = None
    for block in chunks:
        if acc is None:
            acc = MomentAccumulator(dim or block.shape[1])
        acc.update(block)
    if acc is None or acc.count < 2:
        raise InsufficientSamples("need at least 2 samples for moments")
    return EmpiricalMoments(acc.mean, acc.covariance(), acc.count, acc.count, None, space)


def default_epsilon(w) -> float:
    return 0.02 * math.sqrt(as_weights(w).norm_sq)


def slice_oracle(w, c: float, epsilon: float | None = None, proposals: int = 10**7, seed: int = 0,
                 chunk: int | None = None) -> EmpiricalMoments:
    """Moments of ``Z ~ N(0, I)`` accepted when ``|w'Z - c| < epsilon``.

    Proposal chunks use independent substreams and are merged associatively,
    so the result depends only on ``seed`` and the chunk size.
    """
    w = as_weights(w)
    eps = default_epsilon(w) if epsilon is None else float(epsilon)
    if not eps > 0:
        raise ValueError(f"epsilon must be > 0, got {epsilon!r}")
    if proposals < MIN_PROPOSALS:
        raise TooFewAccepted(f"proposals must be >= {MIN_PROPOSALS}, got {proposals}")
    acc = MomentAccumulator(w.n)
    for k, rows in rng.chunks(int(proposals), chunk):
        z = rng.substream(seed, k).standard_normal((rows, w.n))
        keep = np.abs(z @ w.w - c) < eps
        acc.update(z[keep])
    if acc.count < MIN_ACCEPTED:
        raise TooFewAccepted(
            f"only {acc.count} of {proposals} proposals fell within eps={eps:g} of c={c:g}; "
            f"need {MIN_ACCEPTED} (raise proposals or epsilon)"
        )
    expected = 2.0 * eps * marginal_sum_density(w, c)
    return EmpiricalMoments(acc.mean, acc.covariance(), acc.count, int(proposals), eps, "Z", expected)


def dense_conditioning_oracle(w, c: float) -> tuple[np.ndarray, np.ndarray]:
    """Textbook conditioning of ``X ~ N(0, diag(w^2))`` on ``1'X = c``.

    Returns the full n-dimensional (rank n-1) mean and covariance.
    """
    w = np.asarray(w.w if hasattr(w, "w") else w, dtype=np.float64)
    n = w.shape[0]
    K = np.diag(w * w)
    a = np.ones((n, 1))
    cross = K @ a                      # Cov(X, 1'X)
    var_s = (a.T @ K @ a)              # Var(1'X), 1 x 1
    gain = np.linalg.solve(var_s, cross.T).T
    mean = (gain * c).ravel()
    cov = K - gain @ cross.T
    return mean, cov


def _relative_error(value: np.ndarray, reference: np.ndarray) -> np.ndarray:
    value = np.asarray(value, dtype=np.float64)
    reference = np.asarray(reference, dtype=np.float64)
    diff = np.abs(value - reference)
    scale = np.abs(reference)
    return np.where(scale > 0, diff / np.where(scale > 0, scale, 1.0), diff)


def oracle_agreement(law: ConditionalGaussian) -> dict:
    """Worst per-entry relative error of ``law`` against the dense oracle."""
    mean, cov = dense_conditioning_oracle(law.weights, law.c)
    r = law.retained
    mean_err = float(_relative_error(law.mu, mean[r]).max())
    cov_err = float(_relative_error(law.sigma, cov[np.ix_(r, r)]).max())
    return {
        "mean_max_rel_err": mean_err,
        "cov_max_rel_err": cov_err,
        "tolerance": ORACLE_RTOL,
        "passed": max(mean_err, cov_err) <= ORACLE_RTOL,
    }


@dataclass
class VerificationReport:
    label: str
    mean_z: np.ndarray
    cov_z: np.ndarray
    mean_threshold: float
    cov_threshold: float
    metadata: dict = field(default_factory=dict)
    wall_time: float | None = None

    @property
    def max_abs_mean_z(self) -> float:
        return float(np.max(np.abs(self.mean_z)))

    @property
    def max_abs_cov_z(self) -> float:
        return float(np.max(np.abs(self.cov_z)))

    @property
    def max_abs_z(self) -> float:
        return max(self.max_abs_mean_z, self.max_abs_cov_z)

    @property
    def passed(self) -> bool:
        return self.max_abs_mean_z <= self.mean_threshold and self.max_abs_cov_z <= self.cov_threshold

    def to_dict(self, include_timing: bool = False) -> dict:
        doc = {
            "label": self.label,
            "mean_z": [_finite(v) for v in self.mean_z],
            "cov_z": [[_finite(v) for v in row] for row in self.cov_z],
            "max_abs_mean_z": _finite(self.max_abs_mean_z),
            "max_abs_cov_z": _finite(self.max_abs_cov_z),
            "max_abs_z": _finite(self.max_abs_z),
            "mean_threshold": self.mean_threshold,
            "cov_threshold": self.cov_threshold,
            "verdict": "pass" if self.passed else "fail",
            "metadata": self.metadata,
        }
        if include_timing:
            doc["wall_time_s"] = self.wall_time
        return doc

    def to_json(self, include_timing: bool = False) -> str:
        return json.dumps(self.to_dict(include_timing), indent=2, sort_keys=True)


def _finite(v: float):
    v = float(v)
    return v if math.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")


def _z(diff: np.ndarray, se: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        z = diff / se
    return np.where(diff == 0, 0.0, np.where(se > 0, z, np.copysign(np.inf, diff)))


def analytic_moments(law: ConditionalGaussian, space: str) -> tuple[np.ndarray, np.ndarray]:
    if space == "X":
        return law.mu, law.sigma
    if space == "Z":
        return z_space_law(law)
    raise ValueError(f"space must be 'X' or 'Z', got {space!r}")


def compare(analytic: ConditionalGaussian, empirical: EmpiricalMoments, z_threshold: float | None = None, *,
            mean_threshold: float = MEAN_Z_THRESHOLD, cov_threshold: float = COV_Z_THRESHOLD,
            label: str = "", metadata: dict | None = None) -> VerificationReport:
    """z-scores of empirical against analytic moments on the retained coordinates.

    ``empirical`` may hold all n coordinates (restricted to the law's retained
    ones) or exactly the retained ones. A single ``z_threshold`` overrides both
    the mean and covariance thresholds.
    """
    if z_threshold is not None:
        mean_threshold = cov_threshold = float(z_threshold)
    if empirical.count < 2:
        raise InsufficientSamples("need at least 2 samples")
    mu, sigma = analytic_moments(analytic, empirical.space)
    dim = empirical.mean.shape[0]
    if dim == analytic.n:
        r = analytic.retained
        mean, cov = empirical.mean[r], empirical.covariance[np.ix_(r, r)]
    elif dim == analytic.dim:
        mean, cov = empirical.mean, empirical.covariance
    else:
        raise DimensionMismatch(f"empirical moments have dimension {dim}, law has n={analytic.n}")
    N = empirical.count
    var = np.diag(cov)
    mean_z = _z(mean - mu, np.sqrt(var / N))
    cov_se = np.sqrt((np.outer(var, var) + cov * cov) / N)
    cov_z = _z(cov - sigma, cov_se)
    meta = {
        "count": int(N),
        "proposals": int(empirical.proposals),
        "epsilon": empirical.band,
        "space": empirical.space,
    }
    meta.update(metadata or {})
    return VerificationReport(label, mean_z, cov_z, mean_threshold, cov_threshold, meta)


def mahalanobis_check(law: ConditionalGaussian, x_chunks, sigmas: float = 4.0) -> dict:
    """Mean squared Mahalanobis distance of full-space X samples vs its chi^2 mean ``n - 1``."""
    total = 0.0
    count = 0
    r = law.retained
    for block in x_chunks:
        total += float(np.sum(mahalanobis_sq(law, block[:, r])))
        count += block.shape[0]
    if count == 0:
        raise InsufficientSamples("no samples")
    dof = law.dim
    tol = sigmas * math.sqrt(2.0 * dof / count)
    mean = total / count
    return {"mean": mean, "dof": dof, "tolerance": tol, "count": count, "passed": abs(mean - dof) <= tol}


def timed(fn, *args, **kwargs):
    start = time.perf_counter()
    out = fn(*args, **kwargs)
    return out, time.perf_counter() - start
