"""One-factor Gaussian copula demo.

Obligor ``i`` has creditworthiness ``X_i = rho_i Y + sqrt(1 - rho_i^2) e_i``
with ``Y, e_i`` i.i.d. standard Normal, and defaults when ``X_i < c_i``.
Observing ``X_k = c_k`` is a weighted-sum constraint on ``(Y, e_k)`` with
weights ``(rho_k, sqrt(1 - rho_k^2))``, so the factor's conditional law is the
first coordinate of the Z-space conditional law. Other obligors then default
with probability ``Phi((c_i - rho_i m) / sqrt(rho_i^2 v + 1 - rho_i^2))`` where
``m, v`` are the conditional mean and variance of ``Y``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from . import rng
from .errors import CGaussError, DimensionMismatch
from .law import condition_on_weighted_sum, z_space_law
from .sampler import iter_exact

MC_Z_THRESHOLD = 4.0


@dataclass(frozen=True)
class CreditDemoConfig:
    loadings: tuple[float, ...]
    thresholds: tuple[float, ...]
    observed: int
    boundary: float | None = None

    def __post_init__(self):
        if len(self.loadings) != len(self.thresholds) or not self.loadings:
            raise DimensionMismatch("loadings and thresholds must be nonempty and of equal length")
        for i, r in enumerate(self.loadings):
            if not (math.isfinite(r) and abs(r) < 1.0):
                raise CGaussError(f"loading rho[{i}] = {r!r} must satisfy |rho| < 1")
        if not 0 <= self.observed < len(self.loadings):
            raise CGaussError(f"observed index {self.observed} out of range")

    @property
    def event_value(self) -> float:
        return float(self.thresholds[self.observed] if self.boundary is None else self.boundary)


def factor_law(rho: float, value: float) -> tuple[float, float]:
    """Conditional mean and variance of ``Y`` given ``rho Y + sqrt(1 - rho^2) e = value``.

    A zero loading decouples ``Y`` from the event, which stays standard Normal.
    """
    if rho == 0.0:
        return 0.0, 1.0
    law = condition_on_weighted_sum([rho, math.sqrt(1.0 - rho * rho)], value, pivot=1)
    mean, cov = z_space_law(law)
    return float(mean[0]), float(cov[0, 0])


def conditional_default_probability(rho: float, threshold: float, mean: float, var: float) -> float:
    return float(norm.cdf((threshold - rho * mean) / math.sqrt(rho * rho * var + 1.0 - rho * rho)))


def _factor_chunks(cfg: CreditDemoConfig, samples: int, seed: int):
    rho = cfg.loadings[cfg.observed]
    if rho == 0.0:
        for k, rows in rng.chunks(samples):
            yield rng.substream(seed, k).standard_normal(rows)
        return
    law = condition_on_weighted_sum([rho, math.sqrt(1.0 - rho * rho)], cfg.event_value, pivot=1)
    for z in iter_exact(law, samples, seed, space="Z"):
        yield z[:, 0]


def run_credit_demo(cfg: CreditDemoConfig, samples: int = 10**6, seed: int = 0) -> dict:
    """Analytic conditional factor law and default probabilities with a Monte Carlo cross-check."""
    rho_k = cfg.loadings[cfg.observed]
    value = cfg.event_value
    m, v = factor_law(rho_k, value)
    rho = np.asarray(cfg.loadings, dtype=np.float64)
    thr = np.asarray(cfg.thresholds, dtype=np.float64)
    idio = np.sqrt(1.0 - rho * rho)

    total = total_sq = 0.0
    defaults = np.zeros(len(rho))
    for k, y in enumerate(_factor_chunks(cfg, samples, seed)):
        total += float(y.sum())
        total_sq += float((y * y).sum())
        eps = rng.substream(seed, k, stream=1).standard_normal((y.shape[0], len(rho)))
        defaults += ((y[:, None] * rho + eps * idio) < thr).sum(axis=0)
    mc_mean = total / samples
    mc_var = (total_sq - samples * mc_mean * mc_mean) / (samples - 1)
    mean_se = math.sqrt(mc_var / samples)
    var_se = mc_var * math.sqrt(2.0 / (samples - 1))
    mean_z = (mc_mean - m) / mean_se
    var_z = (mc_var - v) / var_se

    obligors = []
    for i in range(len(rho)):
        if i == cfg.observed:
            continue
        pd = conditional_default_probability(float(rho[i]), float(thr[i]), m, v)
        pd_mc = float(defaults[i] / samples)
        se = math.sqrt(max(pd * (1.0 - pd), 1e-300) / samples)
        obligors.append({
            "index": i,
            "loading": float(rho[i]),
            "threshold": float(thr[i]),
            "pd_unconditional": float(norm.cdf(thr[i])),
            "pd_conditional": pd,
            "pd_monte_carlo": pd_mc,
            "pd_z": (pd_mc - pd) / se,
        })
    pd_ok = all(abs(o["pd_z"]) <= MC_Z_THRESHOLD for o in obligors)
    return {
        "observed": {"index": cfg.observed, "loading": float(rho_k), "value": value},
        "weights": [float(rho_k), float(math.sqrt(1.0 - rho_k * rho_k))],
        "factor_law": {"mean": m, "variance": v, "decoupled": rho_k == 0.0},
        "obligors": obligors,
        "monte_carlo": {
            "samples": samples,
            "seed": seed,
            "factor_mean": mc_mean,
            "factor_mean_se": mean_se,
            "factor_mean_z": mean_z,
            "factor_variance": mc_var,
            "factor_variance_z": var_z,
            "z_threshold": MC_Z_THRESHOLD,
            "passed": abs(mean_z) <= MC_Z_THRESHOLD and abs(var_z) <= MC_Z_THRESHOLD and pd_ok,
        },
    }
