"""Diagonal-plus-constant matrices.

A matrix with entries ``A[i, j] = a_i * delta_ij + a0`` where ``a0`` and every
``a_i`` are strictly positive. Such a matrix is the sum of a positive diagonal
matrix and a positive constant matrix, hence symmetric positive definite, and
has closed forms for its determinant and inverse:

    det(A)  = pi * s,        pi = a0 * prod(a_i),  s = 1/a0 + sum(1/a_i)
    inv(A)  = diag(1/a) - (1/s) * u u',   u_i = 1/a_i

All production paths below are O(m). ``dense`` materializes the O(m^2) matrix
and exists for tests and small reports only.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NonPositiveEntry

__all__ = [
    "DiagPlusConstantMatrix",
    "StructuredInverse",
    "build",
    "log_determinant",
    "log_determinant_recursive",
    "determinant",
    "inverse",
    "solve",
    "is_positive_definite",
]


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=np.float64, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class DiagPlusConstantMatrix:
    """Structured symmetric matrix ``diag(diag) + a0 * 1 1'``.

    ``a0`` is stored apart from ``diag`` so that ``diag[i - 1]`` is ``a_i``
    with the constant playing the role of ``a_0``.
    """

    a0: float
    diag: np.ndarray

    @property
    def m(self) -> int:
        return int(self.diag.shape[0])

    @property
    def s(self) -> float:
        """Sum of reciprocals ``1/a0 + sum(1/a_i)``."""
        return 1.0 / self.a0 + float(np.sum(1.0 / self.diag))

    @property
    def log_pi(self) -> float:
        """Log of the product ``a0 * prod(a_i)``."""
        return math.log(self.a0) + float(np.sum(np.log(self.diag)))

    def dense(self) -> np.ndarray:
        """Materialize the full m x m matrix (O(m^2) memory)."""
        return np.diag(self.diag) + self.a0

    def matvec(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[0] != self.m:
            raise DimensionMismatch(f"expected leading dimension {self.m}, got {x.shape[0]}")
        if x.ndim == 1:
            return self.diag * x + self.a0 * x.sum()
        return self.diag[:, None] * x + self.a0 * x.sum(axis=0, keepdims=True)

    def quad_form(self, x) -> np.ndarray:
        """``x' A x`` for a vector, or row-wise for an (N, m) array."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.m:
            raise DimensionMismatch(f"expected trailing dimension {self.m}, got {x.shape[-1]}")
        total = x.sum(axis=-1)
        return (self.diag * x * x).sum(axis=-1) + self.a0 * total * total


@dataclass(frozen=True)
class StructuredInverse:
    """Inverse of a ``DiagPlusConstantMatrix`` as ``diag(inv_diag) - u u' / s``."""

    inv_diag: np.ndarray
    u: np.ndarray
    s: float
    inv_a0: float

    @property
    def m(self) -> int:
        return int(self.inv_diag.shape[0])

    def _diagonal(self) -> np.ndarray:
        # 1/a_i - u_i^2/s == u_i * (s - u_i) / s, with s - u_i summed from the
        # other reciprocals rather than subtracted
        head = np.concatenate(([0.0], np.cumsum(self.u)))
        tail = np.concatenate((np.cumsum(self.u[::-1])[::-1], [0.0]))
        others = self.inv_a0 + (head[:-1] + tail[1:])
        return self.inv_diag * others / self.s

    def entry(self, i: int, j: int) -> float:
        if i == j:
            return float(self._diagonal()[i])
        return float(-self.u[i] * self.u[j] / self.s)

    def dense(self) -> np.ndarray:
        B = -np.outer(self.u, self.u) / self.s
        np.fill_diagonal(B, self._diagonal())
        return B

    def matvec(self, b) -> np.ndarray:
        b = np.asarray(b, dtype=np.float64)
        if b.shape[0] != self.m:
            raise DimensionMismatch(f"expected length {self.m}, got {b.shape[0]}")
        if b.ndim == 1:
            return self.inv_diag * b - self.u * (self.u @ b) / self.s
        return self.inv_diag[:, None] * b - np.outer(self.u, self.u @ b) / self.s


def _check_entry(name: str, value: float) -> None:
    if not (math.isfinite(value) and value > 0.0):
        raise NonPositiveEntry(f"{name} must be finite and > 0, got {value!r}")


def build(a0: float, diag) -> DiagPlusConstantMatrix:
    """Validate parameters and return the structured matrix.

    Raises ``NonPositiveEntry`` for any zero, negative, NaN or infinite entry.
    """
    a0 = float(a0)
    diag = np.atleast_1d(np.asarray(diag, dtype=np.float64))
    if diag.ndim != 1 or diag.shape[0] == 0:
        raise DimensionMismatch("diag must be a nonempty vector")
    _check_entry("a0", a0)
    for i, a in enumerate(diag, start=1):
        _check_entry(f"a_{i}", float(a))
    return DiagPlusConstantMatrix(a0, _frozen(diag))


def is_positive_definite(a0, diag) -> bool:
    """True exactly when ``a0 > 0`` and every diagonal entry is ``> 0``.

    Accepts raw parameters so it can screen candidates before ``build``.
    A positive diagonal plus a positive constant matrix is positive definite;
    conversely a nonpositive ``a0`` or ``a_i`` either breaks that sufficient
    condition or (for the values the constructor rejects) the hypothesis the
    closed forms rely on.
    """
    try:
        build(a0, diag)
    except (NonPositiveEntry, DimensionMismatch, TypeError, ValueError):
        return False
    return True


def log_determinant(A: DiagPlusConstantMatrix) -> float:
    """``log det A = log(pi) + log(s)``, accumulated in log space."""
    return A.log_pi + math.log(A.s)


def determinant(A: DiagPlusConstantMatrix) -> float:
    """``exp(log_determinant(A))``; ``inf`` when not representable."""
    logdet = log_determinant(A)
    try:
        return math.exp(logdet)
    except OverflowError:
        return math.inf


def _normalize(mantissa: float, exponent: int) -> tuple[float, int]:
    frac, e = math.frexp(mantissa)
    return frac, exponent + e


def log_determinant_recursive(A: DiagPlusConstantMatrix) -> float:
    """Log-determinant through the row-expansion recursion.

    Starting from the 1 x 1 case ``det = a_1 + a0`` the recursion

        det(k + 1) = a_{k+1} * det(k) + pi(k),   pi(k) = a0 * a_1 * ... * a_k

    is unrolled one dimension at a time. ``det`` and ``pi`` are carried as
    (mantissa, binary exponent) pairs so no intermediate overflows or
    underflows regardless of ``m``. Kept as an independent path for
    differential testing against ``log_determinant``.
    """
    a = A.diag
    det_m, det_e = _normalize(float(a[0]) + A.a0, 0)
    pi_m, pi_e = _normalize(A.a0 * float(a[0]), 0)
    for k in range(1, A.m):
        ak = float(a[k])
        # align both terms on the larger exponent before adding
        t_m, t_e = _normalize(ak * det_m, det_e)
        e = max(t_e, pi_e)
        det_m, det_e = _normalize(math.ldexp(t_m, t_e - e) + math.ldexp(pi_m, pi_e - e), e)
        pi_m, pi_e = _normalize(pi_m * ak, pi_e)
    return math.log(det_m) + det_e * math.log(2.0)


def inverse(A: DiagPlusConstantMatrix) -> StructuredInverse:
    """Closed-form inverse.

    Entries: ``(a_i s - 1) / (a_i^2 s)`` on the diagonal and
    ``-1 / (a_i a_j s)`` off it.
    """
    u = 1.0 / A.diag
    return StructuredInverse(inv_diag=_frozen(u), u=_frozen(u), s=A.s, inv_a0=1.0 / A.a0)


def solve(A: DiagPlusConstantMatrix, b) -> np.ndarray:
    """Solve ``A x = b`` in O(m); ``b`` may be a vector or an (m, k) array."""
    b = np.asarray(b, dtype=np.float64)
    if b.ndim == 0 or b.shape[0] != A.m:
        raise DimensionMismatch(f"right-hand side must have leading dimension {A.m}, got {b.shape}")
    scaled = b / A.diag if b.ndim == 1 else b / A.diag[:, None]
    total = scaled.sum(axis=0)
    if b.ndim == 1:
        return scaled - (total / A.s) / A.diag
    return scaled - np.outer(1.0 / A.diag, total) / A.s
