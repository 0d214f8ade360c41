"""Samplers for ``Z ~ N(0, I_n)`` restricted to ``w'Z = c``.

``sample_exact`` draws from the conditional law. The three ``sample_naive_*``
schemes also land exactly on the hyperplane but have the wrong distribution;
they are kept as foils for the verifier:

* ``last_coord``: ``Z_1..Z_{n-1}`` standard Normal, ``Z_n`` solved from the constraint.
* ``rescale``:    ``Z = (c / y) Z~`` with ``y = w'Z~``.
* ``shift``:      ``Z_i = Z~_i + (c - y) / (n w_i)``.

For equal weights the shift scheme is an orthogonal projection onto the
hyperplane and happens to reproduce the exact law.
"""
from __future__ import annotations

import io
import struct
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .errors import DegenerateRescale, DimensionMismatch, NotPositiveDefinite
from .law import ConditionalGaussian, WeightVector, as_weights, lift_rows

METHODS = ("exact", "naive_last_coord", "naive_rescale", "naive_shift")
BINARY_MAGIC = b"CGS1"
RESCALE_FLOOR = 1e-30


@dataclass(frozen=True)
class CholeskyFactor:
    lower: np.ndarray

    @property
    def dim(self) -> int:
        return int(self.lower.shape[0])


@dataclass
class SampleBatch:
    points: np.ndarray
    method: str
    seed: int
    space: str
    weights: WeightVector
    c: float
    metadata: dict = field(default_factory=dict)

    @property
    def count(self) -> int:
        return int(self.points.shape[0])

    def residuals(self) -> np.ndarray:
        if self.space == "X":
            return np.abs(self.points.sum(axis=1) - self.c)
        return np.abs(self.points @ self.weights.w - self.c)

    def max_residual(self) -> float:
        return float(self.residuals().max())

    def to_space(self, space: str) -> "SampleBatch":
        if space == self.space:
            return self
        w = self.weights.w
        pts = self.points / w if space == "Z" else self.points * w
        return SampleBatch(pts, self.method, self.seed, space, self.weights, self.c, dict(self.metadata))

    def header(self) -> list[str]:
        prefix = self.space.lower()
        return [f"{prefix}{i + 1}" for i in range(self.points.shape[1])]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(self.header()) + "\n")
        np.savetxt(buf, self.points, fmt="%.17g", delimiter=",")
        return buf.getvalue()

    def to_binary(self) -> bytes:
        """``CGS1`` + uint64 rows + uint64 cols, then float64 data column-major, all little-endian."""
        rows, cols = self.points.shape
        head = BINARY_MAGIC + struct.pack("<QQ", rows, cols)
        return head + np.asfortranarray(self.points, dtype="<f8").tobytes(order="F")


def read_binary(data: bytes) -> np.ndarray:
    if data[:4] != BINARY_MAGIC:
        raise ValueError("not a CGS1 sample dump")
    rows, cols = struct.unpack("<QQ", data[4:20])
    flat = np.frombuffer(data, dtype="<f8", offset=20, count=rows * cols)
    return flat.reshape((rows, cols), order="F").astype(np.float64)


def cholesky(sigma) -> CholeskyFactor:
    """Lower Cholesky factor of a symmetric positive definite matrix.

    Raises ``NotPositiveDefinite`` when the factorization fails or a pivot
    ``L_ii^2`` drops below machine epsilon times the largest diagonal entry.
    """
    sigma = np.atleast_2d(np.asarray(sigma, dtype=np.float64))
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1] or sigma.shape[0] == 0:
        raise DimensionMismatch(f"expected a nonempty square matrix, got shape {sigma.shape}")
    if not np.allclose(sigma, sigma.T, rtol=1e-12, atol=0.0):
        raise NotPositiveDefinite("matrix is not symmetric")
    try:
        lower = np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from None
    floor = np.finfo(np.float64).eps * float(np.max(np.diag(sigma)))
    if not np.all(np.diag(lower) ** 2 > floor):
        raise NotPositiveDefinite("Cholesky pivot below eps * max diagonal")
    lower.setflags(write=False)
    return CholeskyFactor(lower)


def _check_count(count: int) -> int:
    if isinstance(count, bool) or not isinstance(count, (int, np.integer)) or count < 1:
        raise ValueError(f"count must be a positive integer, got {count!r}")
    return int(count)


def iter_exact(law: ConditionalGaussian, count: int, seed: int, space: str = "X", chunk: int | None = None):
    """Yield chunks of exact full-space samples; never holds more than one chunk."""
    count = _check_count(count)
    L = cholesky(law.sigma).lower
    for k, rows in rng.chunks(count, chunk):
        g = rng.substream(seed, k).standard_normal((rows, law.dim))
        x = lift_rows(law, law.mu + g @ L.T)
        yield x / law.weights.w if space == "Z" else x


def sample_exact(law: ConditionalGaussian, count: int, seed: int, space: str = "X") -> SampleBatch:
    """``count`` draws ``mu + L g`` on the retained coordinates, lifted to all n."""
    points = np.concatenate(list(iter_exact(law, count, seed, space)))
    return SampleBatch(points, "exact", rng.check_seed(seed), space, law.weights, law.c, _meta())


def _meta(**extra) -> dict:
    return {"rng": rng.RNG_DESCRIPTION, "chunk": rng.chunk_size(), **extra}


def iter_naive_last_coord(w, c: float, count: int, seed: int, chunk: int | None = None):
    w = as_weights(w)
    count = _check_count(count)
    for k, rows in rng.chunks(count, chunk):
        z = rng.substream(seed, k).standard_normal((rows, w.n))
        z[:, -1] = (c - z[:, :-1] @ w.w[:-1]) / w.w[-1]
        yield z


def sample_naive_last_coord(w, c: float, count: int, seed: int) -> SampleBatch:
    w = as_weights(w)
    points = np.concatenate(list(iter_naive_last_coord(w, c, count, seed)))
    return SampleBatch(points, "naive_last_coord", rng.check_seed(seed), "Z", w, float(c), _meta())


def iter_naive_rescale(w, c: float, count: int, seed: int, chunk: int | None = None, stats: dict | None = None):
    """Rescale scheme; draws with ``|w'Z~| < 1e-30`` are redrawn and counted in ``stats``."""
    w = as_weights(w)
    count = _check_count(count)
    stats = {} if stats is None else stats
    stats.setdefault("degenerate_redraws", 0)
    for k, rows in rng.chunks(count, chunk):
        gen = rng.substream(seed, k)
        z = gen.standard_normal((rows, w.n))
        y = z @ w.w
        bad = np.abs(y) < RESCALE_FLOOR
        while bad.any():
            stats["degenerate_redraws"] += int(bad.sum())
            z[bad] = gen.standard_normal((int(bad.sum()), w.n))
            y[bad] = z[bad] @ w.w
            bad = np.abs(y) < RESCALE_FLOOR
        yield z * (c / y)[:, None]


def sample_naive_rescale(w, c: float, count: int, seed: int) -> SampleBatch:
    """Rescale scheme. ``c == 0`` collapses every draw to the zero vector and is flagged."""
    w = as_weights(w)
    if c == 0:
        warnings.warn("rescale scheme with c = 0 maps every draw to the zero vector", DegenerateRescale, stacklevel=2)
    stats: dict = {}
    points = np.concatenate(list(iter_naive_rescale(w, c, count, seed, stats=stats)))
    meta = _meta(degenerate_redraws=stats["degenerate_redraws"], degenerate_c_zero=(c == 0))
    return SampleBatch(points, "naive_rescale", rng.check_seed(seed), "Z", w, float(c), meta)


def iter_naive_shift(w, c: float, count: int, seed: int, chunk: int | None = None):
    w = as_weights(w)
    count = _check_count(count)
    step = 1.0 / (w.n * w.w)
    for k, rows in rng.chunks(count, chunk):
        z = rng.substream(seed, k).standard_normal((rows, w.n))
        y = z @ w.w
        yield z + np.outer(c - y, step)


def sample_naive_shift(w, c: float, count: int, seed: int) -> SampleBatch:
    w = as_weights(w)
    points = np.concatenate(list(iter_naive_shift(w, c, count, seed)))
    return SampleBatch(points, "naive_shift", rng.check_seed(seed), "Z", w, float(c), _meta())


def iter_method(method: str, law: ConditionalGaussian, count: int, seed: int, space: str = "Z", stats=None):
    """Chunk iterator for any method; naive schemes are converted to ``space``."""
    if method == "exact":
        yield from iter_exact(law, count, seed, space)
        return
    if method == "naive_last_coord":
        it = iter_naive_last_coord(law.weights, law.c, count, seed)
    elif method == "naive_rescale":
        it = iter_naive_rescale(law.weights, law.c, count, seed, stats=stats)
    elif method == "naive_shift":
        it = iter_naive_shift(law.weights, law.c, count, seed)
    else:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    for z in it:
        yield z * law.weights.w if space == "X" else z


def sample(method: str, law: ConditionalGaussian, count: int, seed: int) -> SampleBatch:
    """Dispatch by method name; the exact batch is returned in Z space like the others."""
    if method == "exact":
        return sample_exact(law, count, seed, space="Z")
    if method == "naive_last_coord":
        return sample_naive_last_coord(law.weights, law.c, count, seed)
    if method == "naive_rescale":
        return sample_naive_rescale(law.weights, law.c, count, seed)
    if method == "naive_shift":
        return sample_naive_shift(law.weights, law.c, count, seed)
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
