"""
Seeded, splittable random streams and the sampling primitives used by the
experiments and fixtures.

Streams are numpy Philox generators keyed by (base_seed, replication_index):
the 128-bit key selects a counter domain, so stream (seed, i) never depends on
how much of stream (seed, j) was consumed.
"""

import enum
import functools
import logging
from dataclasses import dataclass, field

import numpy as np

from engine.linalg import as_vector

logger = logging.getLogger(__name__)

_MASK64 = (1 << 64) - 1


@dataclass
class RngStream:
    """Single-owner random stream; cheap to send to worker processes."""

    base_seed: int
    stream_id: int
    child_id: int = 0
    generator: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        key = np.array([self.base_seed & _MASK64, self.stream_id & _MASK64], dtype=np.uint64)
        # high counter word separates child streams sharing a key
        counter = np.array([0, 0, 0, self.child_id & _MASK64], dtype=np.uint64)
        self.generator = np.random.Generator(np.random.Philox(key=key, counter=counter))

    def child(self, index: int) -> "RngStream":
        """Independent sub-stream `index` (>= 1) of the same replication."""
        if index < 1:
            raise ValueError("child index must be >= 1")
        return RngStream(self.base_seed, self.stream_id, index)


def make_stream(base_seed: int, replication_index: int) -> RngStream:
    """Stream for one replication; deterministic in (base_seed, replication_index)."""
    if replication_index < 0:
        raise ValueError(f"replication_index must be >= 0, got {replication_index}")
    return RngStream(int(base_seed), int(replication_index))


def sample_standard_normal(s: RngStream, n: int) -> np.ndarray:
    """n i.i.d. N(0, 1) draws."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return s.generator.standard_normal(n)


# ── Covariate models ──────────────────────────────────────────────────────────

class CovariateKind(str, enum.Enum):
    GAUSSIAN_IDENTITY = "gaussian_identity"
    GAUSSIAN_CIRCULANT = "gaussian_circulant"
    GAUSSIAN_BLOCK = "gaussian_block"
    CLIPPED_GAUSSIAN = "clipped_gaussian"


@dataclass(frozen=True)
class CovariateModel:
    """
    Distribution of one covariate vector X_t in R^d.

    gaussian_circulant uses Sigma_ij = r^|i-j|; gaussian_block uses
    equicorrelated blocks of `block_size` with within-block correlation
    `block_rho`; clipped_gaussian clamps N(0, I_d) entries into [-bound, bound].
    """

    kind: CovariateKind
    d: int
    r: float = 0.5
    block_size: int = 5
    block_rho: float = 0.5
    bound: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", CovariateKind(self.kind))
        if self.d < 2:
            raise ValueError(f"covariate dimension must be >= 2, got {self.d}")
        if self.kind is CovariateKind.GAUSSIAN_CIRCULANT and not 0 < self.r < 1:
            raise ValueError(f"circulant r must lie in (0, 1), got {self.r}")
        if self.kind is CovariateKind.GAUSSIAN_BLOCK:
            if self.block_size < 1:
                raise ValueError(f"block_size must be >= 1, got {self.block_size}")
            if not -1.0 / max(self.block_size - 1, 1) < self.block_rho < 1:
                raise ValueError(f"block_rho {self.block_rho} gives a singular block")
        if self.kind is CovariateKind.CLIPPED_GAUSSIAN and self.bound <= 0:
            raise ValueError(f"clipping bound must be > 0, got {self.bound}")

    def covariance(self) -> np.ndarray:
        """Covariance of the underlying Gaussian (before any clipping)."""
        if self.kind is CovariateKind.GAUSSIAN_CIRCULANT:
            idx = np.arange(self.d)
            return self.r ** np.abs(idx[:, None] - idx[None, :])
        if self.kind is CovariateKind.GAUSSIAN_BLOCK:
            sigma = np.zeros((self.d, self.d))
            for start in range(0, self.d, self.block_size):
                stop = min(start + self.block_size, self.d)
                sigma[start:stop, start:stop] = self.block_rho
            np.fill_diagonal(sigma, 1.0)
            return sigma
        return np.eye(self.d)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value, "d": self.d, "r": self.r,
            "block_size": self.block_size, "block_rho": self.block_rho, "bound": self.bound,
        }


@functools.lru_cache(maxsize=32)
def _cholesky_factor(model: CovariateModel) -> np.ndarray:
    logger.debug(f"Caching Cholesky factor for {model.kind.value}, d={model.d}")
    return np.linalg.cholesky(model.covariance())


def sample_covariates(s: RngStream, model: CovariateModel, n: int) -> np.ndarray:
    """n i.i.d. covariate rows (n x d)."""
    z = s.generator.standard_normal((n, model.d))
    if model.kind in (CovariateKind.GAUSSIAN_CIRCULANT, CovariateKind.GAUSSIAN_BLOCK):
        return z @ _cholesky_factor(model).T
    if model.kind is CovariateKind.CLIPPED_GAUSSIAN:
        np.clip(z, -model.bound, model.bound, out=z)
    return z


def sample_covariate(s: RngStream, model: CovariateModel) -> np.ndarray:
    """One covariate vector X_t."""
    return sample_covariates(s, model, 1)[0]


# ── Sparse parameters ─────────────────────────────────────────────────────────

@dataclass(frozen=True)
class SparseParam:
    """d-dimensional parameter with explicit support (ascending) and values."""

    d: int
    support: tuple
    values: tuple

    def __post_init__(self):
        if len(self.support) != len(self.values):
            raise ValueError("support and values must have equal length")
        if any(not 0 <= j < self.d for j in self.support):
            raise ValueError("support index out of range")
        if list(self.support) != sorted(set(self.support)):
            raise ValueError("support must be strictly ascending")

    @classmethod
    def from_dense(cls, theta) -> "SparseParam":
        theta = as_vector(theta, "theta")
        support = np.flatnonzero(theta)
        return cls(theta.shape[0], tuple(int(j) for j in support),
                   tuple(float(theta[j]) for j in support))

    @property
    def s0(self) -> int:
        return len(self.support)

    def dense(self) -> np.ndarray:
        theta = np.zeros(self.d)
        theta[list(self.support)] = self.values
        return theta

    def dot(self, x) -> float:
        """x' theta using only the support."""
        if not self.support:
            return 0.0
        return float(np.dot(np.asarray(x)[list(self.support)], self.values))


def sample_sparse_uniform_param(s: RngStream, d: int, s0: int, lo: float, hi: float) -> SparseParam:
    """Uniformly random s0-subset of [d] with i.i.d. Uniform[lo, hi] values."""
    if not 1 <= s0 <= d:
        raise ValueError(f"need 1 <= s0 <= d, got s0={s0}, d={d}")
    if not lo < hi:
        raise ValueError(f"need lo < hi, got [{lo}, {hi}]")
    support = np.sort(s.generator.choice(d, size=s0, replace=False))
    values = s.generator.uniform(lo, hi, size=s0)
    return SparseParam(d, tuple(int(j) for j in support), tuple(float(v) for v in values))
