"""
Executable constructions used as property-test fixtures and diagnostics:
sparse packing sets and the uniform prior over them, the smooth radial prior,
sampled restricted-eigenvalue estimates and empirical margin curves.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from engine.errors import OutOfRegime, PackingFailed
from engine.linalg import as_matrix, as_vector, sym_eig_range
from engine.randkit import CovariateModel, RngStream, SparseParam, sample_covariates

logger = logging.getLogger(__name__)

PACKING_RTOL = 1e-10
MARGIN_CHUNK = 10_000
VERIFY_BLOCK = 1024


# ==================== PACKING SETS ====================

def l_ds(d: int, s: int) -> float:
    """((s - 1) / 2) log((d - s) / ((s - 1) / 2)), defined for 3 <= s <= (d + 2) / 3."""
    if not (3 <= s and 3 * s <= d + 2):
        raise OutOfRegime(f"need 3 <= s <= (d + 2) / 3, got d={d}, s={s}")
    half = (s - 1) / 2.0
    return half * math.log((d - s) / half)


@dataclass
class PackingSet:
    vectors: np.ndarray  # M x d
    s: int
    r: float
    delta: float

    @property
    def M(self) -> int:
        return self.vectors.shape[0]


def verify_packing_set(p: PackingSet) -> None:
    """
    Exhaustive check of the packing properties.

    Raises:
        AssertionError: naming the first property that fails
    """
    v = p.vectors
    d = v.shape[1]
    norm2 = p.r ** 2 + 2 * p.delta ** 2
    slack = PACKING_RTOL * norm2

    nnz = np.count_nonzero(v, axis=1)
    if np.any(nnz != p.s):
        raise AssertionError(f"vector {int(np.argmax(nnz != p.s))} is not {p.s}-sparse")
    sq = np.einsum("ij,ij->i", v, v)
    if np.any(np.abs(sq - norm2) > slack):
        raise AssertionError(f"vector {int(np.argmax(np.abs(sq - norm2)))} has the wrong norm")
    for start in range(0, p.M, VERIFY_BLOCK):
        block = slice(start, min(start + VERIFY_BLOCK, p.M))
        dist2 = sq[block, None] + sq[None, :] - 2.0 * (v[block] @ v.T)
        rows = np.arange(block.start, block.stop)
        dist2[rows - start, rows] = p.delta ** 2  # skip i == j
        if np.any(dist2 < p.delta ** 2 - slack) or np.any(dist2 > 8 * p.delta ** 2 + slack):
            raise AssertionError("pairwise separation outside [delta^2, 8 delta^2]")
    if math.log(p.M) < l_ds(d, p.s) - 1e-12:
        raise AssertionError(f"log M = {math.log(p.M):.4f} below {l_ds(d, p.s):.4f}")


def build_packing_set(d: int, s: int, r: float, delta: float, stream: RngStream,
                      max_attempts: Optional[int] = None) -> PackingSet:
    """
    Randomized greedy packing: vectors (r, sqrt(2 / (s - 1)) delta p) with
    p in {-1, 0, 1}^(d-1) carrying s - 1 nonzeros, kept when p is at Hamming
    distance >= (s - 1) / 2 from every accepted pattern.

    Raises:
        OutOfRegime: outside 3 <= s <= (d + 2) / 3
        PackingFailed: when max_attempts candidates do not reach M vectors
    """
    if r <= 0 or delta <= 0:
        raise ValueError(f"r and delta must be > 0, got r={r}, delta={delta}")
    target = math.ceil(math.exp(l_ds(d, s)))
    max_attempts = 50 * target if max_attempts is None else max_attempts
    min_hamming = (s - 1) / 2.0
    gen = stream.generator

    patterns = np.zeros((target, d - 1), dtype=np.int8)
    accepted = 0
    attempts = 0
    while accepted < target:
        if attempts >= max_attempts:
            raise PackingFailed(accepted, target, attempts)
        attempts += 1
        cand = np.zeros(d - 1, dtype=np.int8)
        cand[gen.choice(d - 1, size=s - 1, replace=False)] = gen.choice(
            np.array([-1, 1], dtype=np.int8), size=s - 1
        )
        if accepted:
            hamming = np.count_nonzero(patterns[:accepted] != cand, axis=1)
            if hamming.min() < min_hamming:
                continue
        patterns[accepted] = cand
        accepted += 1

    vectors = np.empty((target, d))
    vectors[:, 0] = r
    vectors[:, 1:] = math.sqrt(2.0 / (s - 1)) * delta * patterns
    packing = PackingSet(vectors, s, r, delta)
    verify_packing_set(packing)
    logger.info(f"✅ Packing set: {target} vectors (d={d}, s={s}) after {attempts} candidates")
    return packing


def sample_omega2(packing: PackingSet, stream: RngStream) -> SparseParam:
    """Uniform draw from a packing set."""
    return SparseParam.from_dense(packing.vectors[stream.generator.integers(packing.M)])


# ==================== RADIAL PRIOR ====================

def radial_density(tau, r: float):
    """4 / r sin^2(2 pi tau / r) on [r / 2, r], zero elsewhere."""
    tau = np.asarray(tau, dtype=np.float64)
    inside = (tau >= r / 2) & (tau <= r)
    return np.where(inside, 4.0 / r * np.sin(2 * np.pi * tau / r) ** 2, 0.0)


def sample_omega1(d: int, s: int, r: float, stream: RngStream) -> SparseParam:
    """
    theta supported on the first s coordinates with theta = R U, U uniform on
    the unit sphere and R drawn from the radial density by rejection against a
    uniform envelope on [r / 2, r].
    """
    if not 2 <= s <= d:
        raise ValueError(f"need 2 <= s <= d, got s={s}, d={d}")
    if r <= 0:
        raise ValueError(f"r must be > 0, got {r}")
    gen = stream.generator
    z = gen.standard_normal(s)
    direction = z / np.linalg.norm(z)
    while True:
        tau = gen.uniform(r / 2, r)
        # acceptance ratio density / envelope = sin^2(2 pi tau / r)
        if gen.uniform() <= math.sin(2 * math.pi * tau / r) ** 2:
            break
    return SparseParam(d, tuple(range(s)), tuple(float(v) for v in tau * direction))


# ==================== RESTRICTED EIGENVALUES ====================

def _in_cone(v: np.ndarray, s: int, kappa: float) -> bool:
    mags = np.sort(np.abs(v))[::-1]
    return mags[s:].sum() <= kappa * mags[:s].sum() * (1 + 1e-12)


def re_constant_sampled(X, n: int, s: int, kappa: float, n_dirs: int, stream: RngStream,
                        extra_dirs=None) -> float:
    """
    Smallest n^-1 ||X v||^2 / ||v||^2 over sampled cone directions.

    Each direction picks a random s-subset J, a Gaussian v_J and a Gaussian
    v_{J^c} rescaled so ||v_{J^c}||_1 = U kappa ||v_J||_1 with U uniform. The
    result upper-bounds the true restricted-eigenvalue constant; it is a
    diagnostic, never a certificate. `extra_dirs` adds fixed directions, each
    of which must lie in the cone.
    """
    X = as_matrix(X, "X")
    d = X.shape[1]
    if n_dirs < 1:
        raise ValueError(f"n_dirs must be >= 1, got {n_dirs}")
    if not 1 <= s <= d:
        raise ValueError(f"need 1 <= s <= d, got s={s}, d={d}")
    gen = stream.generator

    dirs = np.zeros((n_dirs, d))
    for i in range(n_dirs):
        perm = gen.permutation(d)
        J, rest = perm[:s], perm[s:]
        dirs[i, J] = gen.standard_normal(s)
        if rest.size and kappa > 0:
            w = gen.standard_normal(rest.size)
            u = gen.uniform()
            if math.isinf(kappa):
                dirs[i, rest] = w  # whole space
            else:
                dirs[i, rest] = w * (u * kappa * np.abs(dirs[i, J]).sum() / np.abs(w).sum())

    if extra_dirs is not None:
        extra = np.atleast_2d(np.asarray(extra_dirs, dtype=np.float64))
        for v in extra:
            if not _in_cone(v, s, kappa):
                raise ValueError("extra direction lies outside the cone")
        dirs = np.vstack([dirs, extra])

    xv = dirs @ X.T  # one row of X v per direction
    ratios = np.einsum("ij,ij->i", xv, xv) / (n * np.einsum("ij,ij->i", dirs, dirs))
    return float(ratios.min())


def re_constant_full_cone(X, n: int) -> float:
    """Exact constant for s = d: the smallest eigenvalue of X'X / n."""
    X = as_matrix(X, "X")
    lo, _ = sym_eig_range(X.T @ X / n)
    return lo


# ==================== MARGIN CURVES ====================

@dataclass
class MarginCurve:
    taus: np.ndarray
    empirical_probs: np.ndarray
    n_samples: int


def margin_curve(cov: CovariateModel, u, taus, n_samples: int, stream: RngStream) -> MarginCurve:
    """Monte-Carlo estimates of P(|u'X| <= tau) on an ascending tau grid."""
    u = as_vector(u, "u")
    taus = as_vector(taus, "taus")
    if u.shape[0] != cov.d:
        raise ValueError(f"u has {u.shape[0]} entries, covariates have d={cov.d}")
    if not np.any(u):
        raise ValueError("u must be nonzero")
    if np.any(taus <= 0) or np.any(np.diff(taus) <= 0):
        raise ValueError("taus must be positive and strictly ascending")
    if n_samples < 1:
        raise ValueError(f"n_samples must be >= 1, got {n_samples}")

    counts = np.zeros(taus.shape[0], dtype=np.int64)
    left = n_samples
    while left:
        m = min(left, MARGIN_CHUNK)
        proj = np.sort(np.abs(sample_covariates(stream, cov, m) @ u))
        counts += np.searchsorted(proj, taus, side="right")
        left -= m
    return MarginCurve(taus, counts / n_samples, n_samples)
