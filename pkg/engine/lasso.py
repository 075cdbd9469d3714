"""
Coordinate-descent Lasso solver with KKT certification and the sequential
regularization schedules.

The solved objective is (1 / (2 n)) ||y - X beta||^2 + lambda ||beta||_1 where
n is the problem's normalizer (the number of rows for i.i.d. data, the total
number of rounds for the zero-padded bandit design).

Updates run in covariance form on the Gram columns of coordinates that have
ever been active; the full gradient is re-checked against the KKT conditions
before a fit is declared converged.
"""

import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

import lab_config
from engine.errors import NotConverged
from engine.linalg import as_matrix, as_vector

logger = logging.getLogger(__name__)


def soft_threshold(z: float, tau: float) -> float:
    """sign(z) * max(|z| - tau, 0)."""
    if tau < 0:
        raise ValueError(f"tau must be >= 0, got {tau}")
    if z > tau:
        return z - tau
    if z < -tau:
        return z + tau
    return 0.0


# ==================== GRAM SOURCES ====================

class DenseGram:
    """Full X'X and X'y for a fixed design. Used for one-off fits."""

    def __init__(self, x: np.ndarray, y: np.ndarray):
        self.n_rows, self.d = x.shape
        self._xtx = x.T @ x
        self.xty = x.T @ y
        self.yy = float(y @ y)
        self.diag = np.diag(self._xtx).copy()

    def columns(self, idx) -> np.ndarray:
        return self._xtx[:, idx]


class DesignBuffer:
    """
    Growable design (rows appended one at a time) with incrementally
    maintained X'y, column squared norms, y'y and Gram columns for every
    coordinate that has ever been requested.
    """

    def __init__(self, d: int, capacity: int = 256):
        if d < 1:
            raise ValueError(f"d must be >= 1, got {d}")
        self.d = d
        self.n_rows = 0
        self._x = np.zeros((max(capacity, 1), d))
        self._y = np.zeros(max(capacity, 1))
        self.xty = np.zeros(d)
        self.diag = np.zeros(d)
        self.yy = 0.0
        self._slot = np.full(d, -1, dtype=np.int64)  # coordinate -> cached column slot
        self._cols = np.zeros((d, 0))

    @property
    def x(self) -> np.ndarray:
        return self._x[: self.n_rows]

    @property
    def y(self) -> np.ndarray:
        return self._y[: self.n_rows]

    def append(self, x_row, y_value: float):
        x_row = np.asarray(x_row, dtype=np.float64)
        if x_row.shape != (self.d,):
            raise ValueError(f"row must have shape ({self.d},), got {x_row.shape}")
        if not (np.all(np.isfinite(x_row)) and math.isfinite(y_value)):
            raise ValueError("row and response must be finite")
        if self.n_rows == self._x.shape[0]:
            self._x = np.concatenate([self._x, np.zeros_like(self._x)])
            self._y = np.concatenate([self._y, np.zeros_like(self._y)])
        self._x[self.n_rows] = x_row
        self._y[self.n_rows] = y_value
        self.n_rows += 1

        self.xty += y_value * x_row
        self.diag += x_row * x_row
        self.yy += y_value * y_value
        if self._cols.shape[1]:
            cached = np.flatnonzero(self._slot >= 0)
            self._cols[:, self._slot[cached]] += np.outer(x_row, x_row[cached])

    def _ensure_cached(self, idx: np.ndarray):
        missing = idx[self._slot[idx] < 0]
        if missing.size == 0:
            return
        x = self.x
        start = self._cols.shape[1]
        self._cols = np.concatenate([self._cols, x.T @ x[:, missing]], axis=1)
        self._slot[missing] = np.arange(start, start + missing.size)
        logger.debug(f"Cached {missing.size} Gram columns ({self._cols.shape[1]} total)")

    def columns(self, idx) -> np.ndarray:
        idx = np.atleast_1d(np.asarray(idx, dtype=np.int64))
        self._ensure_cached(idx)
        return self._cols[:, self._slot[idx]]


# ==================== PROBLEM / FIT ====================

@dataclass
class LassoProblem:
    X: np.ndarray
    y: np.ndarray
    lam: float
    normalizer_n: int
    source: Optional[object] = field(default=None, repr=False)

    def __post_init__(self):
        if isinstance(self.source, DesignBuffer):
            # rows were validated on append
            self.X = np.asarray(self.X)
            self.y = np.asarray(self.y)
        else:
            self.X = as_matrix(self.X, "X")
            self.y = as_vector(self.y, "y")
        if self.X.shape[0] != self.y.shape[0]:
            raise ValueError(f"dimension mismatch: X is {self.X.shape}, y has {self.y.shape[0]}")
        if self.lam < 0:
            raise ValueError(f"lambda must be >= 0, got {self.lam}")
        if self.normalizer_n < max(self.X.shape[0], 1):
            raise ValueError(
                f"normalizer_n ({self.normalizer_n}) must be >= number of rows ({self.X.shape[0]})"
            )

    @classmethod
    def from_buffer(cls, buffer: DesignBuffer, lam: float, normalizer_n: Optional[int] = None):
        """Problem over the rows of `buffer`, reusing its Gram caches."""
        n = buffer.n_rows if normalizer_n is None else normalizer_n
        return cls(buffer.x, buffer.y, lam, n, source=buffer)

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def gram(self):
        if self.source is None:
            self.source = DenseGram(self.X, self.y)
        return self.source


@dataclass
class LassoFit:
    coef: np.ndarray
    support: tuple
    kkt_residual: float
    iterations: int
    converged: bool


def _kkt_from_gradient(g: np.ndarray, beta: np.ndarray, lam: float) -> float:
    if g.size == 0:
        return 0.0
    nz = beta != 0
    res = np.where(nz, np.abs(g + lam * np.sign(beta)), np.maximum(np.abs(g) - lam, 0.0))
    return float(np.max(res))


def kkt_residual(p: LassoProblem, beta) -> float:
    """Largest violation of the Lasso stationarity conditions at `beta`."""
    beta = as_vector(beta, "beta")
    if beta.shape[0] != p.d:
        raise ValueError(f"beta has {beta.shape[0]} entries, problem has d={p.d}")
    g = p.X.T @ (p.X @ beta - p.y) / p.normalizer_n
    return _kkt_from_gradient(g, beta, p.lam)


def _objective(yy_n, c, lam, beta, act, cols) -> float:
    # beta is zero outside the active block, cols are normalized Gram columns
    b = beta[act]
    quad = float(b @ (cols.T @ beta)) if act.size else 0.0
    return 0.5 * yy_n - float(c[act] @ b) + 0.5 * quad + lam * float(np.abs(b).sum())


def lasso_fit(
    p: LassoProblem,
    tol: float = None,
    max_iters: int = None,
    warm_start=None,
    strict: bool = False,
) -> LassoFit:
    """
    Minimize the Lasso objective by cyclic coordinate descent.

    Args:
        p: The problem
        tol: Convergence tolerance (default LASSO_TOL)
        max_iters: Maximum number of sweeps (default LASSO_MAX_ITERS)
        warm_start: Optional starting coefficients
        strict: Raise NotConverged instead of returning a flagged fit

    Returns:
        LassoFit with converged=False when max_iters sweeps were exhausted
    """
    tol = lab_config.LASSO_TOL if tol is None else tol
    max_iters = lab_config.LASSO_MAX_ITERS if max_iters is None else max_iters
    if tol <= 0:
        raise ValueError(f"tol must be > 0, got {tol}")

    d, n, lam = p.d, float(p.normalizer_n), float(p.lam)
    src = p.gram()
    c = src.xty / n
    diag = src.diag / n
    usable = diag > 0

    beta = np.zeros(d)
    if warm_start is not None:
        beta = as_vector(warm_start, "warm_start").copy()
        if beta.shape[0] != d:
            raise ValueError(f"warm_start has {beta.shape[0]} entries, problem has d={d}")
        beta[~usable] = 0.0

    active = set(np.flatnonzero(beta).tolist())
    if not active:
        # seed with coordinates already violating at zero
        active = set(np.flatnonzero(usable & (np.abs(c) > lam)).tolist())

    sweeps = 0
    kkt = math.inf
    converged = False
    change_ok = False
    while sweeps < max_iters:
        act = np.array(sorted(active), dtype=np.int64)
        cols = src.columns(act) / n if act.size else np.zeros((d, 0))
        pos = {j: i for i, j in enumerate(act.tolist())}
        # r = c - G beta, restricted to what the active block touches
        r = c - (cols @ beta[act] if act.size else 0.0)
        prev_obj = _objective(src.yy / n, c, lam, beta, act, cols) if lab_config.LAB_DEBUG else None
        change_ok = False

        while sweeps < max_iters:
            sweeps += 1
            max_change = 0.0
            for j in act.tolist():
                gjj = diag[j]
                old = beta[j]
                new = soft_threshold(r[j] + gjj * old, lam) / gjj
                delta = new - old
                if delta != 0.0:
                    beta[j] = new
                    r -= delta * cols[:, pos[j]]
                    max_change = max(max_change, abs(delta))
            if lab_config.LAB_DEBUG:
                obj = _objective(src.yy / n, c, lam, beta, act, cols)
                assert obj <= prev_obj + 1e-12 * max(1.0, abs(prev_obj)), (
                    f"objective increased from {prev_obj} to {obj}"
                )
                prev_obj = obj
            if max_change <= tol * (1.0 + float(np.max(np.abs(beta)))):
                change_ok = True
                break

        # full KKT check on a freshly computed gradient
        g = (cols @ beta[act] if act.size else np.zeros(d)) - c
        g[~usable] = 0.0
        kkt = _kkt_from_gradient(g, beta, lam)
        violators = np.flatnonzero(usable & (beta == 0) & (np.abs(g) - lam > 10 * tol))
        added = [j for j in violators.tolist() if j not in active]
        if added:
            active.update(added)
            continue
        if change_ok and kkt <= 10 * tol:
            converged = True
            break

    support = tuple(int(j) for j in np.flatnonzero(beta))
    fit = LassoFit(beta, support, kkt, sweeps, converged)
    if not converged:
        logger.debug(f"⚠️ Lasso stopped after {sweeps} sweeps, KKT residual {kkt:.3e}")
        if strict:
            raise NotConverged(fit)
    return fit


# ==================== SCHEDULES ====================

class SeqLambdaVariant(str, enum.Enum):
    THEORY_SEQ = "theory_seq"
    SIM_SEQ = "sim_seq"


@dataclass(frozen=True)
class SeqLambdaSchedule:
    variant: SeqLambdaVariant
    C0: float
    sigma: float = 1.0
    d: int = 2

    def __post_init__(self):
        object.__setattr__(self, "variant", SeqLambdaVariant(self.variant))
        if self.C0 <= 0:
            raise ValueError(f"C0 must be > 0, got {self.C0}")
        if self.sigma < 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")
        if self.d < 2:
            raise ValueError(f"d must be >= 2, got {self.d}")


def seq_lambda(sched: SeqLambdaSchedule, t: int) -> float:
    """Regularization level at round t (natural logarithms)."""
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t}")
    if sched.variant is SeqLambdaVariant.THEORY_SEQ:
        return sched.C0 * sched.sigma * math.sqrt(math.log(sched.d * t) / t)
    return sched.C0 * math.sqrt(math.log(sched.d) / t)
