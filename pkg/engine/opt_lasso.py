"""
OPT-Lasso: threshold an initial Lasso fit at lambda_opt, then refit ordinary
least squares on the surviving coordinates. Also holds the deterministic
error-bound check and the instance-sum helper used by the property tests.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from engine.errors import NotConverged, Unverifiable
from engine.lasso import (
    DesignBuffer,
    LassoFit,
    LassoProblem,
    SeqLambdaSchedule,
    SeqLambdaVariant,
    lasso_fit,
)
from engine.linalg import as_vector, least_squares_min_norm, sym_eig_range
from engine.randkit import SparseParam

logger = logging.getLogger(__name__)

BOUND_SLACK = 1e-12


def threshold_support(beta, lambda_opt: float) -> tuple:
    """Ascending indices with |beta_j| > lambda_opt (strict)."""
    beta = np.asarray(beta, dtype=np.float64)
    return tuple(int(j) for j in np.flatnonzero(np.abs(beta) > lambda_opt))


@dataclass(frozen=True)
class OptLassoConfig:
    lam: float
    lam_opt: float
    normalizer_n: int

    def __post_init__(self):
        if self.lam < 0 or self.lam_opt < 0:
            raise ValueError(f"lambda and lambda_opt must be >= 0, got {self.lam}, {self.lam_opt}")
        if self.normalizer_n < 1:
            raise ValueError(f"normalizer_n must be >= 1, got {self.normalizer_n}")


@dataclass
class OptLassoFit:
    coef: np.ndarray
    selected: tuple
    lasso_stage: LassoFit
    lam_opt: float

    @property
    def converged(self) -> bool:
        return self.lasso_stage.converged

    @property
    def iterations(self) -> int:
        return self.lasso_stage.iterations

    @property
    def kkt_residual(self) -> float:
        return self.lasso_stage.kkt_residual


def opt_lasso_fit(
    X,
    y,
    cfg: OptLassoConfig,
    tol: float = None,
    max_iters: int = None,
    warm_start=None,
    strict: bool = False,
    buffer: Optional[DesignBuffer] = None,
) -> OptLassoFit:
    """
    Lasso with cfg.lam, hard threshold at cfg.lam_opt, OLS refit on the selection.

    When `buffer` is given, X and y are ignored and its rows are used instead.
    A non-converged Lasso stage is still thresholded and refit; `strict` then
    raises NotConverged carrying the finished OptLassoFit.
    """
    if buffer is not None:
        problem = LassoProblem.from_buffer(buffer, cfg.lam, cfg.normalizer_n)
    else:
        problem = LassoProblem(X, y, cfg.lam, cfg.normalizer_n)
    stage = lasso_fit(problem, tol=tol, max_iters=max_iters, warm_start=warm_start)

    selected = threshold_support(stage.coef, cfg.lam_opt)
    coef = np.zeros(problem.d)
    if selected and problem.X.shape[0] > 0:
        idx = list(selected)
        coef[idx] = least_squares_min_norm(problem.X[:, idx], problem.y)

    fit = OptLassoFit(coef, selected, stage, cfg.lam_opt)
    if strict and not stage.converged:
        raise NotConverged(fit)
    return fit


# ==================== DETERMINISTIC BOUND ====================

@dataclass(frozen=True)
class BoundCheck:
    holds: bool
    lhs: float
    rhs: float


def deterministic_bound_check(
    theta: SparseParam,
    fit: OptLassoFit,
    X,
    eps,
    a: float,
    b: float,
    normalizer_n: Optional[int] = None,
) -> BoundCheck:
    """
    Evaluate the instance-specific OPT-Lasso squared-error bound.

    The bound assumes ||lasso - theta||_inf <= lambda_opt and, for a nonempty
    support S, a <= eig(X_S'X_S / n) <= b. Both are checked here.

    Raises:
        Unverifiable: when a hypothesis fails on this instance
    """
    X = np.asarray(X, dtype=np.float64)
    eps = as_vector(eps, "eps")
    n = X.shape[0] if normalizer_n is None else normalizer_n
    truth = theta.dense()

    sup_err = float(np.max(np.abs(fit.lasso_stage.coef - truth)))
    if sup_err > fit.lam_opt:
        raise Unverifiable(f"lasso sup-norm error {sup_err:.4g} exceeds lambda_opt {fit.lam_opt:.4g}")

    lhs = float(np.sum((fit.coef - truth) ** 2))
    support = list(theta.support)
    if not support:
        return BoundCheck(lhs <= BOUND_SLACK, lhs, 0.0)

    if not 0 < a < b:
        raise Unverifiable(f"need 0 < a < b, got a={a}, b={b}")
    xs = X[:, support]
    lo, hi = sym_eig_range(xs.T @ xs / n)
    if not a <= lo <= hi <= b:
        raise Unverifiable(f"restricted Gram spectrum [{lo:.4g}, {hi:.4g}] not inside [{a}, {b}]")

    vals = np.asarray(theta.values)
    weak = np.abs(vals) <= 2.0 * fit.lam_opt
    noise = xs.T @ eps / n
    rhs = (2.0 * b / a + 1.0) * float(np.sum(vals[weak] ** 2)) + (2.0 / a ** 2) * float(noise @ noise)
    return BoundCheck(lhs <= rhs + BOUND_SLACK, lhs, rhs)


def strong_support(theta: SparseParam, lambda_opt: float) -> tuple:
    """Coordinates with |theta_j| > 2 lambda_opt."""
    return threshold_support(theta.dense(), 2.0 * lambda_opt)


# ==================== SCHEDULES ====================

def seq_lambda_opt(sched: SeqLambdaSchedule, C0_hard: float, t: int) -> float:
    """Threshold at round t. Both variants use log(d t)."""
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t}")
    if C0_hard < 0:
        raise ValueError(f"C0_hard must be >= 0, got {C0_hard}")
    base = sched.C0 * math.sqrt(math.log(sched.d * t) / t)
    if sched.variant is SeqLambdaVariant.THEORY_SEQ:
        base *= sched.sigma
    return C0_hard * base


def instance_sum(a: float, b: float, T: int) -> float:
    """sum_{t=1..T} a^2 1{|a| <= sqrt(b / t)}, which never exceeds b."""
    if a == 0 or b <= 0:
        raise ValueError(f"need a != 0 and b > 0, got a={a}, b={b}")
    if T < 1:
        return 0.0
    t = np.arange(1, T + 1, dtype=np.float64)
    count = int(np.count_nonzero(a * a * t <= b))
    return (a * a) * count
