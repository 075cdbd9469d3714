"""
Sequential high-dimensional estimation.

One replication draws a sparse parameter, then for t = 1..T observes
(X_t, Y_t = X_t' theta + eps_t), refits the chosen estimator on all data up to
t and records the squared error and the support false positives / negatives.
"""

import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from engine.errors import NotPositiveDefinite, TooFewReplications
from engine.lasso import (
    DesignBuffer,
    LassoProblem,
    SeqLambdaSchedule,
    SeqLambdaVariant,
    lasso_fit,
    seq_lambda,
)
from engine.linalg import least_squares_min_norm, solve_spd
from engine.opt_lasso import OptLassoConfig, instance_sum, opt_lasso_fit, seq_lambda_opt
from engine.randkit import (
    CovariateKind,
    CovariateModel,
    RngStream,
    SparseParam,
    sample_covariate,
    sample_sparse_uniform_param,
    sample_standard_normal,
)

logger = logging.getLogger(__name__)


class Estimator(str, enum.Enum):
    LASSO = "lasso"
    OPT_LASSO = "opt_lasso"
    ORACLE_LS = "oracle_ls"


@dataclass(frozen=True)
class SequentialScenario:
    s0: int
    d: int
    T: int
    sigma: float = 1.0
    cov: CovariateModel = None
    estimator: Estimator = Estimator.OPT_LASSO
    C0: float = 0.8
    C0_hard: float = 0.6
    schedule_variant: SeqLambdaVariant = SeqLambdaVariant.SIM_SEQ
    cap_xi: Optional[float] = None
    reps: int = 200
    base_seed: int = 0
    error_window: Optional[tuple] = None
    refit_every: int = 1
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "estimator", Estimator(self.estimator))
        object.__setattr__(self, "schedule_variant", SeqLambdaVariant(self.schedule_variant))
        if self.cov is None:
            object.__setattr__(self, "cov", CovariateModel(CovariateKind.GAUSSIAN_IDENTITY, self.d))
        if not 1 <= self.s0 <= self.d:
            raise ValueError(f"need 1 <= s0 <= d, got s0={self.s0}, d={self.d}")
        if self.cov.d != self.d:
            raise ValueError(f"covariate model has d={self.cov.d}, scenario has d={self.d}")
        if self.T < 2:
            raise ValueError(f"T must be >= 2, got {self.T}")
        if self.sigma < 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")
        if self.cap_xi is not None and self.cap_xi <= 0:
            raise ValueError(f"cap_xi must be > 0 when given, got {self.cap_xi}")
        if self.refit_every < 1:
            raise ValueError(f"refit_every must be >= 1, got {self.refit_every}")
        if self.error_window is None:
            object.__setattr__(self, "error_window", (max(self.T // 10, 1), self.T))
        lo, hi = self.error_window
        if not 1 <= lo <= hi <= self.T:
            raise ValueError(f"error_window {self.error_window} not inside [1, {self.T}]")
        object.__setattr__(self, "error_window", (int(lo), int(hi)))

    @property
    def schedule(self) -> SeqLambdaSchedule:
        return SeqLambdaSchedule(self.schedule_variant, self.C0, self.sigma, self.d)


@dataclass
class SeqRunRecord:
    squared_error: np.ndarray
    fp: np.ndarray
    fn: np.ndarray
    support_size: np.ndarray
    theta_true: SparseParam
    not_converged: int = 0
    extras: dict = field(default_factory=dict)


def refit_cadence_plan(T: int, every: int) -> list:
    """Refit rounds {every, 2 every, ...} within [1, T]."""
    if every < 1:
        raise ValueError(f"every must be >= 1, got {every}")
    return list(range(every, T + 1, every))


def _oracle_fit(buffer: DesignBuffer, support: list, d: int) -> np.ndarray:
    coef = np.zeros(d)
    gram = buffer.columns(support)[support]
    try:
        coef[support] = solve_spd(gram, buffer.xty[support])
    except NotPositiveDefinite:
        coef[support] = least_squares_min_norm(buffer.x[:, support], buffer.y)
    return coef


def run_sequential_replication(sc: SequentialScenario, stream: RngStream) -> SeqRunRecord:
    """
    Run one replication of the sequential protocol.

    The draw order (theta, then X_t and eps_t per round) does not depend on the
    estimator, so estimators sharing a stream see identical data.
    """
    theta = sample_sparse_uniform_param(stream, sc.d, sc.s0, 0.0, 1.0)
    truth = theta.dense()
    support = list(theta.support)
    in_support = np.zeros(sc.d, dtype=bool)
    in_support[support] = True

    sched = sc.schedule
    refit_rounds = set(refit_cadence_plan(sc.T, sc.refit_every))
    buffer = DesignBuffer(sc.d, capacity=sc.T)

    sq_err = np.empty(sc.T)
    fp = np.zeros(sc.T, dtype=np.int64)
    fn = np.zeros(sc.T, dtype=np.int64)
    size = np.zeros(sc.T, dtype=np.int64)

    estimate = np.zeros(sc.d)
    selected = np.zeros(sc.d, dtype=bool)
    warm = None
    not_converged = 0

    for t in range(1, sc.T + 1):
        x = sample_covariate(stream, sc.cov)
        eps = sc.sigma * sample_standard_normal(stream, 1)[0]
        buffer.append(x, theta.dot(x) + eps)

        if t in refit_rounds:
            if sc.estimator is Estimator.ORACLE_LS:
                estimate = _oracle_fit(buffer, support, sc.d)
                selected = in_support & (estimate != 0)
            elif sc.estimator is Estimator.LASSO:
                fit = lasso_fit(LassoProblem.from_buffer(buffer, seq_lambda(sched, t)), warm_start=warm)
                estimate, warm = fit.coef, fit.coef
                selected = estimate != 0
                not_converged += not fit.converged
            else:
                cfg = OptLassoConfig(seq_lambda(sched, t), seq_lambda_opt(sched, sc.C0_hard, t), t)
                fit = opt_lasso_fit(None, None, cfg, warm_start=warm, buffer=buffer)
                estimate, warm = fit.coef, fit.lasso_stage.coef
                selected = estimate != 0
                not_converged += not fit.converged

        diff = estimate - truth
        sq_err[t - 1] = float(diff @ diff)
        fp[t - 1] = int(np.count_nonzero(selected & ~in_support))
        fn[t - 1] = int(np.count_nonzero(~selected & in_support))
        size[t - 1] = int(np.count_nonzero(selected))

    if not_converged:
        logger.warning(
            f"⚠️ {not_converged} of {len(refit_rounds)} fits did not converge "
            f"(stream {stream.stream_id}, {sc.estimator.value})"
        )
    return SeqRunRecord(sq_err, fp, fn, size, theta, not_converged)


# ==================== METRICS ====================

def cumulative_error(rec: SeqRunRecord, window: tuple, cap: Optional[float] = None) -> float:
    """sum_{t=from..to} min(squared_error_t, cap), rounds 1-based inclusive."""
    lo, hi = window
    if not 1 <= lo <= hi <= len(rec.squared_error):
        raise ValueError(f"window {window} not inside [1, {len(rec.squared_error)}]")
    values = rec.squared_error[lo - 1 : hi]
    if cap is not None:
        values = np.minimum(values, cap)
    return float(np.sum(values))


def running_cumulative(values, start: int) -> np.ndarray:
    """Running sums from round `start` (1-based) to each t >= start."""
    values = np.asarray(values, dtype=np.float64)
    if not 1 <= start <= len(values):
        raise ValueError(f"start {start} not inside [1, {len(values)}]")
    return np.cumsum(values[start - 1 :])


@dataclass(frozen=True)
class Aggregate:
    mean: float
    sem: float
    sd: float
    reps: int


def aggregate_replications(values) -> Aggregate:
    """Mean, sample standard deviation (n - 1) and standard error of the mean."""
    values = np.asarray(values, dtype=np.float64)
    if values.size < 2:
        raise TooFewReplications(f"need at least 2 replications, got {values.size}")
    sd = float(np.std(values, ddof=1))
    return Aggregate(float(np.mean(values)), sd / math.sqrt(values.size), sd, int(values.size))


def schedule_instance_sums(theta: SparseParam, sched: SeqLambdaSchedule, C0_hard: float, T: int) -> list:
    """
    Per support coordinate, the triple (realized, b, instance_sum(theta_j, b, T))
    where realized = sum_t theta_j^2 1{|theta_j| <= 2 lambda_opt_t} and b uses
    log(dT) in place of log(dt), so realized <= instance sum <= b.
    """
    scale = C0_hard * sched.C0
    if sched.variant is SeqLambdaVariant.THEORY_SEQ:
        scale *= sched.sigma
    b = 4.0 * scale ** 2 * math.log(sched.d * T)
    thresholds = np.array([2.0 * seq_lambda_opt(sched, C0_hard, t) for t in range(1, T + 1)])
    out = []
    for value in theta.values:
        lhs = value * value * float(np.count_nonzero(abs(value) <= thresholds))
        out.append((lhs, b, instance_sum(value, b, T) if b > 0 else 0.0))
    return out
