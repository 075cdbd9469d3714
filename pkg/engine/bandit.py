"""
Sparse linear contextual bandit environment and policies.

Policies:
    random           uniform arm every round
    three_stage      random until gamma1, greedy on Lasso estimates until gamma2,
                     greedy on OPT-Lasso estimates until T
    two_stage_opt    three_stage with gamma2 = gamma1
    two_stage_lasso  three_stage with gamma2 = T
    oracle           argmax of the true expected rewards

Arms are 0-based. Per-arm fits use only the rows where that arm was pulled but
divide by the total number of rounds (zero-padded design).
"""

import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from engine.lasso import DesignBuffer, LassoProblem, lasso_fit
from engine.opt_lasso import OptLassoConfig, opt_lasso_fit
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


class PolicyKind(str, enum.Enum):
    RANDOM = "random"
    THREE_STAGE = "three_stage"
    TWO_STAGE_OPT = "two_stage_opt"
    TWO_STAGE_LASSO = "two_stage_lasso"
    ORACLE = "oracle"


class LambdaVariant(str, enum.Enum):
    THEORY_BANDIT = "theory_bandit"
    SIM_BANDIT = "sim_bandit"


class TieRule(str, enum.Enum):
    LOWEST_INDEX = "lowest_index"
    RANDOM = "random"


@dataclass(frozen=True)
class BanditScenario:
    K: int
    s0: int
    d: int
    T: int
    gamma1: Optional[int] = None  # default 10 K
    gamma2: Optional[int] = None  # default 8 gamma1
    g1: int = 50
    g2: int = 50
    sigma: float = 1.0
    cov: CovariateModel = None
    C0: float = 2.0
    C0_hard: float = 0.6
    lambda_variant: LambdaVariant = LambdaVariant.SIM_BANDIT
    tie_rule: TieRule = TieRule.LOWEST_INDEX
    reps: int = 1000
    base_seed: int = 0
    identical_arms: bool = False
    m_x: float = 1.0
    l3: float = 2.0
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "lambda_variant", LambdaVariant(self.lambda_variant))
        object.__setattr__(self, "tie_rule", TieRule(self.tie_rule))
        if self.cov is None:
            object.__setattr__(self, "cov", CovariateModel(CovariateKind.CLIPPED_GAUSSIAN, self.d, bound=1.0))
        if self.gamma1 is None:
            object.__setattr__(self, "gamma1", min(10 * self.K, self.T))
        if self.gamma2 is None:
            object.__setattr__(self, "gamma2", min(8 * self.gamma1, self.T))
        if self.K < 1:
            raise ValueError(f"K must be >= 1, got {self.K}")
        if not 1 <= self.s0 <= self.d:
            raise ValueError(f"need 1 <= s0 <= d, got s0={self.s0}, d={self.d}")
        if self.cov.d != self.d:
            raise ValueError(f"covariate model has d={self.cov.d}, scenario has d={self.d}")
        if not 1 <= self.gamma1 <= self.gamma2 <= self.T:
            raise ValueError(
                f"need 1 <= gamma1 <= gamma2 <= T, got {self.gamma1}, {self.gamma2}, {self.T}"
            )
        if self.g1 < 1 or self.g2 < 1:
            raise ValueError(f"refit cadences must be >= 1, got g1={self.g1}, g2={self.g2}")
        if self.sigma < 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")

    def stage_ends(self, policy: PolicyKind) -> tuple:
        """(gamma1, gamma2) in force for `policy`."""
        policy = PolicyKind(policy)
        if policy is PolicyKind.TWO_STAGE_OPT:
            return self.gamma1, self.gamma1
        if policy is PolicyKind.TWO_STAGE_LASSO:
            return self.gamma1, self.T
        return self.gamma1, self.gamma2


# ── Regret and arm selection ──────────────────────────────────────────────────

def instantaneous_regret(x, thetas: list[SparseParam], a: int) -> float:
    """max_k x'theta_k - x'theta_a."""
    means = [theta.dot(x) for theta in thetas]
    if not 0 <= a < len(means):
        raise ValueError(f"arm {a} out of range for K={len(means)}")
    return max(means) - means[a]


def select_arm_greedy(estimates, x, tie_rule: TieRule = TieRule.LOWEST_INDEX,
                      stream: Optional[RngStream] = None) -> int:
    """Arm maximizing estimate_k'x; ties broken per tie_rule."""
    scores = np.asarray(estimates, dtype=np.float64) @ np.asarray(x, dtype=np.float64)
    if TieRule(tie_rule) is TieRule.LOWEST_INDEX:
        return int(np.argmax(scores))
    best = np.flatnonzero(scores == scores.max())
    if best.size == 1:
        return int(best[0])
    if stream is None:
        raise ValueError("random tie rule needs a stream")
    return int(best[stream.generator.integers(best.size)])


def bandit_lambda(sc: BanditScenario, t: int, k: int, pull_fraction: float) -> tuple:
    """
    (lambda, lambda_opt) for arm k at round t.

    sim_bandit:    C0 p_k sqrt(log d / t), C0_hard C0 sqrt(log(d t) / t)
    theory_bandit: 6 m_x sigma sqrt(log(d T) / t), 28 l3 lambda
    """
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t}")
    if not 0 <= k < sc.K:
        raise ValueError(f"arm {k} out of range for K={sc.K}")
    if sc.lambda_variant is LambdaVariant.THEORY_BANDIT:
        lam = 6.0 * sc.m_x * sc.sigma * math.sqrt(math.log(sc.d * sc.T) / t)
        return lam, 28.0 * sc.l3 * lam
    if not 0.0 <= pull_fraction <= 1.0:
        raise ValueError(f"pull_fraction must lie in [0, 1], got {pull_fraction}")
    lam = sc.C0 * pull_fraction * math.sqrt(math.log(sc.d) / t)
    lam_opt = sc.C0_hard * sc.C0 * math.sqrt(math.log(sc.d * t) / t)
    return lam, lam_opt


def stage_at(t: int, gamma1: int, gamma2: int, g1: int, g2: int) -> tuple:
    """
    (stage, refit_round) governing round t.

    Stage 1 has no refit round (0). In stages 2 and 3 the estimates in force
    were fitted at gamma + m g, the start of t's cadence block.
    """
    if t <= gamma1:
        return 1, 0
    if t <= gamma2:
        return 2, gamma1 + ((t - gamma1 - 1) // g1) * g1
    return 3, gamma2 + ((t - gamma2 - 1) // g2) * g2


# ── Per-arm data ──────────────────────────────────────────────────────────────

class ArmDataset:
    """Rows observed for each arm, with the rounds they came from."""

    def __init__(self, K: int, d: int, capacity: int = 256):
        self.buffers = [DesignBuffer(d, capacity) for _ in range(K)]
        self.rounds = [[] for _ in range(K)]

    @property
    def pull_counts(self) -> list:
        return [len(r) for r in self.rounds]

    def add(self, t: int, arm: int, x, reward: float):
        self.buffers[arm].append(x, reward)
        self.rounds[arm].append(t)

    def check_partition(self, t: int):
        """Every round 1..t sits in exactly one arm's list."""
        seen = sorted(r for rounds in self.rounds for r in rounds)
        if seen != list(range(1, t + 1)):
            raise AssertionError(f"arm datasets do not partition rounds 1..{t}")


@dataclass
class RefitRecord:
    round: int
    arm: int
    stage: int
    fp: int
    fn: int


@dataclass
class BanditRunRecord:
    regret: np.ndarray
    arms: np.ndarray
    refits: list
    fp_avg: np.ndarray
    fn_avg: np.ndarray
    stage_bounds: tuple
    not_converged: int = 0
    extras: dict = field(default_factory=dict)


def _draw_arms(sc: BanditScenario, stream: RngStream) -> list[SparseParam]:
    if sc.identical_arms:
        theta = sample_sparse_uniform_param(stream, sc.d, sc.s0, 0.0, 1.0)
        return [theta] * sc.K
    return [sample_sparse_uniform_param(stream, sc.d, sc.s0, 0.0, 1.0) for _ in range(sc.K)]


def run_bandit_replication(sc: BanditScenario, policy: PolicyKind, stream: RngStream,
                           trace: bool = False) -> BanditRunRecord:
    """
    Run one bandit replication.

    Environment draws (arm parameters, then X_t and eps_t every round) come from
    `stream`; policy randomness comes from its child stream, so every policy
    faces the same contexts and noise. With `trace`, extras holds the contexts
    and a copy of the estimates fitted at every refit round.
    """
    policy = PolicyKind(policy)
    thetas = _draw_arms(sc, stream)
    truths = np.vstack([theta.dense() for theta in thetas])
    in_support = truths != 0
    policy_stream = stream.child(1)
    gamma1, gamma2 = sc.stage_ends(policy)

    data = ArmDataset(sc.K, sc.d, capacity=max(sc.T // max(sc.K, 1), 16))
    estimates = np.zeros((sc.K, sc.d))
    warm = [None] * sc.K
    arm_fp = np.zeros(sc.K, dtype=np.int64)
    arm_fn = in_support.sum(axis=1).astype(np.int64)

    regret = np.empty(sc.T)
    arms = np.empty(sc.T, dtype=np.int64)
    fp_avg = np.empty(sc.T)
    fn_avg = np.empty(sc.T)
    refits = []
    not_converged = 0
    fitted_at = 0
    contexts = np.empty((sc.T, sc.d)) if trace else None
    frozen = {}

    for t in range(1, sc.T + 1):
        x = sample_covariate(stream, sc.cov)
        eps = sc.sigma * sample_standard_normal(stream, 1)[0]
        means = truths @ x

        if policy is PolicyKind.ORACLE:
            a = int(np.argmax(means))
        elif policy is PolicyKind.RANDOM:
            a = int(policy_stream.generator.integers(sc.K))
        else:
            stage, refit_round = stage_at(t, gamma1, gamma2, sc.g1, sc.g2)
            if stage == 1:
                a = int(policy_stream.generator.integers(sc.K))
            else:
                if refit_round != fitted_at:
                    # lazily fit at the first round of the block on data up to refit_round
                    data.check_partition(refit_round)
                    not_converged += _refit_arms(sc, stage, refit_round, data, estimates, warm)
                    arm_fp = (estimates != 0) & ~in_support
                    arm_fn = (estimates == 0) & in_support
                    arm_fp, arm_fn = arm_fp.sum(axis=1), arm_fn.sum(axis=1)
                    refits.extend(
                        RefitRecord(refit_round, k, stage, int(arm_fp[k]), int(arm_fn[k]))
                        for k in range(sc.K)
                    )
                    fitted_at = refit_round
                    if trace:
                        frozen[refit_round] = estimates.copy()
                a = select_arm_greedy(estimates, x, sc.tie_rule, policy_stream)

        if trace:
            contexts[t - 1] = x
        regret[t - 1] = means.max() - means[a]
        arms[t - 1] = a
        fp_avg[t - 1] = arm_fp.mean()
        fn_avg[t - 1] = arm_fn.mean()
        data.add(t, a, x, float(means[a]) + eps)

    if not_converged:
        logger.warning(
            f"⚠️ {not_converged} arm fits did not converge (stream {stream.stream_id}, {policy.value})"
        )
    extras = {"contexts": contexts, "estimates": frozen} if trace else {}
    return BanditRunRecord(regret, arms, refits, fp_avg, fn_avg, (gamma1, gamma2), not_converged, extras)


def _refit_arms(sc, stage, r, data: ArmDataset, estimates: np.ndarray, warm: list) -> int:
    """Refit every pulled arm on rounds 1..r; returns the non-converged count."""
    failures = 0
    for k, buffer in enumerate(data.buffers):
        n_k = buffer.n_rows
        if n_k == 0:
            continue  # keep previous estimate
        lam, lam_opt = bandit_lambda(sc, r, k, n_k / r)
        if stage == 2:
            fit = lasso_fit(LassoProblem.from_buffer(buffer, lam, r), warm_start=warm[k])
            estimates[k], warm[k] = fit.coef, fit.coef
        else:
            fit = opt_lasso_fit(None, None, OptLassoConfig(lam, lam_opt, r), warm_start=warm[k], buffer=buffer)
            estimates[k], warm[k] = fit.coef, fit.lasso_stage.coef
        failures += not fit.converged
    return failures


def cumulative_regret(rec: BanditRunRecord, window: tuple) -> float:
    """Total regret over rounds window[0]..window[1], 1-based inclusive."""
    lo, hi = window
    if not 1 <= lo <= hi <= len(rec.regret):
        raise ValueError(f"window {window} not inside [1, {len(rec.regret)}]")
    return float(np.sum(rec.regret[lo - 1 : hi]))
