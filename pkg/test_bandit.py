"""
Tests for engine.bandit: regret, greedy selection, lambda schedules, stage
bookkeeping and full replications.
"""

import math

import numpy as np
import pytest

from engine.bandit import (
    ArmDataset,
    BanditScenario,
    PolicyKind,
    bandit_lambda,
    cumulative_regret,
    instantaneous_regret,
    run_bandit_replication,
    select_arm_greedy,
    stage_at,
)
from engine.randkit import SparseParam, make_stream


def _small(**overrides):
    base = dict(K=3, s0=2, d=10, T=200, gamma1=20, gamma2=60, g1=10, g2=10)
    base.update(overrides)
    return BanditScenario(**base)


# ── regret and selection ──────────────────────────────────────────────────────

def test_regret_at_argmax_is_zero():
    thetas = [SparseParam(2, (0,), (1.0,)), SparseParam(2, (1,), (1.0,))]
    assert instantaneous_regret([0.3, 0.7], thetas, 1) == 0.0


def test_regret_arithmetic():
    thetas = [SparseParam(2, (0,), (1.0,)), SparseParam(2, (1,), (1.0,))]
    assert instantaneous_regret([0.3, 0.7], thetas, 0) == pytest.approx(0.4)


def test_regret_identical_arms():
    theta = SparseParam(3, (0, 2), (0.5, -1.0))
    for a in range(3):
        assert instantaneous_regret([1.0, 2.0, 3.0], [theta] * 3, a) == 0.0


def test_regret_rejects_bad_arm():
    with pytest.raises(ValueError):
        instantaneous_regret([1.0], [SparseParam(1, (0,), (1.0,))], 1)


def test_greedy_full_tie_lowest_index():
    assert select_arm_greedy(np.zeros((4, 3)), [1.0, 2.0, 3.0]) == 0


def test_greedy_unique_argmax():
    est = np.array([[1.0, 0.0], [0.0, 1.0], [0.5, 0.5]])
    assert select_arm_greedy(est, [0.2, 0.9]) == 1


def test_greedy_two_way_tie():
    est = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 0.0]])
    assert select_arm_greedy(est, [1.0, 5.0]) == 1


def test_greedy_random_tie_uses_stream():
    est = np.zeros((5, 2))
    picks = {select_arm_greedy(est, [1.0, 1.0], "random", make_stream(1, i)) for i in range(50)}
    assert len(picks) > 1
    with pytest.raises(ValueError):
        select_arm_greedy(est, [1.0, 1.0], "random")


# ── lambda schedules ──────────────────────────────────────────────────────────

def test_sim_lambda_value():
    sc = BanditScenario(K=5, s0=5, d=1000, T=10_000, C0=2.0)
    lam, lam_opt = bandit_lambda(sc, 100, 0, 0.2)
    assert lam == pytest.approx(0.10513, abs=1e-5)
    assert lam_opt == pytest.approx(sc.C0_hard * 2.0 * math.sqrt(math.log(1000 * 100) / 100))


def test_sim_lambda_unpulled_arm():
    sc = BanditScenario(K=5, s0=5, d=1000, T=10_000)
    assert bandit_lambda(sc, 100, 4, 0.0)[0] == 0.0


def test_theory_lambda_value():
    sc = BanditScenario(K=5, s0=5, d=100, T=10_000, lambda_variant="theory_bandit", m_x=1.0, l3=2.0)
    lam, lam_opt = bandit_lambda(sc, 400, 0, 0.3)
    assert lam == pytest.approx(6.0 * math.sqrt(math.log(100 * 10_000) / 400), rel=1e-12)
    assert lam == pytest.approx(1.11508, abs=1e-4)
    assert lam_opt == pytest.approx(56.0 * lam)


# ── stage bookkeeping ─────────────────────────────────────────────────────────

STAGE_TABLE = {
    **{t: (1, 0) for t in range(1, 5)},
    **{t: (2, 4) for t in range(5, 8)},
    **{t: (2, 7) for t in range(8, 11)},
    **{t: (3, 10) for t in range(11, 15)},
    **{t: (3, 14) for t in range(15, 19)},
    **{t: (3, 18) for t in range(19, 21)},
}


@pytest.mark.parametrize("t", range(1, 21))
def test_stage_map(t):
    assert stage_at(t, 4, 10, 3, 4) == STAGE_TABLE[t]


def test_stage_ends_per_policy():
    sc = _small()
    assert sc.stage_ends("three_stage") == (20, 60)
    assert sc.stage_ends("two_stage_opt") == (20, 20)
    assert sc.stage_ends("two_stage_lasso") == (20, 200)


def test_default_stage_ends():
    sc = BanditScenario(K=5, s0=5, d=100, T=10_000)
    assert (sc.gamma1, sc.gamma2, sc.g1, sc.g2) == (50, 400, 50, 50)


def test_invalid_stage_ends():
    with pytest.raises(ValueError):
        _small(gamma1=70, gamma2=60)


def test_refits_happen_at_block_starts():
    rec = run_bandit_replication(_small(), PolicyKind.THREE_STAGE, make_stream(2, 0))
    rounds = sorted({r.round for r in rec.refits})
    assert rounds == [20, 30, 40, 50] + list(range(60, 200, 10))
    assert {r.stage for r in rec.refits if r.round < 60} == {2}
    assert {r.stage for r in rec.refits if r.round >= 60} == {3}


# ── ArmDataset ────────────────────────────────────────────────────────────────

def test_partition_check():
    data = ArmDataset(2, 3)
    data.add(1, 0, [1.0, 0.0, 0.0], 1.0)
    data.add(2, 1, [0.0, 1.0, 0.0], 1.0)
    data.check_partition(2)
    assert data.pull_counts == [1, 1]
    with pytest.raises(AssertionError):
        data.check_partition(3)


# ── replications ──────────────────────────────────────────────────────────────

def test_oracle_has_zero_regret():
    rec = run_bandit_replication(_small(), "oracle", make_stream(3, 0))
    assert cumulative_regret(rec, (1, 200)) == 0.0


@pytest.mark.parametrize("policy", ["three_stage", "two_stage_opt", "two_stage_lasso", "random"])
def test_identical_arms_have_zero_regret(policy):
    rec = run_bandit_replication(_small(identical_arms=True), policy, make_stream(4, 0))
    assert np.all(rec.regret == 0.0)


def test_single_arm_zero_regret():
    rec = run_bandit_replication(_small(K=1), "three_stage", make_stream(5, 0))
    assert np.all(rec.regret == 0.0)
    assert np.all(rec.arms == 0)


@pytest.mark.parametrize("policy", ["three_stage", "random"])
def test_regret_nonnegative_and_zero_at_best_arm(policy):
    rec = run_bandit_replication(_small(), policy, make_stream(6, 0))
    assert np.all(rec.regret >= 0.0)
    assert len(rec.regret) == 200 and rec.arms.min() >= 0 and rec.arms.max() < 3


def test_replication_deterministic_with_random_ties():
    sc = _small(tie_rule="random")
    a = run_bandit_replication(sc, "three_stage", make_stream(7, 1))
    b = run_bandit_replication(sc, "three_stage", make_stream(7, 1))
    assert np.array_equal(a.arms, b.arms)
    assert np.array_equal(a.regret, b.regret)


def test_policies_face_same_environment():
    sc = _small()
    greedy = run_bandit_replication(sc, "three_stage", make_stream(8, 0))
    rand = run_bandit_replication(sc, "random", make_stream(8, 0))
    # stage 1 is uniform for both and driven by the same policy stream
    assert np.array_equal(greedy.arms[:20], rand.arms[:20])


def test_cumulative_regret_additive():
    rec = run_bandit_replication(_small(), "random", make_stream(9, 0))
    total = cumulative_regret(rec, (1, 200))
    parts = cumulative_regret(rec, (1, 77)) + cumulative_regret(rec, (78, 200))
    assert total == pytest.approx(parts)
    assert cumulative_regret(rec, (5, 5)) == rec.regret[4]


def test_support_curves_start_at_full_false_negatives():
    rec = run_bandit_replication(_small(), "three_stage", make_stream(10, 0))
    assert np.all(rec.fn_avg[:20] == 2.0)
    assert np.all(rec.fp_avg[:20] == 0.0)


def test_choices_replay_from_frozen_estimates():
    sc = _small()
    rec = run_bandit_replication(sc, "three_stage", make_stream(11, 0), trace=True)
    contexts, frozen = rec.extras["contexts"], rec.extras["estimates"]
    assert sorted(frozen) == sorted({r.round for r in rec.refits})
    for t in range(sc.gamma1 + 1, sc.T + 1):
        _, refit_round = stage_at(t, sc.gamma1, sc.gamma2, sc.g1, sc.g2)
        assert rec.arms[t - 1] == select_arm_greedy(frozen[refit_round], contexts[t - 1])


def test_all_zero_estimates_lowest_index_starves_other_arms():
    # a threshold this large empties every OPT support
    sc = _small(gamma1=30, C0_hard=1e6)
    rec = run_bandit_replication(sc, "two_stage_opt", make_stream(12, 0), trace=True)
    assert all(np.all(est == 0.0) for est in rec.extras["estimates"].values())
    assert np.all(rec.arms[30:] == 0)


def test_all_zero_estimates_random_ties_keep_sampling():
    sc = _small(gamma1=30, C0_hard=1e6, tie_rule="random")
    rec = run_bandit_replication(sc, "two_stage_opt", make_stream(12, 0))
    assert set(rec.arms[30:].tolist()) == {0, 1, 2}
    # stage 1 is shared, so the first 30 pulls match the lowest-index run
    lowest = run_bandit_replication(_small(gamma1=30, C0_hard=1e6), "two_stage_opt", make_stream(12, 0))
    assert np.array_equal(rec.arms[:30], lowest.arms[:30])
