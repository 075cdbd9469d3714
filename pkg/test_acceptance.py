"""
Desk-scale reproductions of the headline comparisons.
Slow: run with `pytest -m slow`.
"""

import asyncio
import math

import numpy as np
import pytest
from scipy import integrate, stats

from engine.fixtures import build_packing_set, radial_density, sample_omega1, verify_packing_set
from engine.randkit import make_stream
from experiment import ExperimentConfig, execute_async

pytestmark = pytest.mark.slow


def _rows(data):
    result = asyncio.run(execute_async(ExperimentConfig.from_dict(data)))
    return {(r.method, r.metric): r for r in result.rows}


def test_opt_lasso_halves_sequential_error(tmp_path):
    rows = _rows({
        "kind": "sequential",
        "name": "desk-seq-a",
        "scenarios": [{"preset": "seq-a"}],
        "methods": [
            {"label": "opt", "estimator": "opt_lasso", "C0": 0.8, "C0_hard": 0.6},
            {"label": "lasso", "estimator": "lasso", "C0": 0.8},
        ],
        "reps": 50,
        "seed": 1,
        "output_dir": str(tmp_path),
    })
    opt, lasso = rows[("opt", "cum_error")], rows[("lasso", "cum_error")]
    assert 13.0 <= opt.mean <= 19.0
    assert opt.mean < 0.5 * lasso.mean


def test_opt_lasso_has_fewer_false_positives(tmp_path):
    rows = _rows({
        "kind": "sequential",
        "name": "desk-seq-c",
        "scenarios": [{"preset": "seq-c", "T": 1000}],
        "methods": [
            {"label": "opt", "estimator": "opt_lasso", "C0": 0.8, "C0_hard": 0.6},
            {"label": "lasso", "estimator": "lasso", "C0": 0.8},
        ],
        "reps": 50,
        "seed": 2,
        "output_dir": str(tmp_path),
    })
    assert rows[("opt", "fp_T")].mean < rows[("lasso", "fp_T")].mean


def test_bandit_policy_ordering_at_desk_horizon(tmp_path):
    rows = _rows({
        "kind": "bandit",
        "name": "desk-bandit-a",
        "scenarios": [{"preset": "bandit-a", "T": 2000}],
        "methods": [{"policy": "three_stage"}, {"policy": "two_stage_opt"}, {"policy": "two_stage_lasso"}],
        "reps": 100,
        "seed": 3,
        "output_dir": str(tmp_path),
    })
    three = rows[("three_stage", "cum_regret")]
    opt = rows[("two_stage_opt", "cum_regret")]
    lasso = rows[("two_stage_lasso", "cum_regret")]
    assert three.mean <= opt.mean <= lasso.mean
    assert three.mean + 3.0 * math.hypot(three.sem, lasso.sem) < lasso.mean


def test_full_size_packing_set():
    packing = build_packing_set(100, 5, 1.0, 0.1, make_stream(4, 0))
    assert packing.M == math.ceil(47.5 ** 2)
    verify_packing_set(packing)


def test_omega1_radius_matches_density_at_full_scale():
    r = 1.0
    stream = make_stream(5, 0)
    norms = np.array([np.linalg.norm(sample_omega1(5, 3, r, stream).values) for _ in range(100_000)])
    mean_oracle, _ = integrate.quad(lambda tau: tau * float(radial_density(tau, r)), r / 2, r)
    assert norms.mean() == pytest.approx(mean_oracle, abs=0.005)

    edges = np.linspace(r / 2, r, 21)
    expected = norms.size * np.array([
        integrate.quad(lambda tau: float(radial_density(tau, r)), lo, hi)[0]
        for lo, hi in zip(edges[:-1], edges[1:])
    ])
    observed, _ = np.histogram(norms, bins=edges)
    assert float(np.sum((observed - expected) ** 2 / expected)) < stats.chi2.ppf(0.999, df=19)
