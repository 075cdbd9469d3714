"""
Experiment orchestration.

A config names a kind (sequential, bandit or fixtures), a list of scenario
payloads and a list of methods. Every (scenario, method, rep) triple is one
job that owns its stream make_stream(seed, rep), so methods share draws and the
result never depends on how many workers run the jobs. Results are folded in
job order, then written through a ResultStore.
"""

import asyncio
import copy
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from tqdm import tqdm

import config
import lab_config
from engine.bandit import BanditScenario, PolicyKind, cumulative_regret, run_bandit_replication
from engine.errors import ConfigInvalid
from engine.fixtures import build_packing_set, margin_curve, sample_omega1
from engine.randkit import CovariateKind, CovariateModel, make_stream
from engine.sequential import (
    SequentialScenario,
    aggregate_replications,
    cumulative_error,
    run_sequential_replication,
    running_cumulative,
)
from results import ResultStore, TableRow
from utils.helpers import get_version, sample_rounds, utc_now_iso

logger = logging.getLogger(__name__)

KINDS = ("sequential", "bandit", "fixtures")
FIXTURES = ("packing", "omega1", "margin")
PRIMARY_METRIC = {"sequential": "cum_error", "bandit": "cum_regret"}


# ==================== CONFIG ====================

@dataclass
class ExperimentConfig:
    kind: str
    scenarios: list = field(default_factory=list)
    methods: list = field(default_factory=list)
    name: str = "experiment"
    reps: int = 2
    seed: int = lab_config.LAB_BASE_SEED
    parallel_jobs: int = lab_config.LAB_PARALLEL_JOBS
    output_dir: Optional[str] = None
    sweep: Optional[dict] = None
    plot: Optional[list] = None
    curve_until: float = 1.0
    fixture: Optional[dict] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigInvalid("kind", f"expected one of {', '.join(KINDS)}, got {self.kind!r}")
        if not isinstance(self.reps, int) or self.reps < 1:
            raise ConfigInvalid("reps", f"must be a positive integer, got {self.reps!r}")
        if not isinstance(self.parallel_jobs, int) or self.parallel_jobs < 1:
            raise ConfigInvalid("parallel_jobs", f"must be a positive integer, got {self.parallel_jobs!r}")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigInvalid("seed", f"must be a non-negative integer, got {self.seed!r}")
        if not 0 < self.curve_until <= 1:
            raise ConfigInvalid("curve_until", f"must lie in (0, 1], got {self.curve_until}")
        if self.output_dir is None:
            self.output_dir = str(Path(lab_config.LAB_OUTPUT_DIR) / self.name)

        if self.kind == "fixtures":
            self._validate_fixture()
            return
        if self.reps < 2:
            raise ConfigInvalid("reps", "aggregation needs at least 2 replications")
        if not self.scenarios:
            raise ConfigInvalid("scenarios", "at least one scenario payload is required")
        if not self.methods:
            self.methods = [{}]
        for j, method in enumerate(self.methods):
            if not isinstance(method, dict):
                raise ConfigInvalid(f"methods[{j}]", "each method must be an object")
            if self.kind == "bandit":
                try:
                    PolicyKind(method.get("policy", PolicyKind.THREE_STAGE.value))
                except ValueError as e:
                    raise ConfigInvalid(f"methods[{j}].policy", str(e)) from e
        # build every (scenario, method) pair once so bad payloads fail before any job runs
        for i in range(len(self.scenarios)):
            for j in range(len(self.methods)):
                self.scenario(i, j)
        if self.sweep is not None:
            if not self.sweep.get("c0") or not self.sweep.get("c0_hard"):
                raise ConfigInvalid("sweep", "grid needs nonempty 'c0' and 'c0_hard' lists")
        for metric in self.plot or []:
            if metric not in CURVE_METRICS[self.kind]:
                raise ConfigInvalid("plot", f"unknown {self.kind} curve {metric!r}")

    def _validate_fixture(self):
        if not isinstance(self.fixture, dict) or self.fixture.get("name") not in FIXTURES:
            raise ConfigInvalid("fixture", f"needs a 'name' among {', '.join(FIXTURES)}")

    def scenario(self, i: int, j: int):
        """Scenario object for payload i under method j."""
        payload = self.scenarios[i]
        if not isinstance(payload, dict):
            raise ConfigInvalid(f"scenarios[{i}]", "each scenario payload must be an object")
        overrides = {**self.methods[j], "reps": self.reps, "base_seed": self.seed}
        try:
            return config.build_scenario(self.kind, payload, overrides)
        except ConfigInvalid:
            raise
        except (ValueError, TypeError) as e:
            raise ConfigInvalid(f"scenarios[{i}] / methods[{j}]", str(e)) from e

    def scenario_label(self, i: int) -> str:
        payload = self.scenarios[i]
        return str(payload.get("name") or payload.get("preset") or f"scenario{i}")

    def method_label(self, j: int) -> str:
        method = self.methods[j]
        if "label" in method:
            return str(method["label"])
        if self.kind == "bandit":
            return str(method.get("policy", PolicyKind.THREE_STAGE.value))
        return str(self.scenario(0, j).estimator.value)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        """Build from a JSON-style dict; a manifest.json is accepted as well."""
        if not isinstance(data, dict):
            raise ConfigInvalid("config", "top level must be an object")
        if "config" in data and "kind" not in data:
            data = data["config"]
        known = set(cls.__dataclass_fields__)
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigInvalid(unknown[0], "unknown config field")
        if "kind" not in data:
            raise ConfigInvalid("kind", "is required")
        return cls(**copy.deepcopy(data))

    def to_dict(self) -> dict:
        out = {
            "kind": self.kind,
            "name": self.name,
            "scenarios": copy.deepcopy(self.scenarios),
            "methods": copy.deepcopy(self.methods),
            "reps": self.reps,
            "seed": self.seed,
            "parallel_jobs": self.parallel_jobs,
            "output_dir": self.output_dir,
            "curve_until": self.curve_until,
        }
        for key in ("sweep", "plot", "fixture"):
            if getattr(self, key) is not None:
                out[key] = copy.deepcopy(getattr(self, key))
        return out


# ==================== JOBS ====================

CURVE_METRICS = {
    "sequential": ("running_error", "sq_error", "fp", "fn"),
    "bandit": ("cum_regret", "regret_from_gamma2", "fp_avg", "fn_avg"),
    "fixtures": (),
}


@dataclass
class Job:
    index: int
    group: tuple  # (scenario index, method index)
    kind: str
    scenario: object
    policy: Optional[str]
    rep: int
    seed: int
    curve_points: int
    curve_until: float


@dataclass
class JobResult:
    index: int
    group: tuple
    metrics: dict
    curves: dict  # metric -> (rounds, values)


def _curve(values: np.ndarray, start: int, stop: int, points: int, running: bool = False) -> tuple:
    ts = sample_rounds(start, stop, points)
    series = running_cumulative(values, start) if running else np.asarray(values[start - 1 :], dtype=np.float64)
    return ts, series[ts - start]


def _run_sequential_job(job: Job) -> JobResult:
    sc: SequentialScenario = job.scenario
    rec = run_sequential_replication(sc, make_stream(job.seed, job.rep))
    lo, _ = sc.error_window
    stop = max(1, int(round(job.curve_until * sc.T)))
    metrics = {
        "cum_error": cumulative_error(rec, sc.error_window, sc.cap_xi),
        "fp_T": float(rec.fp[-1]),
        "fn_T": float(rec.fn[-1]),
        "not_converged": float(rec.not_converged),
    }
    curves = {
        "running_error": _curve(rec.squared_error, lo, max(lo, stop), job.curve_points, running=True),
        "sq_error": _curve(rec.squared_error, 1, stop, job.curve_points),
        "fp": _curve(rec.fp, 1, stop, job.curve_points),
        "fn": _curve(rec.fn, 1, stop, job.curve_points),
    }
    return JobResult(job.index, job.group, metrics, curves)


def _run_bandit_job(job: Job) -> JobResult:
    sc: BanditScenario = job.scenario
    rec = run_bandit_replication(sc, PolicyKind(job.policy), make_stream(job.seed, job.rep))
    stop = max(1, int(round(job.curve_until * sc.T)))
    g2 = sc.gamma2  # scenario-level gamma2, shared by every policy's curve
    metrics = {
        "cum_regret": cumulative_regret(rec, (1, sc.T)),
        "regret_from_gamma2": cumulative_regret(rec, (g2, sc.T)),
        "not_converged": float(rec.not_converged),
    }
    curves = {
        "cum_regret": _curve(rec.regret, 1, stop, job.curve_points, running=True),
        "regret_from_gamma2": _curve(rec.regret, g2, max(g2, stop), job.curve_points, running=True),
        "fp_avg": _curve(rec.fp_avg, 1, stop, job.curve_points),
        "fn_avg": _curve(rec.fn_avg, 1, stop, job.curve_points),
    }
    return JobResult(job.index, job.group, metrics, curves)


def run_job(job: Job) -> JobResult:
    """Worker entry point (module level so process pools can pickle it)."""
    if job.kind == "sequential":
        return _run_sequential_job(job)
    return _run_bandit_job(job)


def plan_jobs(cfg: ExperimentConfig) -> list:
    """Jobs ordered by (scenario, method, rep); the order fixes the reduction order."""
    jobs = []
    for i in range(len(cfg.scenarios)):
        for j in range(len(cfg.methods)):
            sc = cfg.scenario(i, j)
            policy = cfg.methods[j].get("policy", PolicyKind.THREE_STAGE.value) if cfg.kind == "bandit" else None
            for rep in range(cfg.reps):
                jobs.append(Job(len(jobs), (i, j), cfg.kind, sc, policy, rep, cfg.seed,
                                lab_config.LAB_CURVE_POINTS, cfg.curve_until))
    return jobs


class OrderedReducer:
    """Folds job results strictly in job-index order, buffering early arrivals."""

    def __init__(self):
        self.next_index = 0
        self.pending = {}
        self.metrics = {}  # group -> metric -> list of values in rep order
        self.curve_sums = {}  # group -> metric -> (rounds, running sum)

    def add(self, result: JobResult):
        self.pending[result.index] = result
        while self.next_index in self.pending:
            self._fold(self.pending.pop(self.next_index))
            self.next_index += 1

    def _fold(self, result: JobResult):
        group_metrics = self.metrics.setdefault(result.group, {})
        for name, value in result.metrics.items():
            group_metrics.setdefault(name, []).append(value)
        group_curves = self.curve_sums.setdefault(result.group, {})
        for name, (ts, values) in result.curves.items():
            if name in group_curves:
                group_curves[name][1][:] += values
            else:
                group_curves[name] = (ts, np.array(values, dtype=np.float64))


async def fan_out(jobs: list, n_jobs: int, reducer: OrderedReducer, desc: str = "replications"):
    """Run jobs inline (n_jobs = 1) or on a process pool, feeding the reducer."""
    bar = tqdm(total=len(jobs), desc=desc, unit="rep", disable=not lab_config.LAB_PROGRESS)
    try:
        if n_jobs <= 1:
            for job in jobs:
                reducer.add(run_job(job))
                bar.update()
            return
        loop = asyncio.get_running_loop()
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            futures = [loop.run_in_executor(pool, run_job, job) for job in jobs]
            try:
                for next_done in asyncio.as_completed(futures):
                    reducer.add(await next_done)
                    bar.update()
            except Exception:
                for fut in futures:
                    fut.cancel()
                raise
    finally:
        bar.close()


# ==================== AGGREGATION ====================

@dataclass
class SweepTable:
    scenario: str
    metric: str
    c0_grid: list
    c0_hard_grid: list
    cells: list  # cells[i][j] is the TableRow for (c0_grid[i], c0_hard_grid[j])
    min_cell: tuple


@dataclass
class ExperimentResult:
    rows: list
    curves: dict
    sweeps: list = field(default_factory=list)


def _table_rows(cfg: ExperimentConfig, reducer: OrderedReducer) -> list:
    rows = []
    for i in range(len(cfg.scenarios)):
        for j in range(len(cfg.methods)):
            for metric, values in reducer.metrics[(i, j)].items():
                agg = aggregate_replications(values)
                rows.append(TableRow(cfg.scenario_label(i), cfg.method_label(j), metric,
                                     agg.mean, agg.sem, agg.sd, agg.reps, cfg.seed))
    return rows


def _mean_curves(cfg: ExperimentConfig, reducer: OrderedReducer) -> dict:
    wanted = cfg.plot or CURVE_METRICS[cfg.kind]
    curves = {}
    for i in range(len(cfg.scenarios)):
        for j in range(len(cfg.methods)):
            sums = reducer.curve_sums[(i, j)]
            for metric in wanted:
                ts, total = sums[metric]
                curves[(cfg.scenario_label(i), cfg.method_label(j), metric)] = (ts, total / cfg.reps)
    return curves


def _sweep_tables(cfg: ExperimentConfig, rows: list) -> list:
    """One table per scenario over the methods that carry a 'cell' entry."""
    metric = PRIMARY_METRIC[cfg.kind]
    c0_grid, ch_grid = list(cfg.sweep["c0"]), list(cfg.sweep["c0_hard"])
    by_key = {(r.scenario, r.method): r for r in rows if r.metric == metric}
    tables = []
    for i in range(len(cfg.scenarios)):
        label = cfg.scenario_label(i)
        cells = [[None] * len(ch_grid) for _ in c0_grid]
        for j, method in enumerate(cfg.methods):
            cell = method.get("cell")
            if cell is None:
                continue
            c0, ch = cell
            if c0 in c0_grid and ch in ch_grid:
                cells[c0_grid.index(c0)][ch_grid.index(ch)] = by_key[(label, cfg.method_label(j))]
        missing = [(c0_grid[a], ch_grid[b]) for a in range(len(c0_grid)) for b in range(len(ch_grid))
                   if cells[a][b] is None]
        if missing:
            raise ConfigInvalid("methods", f"sweep cells without a method: {missing}")
        flat = [(cells[a][b].mean, a, b) for a in range(len(c0_grid)) for b in range(len(ch_grid))]
        _, a_min, b_min = min(flat)
        tables.append(SweepTable(label, metric, c0_grid, ch_grid, cells, (a_min, b_min)))
    return tables


async def execute_async(cfg: ExperimentConfig) -> ExperimentResult:
    """Run every job of `cfg` and aggregate; writes nothing."""
    jobs = plan_jobs(cfg)
    logger.info(f"🎰 {cfg.name}: {len(jobs)} job(s) on {cfg.parallel_jobs} worker(s)")
    reducer = OrderedReducer()
    try:
        await fan_out(jobs, cfg.parallel_jobs, reducer, desc=cfg.name)
    except Exception as e:
        logger.error(f"❌ Job failed in {cfg.name}: {e}")
        raise
    rows = _table_rows(cfg, reducer)
    sweeps = _sweep_tables(cfg, rows) if cfg.sweep else []
    return ExperimentResult(rows, _mean_curves(cfg, reducer), sweeps)


# ==================== FIXTURES ====================

def _fixture_outputs(cfg: ExperimentConfig, store: ResultStore) -> list:
    """Run a fixture construction, dump it to fixture.csv and return summary rows."""
    fx = cfg.fixture
    name = fx["name"]
    stream = make_stream(cfg.seed, int(fx.get("rep", 0)))
    d, s, r = int(fx.get("d", 100)), int(fx.get("s", 5)), float(fx.get("r", 1.0))

    def row(metric, value, reps=1):
        return TableRow(name, name, metric, float(value), 0.0, 0.0, reps, cfg.seed)

    try:
        if name == "packing":
            packing = build_packing_set(d, s, r, float(fx.get("delta", 0.1)), stream,
                                        fx.get("max_attempts"))
            nz = np.nonzero(packing.vectors)
            store.write_csv("fixture.csv", ["vector", "coord", "value"],
                            ([str(a), str(b), f"{packing.vectors[a, b]:.12g}"] for a, b in zip(*nz)))
            return [row("M", packing.M)]
        if name == "omega1":
            n = int(fx.get("n", 1000))
            draws = [sample_omega1(d, s, r, stream) for _ in range(n)]
            store.write_csv("fixture.csv", ["draw", "coord", "value"],
                            ([str(k), str(c), f"{v:.12g}"] for k, th in enumerate(draws)
                             for c, v in zip(th.support, th.values)))
            norms = [float(np.linalg.norm(th.values)) for th in draws]
            return [row("norm_mean", np.mean(norms), n), row("norm_min", min(norms), n),
                    row("norm_max", max(norms), n)]
        cov = CovariateModel(**{"kind": CovariateKind.GAUSSIAN_IDENTITY, "d": d, **fx.get("cov", {})})
        u = np.asarray(fx.get("u") or [1.0] + [0.0] * (d - 1), dtype=np.float64)
        taus = np.asarray(fx.get("taus") or np.linspace(0.05, 1.0, 20), dtype=np.float64)
        n = int(fx.get("n", 100_000))
        curve = margin_curve(cov, u, taus, n, stream)
        store.write_csv("fixture.csv", ["tau", "prob"],
                        ([f"{t:.12g}", f"{p:.12g}"] for t, p in zip(curve.taus, curve.empirical_probs)))
        ratio = curve.empirical_probs / curve.taus
        return [row("max_prob_over_tau", ratio.max(), n)]
    except (ValueError, TypeError) as e:
        raise ConfigInvalid("fixture", str(e)) from e


# ==================== ENTRY POINTS ====================

async def run_experiment_async(cfg: ExperimentConfig) -> Path:
    """
    Run an experiment and publish table.csv, curves.csv (and sweep.csv) plus manifest.json.

    Args:
        cfg: Validated experiment config

    Returns:
        Path of the written manifest.json
    """
    started_at = utc_now_iso()
    t0 = time.perf_counter()
    store = ResultStore(cfg.output_dir)
    with store.staging():
        if cfg.kind == "fixtures":
            rows = _fixture_outputs(cfg, store)
            store.write_table(rows)
        else:
            result = await execute_async(cfg)
            store.write_table(result.rows)
            store.write_curves(result.curves)
            if result.sweeps:
                store.write_sweep(result.sweeps)
        manifest = {
            "config": cfg.to_dict(),
            "seed": cfg.seed,
            "version": get_version(),
            "started_at": started_at,
            "wall_time_s": round(time.perf_counter() - t0, 3),
        }
        store.write_manifest(manifest)
    return Path(cfg.output_dir) / "manifest.json"


def run_experiment(cfg: ExperimentConfig) -> Path:
    """Synchronous wrapper around run_experiment_async."""
    return asyncio.run(run_experiment_async(cfg))


def sweep_config(c0_grid: list, c0_hard_grid: list, base: ExperimentConfig) -> ExperimentConfig:
    """`base` with one method per (C0, C0_hard) cell (plus a Lasso column per C0 when sequential)."""
    if not c0_grid or not c0_hard_grid:
        raise ConfigInvalid("sweep", "grid must be nonempty")
    if base.kind not in PRIMARY_METRIC:
        raise ConfigInvalid("kind", f"sweeps need a sequential or bandit config, got {base.kind!r}")
    grid = {"c0": [float(c) for c in c0_grid], "c0_hard": [float(c) for c in c0_hard_grid]}
    return ExperimentConfig.from_dict(
        {**base.to_dict(), "methods": config.sweep_methods(base.kind, grid), "sweep": grid}
    )


async def sensitivity_sweep_async(c0_grid: list, c0_hard_grid: list, base: ExperimentConfig,
                                  write: bool = True) -> list:
    """
    Run one method per (C0, C0_hard) cell on every scenario of `base`.

    Args:
        c0_grid: C0 values (rows)
        c0_hard_grid: C0_hard values (columns)
        base: Config supplying scenarios, reps, seed and output_dir
        write: Publish table.csv, curves.csv, sweep.csv and manifest.json

    Returns:
        One SweepTable per scenario with its lowest primary-metric cell flagged
    """
    cfg = sweep_config(c0_grid, c0_hard_grid, base)
    if write:
        manifest = await run_experiment_async(cfg)
        return _sweep_tables(cfg, ResultStore.read_table(manifest.parent / "table.csv"))
    return (await execute_async(cfg)).sweeps


def sensitivity_sweep(c0_grid: list, c0_hard_grid: list, base: ExperimentConfig,
                      write: bool = True) -> list:
    """Synchronous wrapper around sensitivity_sweep_async."""
    return asyncio.run(sensitivity_sweep_async(c0_grid, c0_hard_grid, base, write))
