"""
Configuration and constants for the laboratory.
Contains the scenario catalog, tuning pairs, sensitivity grids and presets.
These dicts are the SEED defaults: experiment configs override any field.
"""

import copy
import logging

from engine.bandit import BanditScenario
from engine.randkit import CovariateModel
from engine.sequential import SequentialScenario

logger = logging.getLogger(__name__)

# Sequential scenarios (s0, d, T), identity covariates, sigma = 1
SEQUENTIAL_SCENARIOS = {
    "seq-a": {"s0": 5, "d": 100, "T": 10000},
    "seq-b": {"s0": 10, "d": 500, "T": 10000},
    "seq-c": {"s0": 5, "d": 1000, "T": 5000},
    "seq-d": {"s0": 10, "d": 1000, "T": 5000},
}

# Bandit scenarios (s0, d, K), covariates clipped to [-1, 1], T = 10^4
BANDIT_SCENARIOS = {
    "bandit-a": {"s0": 5, "d": 100, "K": 5},
    "bandit-b": {"s0": 5, "d": 100, "K": 10},
    "bandit-c": {"s0": 10, "d": 500, "K": 5},
    "bandit-d": {"s0": 10, "d": 500, "K": 10},
    "bandit-e": {"s0": 5, "d": 1000, "K": 5},
    "bandit-f": {"s0": 5, "d": 1000, "K": 10},
    "bandit-g": {"s0": 10, "d": 1000, "K": 5},
    "bandit-h": {"s0": 10, "d": 1000, "K": 10},
}
BANDIT_HORIZON = 10000

# (C0, C0_hard) per number of arms
BANDIT_TUNING = {5: (2.0, 0.6), 10: (2.0, 1.0)}

# Greedy tie rule for catalog scenarios; all-zero estimates tie at score 0
BANDIT_TIE_RULE = "random"

# Sequential tuning compared in the main table
SEQUENTIAL_OPT_PAIRS = [(0.8, 0.6), (1.0, 0.4)]
SEQUENTIAL_LASSO_C0 = [0.8, 1.0]

# Sensitivity grids
SEQUENTIAL_GRID = {"c0": [0.4, 0.6, 0.8, 1.0, 1.2], "c0_hard": [0.2, 0.4, 0.6, 0.8, 2.0]}
BANDIT_GRID = {"c0": [1.0, 1.6, 2.0, 2.6, 3.0], "c0_hard": [0.2, 0.6, 1.0, 1.5, 2.0]}

DEFAULT_REPS = {"sequential": 200, "bandit": 1000}

BANDIT_POLICIES = ["three_stage", "two_stage_opt", "two_stage_lasso"]

# Presets: which scenarios, which methods, which reporting
PRESETS = {
    "table1": {"kind": "sequential", "scenarios": list(SEQUENTIAL_SCENARIOS), "methods": "seq_compare"},
    "table2": {"kind": "bandit", "scenarios": list(BANDIT_SCENARIOS), "methods": "bandit_compare"},
    "table3": {"kind": "bandit", "scenarios": ["bandit-e", "bandit-f"], "sweep": BANDIT_GRID},
    "table4": {
        "kind": "bandit",
        "scenarios": ["bandit-a", "bandit-b", "bandit-c", "bandit-d", "bandit-g", "bandit-h"],
        "sweep": BANDIT_GRID,
    },
    "table5": {"kind": "sequential", "scenarios": list(SEQUENTIAL_SCENARIOS), "sweep": SEQUENTIAL_GRID},
    "fig2": {"kind": "sequential", "scenarios": ["seq-c"], "methods": "seq_with_oracle", "plot": ["running_error"]},
    "fig3": {"kind": "sequential", "scenarios": ["seq-c"], "methods": "seq_support", "plot": ["fp", "fn"]},
    "fig4": {
        "kind": "bandit", "scenarios": ["bandit-e", "bandit-f"], "methods": "bandit_fig",
        "plot": ["regret_from_gamma2"],
    },
    "fig5": {
        "kind": "bandit", "scenarios": ["bandit-e", "bandit-f"], "methods": "bandit_fig",
        "plot": ["fp_avg", "fn_avg"], "curve_until": 0.5,
    },
}


def _label(estimator: str, c0: float, c0_hard: float = None) -> str:
    if c0_hard is None:
        return f"{estimator}({c0:g})"
    return f"{estimator}({c0:g},{c0_hard:g})"


def _method_set(name: str) -> list:
    """Method dicts (label + scenario overrides) for a named method set."""
    if name == "seq_compare":
        return [
            {"label": _label("opt_lasso", c0, ch), "estimator": "opt_lasso", "C0": c0, "C0_hard": ch}
            for c0, ch in SEQUENTIAL_OPT_PAIRS
        ] + [{"label": _label("lasso", c0), "estimator": "lasso", "C0": c0} for c0 in SEQUENTIAL_LASSO_C0]
    if name == "seq_with_oracle":
        return _method_set("seq_compare") + [{"label": "oracle_ls", "estimator": "oracle_ls"}]
    if name == "seq_support":
        c0, ch = SEQUENTIAL_OPT_PAIRS[0]
        return [
            {"label": _label("opt_lasso", c0, ch), "estimator": "opt_lasso", "C0": c0, "C0_hard": ch},
            {"label": _label("lasso", c0), "estimator": "lasso", "C0": c0},
        ]
    if name == "bandit_compare":
        return [{"label": policy, "policy": policy} for policy in BANDIT_POLICIES]
    if name == "bandit_fig":
        return [{"label": policy, "policy": policy} for policy in ("three_stage", "two_stage_lasso")]
    raise ValueError(f"unknown method set {name!r}")


def sweep_methods(kind: str, grid: dict) -> list:
    """One method per (C0, C0_hard) cell, plus a Lasso column per C0 for sequential sweeps."""
    if kind == "sequential":
        cells = [
            {"label": _label("opt_lasso", c0, ch), "estimator": "opt_lasso", "C0": c0, "C0_hard": ch,
             "cell": [c0, ch]}
            for c0 in grid["c0"] for ch in grid["c0_hard"]
        ]
        return cells + [{"label": _label("lasso", c0), "estimator": "lasso", "C0": c0} for c0 in grid["c0"]]
    return [
        {"label": _label("three_stage", c0, ch), "policy": "three_stage", "C0": c0, "C0_hard": ch,
         "cell": [c0, ch]}
        for c0 in grid["c0"] for ch in grid["c0_hard"]
    ]


# ── Runtime helpers (catalog first, overrides on top) ─────────────────────────

def scenario_payload(kind: str, name: str) -> dict:
    """
    Return the full scenario payload for a catalog name.

    Args:
        kind: "sequential" or "bandit"
        name: Catalog key such as "seq-a" or "bandit-e"

    Returns:
        Plain dict accepted by build_scenario
    """
    catalog = SEQUENTIAL_SCENARIOS if kind == "sequential" else BANDIT_SCENARIOS
    if name not in catalog:
        raise ValueError(f"unknown {kind} scenario {name!r}; known: {', '.join(catalog)}")
    payload = {"name": name, **copy.deepcopy(catalog[name])}
    if kind == "bandit":
        payload["T"] = BANDIT_HORIZON
        payload["C0"], payload["C0_hard"] = BANDIT_TUNING.get(payload["K"], (2.0, 0.6))
        payload["tie_rule"] = BANDIT_TIE_RULE
    return payload


def build_scenario(kind: str, payload: dict, overrides: dict = None):
    """
    Build a scenario object from a payload, resolving a catalog name first.

    Keys of `overrides` that are not scenario fields (label, policy, cell) are ignored.
    """
    merged = {}
    if "preset" in payload:
        merged.update(scenario_payload(kind, payload["preset"]))
    merged.update({k: v for k, v in payload.items() if k != "preset"})
    merged.update(overrides or {})
    for key in ("label", "policy", "cell"):
        merged.pop(key, None)
    if isinstance(merged.get("cov"), dict):
        merged["cov"] = CovariateModel(**{"d": merged["d"], **merged["cov"]})
    if isinstance(merged.get("error_window"), list):
        merged["error_window"] = tuple(merged["error_window"])
    if kind == "sequential":
        return SequentialScenario(**merged)
    if kind == "bandit":
        # stage ends follow K and T unless pinned
        return BanditScenario(**merged)
    raise ValueError(f"unknown scenario kind {kind!r}")


def get_sequential_preset(name: str, **overrides) -> SequentialScenario:
    """Catalog sequential scenario with field overrides (e.g. T, estimator, C0)."""
    return build_scenario("sequential", scenario_payload("sequential", name), overrides)


def get_bandit_preset(name: str, **overrides) -> BanditScenario:
    """Catalog bandit scenario with field overrides (e.g. T, C0_hard)."""
    return build_scenario("bandit", scenario_payload("bandit", name), overrides)


def get_table_preset(name: str, reps: int = None, T: int = None, seed: int = None,
                     scenarios: list = None) -> dict:
    """
    Return an experiment config dict for a named table or figure preset.

    Args:
        name: One of PRESETS
        reps: Replication override (defaults per kind)
        T: Horizon override applied to every scenario
        seed: Base seed override
        scenarios: Subset of catalog names, or short letters such as ["a", "c"]

    Returns:
        Dict accepted by ExperimentConfig.from_dict
    """
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; known: {', '.join(PRESETS)}")
    preset = PRESETS[name]
    kind = preset["kind"]
    prefix = "seq-" if kind == "sequential" else "bandit-"

    names = list(preset["scenarios"])
    if scenarios:
        wanted = [s if s.startswith(prefix) else prefix + s for s in scenarios]
        unknown = [s for s in wanted if s not in names]
        if unknown:
            raise ValueError(f"preset {name} has no scenario(s) {', '.join(unknown)}")
        names = [s for s in names if s in wanted]

    payloads = []
    for scenario in names:
        payload = {"preset": scenario}
        if T is not None:
            payload["T"] = T
        payloads.append(payload)

    if "sweep" in preset:
        methods = sweep_methods(kind, preset["sweep"])
    else:
        methods = _method_set(preset["methods"])

    cfg = {
        "kind": kind,
        "name": name,
        "scenarios": payloads,
        "methods": methods,
        "reps": reps if reps is not None else DEFAULT_REPS[kind],
    }
    if seed is not None:
        cfg["seed"] = seed
    if "sweep" in preset:
        cfg["sweep"] = copy.deepcopy(preset["sweep"])
    if "plot" in preset:
        cfg["plot"] = list(preset["plot"])
    if "curve_until" in preset:
        cfg["curve_until"] = preset["curve_until"]
    logger.debug(f"Resolved preset {name}: {len(payloads)} scenario(s), {len(methods)} method(s)")
    return cfg
