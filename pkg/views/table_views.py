"""
Plain-text table views printed after a run.
Scenarios are rows, methods are columns, cells read "mean ± sem".
"""

from pathlib import Path

from labels import get_label
from results import ResultStore
from utils.helpers import format_pm


def _grid(header: list, body: list) -> str:
    widths = [max(len(str(r[c])) for r in [header] + body) for c in range(len(header))]
    lines = ["  ".join(str(v).ljust(w) for v, w in zip(header, widths))]
    lines.append("  ".join("-" * w for w in widths))
    lines.extend("  ".join(str(v).ljust(w) for v, w in zip(r, widths)) for r in body)
    return "\n".join(lines)


def format_summary(rows: list, metric: str) -> str:
    """
    Render one metric of a result table.

    Args:
        rows: TableRow list as written to table.csv
        metric: Metric to show (e.g. "cum_error", "cum_regret")

    Returns:
        Multi-line string, empty when no row carries the metric
    """
    picked = [r for r in rows if r.metric == metric]
    if not picked:
        return ""
    scenarios = list(dict.fromkeys(r.scenario for r in picked))
    methods = list(dict.fromkeys(r.method for r in picked))
    cell = {(r.scenario, r.method): format_pm(r.mean, r.sem) for r in picked}
    header = ["scenario"] + [get_label("methods", m) for m in methods]
    body = [[s] + [cell.get((s, m), "") for m in methods] for s in scenarios]
    reps = picked[0].reps
    return f"{get_label('metrics', metric)} (mean ± sem, {reps} reps)\n{_grid(header, body)}"


def format_sweep(table) -> str:
    """Sensitivity grid for one scenario; the lowest cell is starred."""
    header = ["C0 \\ C0_hard"] + [f"{ch:g}" for ch in table.c0_hard_grid]
    body = []
    for i, c0 in enumerate(table.c0_grid):
        cells = []
        for j in range(len(table.c0_hard_grid)):
            text = format_pm(table.cells[i][j].mean, table.cells[i][j].sem)
            cells.append(text + (" *" if (i, j) == table.min_cell else ""))
        body.append([f"{c0:g}"] + cells)
    return f"{table.scenario}: {get_label('metrics', table.metric)}\n{_grid(header, body)}"


def format_report(manifest_path) -> str:
    """Console summary of a finished run from its manifest.json and table.csv."""
    manifest_path = Path(manifest_path)
    manifest = ResultStore.read_manifest(manifest_path)
    kind = manifest["config"]["kind"]
    rows = ResultStore.read_table(manifest_path.parent / "table.csv")
    if kind == "fixtures":
        return "\n".join(f"{r.scenario} {r.metric} = {r.mean:.6g}" for r in rows)
    metric = "cum_error" if kind == "sequential" else "cum_regret"
    return format_summary(rows, metric)
