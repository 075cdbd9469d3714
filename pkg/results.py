"""
Result persistence: table.csv, curves.csv, sweep.csv, fixture dumps and manifest.json.

Writes go to a staging directory and are moved into place only when the whole
experiment succeeded, so a failed run never leaves a partial table behind.
"""

import csv
import json
import logging
import os
import shutil
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path

logger = logging.getLogger(__name__)

TABLE_HEADER = ["scenario", "method", "metric", "mean", "sem", "sd", "reps", "seed"]
CURVES_HEADER = ["scenario", "method", "metric", "t", "value"]
SWEEP_HEADER = ["scenario", "metric", "c0", "c0_hard", "mean", "sem", "sd", "reps", "is_min"]


def _num(value) -> str:
    if isinstance(value, (int, bool)):
        return str(int(value))
    return f"{value:.12g}"


@dataclass(frozen=True)
class TableRow:
    scenario: str
    method: str
    metric: str
    mean: float
    sem: float
    sd: float
    reps: int
    seed: int

    def as_csv(self) -> list:
        return [self.scenario, self.method, self.metric,
                _num(self.mean), _num(self.sem), _num(self.sd), str(self.reps), str(self.seed)]


class ResultStore:
    def __init__(self, output_dir):
        """Result store rooted at output_dir (created on demand)"""
        self.output_dir = Path(output_dir)
        self._staging = None

    @property
    def target(self) -> Path:
        """Directory currently written to (the staging area inside `staging()`)."""
        return self._staging or self.output_dir

    @contextmanager
    def staging(self):
        """Collect every write, then publish all files at once; discard them on failure."""
        self.output_dir.mkdir(parents=True, exist_ok=True)
        self._staging = self.output_dir / f".staging-{os.getpid()}"
        shutil.rmtree(self._staging, ignore_errors=True)
        self._staging.mkdir()
        try:
            yield self
            for item in sorted(self._staging.iterdir()):
                os.replace(item, self.output_dir / item.name)
            logger.info(f"✅ Results written to {self.output_dir}")
        except Exception as e:
            logger.error(f"❌ Experiment failed, discarding staged results: {e}")
            raise
        finally:
            shutil.rmtree(self._staging, ignore_errors=True)
            self._staging = None

    def write_csv(self, name: str, header: list, rows) -> Path:
        path = self.target / name
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
        return path

    def write_table(self, rows: list) -> Path:
        return self.write_csv("table.csv", TABLE_HEADER, (row.as_csv() for row in rows))

    def write_curves(self, curves: dict) -> Path:
        """curves: (scenario, method, metric) -> (rounds, values)"""
        def _rows():
            for (scenario, method, metric), (ts, values) in curves.items():
                for t, v in zip(ts, values):
                    yield [scenario, method, metric, str(int(t)), _num(float(v))]
        return self.write_csv("curves.csv", CURVES_HEADER, _rows())

    def write_sweep(self, tables: list) -> Path:
        def _rows():
            for table in tables:
                for i, c0 in enumerate(table.c0_grid):
                    for j, ch in enumerate(table.c0_hard_grid):
                        cell = table.cells[i][j]
                        yield [table.scenario, cell.metric, _num(c0), _num(ch), _num(cell.mean),
                               _num(cell.sem), _num(cell.sd), str(cell.reps),
                               "1" if (i, j) == table.min_cell else "0"]
        return self.write_csv("sweep.csv", SWEEP_HEADER, _rows())

    def write_manifest(self, manifest: dict) -> Path:
        path = self.target / "manifest.json"
        path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return path

    # ── Readers ───────────────────────────────────────────────────────────────

    @staticmethod
    def read_table(path) -> list:
        with open(path, encoding="utf-8", newline="") as f:
            reader = csv.DictReader(f)
            return [
                TableRow(r["scenario"], r["method"], r["metric"], float(r["mean"]), float(r["sem"]),
                         float(r["sd"]), int(r["reps"]), int(r["seed"]))
                for r in reader
            ]

    @staticmethod
    def read_curves(path) -> dict:
        """(scenario, method, metric) -> (rounds, values), rows kept in file order."""
        curves: dict = {}
        with open(path, encoding="utf-8", newline="") as f:
            for r in csv.DictReader(f):
                ts, values = curves.setdefault((r["scenario"], r["method"], r["metric"]), ([], []))
                ts.append(int(r["t"]))
                values.append(float(r["value"]))
        return curves

    @staticmethod
    def read_manifest(path) -> dict:
        with open(path, encoding="utf-8") as f:
            return json.load(f)
