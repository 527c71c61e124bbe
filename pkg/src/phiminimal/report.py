"""JSON reports and CSV trajectory sidecars."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__

VOLATILE_KEYS = ("timestamp", "wall_clock_s")


def to_jsonable(obj):
    """Plain-Python copy with numpy scalars/arrays unwrapped and non-finite floats as strings."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    return obj


@dataclass
class SuiteResult:
    name: str
    passed: bool
    metrics: dict
    samples_skipped: int = 0
    notes: list = field(default_factory=list)
    exploratory: bool = False
    wall_clock_s: float = 0.0
    sidecars: dict = field(default_factory=dict)  # basename -> (header, rows)

    def to_dict(self) -> dict:
        return {
            "name": self.name, "pass": bool(self.passed), "exploratory": self.exploratory,
            "metrics": to_jsonable(self.metrics), "samples_skipped": int(self.samples_skipped),
            "notes": list(self.notes), "sidecars": sorted(self.sidecars), "wall_clock_s": self.wall_clock_s,
        }


@dataclass
class CertificationReport:
    command: str
    config: dict
    suites: list

    @property
    def passed(self) -> bool:
        return all(s.passed for s in self.suites if not s.exploratory)

    @property
    def failing(self) -> list:
        return [s.name for s in self.suites if not s.exploratory and not s.passed]

    def to_dict(self) -> dict:
        return {
            "version": __version__,
            "command": self.command,
            "pass": self.passed,
            "config": to_jsonable(self.config),
            "suites": [s.to_dict() for s in sorted(self.suites, key=lambda s: s.name)],
            "timestamp": datetime.now(timezone.utc).isoformat(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def write(self, path: str) -> list[Path]:
        """Write the JSON report and its CSV sidecars next to it; returns the written paths."""
        out = Path(path)
        if out.parent and not out.parent.exists():
            out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(self.to_json(), encoding="utf-8")
        written = [out]
        for suite in self.suites:
            for name, (header, rows) in sorted(suite.sidecars.items()):
                target = out.with_name(f"{out.stem}_{name}")
                write_csv(target, header, rows)
                written.append(target)
        return written


def format_float(x) -> str:
    return format(float(x), ".17g")


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([format_float(v) if isinstance(v, (float, np.floating)) else v for v in row])


def strip_volatile(report: dict) -> dict:
    """Drop timestamp and wall-clock fields so two runs can be compared byte for byte."""
    if isinstance(report, dict):
        return {k: strip_volatile(v) for k, v in report.items() if k not in VOLATILE_KEYS}
    if isinstance(report, list):
        return [strip_volatile(v) for v in report]
    return report


def canonical_json(report: dict) -> str:
    return json.dumps(strip_volatile(report), indent=2, sort_keys=True)
