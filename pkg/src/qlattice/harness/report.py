"""Report assembly, serialization and schema validation."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources

import jsonschema


@dataclass
class Report:
    suite: str
    parameters: dict
    seed: int
    tolerance: float
    max_residual: float
    counts: dict
    wall_s: float
    negative_control: bool = False
    cases: list | None = None
    extras: dict = field(default_factory=dict)

    NEGATIVE_CONTROL_FLOOR = 1e-3

    @property
    def passed(self) -> bool:
        if self.negative_control:
            return self.max_residual > max(self.tolerance, self.NEGATIVE_CONTROL_FLOOR)
        return self.max_residual < self.tolerance

    def to_dict(self) -> dict:
        out = {
            "suite": self.suite,
            "parameters": self.parameters,
            "seed": self.seed,
            "tolerance": self.tolerance,
            "max_residual": self.max_residual,
            "pass": self.passed,
            "negative_control": self.negative_control,
            "counts": self.counts,
            "timing": {"wall_s": self.wall_s},
        }
        if self.cases is not None:
            out["cases"] = [{"case": int(c), "residual": float(r)} for c, r in self.cases]
        if self.extras:
            out["extras"] = self.extras
        return out

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), sort_keys=True, indent=2)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text

    def to_csv(self, path: str):
        """Per-case residuals as CSV; requires the run to have kept cases."""
        import csv

        if self.cases is None:
            raise ValueError("run the suite with keep_cases to export per-case residuals")
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["case", "residual"])
            for c, r in self.cases:
                writer.writerow([int(c), repr(float(r))])


def load_schema() -> dict:
    with resources.files("qlattice.harness").joinpath("report_schema.json").open() as fh:
        return json.load(fh)


def validate_report(data: dict):
    jsonschema.validate(data, load_schema())


def strip_timing(data: dict) -> dict:
    out = dict(data)
    out.pop("timing", None)
    return out
