"""Check records shared by the randomized verification suites."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .linalg import DEFAULT_TOL, Tolerance

__all__ = ["CheckResult", "Report", "round_sig", "jsonable"]


def round_sig(x: float, digits: int = 12) -> float:
    """Round to ``digits`` significant digits (0 and non-finite values pass through)."""
    x = float(x)
    if x == 0.0 or not np.isfinite(x):
        return x
    return float(f"{x:.{digits - 1}e}")


def jsonable(obj: Any, digits: int = 12) -> Any:
    """Convert numpy scalars, sets and tuples into plain JSON values, rounding floats."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v, digits) for k, v in obj.items()}
    if isinstance(obj, (frozenset, set)):
        return sorted(jsonable(v, digits) for v in obj)
    if isinstance(obj, (list, tuple)):
        return [jsonable(v, digits) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return round_sig(float(obj), digits)
    if isinstance(obj, (complex, np.complexfloating)):
        return [round_sig(obj.real, digits), round_sig(obj.imag, digits)]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist(), digits)
    return obj


@dataclass
class CheckResult:
    """Outcome of one law checked over many trials.

    ``max_violation`` is the largest amount by which the law failed beyond
    tolerance (0 when every trial passed).  ``witness`` describes the trial
    with the largest violation.
    """

    name: str
    anchor: str
    trials: int = 0
    max_violation: float = 0.0
    witness: Any = None

    @property
    def passed(self) -> bool:
        return self.witness is None

    def record(self, excess: float, witness: Any = None) -> None:
        self.trials += 1
        excess = float(excess)
        if excess > 0.0 and (self.witness is None or excess > self.max_violation):
            self.max_violation = excess
            self.witness = witness if witness is not None else {"trial": self.trials - 1}

    def record_leq(self, lhs: float, rhs: float, witness: Any = None, tol: Tolerance = DEFAULT_TOL) -> None:
        """Record the trial ``lhs <= rhs`` under the combined tolerance."""
        self.record(tol.excess(lhs, rhs), witness)

    def record_close(self, a: float, b: float, witness: Any = None, tol: Tolerance = DEFAULT_TOL) -> None:
        self.record(max(0.0, abs(a - b) - tol.bound(a, b)), witness)

    def record_bool(self, ok: bool, witness: Any = None) -> None:
        # a failed boolean law counts as a unit violation
        self.record(0.0 if ok else 1.0, witness)

    def merge(self, other: "CheckResult") -> None:
        if other.name != self.name:
            raise ValueError("cannot merge different checks")
        self.trials += other.trials
        if other.witness is not None and (self.witness is None or other.max_violation > self.max_violation):
            self.max_violation = other.max_violation
            self.witness = other.witness

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "anchor": self.anchor,
            "trials": self.trials,
            "passed": self.passed,
            "max_violation": self.max_violation,
            "witness": self.witness,
        }


@dataclass
class Report:
    title: str
    checks: dict[str, CheckResult] = field(default_factory=dict)

    def check(self, name: str, anchor: str) -> CheckResult:
        if name not in self.checks:
            self.checks[name] = CheckResult(name, anchor)
        return self.checks[name]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks.values())

    @property
    def failures(self) -> list[CheckResult]:
        return [c for c in self.checks.values() if not c.passed]

    def __getitem__(self, name: str) -> CheckResult:
        return self.checks[name]

    def __contains__(self, name: str) -> bool:
        return name in self.checks

    def merge(self, other: "Report") -> None:
        for name, c in other.checks.items():
            if name in self.checks:
                self.checks[name].merge(c)
            else:
                self.checks[name] = CheckResult(c.name, c.anchor, c.trials, c.max_violation, c.witness)

    def to_dict(self) -> dict:
        return {
            "title": self.title,
            "passed": self.passed,
            "checks": [c.to_dict() for c in self.checks.values()],
        }

    def summary(self) -> str:
        lines = [f"{self.title}: {'PASS' if self.passed else 'FAIL'}"]
        for c in self.checks.values():
            flag = "ok " if c.passed else "BAD"
            lines.append(f"  [{flag}] {c.name:<32} trials={c.trials:<6} max_violation={c.max_violation:.3e}")
        return "\n".join(lines)
