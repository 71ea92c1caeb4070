"""Report models written by the command line.

Every identity check produces one ``SuiteEntry``; a command run collects them
into a ``SuiteReport``. Flow histories are tabular rows of ``FlowRecord``;
functional values go into ``FunctionalReport`` and companion spaces into
``CompanionReport``.
"""
import math
from typing import Dict, List, Optional

from pydantic import BaseModel, Field, computed_field, field_validator

from loopforge.constants import REPORT_FLOAT_DIGITS


def _round(x: float) -> float:
    if x is None or not math.isfinite(x):
        return x
    return float(f"{x:.{REPORT_FLOAT_DIGITS}g}")


class SuiteEntry(BaseModel):
    """Outcome of one identity check.

    Attributes:
        identity: descriptive kebab-case name, e.g. "torsion-structure-equation"
        suite: suite the identity belongs to
        residual: max residual over samples
        tolerance: acceptance threshold (residual <= tolerance passes)
        passed: verdict (False for report-only entries that failed to evaluate)
        samples: number of samples evaluated
        detail: free text (fitted constants, error messages)
        report_only: True when the entry is informational and not gated
    """

    identity: str
    suite: str
    residual: float
    tolerance: float
    passed: bool
    samples: int = 0
    detail: str = ""
    report_only: bool = False

    @field_validator("residual", "tolerance")
    @classmethod
    def round_floats(cls, v: float) -> float:
        return _round(v)

    @classmethod
    def check(cls, identity: str, suite: str, residual: float, tolerance: float,
              samples: int = 0, detail: str = "") -> "SuiteEntry":
        """Build an entry whose verdict is residual <= tolerance."""
        residual = float(residual)
        return cls(
            identity=identity,
            suite=suite,
            residual=residual,
            tolerance=tolerance,
            passed=bool(math.isfinite(residual) and residual <= tolerance),
            samples=samples,
            detail=detail,
        )

    @classmethod
    def info(cls, identity: str, suite: str, value: float, detail: str = "") -> "SuiteEntry":
        """Informational entry; never fails a run."""
        return cls(identity=identity, suite=suite, residual=float(value), tolerance=math.inf,
                   passed=True, detail=detail, report_only=True)

    @classmethod
    def error(cls, identity: str, suite: str, message: str) -> "SuiteEntry":
        """Entry for a check that raised instead of producing a residual."""
        return cls(identity=identity, suite=suite, residual=math.inf, tolerance=0.0,
                   passed=False, detail=message)


class SuiteReport(BaseModel):
    """All entries of one command run."""

    command: str
    algebra: str
    mode: str
    seed: int
    entries: List[SuiteEntry] = Field(default_factory=list)
    values: Dict[str, float] = Field(default_factory=dict)

    @computed_field
    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    @computed_field
    @property
    def failed(self) -> List[str]:
        return [f"{e.suite}/{e.identity}" for e in self.entries if not e.passed]

    @field_validator("values")
    @classmethod
    def round_values(cls, v: Dict[str, float]) -> Dict[str, float]:
        return {k: _round(float(x)) for k, x in v.items()}


class FlowRecord(BaseModel):
    """One accepted energy-flow iteration."""

    iteration: int
    energy: float
    divergence: float
    step: float
    drift: float = 0.0

    @field_validator("energy", "divergence", "step", "drift")
    @classmethod
    def round_floats(cls, v: float) -> float:
        return _round(v)


class FlowSummary(BaseModel):
    """Final state of an energy flow run."""

    iterations: int
    converged: bool
    line_search_failed: bool
    energy: float
    divergence: float
    monotone: bool
    omega_hat_norm: Optional[float] = None

    @field_validator("energy", "divergence", "omega_hat_norm")
    @classmethod
    def round_floats(cls, v: Optional[float]) -> Optional[float]:
        return None if v is None else _round(v)


class FunctionalReport(BaseModel):
    """Value of a functional with its first-variation and critical-point diagnostics."""

    name: str
    value: float
    variation_residual: Optional[float] = None
    gauge_residual: Optional[float] = None
    fhat_norm: Optional[float] = None
    divergence_norm: Optional[float] = None
    associator_norm: Optional[float] = None

    @field_validator("value", "variation_residual", "gauge_residual", "fhat_norm",
                     "divergence_norm", "associator_norm")
    @classmethod
    def round_floats(cls, v: Optional[float]) -> Optional[float]:
        return None if v is None else _round(v)


class CompanionReport(BaseModel):
    """Companion space of a right pseudoautomorphism.

    Basis entries are exact rationals written as strings ("p/q") in exact
    mode and decimal strings in float mode.
    """

    algebra: str
    mode: str
    map: str
    dimension: int
    nucleus_dimension: int
    basis: List[List[str]] = Field(default_factory=list)
    expected_companion: List[str] = Field(default_factory=list)
    contains_expected: bool
