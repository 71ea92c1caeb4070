"""Run configuration: INI file sections validated by pydantic.

A configuration file is plain ``key = value`` text::

    [run]
    algebra = O
    mode = exact
    seed = 7
    samples = 1000
    suites = loop, pseudoauto

    [domain]
    dimension = 3
    grid = 16
    points = 125

    [fields]
    kind = random
    max_frequency = 2
    amplitude = 0.5

    [flow]
    dimension = 2
    grid = 32
    max_iterations = 5000
    tolerance = 1e-4
    metric = euclidean

    [companions]
    map = conjugation

    [tolerances]
    torsion-structure-equation = 1e-9
    fields = 1e-7

    [output]
    path = report.json
    summary = flow_summary.json

Unknown sections or keys are rejected. Command-line flags override file values.
"""
import configparser
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from loopforge.config import settings
from loopforge.constants import (
    CS_GRID,
    DEFAULT_AMPLITUDE,
    DEFAULT_DIMENSION,
    DEFAULT_MAX_FREQUENCY,
    DEFAULT_SAMPLE_POINTS,
    DEFAULT_SAMPLES,
    FLOW_DIMENSION,
    FLOW_GRID,
    FLOW_INITIAL_STEP,
    FLOW_MAX_ITERATIONS,
    FLOW_TOLERANCE,
)
from loopforge.errors import ConfigError
from loopforge.logging_config import get_logger
from loopforge.reports.models import SuiteEntry
from loopforge.services.algebra import AlgebraTag
from loopforge.services.bundle import random_bundle_fields, zero_connection
from loopforge.services.fields import ConstantField, TorusDomain
from loopforge.services.numerics import ScalarMode
from loopforge.services.pseudoauto import PAlgebra
from loopforge.services.variational import Metric

logger = get_logger(__name__)


class FieldKind(str, Enum):
    """Which (section, connection) pair a field command evaluates."""

    RANDOM = "random"
    CONSTANT = "constant"
    ZERO = "zero"


class CompanionMap(str, Enum):
    """Right pseudoautomorphism whose companions are solved for."""

    IDENTITY = "identity"
    CONJUGATION = "conjugation"


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class RunSection(_Section):
    algebra: AlgebraTag = AlgebraTag.O
    mode: ScalarMode = ScalarMode.EXACT
    seed: int = Field(default_factory=lambda: settings.LOOPFORGE_DEFAULT_SEED)
    samples: int = Field(DEFAULT_SAMPLES, gt=0)
    suites: List[str] = Field(default_factory=list)

    @field_validator("algebra")
    @classmethod
    def no_reals(cls, v: AlgebraTag) -> AlgebraTag:
        if v == AlgebraTag.R:
            raise ValueError("choose one of C, H, O")
        return v

    @field_validator("suites", mode="before")
    @classmethod
    def split_suites(cls, v):
        """Accept a comma separated list from the INI file."""
        if isinstance(v, str):
            return [name.strip() for name in v.split(",") if name.strip()]
        return v


class DomainSection(_Section):
    dimension: int = Field(DEFAULT_DIMENSION, ge=1, le=3)
    grid: int = Field(CS_GRID, ge=4)
    points: int = Field(DEFAULT_SAMPLE_POINTS, gt=0)


class FieldsSection(_Section):
    kind: FieldKind = FieldKind.RANDOM
    max_frequency: int = Field(DEFAULT_MAX_FREQUENCY, ge=1)
    amplitude: float = Field(DEFAULT_AMPLITUDE, ge=0.0)


class FlowSection(_Section):
    dimension: int = Field(FLOW_DIMENSION, ge=1, le=3)
    grid: int = Field(FLOW_GRID, ge=4)
    max_iterations: int = Field(FLOW_MAX_ITERATIONS, ge=0)
    tolerance: float = Field(FLOW_TOLERANCE, gt=0.0)
    initial_step: float = Field(FLOW_INITIAL_STEP, gt=0.0)
    metric: Metric = Metric.EUCLIDEAN


class CompanionsSection(_Section):
    map: CompanionMap = CompanionMap.IDENTITY


class OutputSection(_Section):
    path: Optional[Path] = None
    summary: Optional[Path] = None


class RunConfig(_Section):
    """Validated run configuration.

    Attributes:
        tolerances: overrides keyed by identity name or suite name; an
            identity key wins over its suite key
        tol: global override from ``--tol``, applied before the keyed ones
    """

    run: RunSection = Field(default_factory=RunSection)
    domain: DomainSection = Field(default_factory=DomainSection)
    fields: FieldsSection = Field(default_factory=FieldsSection)
    flow: FlowSection = Field(default_factory=FlowSection)
    companions: CompanionsSection = Field(default_factory=CompanionsSection)
    tolerances: Dict[str, float] = Field(default_factory=dict)
    output: OutputSection = Field(default_factory=OutputSection)
    tol: Optional[float] = Field(None, gt=0.0)

    @property
    def field_domain(self) -> TorusDomain:
        return TorusDomain(dimension=self.domain.dimension, grid=self.domain.grid)

    @property
    def flow_domain(self) -> TorusDomain:
        return TorusDomain(dimension=self.flow.dimension, grid=self.flow.grid)

    def rng(self, stream: int = 0) -> np.random.Generator:
        return np.random.default_rng([self.run.seed, stream])

    def bundle_fields(self, palg: PAlgebra, domain: TorusDomain, stream: int = 0):
        """(section field, connection field) for the configured field kind."""
        d = domain.dimension
        if self.fields.kind == FieldKind.ZERO:
            return ConstantField(palg.algebra.one()), zero_connection(d, palg)
        if self.fields.kind == FieldKind.CONSTANT:
            value = palg.algebra.random(self.rng(stream), unit=True)
            return ConstantField(value), zero_connection(d, palg)
        return random_bundle_fields(palg, self.rng(stream), domain,
                                    self.fields.max_frequency, self.fields.amplitude)

    def apply_tolerances(self, entries: List[SuiteEntry]) -> List[SuiteEntry]:
        """Re-judge gated entries against overridden tolerances."""
        if self.tol is None and not self.tolerances:
            return entries
        judged = []
        for entry in entries:
            if entry.report_only:
                judged.append(entry)
                continue
            tolerance = entry.tolerance
            if self.tol is not None:
                tolerance = self.tol
            tolerance = self.tolerances.get(entry.suite, tolerance)
            tolerance = self.tolerances.get(entry.identity, tolerance)
            if tolerance == entry.tolerance:
                judged.append(entry)
            else:
                judged.append(SuiteEntry.check(entry.identity, entry.suite, entry.residual, tolerance,
                                               entry.samples, entry.detail))
        return judged


def load_config(path: Optional[Path] = None, overrides: Optional[Dict[str, Dict[str, object]]] = None,
                tol: Optional[float] = None) -> RunConfig:
    """Read an INI file (optional) and merge command-line overrides on top.

    Args:
        path: INI file; None uses defaults only
        overrides: section -> key -> value; None values are ignored
        tol: global tolerance override

    Raises:
        ConfigError: unreadable file, parse error, unknown key or invalid value
    """
    data: Dict[str, Dict[str, object]] = {}
    if path is not None:
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        try:
            with open(path, encoding="utf-8") as handle:
                parser.read_file(handle)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse config {path}: {exc}") from exc
        for section in parser.sections():
            data[section] = dict(parser.items(section))
        logger.debug(f"Loaded config {path}: sections {', '.join(parser.sections())}")
    for section, values in (overrides or {}).items():
        data.setdefault(section, {}).update({k: v for k, v in values.items() if v is not None})
    if tol is not None:
        data["tol"] = tol
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        errors = "; ".join(f"{'.'.join(str(p) for p in e['loc'])}: {e['msg']}" for e in exc.errors())
        raise ConfigError(f"invalid configuration: {errors}") from exc
