"""Registry of verification suites.

Each suite gets its own generator seeded from (seed, position in the
registry), so its samples do not depend on which other suites run or on how
many workers run them.
"""
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from loopforge.constants import CS_GRID, DEFAULT_DIMENSION, DEFAULT_SAMPLE_POINTS, DEFAULT_SAMPLES, FLOAT_SAMPLES
from loopforge.errors import ConfigError, LoopforgeError
from loopforge.logging_config import get_logger
from loopforge.reports.models import SuiteEntry
from loopforge.services.algebra import AlgebraTag, CompositionAlgebra, get_algebra
from loopforge.services.bundle import field_suite
from loopforge.services.calculus import calculus_suite
from loopforge.services.fields import TorusDomain
from loopforge.services.loops import LoopContext, adq_companion_check, identity_suite
from loopforge.services.numerics import ScalarMode
from loopforge.services.parallel import ordered_map
from loopforge.services.phi_maps import phi_suite
from loopforge.services.pseudoauto import PAlgebra, get_palgebra, pseudoauto_suite
from loopforge.services.tangent import exact_tangent_suite, tangent_suite
from loopforge.services.variational import variational_suite

logger = get_logger(__name__)


@dataclass(frozen=True)
class SuiteContext:
    """Everything a suite needs besides its generator.

    Attributes:
        tag: algebra under test
        mode: scalar mode for the algebraic suites (field suites always use floats)
        samples: random tuples per algebraic identity
        points: sample points per field identity
        dimension: torus dimension for the field suites
        grid: grid size for quadrature
        algebra: override for the algebraic suites (e.g. a corrupted table)
    """

    tag: AlgebraTag
    mode: ScalarMode = ScalarMode.EXACT
    samples: int = DEFAULT_SAMPLES
    points: int = DEFAULT_SAMPLE_POINTS
    dimension: int = DEFAULT_DIMENSION
    grid: int = CS_GRID
    algebra: Optional[CompositionAlgebra] = None

    @property
    def alg(self) -> CompositionAlgebra:
        return self.algebra if self.algebra is not None else get_algebra(self.tag, self.mode)

    @property
    def palg(self) -> PAlgebra:
        return get_palgebra(self.tag)

    @property
    def domain(self) -> TorusDomain:
        return TorusDomain(dimension=self.dimension, grid=self.grid)


def _loop(ctx: SuiteContext, rng: np.random.Generator) -> List[SuiteEntry]:
    loop = LoopContext(ctx.alg)
    entries = identity_suite(loop, rng, ctx.samples)
    entries.append(adq_companion_check(loop, ctx.alg.random(rng), rng, ctx.samples))
    return entries


def _pseudoauto(ctx: SuiteContext, rng: np.random.Generator) -> List[SuiteEntry]:
    exact = ctx.alg if ctx.alg.mode == ScalarMode.EXACT else None
    return pseudoauto_suite(ctx.palg, rng, ctx.samples, exact)


def _tangent(ctx: SuiteContext, rng: np.random.Generator) -> List[SuiteEntry]:
    entries = tangent_suite(ctx.alg, rng, FLOAT_SAMPLES, ctx.palg)
    if ctx.alg.mode == ScalarMode.EXACT:
        entries.extend(exact_tangent_suite(ctx.alg, rng, ctx.samples))
    return entries


def _phi(ctx: SuiteContext, rng: np.random.Generator) -> List[SuiteEntry]:
    return phi_suite(ctx.palg, rng, FLOAT_SAMPLES)


def _fields(ctx: SuiteContext, rng: np.random.Generator) -> List[SuiteEntry]:
    return field_suite(ctx.palg, rng, ctx.domain, ctx.points)


def _calculus(ctx: SuiteContext, rng: np.random.Generator) -> List[SuiteEntry]:
    return calculus_suite(ctx.palg, rng, ctx.domain, ctx.points)


def _variational(ctx: SuiteContext, rng: np.random.Generator) -> List[SuiteEntry]:
    return variational_suite(ctx.palg, rng, ctx.domain, ctx.points)


SUITES: Dict[str, Callable[[SuiteContext, np.random.Generator], List[SuiteEntry]]] = {
    "loop": _loop,
    "pseudoauto": _pseudoauto,
    "tangent": _tangent,
    "phi": _phi,
    "fields": _fields,
    "calculus": _calculus,
    "variational": _variational,
}
"""Suites in registry order; the order fixes each suite's seed."""

ALGEBRAIC_SUITES = ("loop", "pseudoauto", "tangent", "phi")


def resolve(names: Optional[Sequence[str]]) -> List[str]:
    """Validate suite names; None selects every suite.

    Raises:
        ConfigError: for an unknown suite name
    """
    if not names:
        return list(SUITES)
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise ConfigError(f"unknown suite(s): {', '.join(unknown)}; choose from {', '.join(SUITES)}")
    return [n for n in SUITES if n in names]


def run_suite(name: str, ctx: SuiteContext, seed: int) -> List[SuiteEntry]:
    """Run one suite; an unexpected loopforge error becomes a failing entry."""
    rng = np.random.default_rng([seed, list(SUITES).index(name)])
    try:
        entries = SUITES[name](ctx, rng)
    except LoopforgeError as exc:
        logger.error(f"Suite {name} aborted: {exc}", extra={"suite": name, "algebra": ctx.tag.value})
        return [SuiteEntry.error(f"{name}-suite", name, str(exc))]
    failed = [e.identity for e in entries if not e.passed]
    logger.info(f"Suite {name}: {len(entries) - len(failed)}/{len(entries)} passed",
                extra={"suite": name, "algebra": ctx.tag.value})
    for identity in failed:
        logger.debug(f"Failed identity {name}/{identity}", extra={"suite": name, "identity": identity})
    return entries


def run_suites(names: Optional[Sequence[str]], ctx: SuiteContext, seed: int,
               workers: Optional[int] = None) -> List[SuiteEntry]:
    """Run the selected suites in parallel; entries come back in registry order."""
    selected = resolve(names)
    results = ordered_map(lambda name: run_suite(name, ctx, seed), selected, workers)
    return [entry for entries in results for entry in entries]
