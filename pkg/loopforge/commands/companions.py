"""companions: solve for the companion space of a right pseudoautomorphism.

The identity map has the right nucleus as its companions; conjugation by a
seeded q has the line through q^3 (for the octonions).
"""
from fractions import Fraction

import numpy as np

from loopforge.commands.run_config import CompanionMap, RunConfig
from loopforge.constants import EXIT_FAILURE, EXIT_OK
from loopforge.logging_config import get_logger
from loopforge.reports.models import CompanionReport
from loopforge.reports.writer import write_json
from loopforge.services import numerics
from loopforge.services.algebra import get_algebra
from loopforge.services.loops import nucleus_basis
from loopforge.services.pseudoauto import companions_of, identity_pair, moufang_pair

logger = get_logger(__name__)


def _cell(v) -> str:
    if isinstance(v, Fraction):
        return str(v)
    return f"{float(v):.12g}"


def companion_report(config: RunConfig) -> CompanionReport:
    run = config.run
    alg = get_algebra(run.algebra, run.mode)
    if config.companions.map == CompanionMap.IDENTITY:
        pair = identity_pair(alg)
    else:
        pair = moufang_pair(alg, alg.random(config.rng(3)))
    basis = companions_of(alg, pair.alpha)
    expected = alg.coerce(pair.companion)
    contains = basis.shape[0] > 0 and (
        numerics.rank(np.vstack([basis, expected[None]])) == numerics.rank(basis))
    nucleus = nucleus_basis(alg)
    logger.info(f"{config.companions.map.value} on {alg.tag.value}: {basis.shape[0]}-dimensional "
                f"companion space (nucleus {nucleus.shape[0]})",
                extra={"algebra": alg.tag.value, "command": "companions"})
    return CompanionReport(
        algebra=alg.tag.value,
        mode=alg.mode.value,
        map=config.companions.map.value,
        dimension=int(basis.shape[0]),
        nucleus_dimension=int(nucleus.shape[0]),
        basis=[[_cell(v) for v in row] for row in basis],
        expected_companion=[_cell(v) for v in expected],
        contains_expected=bool(contains),
    )


def run_companions(config: RunConfig) -> int:
    """Exit 0 when the map's own companion lies in the solved space."""
    report = companion_report(config)
    write_json(report, config.output.path)
    return EXIT_OK if report.contains_expected else EXIT_FAILURE
