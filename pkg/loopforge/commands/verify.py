"""verify: run the registered identity suites and write a JSON report."""
from typing import Optional

from loopforge.commands.run_config import RunConfig
from loopforge.constants import EXIT_FAILURE, EXIT_OK
from loopforge.logging_config import get_logger
from loopforge.reports.models import SuiteReport
from loopforge.reports.writer import write_json
from loopforge.services.algebra import CompositionAlgebra
from loopforge.services.suites import SuiteContext, run_suites

logger = get_logger(__name__)


def build_report(config: RunConfig, algebra: Optional[CompositionAlgebra] = None) -> SuiteReport:
    """Run the configured suites.

    Args:
        config: validated run configuration
        algebra: replacement algebra for the algebraic suites (corrupted tables)
    """
    run = config.run
    ctx = SuiteContext(
        tag=run.algebra,
        mode=run.mode,
        samples=run.samples,
        points=config.domain.points,
        dimension=config.domain.dimension,
        grid=config.domain.grid,
        algebra=algebra,
    )
    logger.info(f"Verifying {run.algebra.value} in {run.mode.value} mode with seed {run.seed}",
                extra={"algebra": run.algebra.value, "command": "verify"})
    entries = config.apply_tolerances(run_suites(run.suites, ctx, run.seed))
    return SuiteReport(command="verify", algebra=run.algebra.value, mode=run.mode.value,
                       seed=run.seed, entries=entries)


def run_verify(config: RunConfig, algebra: Optional[CompositionAlgebra] = None) -> int:
    """Write the report; exit 0 iff every gated identity passed."""
    report = build_report(config, algebra)
    write_json(report, config.output.path)
    for name in report.failed:
        logger.error(f"Identity failed: {name}", extra={"identity": name, "command": "verify"})
    logger.info(f"{len(report.entries) - len(report.failed)}/{len(report.entries)} identities passed")
    return EXIT_OK if report.passed else EXIT_FAILURE
