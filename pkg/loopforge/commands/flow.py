"""flow: steepest descent of the torsion energy on a grid.

Writes one CSV row per accepted iteration to ``[output] path`` and the final
``FlowSummary`` as JSON to ``[output] summary``.
"""
from loopforge.commands.run_config import RunConfig
from loopforge.constants import EXIT_FAILURE, EXIT_OK
from loopforge.logging_config import get_logger
from loopforge.reports.models import FlowRecord, FlowSummary
from loopforge.reports.writer import write_csv, write_json
from loopforge.services.pseudoauto import get_palgebra
from loopforge.services.variational import FlowState, energy_flow, flow_summary

logger = get_logger(__name__)

FLOW_COLUMNS = list(FlowRecord.model_fields)


def flow_run(config: RunConfig):
    """Run the flow from the configured fields.

    Returns:
        (records, summary)
    """
    palg = get_palgebra(config.run.algebra)
    domain = config.flow_domain
    s_field, a_field = config.bundle_fields(palg, domain)
    state = FlowState.sample(palg, s_field, a_field, domain, config.flow.initial_step)
    logger.info(f"Flow on {palg.algebra.tag.value}, grid {domain.grid}^{domain.dimension}",
                extra={"algebra": palg.algebra.tag.value, "command": "flow"})
    state, records = energy_flow(palg, state, config.flow.metric, config.flow.max_iterations,
                                 config.flow.tolerance)
    return records, flow_summary(palg, state, config.flow.metric)


def run_flow(config: RunConfig) -> int:
    """Exit 0 when the flow converged with a monotone energy."""
    records, summary = flow_run(config)
    write_csv(FLOW_COLUMNS, [[getattr(r, c) for c in FLOW_COLUMNS] for r in records], config.output.path)
    if config.output.summary is not None:
        write_json(summary, config.output.summary)
    _log_summary(summary)
    return EXIT_OK if summary.converged and summary.monotone else EXIT_FAILURE


def _log_summary(summary: FlowSummary) -> None:
    if summary.line_search_failed:
        logger.warning("Flow stopped on a failed line search", extra={"command": "flow"})
    logger.info(f"Flow summary: iterations={summary.iterations} converged={summary.converged} "
                f"E={summary.energy:.6e} |div|={summary.divergence:.3e}",
                extra={"command": "flow", "iteration": summary.iterations})
