"""cs: the Chern-Simons type functional on T^3 with its first variation.

The report carries the functional value, the relative gap between the
numeric and the predicted first variation along a random direction, the
relative gauge defect, and the critical-point diagnostics of the fields.
"""
from loopforge.commands.run_config import RunConfig
from loopforge.constants import EXIT_FAILURE, EXIT_OK, TOL_GAUGE, TOL_VARIATION
from loopforge.errors import ConfigError
from loopforge.logging_config import get_logger
from loopforge.reports.models import FunctionalReport
from loopforge.reports.writer import write_json
from loopforge.services.fields import FormField, TrigField
from loopforge.services.pseudoauto import get_palgebra
from loopforge.services.variational import (
    critical_detect,
    cs_functional,
    cs_gauge_residual,
    cs_variation_check,
)

logger = get_logger(__name__)


def cs_report(config: RunConfig) -> FunctionalReport:
    if config.domain.dimension != 3:
        raise ConfigError(f"cs needs [domain] dimension = 3, got {config.domain.dimension}")
    palg = get_palgebra(config.run.algebra)
    alg = palg.algebra
    domain = config.field_domain
    s_field, a_field = config.bundle_fields(palg, domain)
    rng = config.rng(2)
    xi_form = FormField.random(rng, 3, alg.imag_dim)
    u_field = TrigField.random(rng, 3, palg.dim)
    points = domain.sample_points(rng, config.domain.points)

    value = cs_functional(palg, s_field, a_field, domain)
    numeric, predicted, gap = cs_variation_check(palg, s_field, a_field, xi_form, domain)
    logger.debug(f"First variation numeric={numeric:.12g} predicted={predicted:.12g}",
                 extra={"command": "cs", "residual": gap})
    critical = critical_detect(palg, s_field, a_field, domain)
    return FunctionalReport(
        name="chern-simons",
        value=value,
        variation_residual=gap,
        gauge_residual=cs_gauge_residual(palg, s_field, a_field, u_field, points),
        fhat_norm=critical.fhat_norm,
        divergence_norm=critical.divergence_norm,
        associator_norm=critical.associator_norm,
    )


def run_cs(config: RunConfig) -> int:
    """Exit 0 when the first variation and the gauge defect are within tolerance."""
    report = cs_report(config)
    write_json(report, config.output.path)
    variation_tol = config.tolerances.get("cs-first-variation", config.tol or TOL_VARIATION)
    gauge_tol = config.tolerances.get("cs-gauge-invariance", config.tol or TOL_GAUGE)
    ok = report.variation_residual <= variation_tol and report.gauge_residual <= gauge_tol
    logger.info(f"CS value {report.value:.12g}; variation gap {report.variation_residual:.3e}; "
                f"gauge defect {report.gauge_residual:.3e}", extra={"command": "cs"})
    return EXIT_OK if ok else EXIT_FAILURE
