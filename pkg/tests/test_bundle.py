"""Tests for torsion, curvature and the structure equation on trivialized bundles."""
import numpy as np
import pytest

from loopforge.constants import TOL_FIELD, TOL_GAUGE, TOL_VARIATION
from loopforge.services import numerics
from loopforge.services.algebra import imag
from loopforge.services.bundle import (
    CURVATURE_SIGN,
    TrivializedBundle,
    calibrate_curvature_sign,
    deformation_rates,
    deformation_step,
    field_suite,
    g2_torsion_fit,
    gauge_transform,
    grid_convergence,
    kernel_connection,
    left_translate,
    random_bundle_fields,
    swap,
    zero_connection,
)
from loopforge.services.fields import (
    ConstantField,
    FormField,
    TorusDomain,
    TrigField,
    one_parameter_field,
    random_loop_field,
)


@pytest.fixture
def points(rng, torus):
    return torus.sample_points(rng, 24)


@pytest.fixture
def bundle(palg_o, octonion_fields, points):
    s_field, a_field = octonion_fields
    return TrivializedBundle.from_fields(palg_o, s_field, a_field, points)


class TestStructureEquation:
    """Pointwise identities on random analytic fields."""

    def test_structure_equation(self, bundle):
        assert np.max(bundle.structural_residual()) < TOL_FIELD

    def test_bianchi_identity(self, bundle):
        assert np.max(bundle.bianchi_residual()) < TOL_FIELD

    def test_horizontal_phi_derivative(self, bundle):
        lhs, rhs = bundle.horizontal_phi_derivative()
        assert numerics.max_abs(lhs - rhs) < TOL_FIELD

    def test_structure_equation_other_algebras(self, palg, rng, torus):
        s_field, a_field = random_bundle_fields(palg, rng, torus)
        bundle = TrivializedBundle.from_fields(palg, s_field, a_field, torus.sample_points(rng, 10))
        assert np.max(bundle.structural_residual()) < TOL_FIELD

    def test_curvature_sign_is_calibrated(self, palg_o, octonion_fields, points):
        """Only the configured sign of [A, A] satisfies the structure equation."""
        sign, residuals = calibrate_curvature_sign(palg_o, *octonion_fields, points)
        assert sign == CURVATURE_SIGN
        assert residuals[CURVATURE_SIGN] < TOL_FIELD
        assert residuals[-CURVATURE_SIGN] > 1e-3

    def test_bianchi_vanishes_below_three_dimensions(self, palg_o, rng):
        domain = TorusDomain(dimension=2, grid=8)
        s_field, a_field = random_bundle_fields(palg_o, rng, domain)
        flat = TrivializedBundle.from_fields(palg_o, s_field, a_field, domain.sample_points(rng, 4))
        assert np.all(flat.bianchi_residual() == 0)


class TestSpecialConfigurations:
    """Closed-form configurations."""

    def test_one_parameter_darboux(self, palg_o, rng, points):
        xi = rng.standard_normal(7)
        line = TrivializedBundle.from_fields(palg_o, one_parameter_field(palg_o.algebra, 3, xi),
                                             zero_connection(3, palg_o), points)
        expected = np.zeros((3, 7))
        expected[0] = xi
        assert numerics.max_abs(imag(line.theta_value) - expected) < TOL_FIELD

    def test_trivial_configuration_has_no_torsion(self, palg_o, points):
        flat = TrivializedBundle.from_fields(palg_o, ConstantField(palg_o.algebra.one()),
                                             zero_connection(3, palg_o), points)
        assert numerics.max_abs(flat.torsion_value) == 0
        assert numerics.max_abs(flat.fhat_value) == 0

    def test_abelian_fhat_is_exterior_derivative(self, palg_c, rng, torus, points):
        s_field, a_field = random_bundle_fields(palg_c, rng, torus)
        bundle = TrivializedBundle.from_fields(palg_c, s_field, a_field, points)
        t = bundle.torsion
        assert numerics.max_abs(bundle.fhat_value - (t.grad - swap(t.grad))) < TOL_FIELD

    def test_kernel_connection_is_invisible(self, palg_o, points):
        kernel = TrivializedBundle.from_fields(palg_o, ConstantField(palg_o.algebra.one()),
                                               kernel_connection(palg_o, 3), points)
        assert numerics.max_abs(kernel.fhat_value) < 1e-10
        assert numerics.max_abs(kernel.curvature_value) > 1e-3

    def test_g2_torsion_contraction(self, palg_o, bundle):
        c, residual = g2_torsion_fit(palg_o, bundle.torsion_value.reshape(-1, 7)[:20])
        assert abs(abs(c) - 1.0) < 1e-10
        assert residual < 1e-10


class TestTransformations:
    """Gauge changes, left translation and deformations of the section."""

    def test_gauge_equivariance(self, palg_o, octonion_fields, rng, points, single_thread):
        s_field, a_field = octonion_fields
        gauge = gauge_transform(palg_o, s_field, a_field, TrigField.random(rng, 3, palg_o.dim), points[:4])
        assert np.max(gauge.torsion_residual()) < TOL_GAUGE
        assert np.max(gauge.fhat_residual()) < TOL_GAUGE
        assert np.max(gauge.curvature_residual()) < TOL_GAUGE

    def test_left_translation(self, palg_o, octonion_fields, rng, points):
        s_field, a_field = octonion_fields
        factor = random_loop_field(rng, palg_o.algebra, 3)
        t_res, f_res = left_translate(palg_o, s_field, a_field, factor, points)
        assert np.max(t_res) < TOL_GAUGE
        assert np.max(f_res) < TOL_GAUGE

    def test_deformation_rates(self, palg_o, octonion_fields, rng, points):
        s_field, a_field = octonion_fields
        rates = deformation_rates(palg_o, s_field, a_field, TrigField.random(rng, 3, 7), points[:4])
        assert max(rates.values()) < TOL_VARIATION

    def test_deformation_step_keeps_unit_norm(self, float_octonions, rng):
        s = float_octonions.random(rng, 10, unit=True)
        moved, drift = deformation_step(float_octonions, s, rng.standard_normal((10, 7)), 0.1)
        assert np.allclose(np.linalg.norm(moved, axis=-1), 1.0)
        assert drift < 1e-12

    def test_constant_connection_curvature_is_bracket(self, palg_o, points):
        values = np.zeros((3, palg_o.dim))
        values[0, 0], values[1, 1] = 1.0, 1.0
        bundle = TrivializedBundle.from_fields(palg_o, ConstantField(palg_o.algebra.one()),
                                               FormField.constant(values), points)
        expected = palg_o.bracket(values[0], values[1])
        assert np.allclose(bundle.curvature_value[:, 0, 1], expected)


class TestSuite:

    @pytest.mark.slow
    def test_grid_order(self, palg_o, rng):
        s2, a2 = random_bundle_fields(palg_o, rng, TorusDomain(dimension=2), max_frequency=1, amplitude=0.3)
        result = grid_convergence(palg_o, s2, a2, dimension=2)
        assert result["orders"][-1] > 1.9

    @pytest.mark.slow
    def test_field_suite_passes(self, palg_o, rng, single_thread):
        entries = field_suite(palg_o, rng, TorusDomain(dimension=3, grid=8), points=10)
        failed = [e.identity for e in entries if not e.passed and not e.report_only]
        assert failed == []
