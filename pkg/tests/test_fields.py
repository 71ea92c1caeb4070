"""Tests for jets, trigonometric fields and periodic grids."""
import numpy as np
import pytest

from loopforge.errors import AlgebraError
from loopforge.services import numerics
from loopforge.services.fields import (
    ExpField,
    GridField,
    TorusDomain,
    TrigField,
    jet_mul,
    jet_rdiv,
)


class TestTorusDomain:

    def test_dimension_range(self):
        with pytest.raises(AlgebraError):
            TorusDomain(dimension=4)

    def test_grid_points_layout(self):
        pts = TorusDomain(dimension=2, grid=4).grid_points()
        assert pts.shape == (16, 2)
        assert np.allclose(pts[1], [0.0, np.pi / 2])

    def test_sample_points_in_period(self, rng, torus):
        pts = torus.sample_points(rng, 50)
        assert pts.shape == (50, 3)
        assert np.all((pts >= 0) & (pts < 2 * np.pi))


class TestJets:
    """Analytic jets against finite differences."""

    def test_trig_gradient(self, rng, torus):
        field = TrigField.random(rng, 3, 4)
        p = torus.sample_points(rng, 1)[0]
        jet = field.jet(p[None])
        for i in range(3):
            e = np.eye(3)[i]
            fd = numerics.fd_derivative(lambda t: field(p[None] + t * e)[0], 0.0).value
            assert np.allclose(jet.grad[0, i], fd, atol=1e-9)

    def test_trig_hessian_symmetric(self, rng, torus):
        jet = TrigField.random(rng, 3, 2).jet(torus.sample_points(rng, 5))
        assert np.allclose(jet.hess, np.swapaxes(jet.hess, 1, 2))

    def test_exp_field_is_unit(self, rng, float_octonions, torus):
        field = ExpField(TrigField.random(rng, 3, 7))
        value = field(float_octonions, torus.sample_points(rng, 20))
        assert np.allclose(float_octonions.norm2(value), 1.0)

    def test_exp_gradient(self, rng, float_octonions, torus):
        field = ExpField(TrigField.random(rng, 3, 7, amplitude=1.5))
        p = torus.sample_points(rng, 1)
        jet = field.jet(float_octonions, p)
        e = np.eye(3)[1]
        fd = numerics.fd_derivative(lambda t: field(float_octonions, p + t * e)[0], 0.0).value
        assert np.allclose(jet.grad[0, 1], fd, atol=1e-8)

    def test_quotient_rule(self, rng, float_octonions, torus):
        """(x y) / y recovers x together with its derivative."""
        pts = torus.sample_points(rng, 6)
        x = ExpField(TrigField.random(rng, 3, 7)).jet(float_octonions, pts)
        y = ExpField(TrigField.random(rng, 3, 7)).jet(float_octonions, pts)
        back = jet_rdiv(float_octonions, jet_mul(float_octonions, x, y), y)
        assert np.allclose(back.value, x.value, atol=1e-12)
        assert np.allclose(back.grad, x.grad, atol=1e-12)


class TestGrid:
    """Periodic central differences."""

    def test_second_order_convergence(self):
        errors = []
        for n in (16, 32):
            domain = TorusDomain(dimension=1, grid=n)
            x = domain.grid_points()
            grid = GridField(np.sin(x), domain)
            errors.append(numerics.max_abs(grid.derivative(0) - np.cos(x)))
        assert errors[1] < 1e-2
        assert np.log2(errors[0] / errors[1]) == pytest.approx(2.0, abs=0.1)

    def test_grid_jet_flattening(self):
        domain = TorusDomain(dimension=2, grid=8)
        values = np.random.default_rng(0).standard_normal((8, 8, 3))
        jet = GridField(values, domain).jet(order=1)
        assert jet.value.shape == (64, 3)
        assert jet.grad.shape == (64, 2, 3)
        assert np.array_equal(jet.value[9], values[1, 1])
