"""Tests for exact linear algebra and the Richardson finite differences."""
from fractions import Fraction

import numpy as np
import pytest
from pydantic import ValidationError

from loopforge.constants import MIN_FD_ORDER
from loopforge.errors import AlgebraError, NumericsError
from loopforge.services import numerics
from loopforge.services.numerics import DiffConfig, fd_derivative


class TestExactLinearAlgebra:
    """Row reduction and solving over the rationals."""

    def test_nullspace_of_rank_one_matrix(self):
        m = numerics.to_exact([[1, 2], [2, 4]])
        basis = numerics.nullspace(m)
        assert basis.shape == (1, 2)
        assert list(basis[0]) == [Fraction(-2), Fraction(1)]

    def test_full_rank_has_empty_nullspace(self):
        basis = numerics.nullspace(numerics.to_exact(np.eye(3, dtype=int)))
        assert basis.shape == (0, 3)
        assert numerics.rank(numerics.to_exact(np.eye(3, dtype=int))) == 3

    def test_solve_is_exact(self):
        a = numerics.to_exact([[2, 1], [1, 3]])
        b = numerics.to_exact([1, 2])
        x = numerics.solve(a, b)
        assert list(x) == [Fraction(1, 5), Fraction(3, 5)]

    def test_singular_system_raises(self):
        a = numerics.to_exact([[1, 2], [2, 4]])
        with pytest.raises(AlgebraError):
            numerics.solve(a, numerics.to_exact([1, 0]))

    def test_exact_inverse(self):
        a = numerics.to_exact([[1, 2], [3, 4]])
        inv = numerics.inverse(a)
        product = a @ inv
        assert numerics.max_abs(product - numerics.to_exact(np.eye(2, dtype=int))) == 0

    def test_random_rational_bounds(self, rng):
        samples = numerics.random_nonzero_rational(rng, (200, 4))
        assert all(isinstance(v, Fraction) for v in samples.flat)
        assert all(abs(v) <= 9 for v in samples.flat)
        assert all(any(v != 0 for v in row) for row in samples)


class TestMatrixExponential:
    """scipy-backed matrix exponential."""

    def test_rotation_generator(self):
        t = 0.7
        m = np.array([[0.0, -t], [t, 0.0]])
        expected = np.array([[np.cos(t), -np.sin(t)], [np.sin(t), np.cos(t)]])
        assert np.allclose(numerics.mat_exp(m), expected, atol=1e-14)

    def test_non_square_rejected(self):
        with pytest.raises(AlgebraError):
            numerics.mat_exp(np.zeros((2, 3)))


class TestFiniteDifferences:
    """Central differences with Richardson extrapolation."""

    def test_first_derivative_of_sine(self):
        result = fd_derivative(np.sin, 0.3)
        assert abs(result.value - np.cos(0.3)) < 1e-10
        assert result.order >= MIN_FD_ORDER

    def test_vector_valued(self):
        result = fd_derivative(lambda t: np.array([t ** 2, np.exp(t)]), 1.0)
        assert np.allclose(result.value, [2.0, np.e], atol=1e-9)

    def test_mixed_second_derivative(self):
        result = fd_derivative(lambda t, u: np.sin(t) * np.cos(2 * u) + t * u, 0.0, order=2)
        assert abs(result.value - 1.0) < 1e-8

    def test_non_finite_sample_raises(self):
        with pytest.raises(NumericsError):
            fd_derivative(lambda t: np.inf * t, 0.0)

    def test_unsupported_order(self):
        with pytest.raises(NumericsError):
            fd_derivative(np.sin, 0.0, order=4)

    def test_config_validation(self):
        with pytest.raises(ValidationError):
            DiffConfig(h=0.0)
        with pytest.raises(ValidationError):
            DiffConfig(levels=2, unknown=1)
