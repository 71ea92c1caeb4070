"""Fields over flat tori and their jets.

A ``Jet`` carries values and exact first (and optionally second) partial
derivatives at a batch of points. Arrays are laid out as

    value (P, *B, c)    grad (P, d, *B, c)    hess (P, d, d, *B, c)

where P indexes points, d is the torus dimension, B any batch axes (form
indices, basis indices) and c the coordinate axis. Products follow the
Leibniz rule; quotients differentiate the defining linear equation.
"""
from abc import ABC, abstractmethod
from dataclasses import dataclass
from itertools import product
from typing import Callable, Optional

import numpy as np

from loopforge.constants import DEFAULT_AMPLITUDE, DEFAULT_MAX_FREQUENCY, DEFAULT_SAMPLE_POINTS
from loopforge.errors import AlgebraError
from loopforge.services.algebra import CompositionAlgebra

PERIOD = 2.0 * np.pi
FD_FIELD_STEP = 1e-3
SERIES_CUT = 1.0
SERIES_TERMS = 12


@dataclass
class Jet:
    """Values with first and optional second derivatives at P points."""

    value: np.ndarray
    grad: np.ndarray
    hess: Optional[np.ndarray] = None

    @property
    def dim(self) -> int:
        return self.grad.shape[1]

    def __add__(self, other: "Jet") -> "Jet":
        return Jet(self.value + other.value, self.grad + other.grad,
                   None if self.hess is None or other.hess is None else self.hess + other.hess)

    def __sub__(self, other: "Jet") -> "Jet":
        return self + other.scale(-1.0)

    def scale(self, c: float) -> "Jet":
        return Jet(c * self.value, c * self.grad, None if self.hess is None else c * self.hess)

    def unsqueeze(self, pos: int) -> "Jet":
        """Insert a batch axis at position ``pos`` of B."""
        return Jet(np.expand_dims(self.value, 1 + pos), np.expand_dims(self.grad, 2 + pos),
                   None if self.hess is None else np.expand_dims(self.hess, 3 + pos))

    def linear(self, fn: Callable[[np.ndarray], np.ndarray]) -> "Jet":
        """Apply a linear map acting on trailing axes."""
        return Jet(fn(self.value), fn(self.grad), None if self.hess is None else fn(self.hess))

    def take(self, index) -> "Jet":
        """Select along the first batch axis."""
        return Jet(self.value[:, index], self.grad[:, :, index],
                   None if self.hess is None else self.hess[:, :, :, index])

    def first_order(self) -> "Jet":
        return Jet(self.value, self.grad)


def bilinear(a: Jet, b: Jet, fn: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> Jet:
    """Jet of fn(a, b) for fn bilinear and broadcasting over leading axes."""
    value = fn(a.value, b.value)
    grad = fn(a.grad, b.value[:, None]) + fn(a.value[:, None], b.grad)
    hess = None
    if a.hess is not None and b.hess is not None:
        hess = (fn(a.hess, b.value[:, None, None]) + fn(a.grad[:, :, None], b.grad[:, None, :])
                + fn(a.grad[:, None, :], b.grad[:, :, None]) + fn(a.value[:, None, None], b.hess))
    return Jet(value, grad, hess)


def jet_mul(alg: CompositionAlgebra, a: Jet, b: Jet) -> Jet:
    return bilinear(a, b, alg.mul)


def jet_rdiv(alg: CompositionAlgebra, x: Jet, y: Jet) -> Jet:
    """Jet of q = x / y from (q y) = x."""
    q = alg.rdiv(x.value, y.value)
    yv = y.value[:, None]
    qi = alg.rdiv(x.grad - alg.mul(q[:, None], y.grad), yv)
    hess = None
    if x.hess is not None and y.hess is not None:
        rhs = (x.hess - alg.mul(qi[:, :, None], y.grad[:, None, :])
               - alg.mul(qi[:, None, :], y.grad[:, :, None]) - alg.mul(q[:, None, None], y.hess))
        hess = alg.rdiv(rhs, y.value[:, None, None])
    return Jet(q, qi, hess)


def jet_ldiv(alg: CompositionAlgebra, x: Jet, y: Jet) -> Jet:
    """Jet of q = x \\ y from (x q) = y."""
    q = alg.ldiv(x.value, y.value)
    xv = x.value[:, None]
    qi = alg.ldiv(xv, y.grad - alg.mul(x.grad, q[:, None]))
    hess = None
    if x.hess is not None and y.hess is not None:
        rhs = (y.hess - alg.mul(x.hess, q[:, None, None])
               - alg.mul(x.grad[:, :, None], qi[:, None, :]) - alg.mul(x.grad[:, None, :], qi[:, :, None]))
        hess = alg.ldiv(x.value[:, None, None], rhs)
    return Jet(q, qi, hess)


def jet_embed(j: Jet) -> Jet:
    """Tangent coordinates to algebra values."""
    def pad(a):
        return np.concatenate([np.zeros(a.shape[:-1] + (1,)), a], axis=-1)
    return j.linear(pad)


def jet_imag(j: Jet) -> Jet:
    return j.linear(lambda a: a[..., 1:])


def constant_jet(values: np.ndarray, points: int, d: int, order: int = 2) -> Jet:
    """Jet of a constant, broadcast to ``points`` points."""
    v = np.broadcast_to(np.asarray(values, dtype=float), (points,) + np.shape(values)).copy()
    zeros = np.zeros((points, d) + np.shape(values))
    hess = np.zeros((points, d, d) + np.shape(values)) if order >= 2 else None
    return Jet(v, zeros, hess)


# Domain

@dataclass(frozen=True)
class TorusDomain:
    """Flat torus of dimension d with period 2 pi per axis."""

    dimension: int = 3
    grid: int = 16

    def __post_init__(self):
        if self.dimension not in (1, 2, 3):
            raise AlgebraError(f"torus dimension must be 1, 2 or 3, got {self.dimension}")

    @property
    def spacing(self) -> float:
        return PERIOD / self.grid

    @property
    def volume(self) -> float:
        return PERIOD ** self.dimension

    def grid_points(self, n: Optional[int] = None) -> np.ndarray:
        """Uniform grid flattened to (n^d, d), C order."""
        n = n or self.grid
        axis = np.arange(n) * (PERIOD / n)
        mesh = np.meshgrid(*([axis] * self.dimension), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def sample_points(self, rng: np.random.Generator, count: int = DEFAULT_SAMPLE_POINTS) -> np.ndarray:
        return rng.uniform(0.0, PERIOD, size=(count, self.dimension))


# Trigonometric fields

@dataclass
class TrigField:
    """Vector-valued trigonometric polynomial with optional linear and constant terms.

    f(x) = sum_k C_k cos(k.x) + S_k sin(k.x) + W^T x + b
    """

    waves: np.ndarray
    cos: np.ndarray
    sin: np.ndarray
    linear_term: Optional[np.ndarray] = None
    offset: Optional[np.ndarray] = None

    @property
    def dimension(self) -> int:
        return self.waves.shape[1]

    @property
    def channels(self) -> int:
        return self.cos.shape[1]

    @classmethod
    def random(cls, rng: np.random.Generator, dimension: int, channels: int,
               max_frequency: int = DEFAULT_MAX_FREQUENCY,
               amplitude: float = DEFAULT_AMPLITUDE) -> "TrigField":
        """Random coefficients scaled by amplitude / (1 + |k|^2)."""
        waves = np.array(list(product(range(-max_frequency, max_frequency + 1), repeat=dimension)),
                         dtype=float)
        weight = amplitude / (1.0 + (waves ** 2).sum(axis=1))
        cos = rng.standard_normal((len(waves), channels)) * weight[:, None]
        sin = rng.standard_normal((len(waves), channels)) * weight[:, None]
        return cls(waves, cos, sin)

    @classmethod
    def zero(cls, dimension: int, channels: int) -> "TrigField":
        return cls(np.zeros((1, dimension)), np.zeros((1, channels)), np.zeros((1, channels)))

    @classmethod
    def constant(cls, dimension: int, value: np.ndarray) -> "TrigField":
        value = np.asarray(value, dtype=float).ravel()
        field = cls.zero(dimension, value.size)
        field.offset = value
        return field

    @classmethod
    def linear(cls, dimension: int, matrix: np.ndarray) -> "TrigField":
        """f(x) = W^T x with W of shape (d, channels)."""
        matrix = np.asarray(matrix, dtype=float)
        field = cls.zero(dimension, matrix.shape[1])
        field.linear_term = matrix
        return field

    def scaled(self, c: float) -> "TrigField":
        return TrigField(self.waves, c * self.cos, c * self.sin,
                         None if self.linear_term is None else c * self.linear_term,
                         None if self.offset is None else c * self.offset)

    def __call__(self, points: np.ndarray) -> np.ndarray:
        return self.jet(points, order=0).value

    def jet(self, points: np.ndarray, order: int = 2) -> Jet:
        points = np.asarray(points, dtype=float)
        phase = points @ self.waves.T
        c, s = np.cos(phase), np.sin(phase)
        value = c @ self.cos + s @ self.sin
        if self.linear_term is not None:
            value = value + points @ self.linear_term
        if self.offset is not None:
            value = value + self.offset
        grad = (np.einsum("pk,ki,kc->pic", -s, self.waves, self.cos)
                + np.einsum("pk,ki,kc->pic", c, self.waves, self.sin))
        if self.linear_term is not None:
            grad = grad + self.linear_term[None]
        hess = None
        if order >= 2:
            hess = -(np.einsum("pk,ki,kj,kc->pijc", c, self.waves, self.waves, self.cos)
                     + np.einsum("pk,ki,kj,kc->pijc", s, self.waves, self.waves, self.sin))
        return Jet(value, grad, hess)


# Exponential of a tangent-valued jet

def _series(q: np.ndarray, coeff) -> np.ndarray:
    out = np.zeros_like(q)
    for n in range(SERIES_TERMS - 1, -1, -1):
        out = out * q + coeff(n)
    return out


def _fact(n: int) -> float:
    return float(np.prod(np.arange(1, n + 1))) if n > 0 else 1.0


def exp_coefficients(q: np.ndarray):
    """c(q) = cos sqrt(q), S(q) = sin sqrt(q) / sqrt(q) and their first two q-derivatives."""
    q = np.asarray(q, dtype=float)
    small = q < SERIES_CUT
    qs = np.where(small, 0.5, q)
    r = np.sqrt(qs)
    c = np.cos(r)
    S = np.sin(r) / r
    c1 = -S / 2
    S1 = (c - S) / (2 * qs)
    c2 = -S1 / 2
    S2 = (c1 - S1) / (2 * qs) - S1 / qs

    sc = _series(q, lambda n: (-1) ** n / _fact(2 * n))
    sS = _series(q, lambda n: (-1) ** n / _fact(2 * n + 1))
    sS1 = _series(q, lambda n: (-1) ** (n + 1) * (n + 1) / _fact(2 * n + 3))
    sS2 = _series(q, lambda n: (-1) ** n * (n + 2) * (n + 1) / _fact(2 * n + 5))
    c = np.where(small, sc, c)
    S = np.where(small, sS, S)
    S1 = np.where(small, sS1, S1)
    S2 = np.where(small, sS2, S2)
    return c, S, -S / 2, S1, -S1 / 2, S2


def exp_jet(sigma: Jet) -> Jet:
    """Jet of exp(sigma) = c(|sigma|^2) + S(|sigma|^2) sigma for tangent-valued sigma."""
    x, xi = sigma.value, sigma.grad
    q = (x * x).sum(-1)
    qi = 2.0 * (x[:, None] * xi).sum(-1)
    c, S, c1, S1, c2, S2 = exp_coefficients(q)

    def alg(real, im):
        return np.concatenate([real[..., None], im], axis=-1)

    value = alg(c, S[..., None] * x)
    grad = alg(c1[:, None] * qi,
               (S1[:, None] * qi)[..., None] * x[:, None] + S[:, None, None] * xi)
    hess = None
    if sigma.hess is not None:
        xij = sigma.hess
        qij = 2.0 * ((xi[:, :, None] * xi[:, None, :]).sum(-1) + (x[:, None, None] * xij).sum(-1))
        qq = qi[:, :, None] * qi[:, None, :]
        real = c2[:, None, None] * qq + c1[:, None, None] * qij
        im = ((S2[:, None, None] * qq + S1[:, None, None] * qij)[..., None] * x[:, None, None]
              + S1[:, None, None, None] * (qi[:, :, None, None] * xi[:, None, :]
                                           + qi[:, None, :, None] * xi[:, :, None])
              + S[:, None, None, None] * xij)
        hess = alg(real, im)
    return Jet(value, grad, hess)


# Loop-valued fields

class LoopField(ABC):
    """A map from the torus to the unit sphere of an algebra."""

    @abstractmethod
    def jet(self, alg: CompositionAlgebra, points: np.ndarray, order: int = 2) -> Jet:
        ...

    def __call__(self, alg: CompositionAlgebra, points: np.ndarray) -> np.ndarray:
        return self.jet(alg, points, order=1).value


@dataclass
class ConstantField(LoopField):
    value: np.ndarray

    def jet(self, alg, points, order=2):
        points = np.asarray(points)
        return constant_jet(self.value, points.shape[0], points.shape[1], order)


@dataclass
class ExpField(LoopField):
    """s(x) = exp(sigma(x)) for a tangent-valued trigonometric field sigma."""

    sigma: TrigField

    def jet(self, alg, points, order=2):
        if self.sigma.channels != alg.imag_dim:
            raise AlgebraError(f"exponent has {self.sigma.channels} channels, "
                               f"expected {alg.imag_dim}")
        return exp_jet(self.sigma.jet(points, order))


@dataclass
class ProductField(LoopField):
    """s(x) = left(x) right(x)."""

    left: LoopField
    right: LoopField

    def jet(self, alg, points, order=2):
        return jet_mul(alg, self.left.jet(alg, points, order), self.right.jet(alg, points, order))


@dataclass
class SampledField:
    """A field known only through point evaluation; jets by Richardson central differences."""

    fn: Callable[[np.ndarray], np.ndarray]
    step: float = FD_FIELD_STEP

    def jet(self, alg, points, order=1) -> Jet:
        points = np.asarray(points, dtype=float)
        value = self.fn(points)
        d = points.shape[1]
        grads = []
        for i in range(d):
            e = np.zeros(d)
            e[i] = 1.0

            def diff(h):
                return (self.fn(points + h * e) - self.fn(points - h * e)) / (2 * h)

            coarse, fine = diff(self.step), diff(self.step / 2)
            grads.append(fine + (fine - coarse) / 3.0)
        return Jet(value, np.stack(grads, axis=1))

    def __call__(self, alg, points):
        return self.fn(np.asarray(points, dtype=float))


def random_loop_field(rng: np.random.Generator, alg: CompositionAlgebra, dimension: int,
                      max_frequency: int = DEFAULT_MAX_FREQUENCY,
                      amplitude: float = DEFAULT_AMPLITUDE) -> ExpField:
    return ExpField(TrigField.random(rng, dimension, alg.imag_dim, max_frequency, amplitude))


def one_parameter_field(alg: CompositionAlgebra, dimension: int, xi: np.ndarray,
                        axis: int = 0) -> ExpField:
    """s(x) = exp(x_axis xi), whose Darboux derivative is constant."""
    w = np.zeros((dimension, alg.imag_dim))
    w[axis] = xi
    return ExpField(TrigField.linear(dimension, w))


# Connections and other form-valued fields

@dataclass
class FormField:
    """A 1-form with values in R^m: A_i(x) for i < d, backed by a single trig field."""

    trig: TrigField
    width: int

    @classmethod
    def random(cls, rng, dimension: int, width: int, max_frequency: int = DEFAULT_MAX_FREQUENCY,
               amplitude: float = DEFAULT_AMPLITUDE) -> "FormField":
        return cls(TrigField.random(rng, dimension, dimension * width, max_frequency, amplitude), width)

    @classmethod
    def zero(cls, dimension: int, width: int) -> "FormField":
        return cls(TrigField.zero(dimension, dimension * width), width)

    @classmethod
    def constant(cls, values: np.ndarray) -> "FormField":
        """Constant form from an array (d, m)."""
        values = np.asarray(values, dtype=float)
        return cls(TrigField.constant(values.shape[0], values), values.shape[1])

    def scaled(self, c: float) -> "FormField":
        return FormField(self.trig.scaled(c), self.width)

    def jet(self, points: np.ndarray, order: int = 2) -> Jet:
        """value (P, d, m), grad (P, d_j, d_i, m) = d_j A_i, hess (P, d_j, d_l, d_i, m)."""
        j = self.trig.jet(points, order)
        d = self.trig.dimension
        shape = (d, self.width)
        return Jet(j.value.reshape(j.value.shape[:1] + shape),
                   j.grad.reshape(j.grad.shape[:2] + shape),
                   None if j.hess is None else j.hess.reshape(j.hess.shape[:3] + shape))


@dataclass
class SampledForm:
    """A 1-form known through evaluation (P, d) -> (P, d, m); jets by differences."""

    fn: Callable[[np.ndarray], np.ndarray]
    step: float = FD_FIELD_STEP

    def jet(self, points: np.ndarray, order: int = 1) -> Jet:
        return SampledField(self.fn, self.step).jet(None, points)


# Grid fields

def grid_shape(domain: TorusDomain, n: Optional[int] = None) -> tuple:
    return ((n or domain.grid),) * domain.dimension


def central_difference(values: np.ndarray, axis: int, h: float) -> np.ndarray:
    """Periodic O(h^2) central difference along a grid axis."""
    return (np.roll(values, -1, axis=axis) - np.roll(values, 1, axis=axis)) / (2.0 * h)


@dataclass
class GridField:
    """Samples on the periodic N^d grid, shape (N,)*d + (c,)."""

    values: np.ndarray
    domain: TorusDomain

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def h(self) -> float:
        return PERIOD / self.n

    def derivative(self, axis: int) -> np.ndarray:
        return central_difference(self.values, axis, self.h)

    def gradient(self, values: Optional[np.ndarray] = None) -> np.ndarray:
        """Stacked derivatives, shape (N,)*d + (d,) + tail."""
        values = self.values if values is None else values
        d = self.domain.dimension
        return np.stack([central_difference(values, i, self.h) for i in range(d)], axis=d)

    def jet(self, order: int = 2) -> Jet:
        """Grid jet with points flattened in C order (matching ``grid_points``)."""
        d = self.domain.dimension
        grad = self.gradient()
        hess = self.gradient(grad) if order >= 2 else None
        count = self.n ** d
        return Jet(self.values.reshape((count,) + self.values.shape[d:]),
                   grad.reshape((count,) + grad.shape[d:]),
                   None if hess is None else hess.reshape((count,) + hess.shape[d:]))

    @classmethod
    def sample_loop(cls, field: LoopField, alg: CompositionAlgebra, domain: TorusDomain,
                    n: Optional[int] = None) -> "GridField":
        pts = domain.grid_points(n)
        return cls(field(alg, pts).reshape(grid_shape(domain, n) + (alg.dim,)), domain)

    @classmethod
    def sample_form(cls, form: FormField, domain: TorusDomain, n: Optional[int] = None) -> "GridField":
        pts = domain.grid_points(n)
        vals = form.jet(pts, order=1).value
        return cls(vals.reshape(grid_shape(domain, n) + vals.shape[1:]), domain)
