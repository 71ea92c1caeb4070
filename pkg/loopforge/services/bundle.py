"""Trivialized loop bundles over flat tori.

A section s: M -> L (unit norm) and a p-valued connection form A_i are pulled
back along a global trivialization. With V the vector representation of p on
Im L and Phi_k = (G_k s) / s the generator fields,

    theta_i = (d_i s) / s                     Darboux derivative
    T_i     = Im theta_i + phi_s(A_i)         torsion
    F_ij    = d_i A_j - d_j A_i + [A_i, A_j]  curvature
    Fhat    = phi_s(F)
    dH T_ij = d_i T_j - d_j T_i + V(A_i) T_j - V(A_j) T_i

and the structure equation reads Fhat = dH T - [T_i, T_j]^(s).
"""
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from loopforge.constants import (
    DEFAULT_AMPLITUDE,
    DEFAULT_MAX_FREQUENCY,
    GRID_SIZES,
    MIN_FD_ORDER,
    NORM_DRIFT_WARNING,
    TOL_ALGEBRAIC,
    TOL_FIELD,
    TOL_GAUGE,
    TOL_VARIATION,
)
from loopforge.errors import AlgebraError, LoopforgeError
from loopforge.logging_config import get_logger
from loopforge.reports.models import SuiteEntry
from loopforge.services import numerics
from loopforge.services.algebra import AlgebraTag, embed, imag
from loopforge.services.fields import (
    ConstantField,
    ExpField,
    FormField,
    GridField,
    Jet,
    LoopField,
    ProductField,
    SampledField,
    SampledForm,
    TorusDomain,
    TrigField,
    bilinear,
    jet_imag,
    jet_mul,
    jet_rdiv,
    one_parameter_field,
    random_loop_field,
)
from loopforge.services.numerics import DiffConfig
from loopforge.services.parallel import ordered_map
from loopforge.services.phi_maps import PhiMap
from loopforge.services.pseudoauto import PAlgebra, maurer_cartan, so_basis
from loopforge.services.tangent import (
    BracketContext,
    associator_algebraic,
    bracket_transport,
    exp_closed,
    mod_product,
)

logger = get_logger(__name__)

SUITE = "fields"

CURVATURE_SIGN = 1.0
"""F = dA + CURVATURE_SIGN [A, A]. With d^H = d + rho(A) the covariant derivative
squares to rho(dA + [A, A]); calibrate_curvature_sign re-derives the sign from the
structure equation and the fields suite gates the two against each other."""


def contract(coeffs: np.ndarray, basis: np.ndarray) -> np.ndarray:
    """sum_k coeffs^k basis_k over the last axes."""
    return np.einsum("...k,...kn->...n", coeffs, basis)


def swap(a: np.ndarray) -> np.ndarray:
    """Exchange the two form indices following the point axis."""
    return np.swapaxes(a, 1, 2)


def per_point(a: np.ndarray) -> np.ndarray:
    """Sup norm over everything but the point axis."""
    a = np.asarray(a)
    if a.size == 0:
        return np.zeros(a.shape[0])
    return np.max(np.abs(a.reshape(a.shape[0], -1)), axis=1)


@dataclass
class TrivializedBundle:
    """Jets of a section and a connection at P points.

    Attributes:
        palg: Lie algebra data (its algebra is the ambient algebra)
        s: jet of the section, value (P, n)
        a: jet of the connection, value (P, d, m)
        curvature_sign: factor of [A, A] in the curvature
    """

    palg: PAlgebra
    s: Jet
    a: Jet
    curvature_sign: float = CURVATURE_SIGN

    @classmethod
    def from_fields(cls, palg: PAlgebra, s_field: LoopField, a_field: FormField,
                    points: np.ndarray, order: int = 2) -> "TrivializedBundle":
        alg = palg.algebra
        return cls(palg, s_field.jet(alg, points, order), a_field.jet(points, order))

    @classmethod
    def from_grid(cls, palg: PAlgebra, s_grid: GridField, a_grid: GridField) -> "TrivializedBundle":
        """First-order jets from periodic central differences."""
        return cls(palg, s_grid.jet(1), a_grid.jet(1))

    @property
    def alg(self):
        return self.palg.algebra

    @property
    def count(self) -> int:
        return self.s.value.shape[0]

    @property
    def dimension(self) -> int:
        return self.s.grad.shape[1]

    # Pointwise algebra at s

    def _base(self, ndim: int) -> np.ndarray:
        return self.s.value.reshape((self.count,) + (1,) * (ndim - 2) + (self.alg.dim,))

    def bracket(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """[x, y]^(s) with s broadcast along the point axis."""
        ndim = max(np.ndim(x), np.ndim(y))
        return bracket_transport(self.alg, self._base(ndim), x, y)

    def associator(self, x, y, z) -> np.ndarray:
        ndim = max(np.ndim(x), np.ndim(y), np.ndim(z))
        return associator_algebraic(self.alg, self._base(ndim), x, y, z)

    def a_s(self, x, y, z) -> np.ndarray:
        return self.associator(x, y, z) - self.associator(y, x, z)

    def act(self, x: np.ndarray, xi: np.ndarray) -> np.ndarray:
        return self.palg.act_vector(x, xi)

    def _require_second(self, jet: Jet, name: str) -> None:
        if jet.hess is None:
            raise AlgebraError(f"second derivatives of {name} are required")

    # Generator fields and Darboux derivative

    @cached_property
    def phi(self) -> Jet:
        """Phi_k = (G_k s) / s as algebra values, (P, m, n)."""
        s1 = self.s.first_order()
        full = self.palg.full
        gs = s1.linear(lambda v: np.einsum("kij,...j->...ki", full, v))
        return jet_rdiv(self.alg, gs, s1.unsqueeze(0))

    @cached_property
    def phi_im(self) -> Jet:
        return jet_imag(self.phi)

    @cached_property
    def theta_value(self) -> np.ndarray:
        """(d_i s) / s, (P, d, n)."""
        return self.alg.rdiv(self.s.grad, self.s.value[:, None])

    @cached_property
    def theta(self) -> Jet:
        self._require_second(self.s, "the section")
        ds = Jet(self.s.grad, self.s.hess)
        return jet_rdiv(self.alg, ds, self.s.first_order().unsqueeze(0))

    # Torsion and curvature

    @cached_property
    def omega_hat(self) -> Jet:
        """phi_s(A) as a tangent-valued form."""
        return bilinear(self.a.first_order(), self.phi_im.unsqueeze(0), contract)

    def adjoint_jet(self, xi: Jet) -> Jet:
        """Jet of phi_s^t(xi) in p coordinates for a tangent-valued form xi."""
        ginv = np.linalg.inv(self.palg.metric)
        pairing = bilinear(xi, self.phi_im.unsqueeze(0), lambda x, ph: np.einsum("...n,...kn->...k", x, ph))
        return pairing.linear(lambda v: v @ ginv.T)

    @cached_property
    def torsion_value(self) -> np.ndarray:
        return imag(self.theta_value) + contract(self.a.value, self.phi_im.value[:, None])

    @cached_property
    def torsion(self) -> Jet:
        return jet_imag(self.theta) + self.omega_hat

    @cached_property
    def curvature_value(self) -> np.ndarray:
        a = self.a.value
        return (self.a.grad - swap(self.a.grad)
                + self.curvature_sign * self.palg.bracket(a[:, :, None], a[:, None, :]))

    @cached_property
    def curvature(self) -> Jet:
        self._require_second(self.a, "the connection")
        a1 = self.a.first_order()
        d_value = self.a.grad - swap(self.a.grad)
        d_grad = self.a.hess - np.swapaxes(self.a.hess, 2, 3)
        br = bilinear(a1.unsqueeze(1), a1.unsqueeze(0), self.palg.bracket)
        return Jet(d_value + self.curvature_sign * br.value, d_grad + self.curvature_sign * br.grad)

    @cached_property
    def fhat_value(self) -> np.ndarray:
        return contract(self.curvature_value, self.phi_im.value[:, None, None])

    @cached_property
    def fhat(self) -> Jet:
        return bilinear(self.curvature, self.phi_im.unsqueeze(0).unsqueeze(0), contract)

    def covariant(self, x: np.ndarray) -> np.ndarray:
        """V(A_i) x_j arranged as (P, d, d, ...)."""
        a = self.a.value
        return self.act(a[:, :, None], x[:, None, :])

    @cached_property
    def dH_torsion(self) -> np.ndarray:
        t = self.torsion
        vt = self.covariant(t.value)
        return t.grad - swap(t.grad) + vt - swap(vt)

    # Residuals

    def structural_residual(self) -> np.ndarray:
        """Fhat - dH T + [T_i, T_j]^(s) per point."""
        t = self.torsion.value
        res = self.fhat_value - self.dH_torsion + self.bracket(t[:, :, None], t[:, None, :])
        return per_point(res)

    def bianchi_residual(self) -> np.ndarray:
        """Cyclic sum of dH Fhat - F.T + [Fhat, T]^(s); zero unless d = 3."""
        if self.dimension < 3:
            return np.zeros(self.count)
        fh, f = self.fhat, self.curvature_value
        t = self.torsion_value
        a = self.a.value
        total = np.zeros_like(t[:, 0])
        for i, j, k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
            total = total + (fh.grad[:, i, j, k] + self.act(a[:, i], fh.value[:, j, k])
                             - self.act(f[:, j, k], t[:, i]) + self.bracket(fh.value[:, j, k], t[:, i]))
        return per_point(total)

    def horizontal_phi_derivative(self):
        """Both sides of dH_i phi_s(X_k), shape (P, d, m, n-1).

        lhs = d_i phi_s(X_k) + V(A_i) phi_s(X_k) - phi_s([A_i, X_k])
        rhs = V(X_k) T_i - [phi_s(X_k), T_i]^(s)
        """
        ph = self.phi_im
        a = self.a.value
        eye = np.eye(self.palg.dim)
        lhs = (ph.grad + self.act(a[:, :, None, :], ph.value[:, None])
               - contract(self.palg.bracket(a[:, :, None, :], eye), ph.value[:, None, None]))
        t = self.torsion_value
        rhs = self.act(eye, t[:, :, None, :]) - self.bracket(ph.value[:, None], t[:, :, None])
        return lhs, rhs

    def omega_structure_residuals(self):
        """d omega + [omega_i, omega_j] - Fhat -/+ (dH phi_s wedge A), both readings."""
        w = self.omega_hat
        dw = w.grad - swap(w.grad)
        br = self.bracket(w.value[:, :, None], w.value[:, None, :])
        lhs, _ = self.horizontal_phi_derivative()
        wedge = np.einsum("pjk,pikn->pijn", self.a.value, lhs)
        wedge = wedge - swap(wedge)
        base = dw + br - self.fhat_value
        return per_point(base - wedge), per_point(base + wedge)


def calibrate_curvature_sign(palg: PAlgebra, s_field: LoopField, a_field: FormField,
                             points: np.ndarray) -> Tuple[float, Dict[float, float]]:
    """Sign of [A, A] in F for which the torsion structure equation holds.

    Returns the chosen sign and the structural residual of both candidates.
    For an abelian p both residuals agree and +1 is kept.
    """
    alg = palg.algebra
    s_jet, a_jet = s_field.jet(alg, points, 2), a_field.jet(points, 2)
    residuals = {sign: float(np.max(TrivializedBundle(palg, s_jet, a_jet, sign).structural_residual()))
                 for sign in (1.0, -1.0)}
    return min(residuals, key=residuals.get), residuals


# Ready-made configurations

def zero_connection(dimension: int, palg: PAlgebra) -> FormField:
    return FormField.zero(dimension, palg.dim)


def random_bundle_fields(palg: PAlgebra, rng: np.random.Generator, domain: TorusDomain,
                         max_frequency: int = DEFAULT_MAX_FREQUENCY,
                         amplitude: float = DEFAULT_AMPLITUDE):
    """Seeded random section and connection."""
    alg = palg.algebra
    s_field = random_loop_field(rng, alg, domain.dimension, max_frequency, amplitude)
    a_field = FormField.random(rng, domain.dimension, palg.dim, max_frequency, amplitude)
    return s_field, a_field


def kernel_connection(palg: PAlgebra, dimension: int) -> FormField:
    """Constant connection valued in ker phi_1 with non-commuting components."""
    kernel = PhiMap(palg, palg.algebra.one()).kernel()
    k = kernel.shape[0]
    if k < 2:
        raise AlgebraError(f"ker phi is {k}-dimensional; need two directions")
    values = np.zeros((dimension, palg.dim))
    for i in range(dimension):
        values[i] = kernel[i % k] + 0.5 * kernel[(i + 1) % k]
    return FormField.constant(values)


# G2 relation on the octonions

def g2_torsion_fit(palg: PAlgebra, torsion: np.ndarray):
    """Fit V(E_de) T - [phi_1(E_de), T]^(1) = c psi_cade T^c.

    Returns:
        (c, fit residual)
    """
    alg = palg.algebra
    one = alg.one()
    n = alg.imag_dim
    gens = palg.coords_of(so_basis(n))
    pairs = [(d, e) for d in range(n) for e in range(d + 1, n)]
    ctx = BracketContext(alg, one)
    phi = PhiMap(palg, one)
    t = np.atleast_2d(torsion)
    phi_g = phi(gens)
    lhs = (np.einsum("gab,sb->sga", palg.vector_of(gens), t)
           - ctx.bracket(phi_g[None, :, :], t[:, None, :]))
    psi_t = np.einsum("cade,sc->sdea", alg.tensors().psi, t)
    target = np.stack([psi_t[:, d, e] for d, e in pairs], axis=1)
    return numerics.lstsq_fit(target, lhs)


# Gauge transformations

@dataclass
class GaugeResult:
    """Original and transformed bundles at the same points plus u^{-1} data."""

    original: TrivializedBundle
    transformed: TrivializedBundle
    vector_inverse: np.ndarray
    defining: np.ndarray

    def torsion_residual(self) -> np.ndarray:
        expected = np.einsum("pab,pib->pia", self.vector_inverse, self.original.torsion_value)
        return per_point(self.transformed.torsion_value - expected)

    def fhat_residual(self) -> np.ndarray:
        expected = np.einsum("pab,pijb->pija", self.vector_inverse, self.original.fhat_value)
        return per_point(self.transformed.fhat_value - expected)

    def curvature_residual(self) -> np.ndarray:
        """Curvature of the transformed connection against Ad_{u^-1} F."""
        palg = self.original.palg
        u = self.defining
        f = palg.defining_of(self.original.curvature_value)
        uinv = np.linalg.inv(u)
        expected = palg.coords_of(uinv[:, None, None] @ f @ u[:, None, None])
        return per_point(self.transformed.curvature_value - expected)


def gauge_transform(palg: PAlgebra, s_field: LoopField, a_field: FormField, u_field: TrigField,
                    points: np.ndarray) -> GaugeResult:
    """s' = u^{-1}(s), A' = Ad_{u^-1} A + u^{-1} du for u = exp(x) with x a p-valued field.

    The transformed fields are only available through evaluation, so their
    jets come from extrapolated central differences.
    """
    alg = palg.algebra

    def s_prime(pts):
        x = u_field(pts)
        return np.einsum("pij,pj->pi", numerics.mat_exp(-palg.full_of(x)), s_field(alg, pts))

    def a_prime(pts):
        xj = u_field.jet(pts, order=1)
        a = a_field.jet(pts, order=1).value

        def at(p):
            u = numerics.mat_exp(palg.defining_of(xj.value[p]))
            ad = palg.coords_of(np.linalg.solve(u, palg.defining_of(a[p])) @ u)
            mc = np.array([maurer_cartan(palg, xj.value[p], xj.grad[p, i])
                           for i in range(pts.shape[1])])
            return ad + mc

        return np.array(ordered_map(at, range(len(pts))))

    original = TrivializedBundle.from_fields(palg, s_field, a_field, points, order=2)
    transformed = TrivializedBundle(palg, SampledField(s_prime).jet(alg, points),
                                    SampledForm(a_prime).jet(points))
    x = u_field(points)
    return GaugeResult(original, transformed, numerics.mat_exp(-palg.vector_of(x)),
                       numerics.mat_exp(palg.defining_of(x)))


# Left translation of the section

def left_translate(palg: PAlgebra, s_field: LoopField, a_field: FormField, factor: LoopField,
                   points: np.ndarray):
    """Torsion and Fhat of (factor s, A) computed directly and from (s, A).

    T^(Bs)_i    = Im(((D_i B) s + B (T_i s)) / (B s)),  D_i B = d_i B + V(A_i) B
    Fhat^(Bs)   = Im(((V(F) B) s + B (Fhat s)) / (B s))

    Returns:
        (torsion residual, fhat residual) per point
    """
    alg = palg.algebra
    base = TrivializedBundle.from_fields(palg, s_field, a_field, points, order=1)
    moved = TrivializedBundle.from_fields(palg, ProductField(factor, s_field), a_field, points, order=1)
    b = factor.jet(alg, points, order=1)
    s = base.s.value
    a = base.a.value
    bs = alg.mul(b.value, s)

    db = b.grad + palg.act_hat(a, b.value[:, None])
    t = embed(base.torsion_value)
    t_formula = imag(alg.rdiv(alg.mul(db, s[:, None]) + alg.mul(b.value[:, None], alg.mul(t, s[:, None])),
                              bs[:, None]))

    f = base.curvature_value
    fh = embed(base.fhat_value)
    s2 = s[:, None, None]
    b2 = b.value[:, None, None]
    f_formula = imag(alg.rdiv(alg.mul(palg.act_hat(f, b2), s2) + alg.mul(b2, alg.mul(fh, s2)),
                              bs[:, None, None]))
    return (per_point(moved.torsion_value - t_formula), per_point(moved.fhat_value - f_formula))


# Deformations of the section

def deformation_step(alg, s: np.ndarray, xi: np.ndarray, dt: float):
    """s <- exp(dt xi) s, renormalized.

    Every loop here is Moufang, so exp_s(dt xi) s = exp(dt xi) s.

    Returns:
        (new section values, unit-norm drift before renormalization)
    """
    moved = alg.mul(exp_closed(alg, dt * np.asarray(xi)), s)
    norm = np.linalg.norm(moved, axis=-1, keepdims=True)
    drift = float(np.max(np.abs(norm - 1.0))) if norm.size else 0.0
    if drift > NORM_DRIFT_WARNING:
        logger.warning(f"Section drifted from unit norm by {drift:.3e}; renormalizing",
                       extra={"residual": drift})
    return moved / norm, drift


def deformation_rates(palg: PAlgebra, s_field: LoopField, a_field: FormField, sigma: TrigField,
                      points: np.ndarray, cfg: Optional[DiffConfig] = None) -> Dict[str, float]:
    """Rates of T, Fhat and theta along s(t) = exp(t xi) s against their formulas.

    d/dt T     = dH xi - [T, xi]^(s)
    d/dt Fhat  = F.xi - [Fhat, xi]^(s)
    d/dt theta = d xi - [theta, xi]^(s)
    """
    def bundle_at(t):
        moved = ProductField(ExpField(sigma.scaled(t)), s_field)
        return TrivializedBundle.from_fields(palg, moved, a_field, points, order=1)

    base = bundle_at(0.0)
    xi = sigma.jet(points, order=1)
    a = base.a.value
    t = base.torsion_value
    th = imag(base.theta_value)
    fh = base.fhat_value
    xv = xi.value

    d_torsion = numerics.fd_derivative(lambda h: bundle_at(h).torsion_value, 0.0, 1, cfg).value
    d_fhat = numerics.fd_derivative(lambda h: bundle_at(h).fhat_value, 0.0, 1, cfg).value
    d_theta = numerics.fd_derivative(lambda h: imag(bundle_at(h).theta_value), 0.0, 1, cfg).value

    dh_xi = xi.grad + base.act(a, xv[:, None])
    expect_t = dh_xi - base.bracket(t, xv[:, None])
    expect_f = base.act(base.curvature_value, xv[:, None, None]) - base.bracket(fh, xv[:, None, None])
    expect_th = xi.grad - base.bracket(th, xv[:, None])
    return {
        "torsion": numerics.max_abs(d_torsion - expect_t),
        "fhat": numerics.max_abs(d_fhat - expect_f),
        "theta": numerics.max_abs(d_theta - expect_th),
    }


# Product rules with the connection

def product_rule_residuals(palg: PAlgebra, s_field: LoopField, a_field: FormField,
                           left: LoopField, right: LoopField, xi: TrigField, eta: TrigField,
                           points: np.ndarray) -> Dict[str, float]:
    """Covariant product, bracket and modified-derivative rules.

    * D(B o_s C) = (DB) o_s C + B o_s DC + [B, C, T]^(s)
    * D^(s) 1 = T with D^(s) B = DB + B o_s T
    * dH [x, y]^(s) = [dH x, y] + [x, dH y] + a_s(x, y, T)
    * d^(s) x = dH x + [x, T]/3 is a derivation of [., .]^(s) (octonions)
    """
    alg = palg.algebra
    bundle = TrivializedBundle.from_fields(palg, s_field, a_field, points, order=1)
    s1 = bundle.s.first_order()
    s = s1.value
    a = bundle.a.value
    t = bundle.torsion_value
    te = embed(t)
    b = left.jet(alg, points, order=1)
    c = right.jet(alg, points, order=1)
    out = {}

    def mprod(x, y):
        base = s.reshape((len(s),) + (1,) * (max(np.ndim(x), np.ndim(y)) - 2) + (alg.dim,))
        return mod_product(alg, base, x, y)

    def massoc(x, y, z):
        return mprod(x, mprod(y, z)) - mprod(mprod(x, y), z)

    def cov(jet):
        return jet.grad + palg.act_hat(a, jet.value[:, None])

    prod = jet_rdiv(alg, jet_mul(alg, b, jet_mul(alg, c, s1)), s1)
    lhs = cov(prod)
    db, dc = cov(b), cov(c)
    rhs = (mprod(db, c.value[:, None]) + mprod(b.value[:, None], dc)
           + massoc(b.value[:, None], c.value[:, None], te))
    out["product"] = numerics.max_abs(lhs - rhs)

    one = np.broadcast_to(alg.one(), s.shape)
    d_one = palg.act_hat(a, one[:, None]) + mprod(one[:, None], te)
    out["unit"] = numerics.max_abs(d_one - te)

    x = xi.jet(points, order=1)
    y = eta.jet(points, order=1)
    ex, ey = x.linear(embed), y.linear(embed)
    br = jet_imag(jet_rdiv(alg, jet_mul(alg, ex, jet_mul(alg, ey, s1))
                           - jet_mul(alg, ey, jet_mul(alg, ex, s1)), s1))
    dh_br = br.grad + bundle.act(a, br.value[:, None])
    dh_x = x.grad + bundle.act(a, x.value[:, None])
    dh_y = y.grad + bundle.act(a, y.value[:, None])
    xv, yv = x.value[:, None], y.value[:, None]
    rhs = bundle.bracket(dh_x, yv) + bundle.bracket(xv, dh_y) + bundle.a_s(xv, yv, t)
    out["bracket"] = numerics.max_abs(dh_br - rhs)

    if alg.tag == AlgebraTag.O:
        def ds(dh, v):
            return dh + bundle.bracket(v, t) / 3.0

        lhs = ds(dh_br, br.value[:, None])
        rhs = bundle.bracket(ds(dh_x, xv), yv) + bundle.bracket(xv, ds(dh_y, yv))
        out["modified-derivation"] = numerics.max_abs(lhs - rhs)
    return out


# Grid mode

def grid_structural_residual(bundle: TrivializedBundle, domain: TorusDomain) -> np.ndarray:
    """Structure equation with dH T taken by central differences of the sampled torsion."""
    t = bundle.torsion_value
    shape = (domain.grid,) * domain.dimension
    dt = GridField(t.reshape(shape + t.shape[1:]), domain).jet(order=1).grad
    vt = bundle.covariant(t)
    dht = dt - swap(dt) + vt - swap(vt)
    return per_point(bundle.fhat_value - dht + bundle.bracket(t[:, :, None], t[:, None, :]))


def grid_convergence(palg: PAlgebra, s_field: LoopField, a_field: FormField,
                     dimension: int = 2, sizes: Sequence[int] = GRID_SIZES) -> Dict[str, list]:
    """Structural residual with central differences on N^d grids, and the observed orders."""
    residuals = []
    for n in sizes:
        domain = TorusDomain(dimension=dimension, grid=n)
        bundle = TrivializedBundle.from_grid(palg, GridField.sample_loop(s_field, palg.algebra, domain),
                                             GridField.sample_form(a_field, domain))
        residuals.append(float(np.max(grid_structural_residual(bundle, domain))))
        logger.debug(f"Grid N={n}: structural residual {residuals[-1]:.3e}")
    orders = [float(np.log2(r0 / r1)) if r1 > 0 else float("inf")
              for r0, r1 in zip(residuals, residuals[1:])]
    return {"sizes": list(sizes), "residuals": residuals, "orders": orders}


# Suite

def field_suite(palg: PAlgebra, rng: np.random.Generator, domain: TorusDomain,
                points: int) -> List[SuiteEntry]:
    """Identity checks on seeded random analytic fields."""
    alg = palg.algebra
    pts = domain.sample_points(rng, points)
    d = domain.dimension
    s_field, a_field = random_bundle_fields(palg, rng, domain)
    entries: List[SuiteEntry] = []

    def record(name, fn, tol, report_only=False):
        try:
            value = float(fn())
        except LoopforgeError as exc:
            logger.warning(f"{name} failed: {exc}", extra={"suite": SUITE, "identity": name})
            entries.append(SuiteEntry.error(name, SUITE, str(exc)))
            return
        if report_only:
            entries.append(SuiteEntry.info(name, SUITE, value))
        else:
            entries.append(SuiteEntry.check(name, SUITE, value, tol, samples=len(pts)))
        logger.debug(f"{name}: {value:.3e}", extra={"suite": SUITE, "identity": name, "residual": value})

    bundle = TrivializedBundle.from_fields(palg, s_field, a_field, pts)
    flat = TrivializedBundle.from_fields(palg, s_field, zero_connection(d, palg), pts)

    xi = rng.standard_normal(alg.imag_dim)
    line = TrivializedBundle.from_fields(palg, one_parameter_field(alg, d, xi), zero_connection(d, palg), pts)
    expected = np.zeros((d, alg.imag_dim))
    expected[0] = xi
    record("darboux-one-parameter", lambda: numerics.max_abs(imag(line.theta_value) - expected), TOL_FIELD)
    record("darboux-maurer-cartan", lambda: np.max(flat.structural_residual()), TOL_FIELD)
    record("torsion-structure-equation", lambda: np.max(bundle.structural_residual()), TOL_FIELD)
    sign, by_sign = calibrate_curvature_sign(palg, s_field, a_field, pts)
    entries.append(SuiteEntry.check("curvature-sign-calibration", SUITE, abs(sign - CURVATURE_SIGN), 0.0,
                                    detail=f"residual +1: {by_sign[1.0]:.3e}, -1: {by_sign[-1.0]:.3e}"))
    record("bianchi-identity", lambda: np.max(bundle.bianchi_residual()), TOL_FIELD)

    def dhphi():
        lhs, rhs = bundle.horizontal_phi_derivative()
        return numerics.max_abs(lhs - rhs)

    record("phi-horizontal-derivative", dhphi, TOL_FIELD)
    main, alternative = bundle.omega_structure_residuals()
    record("omega-structure-equation", lambda: np.max(main), TOL_FIELD)
    record("omega-structure-opposite-reading", lambda: np.max(alternative), 0.0, report_only=True)

    if alg.tag == AlgebraTag.O:
        c, fit = g2_torsion_fit(palg, bundle.torsion_value.reshape(-1, alg.imag_dim)[:20])
        scale = numerics.max_abs(bundle.torsion_value) + 1.0
        entries.append(SuiteEntry.check("g2-torsion-contraction", SUITE, fit / scale, TOL_ALGEBRAIC,
                                        detail=f"c={c:.12g}"))
        entries.append(SuiteEntry.check("g2-torsion-constant-modulus", SUITE, abs(abs(c) - 1.0),
                                        TOL_ALGEBRAIC, detail=f"c={c:.12g}"))
        kernel = TrivializedBundle.from_fields(palg, ConstantField(alg.one()), kernel_connection(palg, d), pts)
        record("kernel-connection-fhat", lambda: numerics.max_abs(kernel.fhat_value), TOL_ALGEBRAIC)
        record("kernel-connection-curvature-norm", lambda: numerics.max_abs(kernel.curvature_value),
               0.0, report_only=True)

    if alg.tag == AlgebraTag.C:
        def anchor():
            t = bundle.torsion
            return numerics.max_abs(bundle.fhat_value - (t.grad - swap(t.grad)))
        record("abelian-fhat-exact", anchor, TOL_FIELD)

    u_field = TrigField.random(rng, d, palg.dim)
    gauge_pts = pts[: max(8, len(pts) // 5)]
    gauge = gauge_transform(palg, s_field, a_field, u_field, gauge_pts)
    record("torsion-gauge-equivariance", lambda: np.max(gauge.torsion_residual()), TOL_GAUGE)
    record("fhat-gauge-equivariance", lambda: np.max(gauge.fhat_residual()), TOL_GAUGE)
    record("curvature-gauge-cross-check", lambda: np.max(gauge.curvature_residual()), TOL_GAUGE)

    factor = random_loop_field(rng, alg, d)
    t_res, f_res = left_translate(palg, s_field, a_field, factor, pts)
    record("left-translation-torsion", lambda: np.max(t_res), TOL_GAUGE)
    record("left-translation-fhat", lambda: np.max(f_res), TOL_GAUGE)
    minus = ConstantField(-alg.one())
    record("nucleus-left-translation", lambda: numerics.max_abs(
        TrivializedBundle.from_fields(palg, ProductField(minus, s_field), a_field, pts, 1).torsion_value
        - bundle.torsion_value), TOL_ALGEBRAIC)

    sigma = TrigField.random(rng, d, alg.imag_dim)
    rates = deformation_rates(palg, s_field, a_field, sigma, gauge_pts)
    record("deformation-torsion-rate", lambda: rates["torsion"], TOL_VARIATION)
    record("deformation-fhat-rate", lambda: rates["fhat"], TOL_VARIATION)
    record("deformation-darboux-rate", lambda: rates["theta"], TOL_VARIATION)

    rules = product_rule_residuals(palg, s_field, a_field, random_loop_field(rng, alg, d),
                                   random_loop_field(rng, alg, d), TrigField.random(rng, d, alg.imag_dim),
                                   TrigField.random(rng, d, alg.imag_dim), pts)
    record("covariant-product-rule", lambda: rules["product"], TOL_GAUGE)
    record("adapted-derivative-of-unit", lambda: rules["unit"], TOL_GAUGE)
    record("covariant-bracket-rule", lambda: rules["bracket"], TOL_GAUGE)
    if "modified-derivation" in rules:
        record("modified-derivative-derivation", lambda: rules["modified-derivation"], TOL_GAUGE)

    try:
        s2, a2 = random_bundle_fields(palg, rng, TorusDomain(dimension=2), max_frequency=1, amplitude=0.3)
        observed = grid_convergence(palg, s2, a2, dimension=2)["orders"][-1]
        entries.append(SuiteEntry.check("structural-grid-order", SUITE, max(0.0, MIN_FD_ORDER - observed),
                                        0.0, detail=f"order={observed:.4f}"))
    except LoopforgeError as exc:
        entries.append(SuiteEntry.error("structural-grid-order", SUITE, str(exc)))
    return entries
