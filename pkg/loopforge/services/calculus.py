"""Darboux-derivative calculus on loop-valued maps.

Each identity is evaluated at sample points with exact analytic derivatives
(jets) on one side and the closed formula on the other. Here
x o_s y = (x (y s)) / s, x /_s y = (x s) / (y s), theta = ds / s and
u = (df s) / (f s).
"""
from typing import Callable, List

import numpy as np

from loopforge.constants import TOL_FIELD, TOL_GAUGE
from loopforge.errors import AlgebraError, LoopforgeError
from loopforge.logging_config import get_logger
from loopforge.reports.models import SuiteEntry
from loopforge.services import numerics
from loopforge.services.algebra import imag
from loopforge.services.bundle import TrivializedBundle, per_point, swap, zero_connection
from loopforge.services.fields import (
    ConstantField,
    Jet,
    LoopField,
    ProductField,
    SampledField,
    TorusDomain,
    TrigField,
    bilinear,
    constant_jet,
    jet_imag,
    jet_mul,
    jet_rdiv,
    random_loop_field,
)
from loopforge.services.parallel import ordered_map
from loopforge.services.phi_maps import PhiMap, lambda_compute
from loopforge.services.pseudoauto import PAlgebra, maurer_cartan

logger = get_logger(__name__)

SUITE = "calculus"


class LoopCalculus:
    """Modified products and quotients at a varying base point s(x)."""

    def __init__(self, alg, base: np.ndarray):
        self.alg = alg
        self.base = base

    def _b(self, *args) -> np.ndarray:
        ndim = max(np.ndim(a) for a in args)
        b = self.base
        return b.reshape((b.shape[0],) + (1,) * (ndim - 2) + (b.shape[-1],))

    def prod(self, x, y):
        b = self._b(x, y)
        return self.alg.rdiv(self.alg.mul(x, self.alg.mul(y, b)), b)

    def quot(self, x, y):
        b = self._b(x, y)
        return self.alg.rdiv(self.alg.mul(x, b), self.alg.mul(y, b))

    def assoc(self, x, y, z):
        return self.prod(x, self.prod(y, z)) - self.prod(self.prod(x, y), z)

    def bracket(self, x, y):
        return self.prod(x, y) - self.prod(y, x)

    def left_alt(self, x, y, z):
        return self.assoc(x, y, z) - self.assoc(y, x, z)


def modified_product_jet(alg, x: Jet, y: Jet, s: Jet) -> Jet:
    return jet_rdiv(alg, jet_mul(alg, x, jet_mul(alg, y, s)), s)


def product_rule(alg, a: Jet, b: Jet, s: Jet) -> float:
    """d(A o_s B) = dA o_s B + A o_s dB + [A, B, theta]^(s)."""
    calc = LoopCalculus(alg, s.value)
    theta = alg.rdiv(s.grad, s.value[:, None])
    lhs = modified_product_jet(alg, a, b, s).grad
    av, bv = a.value[:, None], b.value[:, None]
    rhs = calc.prod(a.grad, bv) + calc.prod(av, b.grad) + calc.assoc(av, bv, theta)
    return numerics.max_abs(lhs - rhs)


def quotient_rule(alg, a: Jet, b: Jet, s: Jet) -> float:
    """d(A /_s B) = (dA - Q o_s dB - [Q, B, theta]^(s)) /_s B with Q = A /_s B."""
    calc = LoopCalculus(alg, s.value)
    theta = alg.rdiv(s.grad, s.value[:, None])
    q = jet_rdiv(alg, jet_mul(alg, a, s), jet_mul(alg, b, s))
    qv, bv = q.value[:, None], b.value[:, None]
    rhs = calc.quot(a.grad - calc.prod(qv, b.grad) - calc.assoc(qv, bv, theta), bv)
    return numerics.max_abs(q.grad - rhs)


def bracket_rule(alg, xi: Jet, eta: Jet, s: Jet) -> float:
    """d[xi, eta]^(s) = [d xi, eta] + [xi, d eta] + a_s(xi, eta, theta)."""
    calc = LoopCalculus(alg, s.value)
    theta = alg.rdiv(s.grad, s.value[:, None])
    x, y = xi.linear(_embed), eta.linear(_embed)
    br = modified_product_jet(alg, x, y, s) - modified_product_jet(alg, y, x, s)
    xv, yv = x.value[:, None], y.value[:, None]
    rhs = calc.bracket(x.grad, yv) + calc.bracket(xv, y.grad) + calc.left_alt(xv, yv, theta)
    return numerics.max_abs(imag(br.grad - rhs))


def _embed(a: np.ndarray) -> np.ndarray:
    return np.concatenate([np.zeros(a.shape[:-1] + (1,)), a], axis=-1)


def relative_darboux(alg, f: Jet, s: Jet) -> float:
    """theta_f^(s) = theta_{fs} - Ad_f^(s) theta_s with Ad_f^(s) xi = (f (xi s)) / (f s)."""
    nu = jet_mul(alg, f, s)
    nv = nu.value[:, None]
    u = alg.rdiv(alg.mul(f.grad, s.value[:, None]), nv)
    theta_s = alg.rdiv(s.grad, s.value[:, None])
    theta_fs = alg.rdiv(nu.grad, nv)
    ad = alg.rdiv(alg.mul(f.value[:, None], alg.mul(theta_s, s.value[:, None])), nv)
    return numerics.max_abs(u - (theta_fs - ad))


def relative_maurer_cartan(alg, f: Jet, s: Jet) -> float:
    """(du)(X, Y) = [u_X, u_Y]^(nu) - E(X, Y) + E(Y, X), nu = f s.

    E(X, Y) = (f_X (sigma_Y s) - u_X (f (sigma_Y s))) / nu with sigma = theta_s.
    """
    s1 = s.first_order()
    nu = jet_mul(alg, f.first_order(), s1)
    df = Jet(f.grad, f.hess)
    u = jet_rdiv(alg, bilinear(df, s1.unsqueeze(0), alg.mul), nu.unsqueeze(0))
    du = u.grad - swap(u.grad)

    calc = LoopCalculus(alg, nu.value)
    uv = u.value
    sigma_s = s.grad
    fv = f.value[:, None, None]
    nv = nu.value[:, None, None]
    e = alg.rdiv(alg.mul(f.grad[:, :, None], sigma_s[:, None])
                 - alg.mul(uv[:, :, None], alg.mul(fv, sigma_s[:, None])), nv)
    rhs = calc.bracket(uv[:, :, None], uv[:, None, :]) - e + swap(e)
    return numerics.max_abs(du - rhs)


def uniqueness(alg, b_field: LoopField, c: np.ndarray, points: np.ndarray) -> float:
    """A = B C with C constant gives theta_A = (dB C) / (B C)."""
    a = ProductField(b_field, ConstantField(c)).jet(alg, points, order=1)
    b = b_field.jet(alg, points, order=1)
    theta_a = alg.rdiv(a.grad, a.value[:, None])
    rhs = alg.rdiv(alg.mul(b.grad, c), alg.mul(b.value, c)[:, None])
    return numerics.max_abs(theta_a - rhs)


def cartan_condition(alg, s: Jet, alpha: np.ndarray) -> float:
    """Alternating sum of [alpha, alpha, alpha - theta_s]^(s) over the form indices.

    Vanishes whenever d alpha = 1/2 [alpha, alpha]^(s). Needs three form indices
    and a non-associative algebra to be anything but zero.
    """
    calc = LoopCalculus(alg, s.value)
    theta = alg.rdiv(s.grad, s.value[:, None])
    d = theta.shape[1]
    total = np.zeros_like(theta[:, 0])
    for i in range(d):
        for j in range(d):
            for k in range(d):
                sign = np.sign((j - i) * (k - i) * (k - j))
                if sign:
                    total = total + sign * calc.assoc(alpha[:, i], alpha[:, j], alpha[:, k] - theta[:, k])
    return numerics.max_abs(total)


def quotient_curve(alg, a: Jet, b: Jet) -> float:
    """d(A/B) = (dA - (A/B) dB) / B at each point."""
    q = jet_rdiv(alg, a, b)
    rhs = alg.rdiv(a.grad - alg.mul(q.value[:, None], b.grad), b.value[:, None])
    return numerics.max_abs(q.grad - rhs)


def adjoint_curve(alg, f: Jet, s0: np.ndarray, xi: np.ndarray) -> float:
    """d Ad_f^(s) xi = [u, Ad_f^(s) xi]^(nu) + (df (xi s) - u (f (xi s))) / nu for fixed s, xi."""
    count = f.value.shape[0]
    d = f.grad.shape[1]
    s = constant_jet(s0, count, d, order=1)
    xs = constant_jet(alg.mul(_embed(xi), s0), count, d, order=1)
    f1 = f.first_order()
    nu = jet_mul(alg, f1, s)
    w = jet_rdiv(alg, jet_mul(alg, f1, xs), nu)
    nv = nu.value[:, None]
    u = alg.rdiv(alg.mul(f.grad, s.value[:, None]), nv)
    calc = LoopCalculus(alg, nu.value)
    extra = alg.rdiv(alg.mul(f.grad, xs.value[:, None]) - alg.mul(u, alg.mul(f.value, xs.value)[:, None]), nv)
    rhs = calc.bracket(u, w.value[:, None]) + extra
    return numerics.max_abs(w.grad - rhs)


def psi_valued_darboux(palg: PAlgebra, s_field: LoopField, x_field: TrigField,
                       points: np.ndarray) -> float:
    """theta_{h(s)} = h'(phi_s(h^-1 dh) + theta_s) for h = exp(x)."""
    alg = palg.algebra

    def moved(pts):
        return np.einsum("pij,pj->pi", numerics.mat_exp(palg.full_of(x_field(pts))), s_field(alg, pts))

    hs = SampledField(moved).jet(alg, points)
    lhs = imag(alg.rdiv(hs.grad, hs.value[:, None]))
    bundle = TrivializedBundle.from_fields(palg, s_field, zero_connection(points.shape[1], palg), points, 1)
    xj = x_field.jet(points, order=1)

    def mc(p):
        return np.array([maurer_cartan(palg, xj.value[p], xj.grad[p, i]) for i in range(points.shape[1])])

    forms = np.array(ordered_map(mc, range(len(points))))
    inner = np.einsum("pik,pkn->pin", forms, bundle.phi_im.value) + imag(bundle.theta_value)
    vec = numerics.mat_exp(palg.vector_of(xj.value))
    rhs = np.einsum("pab,pib->pia", vec, inner)
    return numerics.max_abs(lhs - rhs)


def potential_projection(palg: PAlgebra, s_field: LoopField, points: np.ndarray):
    """phi_s(d Theta - [Theta_i, Theta_j]_p) for Theta = phi_s^t(theta_s) / lambda.

    Returns:
        (projected residual, |phi_s(Theta) - theta_s|)
    """
    unit = PhiMap(palg, palg.algebra.one())
    if unit.rank() < palg.algebra.imag_dim:
        raise AlgebraError("phi_s is not onto the tangent space; no potential exists")
    lam = lambda_compute(unit)
    bundle = TrivializedBundle.from_fields(palg, s_field, zero_connection(points.shape[1], palg), points, 2)
    theta = jet_imag(bundle.theta)
    big = bundle.adjoint_jet(theta).scale(1.0 / lam)
    d_big = big.grad - swap(big.grad)
    curv = d_big - palg.bracket(big.value[:, :, None], big.value[:, None, :])
    phi = bundle.phi_im.value
    projected = np.einsum("pijk,pkn->pijn", curv, phi)
    reproduced = np.einsum("pik,pkn->pin", big.value, phi)
    return float(np.max(per_point(projected))), numerics.max_abs(reproduced - theta.value)


def calculus_suite(palg: PAlgebra, rng: np.random.Generator, domain: TorusDomain,
                   points: int) -> List[SuiteEntry]:
    """Every calculus identity on seeded random trigonometric fields."""
    alg = palg.algebra
    d = domain.dimension
    pts = domain.sample_points(rng, points)
    s_field = random_loop_field(rng, alg, d)
    f_field = random_loop_field(rng, alg, d)
    a_field = random_loop_field(rng, alg, d)
    b_field = random_loop_field(rng, alg, d)
    xi = TrigField.random(rng, d, alg.imag_dim).jet(pts, order=1)
    eta = TrigField.random(rng, d, alg.imag_dim).jet(pts, order=1)
    u_field = TrigField.random(rng, d, palg.dim)
    s = s_field.jet(alg, pts, order=2)
    f = f_field.jet(alg, pts, order=2)
    a = a_field.jet(alg, pts, order=1)
    b = b_field.jet(alg, pts, order=1)
    c = alg.random(rng, unit=True)
    s0 = alg.random(rng, unit=True)
    xi0 = rng.standard_normal(alg.imag_dim)
    entries: List[SuiteEntry] = []

    def record(name: str, fn: Callable[[], float], tol: float) -> None:
        try:
            value = float(fn())
        except LoopforgeError as exc:
            logger.warning(f"{name} failed: {exc}", extra={"suite": SUITE, "identity": name})
            entries.append(SuiteEntry.error(name, SUITE, str(exc)))
            return
        entries.append(SuiteEntry.check(name, SUITE, value, tol, samples=len(pts)))

    def phi_rule():
        lhs, rhs = TrivializedBundle.from_fields(palg, s_field, zero_connection(d, palg), pts, 1) \
            .horizontal_phi_derivative()
        return numerics.max_abs(lhs - rhs)

    record("modified-product-rule", lambda: product_rule(alg, a, b, s), TOL_FIELD)
    record("modified-quotient-rule", lambda: quotient_rule(alg, a, b, s), TOL_FIELD)
    record("bracket-derivative-rule", lambda: bracket_rule(alg, xi, eta, s), TOL_FIELD)
    record("phi-derivative-rule", phi_rule, TOL_FIELD)
    record("relative-darboux", lambda: relative_darboux(alg, f, s), TOL_FIELD)
    record("relative-maurer-cartan", lambda: relative_maurer_cartan(alg, f, s), TOL_FIELD)
    record("darboux-uniqueness", lambda: uniqueness(alg, b_field, c, pts), TOL_FIELD)
    theta = alg.rdiv(s.grad, s.value[:, None])
    # alpha - theta_s must be nucleus-valued: the octonion nucleus is discrete, forcing
    # alpha = theta_s, and the associative algebras have no associator
    entries.append(SuiteEntry.info("cartan-condition", SUITE, cartan_condition(alg, s, theta),
                                   detail="alpha = theta_s"))
    entries.append(SuiteEntry.info("cartan-condition-generic-form", SUITE,
                                   cartan_condition(alg, s, _embed(xi.grad)),
                                   detail="nonzero for a generic form on T^3 over the octonions"))
    record("quotient-curve", lambda: quotient_curve(alg, a, b), TOL_FIELD)
    record("adjoint-curve", lambda: adjoint_curve(alg, f, s0, xi0), TOL_FIELD)
    record("psi-valued-darboux", lambda: psi_valued_darboux(palg, s_field, u_field, pts[:25]), TOL_GAUGE)

    try:
        projected, reproduced = potential_projection(palg, s_field, pts)
        entries.append(SuiteEntry.check("potential-projected-flatness", SUITE, projected, TOL_FIELD,
                                        samples=len(pts)))
        entries.append(SuiteEntry.check("potential-reproduces-darboux", SUITE, reproduced, TOL_FIELD,
                                        samples=len(pts)))
    except LoopforgeError as exc:
        entries.append(SuiteEntry.error("potential-projected-flatness", SUITE, str(exc)))
    logger.info(f"Calculus suite: {sum(e.passed for e in entries)}/{len(entries)} passed",
                extra={"suite": SUITE, "algebra": alg.tag.value})
    return entries
