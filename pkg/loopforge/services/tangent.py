"""Exponentials, brackets and associators of the tangent algebra at a base point s.

With x o_s y = (x (y s)) / s the bracket and associator at s are

    [xi, eta]^(s)          = Im(xi o_s eta - eta o_s xi)
    [eta, gamma, xi]^(s)   = Im(eta o_s (gamma o_s xi) - (eta o_s gamma) o_s xi)

evaluated algebraically; nested finite differences of loop expressions are the
independent oracle. Every loop here is Moufang, so exp_s = exp.
"""
import math
from dataclasses import dataclass, field
from itertools import permutations
from typing import List, Optional

import numpy as np

from loopforge.constants import (
    FD_STEP_THIRD,
    MIN_FD_ORDER,
    ODE_MAX_STEP,
    OCTONION_KILLING,
    TOL_ALGEBRAIC,
    TOL_FD_ASSOCIATOR,
    TOL_FD_BRACKET,
)
from loopforge.errors import ConsistencyError, NumericsError
from loopforge.logging_config import get_logger
from loopforge.reports.models import SuiteEntry
from loopforge.services import numerics
from loopforge.services.algebra import (
    AlgebraTag,
    ClosedForms,
    CompositionAlgebra,
    StructureTensors,
    embed,
    imag,
)
from loopforge.services.numerics import DiffConfig, ScalarMode

logger = get_logger(__name__)

SUITE = "tangent"


# Exponentials

def exp_closed(alg: CompositionAlgebra, xi: np.ndarray) -> np.ndarray:
    """cos|xi| + sin|xi| xi/|xi| for tangent coordinates (batched)."""
    xi = numerics.to_float(xi)
    r = np.linalg.norm(xi, axis=-1)
    out = np.empty(xi.shape[:-1] + (alg.dim,))
    out[..., 0] = np.cos(r)
    out[..., 1:] = np.sinc(r / np.pi)[..., None] * xi
    return out


def _rk4(rhs, y0: np.ndarray, t: float, max_step: float = ODE_MAX_STEP) -> np.ndarray:
    steps = max(1, math.ceil(abs(t) / max_step))
    dt = t / steps
    y = np.array(y0, dtype=float)
    for _ in range(steps):
        k1 = rhs(y)
        k2 = rhs(y + 0.5 * dt * k1)
        k3 = rhs(y + 0.5 * dt * k2)
        k4 = rhs(y + dt * k3)
        y = y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    if not np.all(np.isfinite(y)):
        raise NumericsError("exponential flow diverged")
    return y


def exp_ode(alg: CompositionAlgebra, xi: np.ndarray, t: float = 1.0,
            max_step: float = ODE_MAX_STEP) -> np.ndarray:
    """Integrate dp/dt = xi p from p(0) = 1 with RK4."""
    x = embed(numerics.to_float(xi))
    return _rk4(lambda p: alg.mul(x, p), np.broadcast_to(np.eye(alg.dim)[0], x.shape), t, max_step)


def flow_at(alg: CompositionAlgebra, q: np.ndarray, xi: np.ndarray, y0: np.ndarray,
            t: float, max_step: float = ODE_MAX_STEP) -> np.ndarray:
    """Flow of dy/dt = xi o_q y from y0."""
    x = embed(numerics.to_float(xi))
    q = numerics.to_float(q)
    return _rk4(lambda y: alg.rdiv(alg.mul(x, alg.mul(y, q)), q), y0, t, max_step)


def exp_at(alg: CompositionAlgebra, q: np.ndarray, xi: np.ndarray, t: float = 1.0,
           max_step: float = ODE_MAX_STEP):
    """exp_q(t xi) and the full solution exp_q(t xi) q.

    Returns:
        (y, y q)
    """
    y = flow_at(alg, q, xi, np.eye(alg.dim)[0], t, max_step)
    return y, alg.mul(y, numerics.to_float(q))


# Brackets and associators

def mod_product(alg: CompositionAlgebra, s: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """x o_s y = (x (y s)) / s."""
    return alg.rdiv(alg.mul(x, alg.mul(y, s)), s)


def l_assoc(alg: CompositionAlgebra, x, y, z) -> np.ndarray:
    """x (y z) - (x y) z."""
    return alg.mul(x, alg.mul(y, z)) - alg.mul(alg.mul(x, y), z)


def left_alternating_assoc(alg: CompositionAlgebra, x, y, z) -> np.ndarray:
    """a_1(x, y, z) = [x, y, z] - [y, x, z] on algebra values."""
    return l_assoc(alg, x, y, z) - l_assoc(alg, y, x, z)


def bracket_transport(alg: CompositionAlgebra, s, xi, eta) -> np.ndarray:
    """[xi, eta]^(s) = [xi, eta]^(1) + a_1(xi, eta, s) / s."""
    x, y = embed(xi), embed(eta)
    return imag(alg.commutator(x, y) + alg.rdiv(left_alternating_assoc(alg, x, y, s), s))


def bracket_commutator(alg: CompositionAlgebra, xi, eta) -> np.ndarray:
    """[xi, eta]^(1), the algebra commutator."""
    return imag(alg.commutator(embed(xi), embed(eta)))


def associator_algebraic(alg: CompositionAlgebra, s, eta, gamma, xi) -> np.ndarray:
    """Im(eta o_s (gamma o_s xi) - (eta o_s gamma) o_s xi)."""
    x, y, z = embed(eta), embed(gamma), embed(xi)
    lhs = mod_product(alg, s, x, mod_product(alg, s, y, z))
    rhs = mod_product(alg, s, mod_product(alg, s, x, y), z)
    return imag(lhs - rhs)


def bracket_fd(alg: CompositionAlgebra, s, xi, eta, cfg: Optional[DiffConfig] = None):
    """Mixed second derivative of exp(t xi) o_s exp(tau eta) minus the swapped product."""
    s = numerics.to_float(s)
    xi, eta = numerics.to_float(xi), numerics.to_float(eta)

    def f(t, tau):
        a = exp_closed(alg, t * xi)
        b = exp_closed(alg, tau * eta)
        return imag(mod_product(alg, s, a, b) - mod_product(alg, s, b, a))

    return numerics.fd_derivative(f, 0.0, 2, cfg)


def associator_fd(alg: CompositionAlgebra, s, eta, gamma, xi, cfg: Optional[DiffConfig] = None):
    """Mixed third derivative of the loop ratio (x o (y o z)) / ((x o y) o z)."""
    s = numerics.to_float(s)
    eta, gamma, xi = (numerics.to_float(v) for v in (eta, gamma, xi))
    cfg = cfg or DiffConfig(h=FD_STEP_THIRD)

    def f(t, tau, sigma):
        x = exp_closed(alg, t * eta)
        y = exp_closed(alg, tau * gamma)
        z = exp_closed(alg, sigma * xi)
        u = mod_product(alg, s, x, mod_product(alg, s, y, z))
        v = mod_product(alg, s, mod_product(alg, s, x, y), z)
        return imag(alg.rdiv(u, v))

    return numerics.fd_derivative(f, 0.0, 3, cfg)


def bracket_at(alg: CompositionAlgebra, s, xi, eta, check: bool = False,
               cfg: Optional[DiffConfig] = None) -> np.ndarray:
    """Bracket at s by transport from s = 1.

    With ``check`` the finite-difference path is evaluated as well, and at
    s = 1 the algebra commutator.

    Raises:
        ConsistencyError: if the evaluation paths disagree beyond tolerance
    """
    value = bracket_transport(alg, s, xi, eta)
    if check:
        fd = bracket_fd(alg, s, xi, eta, cfg).value
        residual = numerics.max_abs(numerics.to_float(value) - fd)
        if np.array_equal(numerics.to_float(s), np.eye(alg.dim)[0]):
            residual = max(residual, numerics.max_abs(value - bracket_commutator(alg, xi, eta)))
        if residual > TOL_FD_BRACKET:
            raise ConsistencyError(f"bracket paths disagree by {residual:.3e}", residual)
    return value


@dataclass
class BracketContext:
    """Bracket and associator tables at a fixed base point.

    Attributes:
        algebra: ambient algebra (mode decides exactness)
        s: base point
        bracket_table: b[a, b, c] = ([e_a, e_b]^(s))_c
        assoc_table: A[a, b, c, d] = ([e_a, e_b, e_c]^(s))_d
    """

    algebra: CompositionAlgebra
    s: np.ndarray
    bracket_table: np.ndarray = field(init=False, repr=False)
    assoc_table: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        alg = self.algebra
        self.s = alg.coerce(self.s)
        eye = alg.coerce(np.eye(alg.imag_dim, dtype=int))
        self.bracket_table = bracket_transport(alg, self.s, eye[:, None, :], eye[None, :, :])
        self.assoc_table = associator_algebraic(
            alg, self.s, eye[:, None, None, :], eye[None, :, None, :], eye[None, None, :, :])

    @property
    def dim(self) -> int:
        return self.algebra.imag_dim

    def bracket(self, x, y) -> np.ndarray:
        return np.einsum("...a,...b,abc->...c", x, y, self.bracket_table)

    def associator(self, x, y, z) -> np.ndarray:
        return np.einsum("...a,...b,...c,abcd->...d", x, y, z, self.assoc_table)

    def a(self, x, y, z) -> np.ndarray:
        """Left-alternating associator a_s(x, y, z) = [x, y, z] - [y, x, z]."""
        return self.associator(x, y, z) - self.associator(y, x, z)

    def jacobiator(self, x, y, z) -> np.ndarray:
        """[x, [y, z]] + [y, [z, x]] + [z, [x, y]] built from the bracket."""
        b = self.bracket
        return b(x, b(y, z)) + b(y, b(z, x)) + b(z, b(x, y))

    def ad(self, x) -> np.ndarray:
        """Matrix of y -> [x, y]."""
        return np.einsum("a,abc->cb", x, self.bracket_table)

    def killing(self) -> np.ndarray:
        """K_ab = Tr(ad_a ad_b)."""
        t = self.bracket_table
        return np.einsum("adc,bcd->ab", t, t)


def akivis_residual(ctx: BracketContext, xi, eta, gamma) -> float:
    """|Jac(xi, eta, gamma) - sum over cyclic permutations of a_s|."""
    cyc = ctx.a(xi, eta, gamma) + ctx.a(eta, gamma, xi) + ctx.a(gamma, xi, eta)
    return numerics.max_abs(ctx.jacobiator(xi, eta, gamma) - cyc)


def malcev_residual(forms: ClosedForms, xi, eta, gamma) -> float:
    """|[xi, eta, [xi, gamma]] - [[xi, eta, gamma], xi]| with closed forms at s = 1."""
    b, a = forms.bracket, forms.associator
    return numerics.max_abs(a(xi, eta, b(xi, gamma)) - b(a(xi, eta, gamma), xi))


def mutated_forms(tensors: StructureTensors) -> ClosedForms:
    """Closed forms with the psi orbit of one nonzero quadruple negated."""
    psi = tensors.psi.copy()
    index = tuple(int(i) for i in np.argwhere(psi != 0)[0])
    for perm in set(permutations(index)):
        psi[perm] = -psi[perm]
    return ClosedForms(StructureTensors(tensors.table, tensors.phi, psi, tensors.cross))


def db_check(alg: CompositionAlgebra, p, eta, gamma, xi, cfg: Optional[DiffConfig] = None) -> float:
    """|d/dt b_{exp(t xi) p}(eta, gamma) - a_p(eta, gamma, xi)| at t = 0."""
    p = numerics.to_float(p)

    def f(t):
        return bracket_transport(alg, alg.mul(exp_closed(alg, t * numerics.to_float(xi)), p),
                                 eta, gamma)

    derivative = numerics.fd_derivative(f, 0.0, 1, cfg).value
    ctx = BracketContext(alg, p)
    return numerics.max_abs(derivative - ctx.a(np.asarray(eta, float), np.asarray(gamma, float),
                                                np.asarray(xi, float)))


def brackthetas_check(alg: CompositionAlgebra, p, u, v, cfg: Optional[DiffConfig] = None) -> float:
    """|[u, v]^(p) - [u, v]^(1) - a_1(u, v, p) / p| with the bracket at p from finite differences."""
    fd = bracket_fd(alg, p, u, v, cfg).value
    x, y = embed(numerics.to_float(u)), embed(numerics.to_float(v))
    p = numerics.to_float(p)
    transported = bracket_commutator(alg, u, v) + imag(alg.rdiv(left_alternating_assoc(alg, x, y, p), p))
    return numerics.max_abs(fd - transported)


def right_nucleus_report(ctx: BracketContext) -> dict:
    """Dimensions of the tangent nucleus and of N^R of the tangent algebra.

    N^R is the common kernel of xi -> a_s(eta, gamma, xi) over basis eta, gamma.
    Returns a dict with both dimensions and the bracket closure residual.
    """
    from loopforge.services.loops import nucleus_basis

    alg = ctx.algebra
    k = ctx.dim
    eye = alg.coerce(np.eye(k, dtype=int))
    blocks = []
    for b in range(k):
        for c in range(k):
            blocks.append(np.stack([ctx.a(eye[b], eye[c], eye[j]) for j in range(k)], axis=1))
    system = np.concatenate(blocks, axis=0)
    if alg.mode == ScalarMode.FLOAT:
        system = numerics.to_float(system)
    kernel = numerics.nullspace(system)
    nucleus = nucleus_basis(alg)
    tangent_dim = numerics.rank(numerics.to_exact(nucleus[:, 1:])) if nucleus.shape[0] else 0
    closure = 0.0
    for u in kernel:
        for v in kernel:
            w = ctx.bracket(u, v)
            closure = max(closure, numerics.max_abs(system @ w))
    return {"tangent_nucleus_dim": int(tangent_dim), "lie_nucleus_dim": int(kernel.shape[0]),
            "closure_residual": float(closure)}


def killing_invariance_report(ctx: BracketContext, palg, rng: np.random.Generator,
                              samples: int = 5) -> List[SuiteEntry]:
    """Killing form checks: symmetry, definiteness, and the three invariance identities.

    * K^(h(s))(h' xi, h' eta) = K^(s)(xi, eta) for group elements h
    * ad-invariance up to Jacobiator traces
    * p-invariance up to associator traces with phi_s
    """
    from loopforge.services.pseudoauto import generator_at, group_element

    alg = ctx.algebra
    k = ctx.dim
    s = numerics.to_float(ctx.s)
    fctx = ctx if alg.mode == ScalarMode.FLOAT else BracketContext(
        _float_algebra(alg), s)
    K = fctx.killing()
    eye = np.eye(k)
    top = float(np.max(np.linalg.eigvalsh(K)))
    entries = [
        SuiteEntry.check("killing-symmetric", SUITE, numerics.max_abs(K - K.T), TOL_ALGEBRAIC),
    ]
    if k > 1:
        # zero once the largest eigenvalue sits strictly below -TOL_ALGEBRAIC
        entries.append(SuiteEntry.check("killing-negative-definite", SUITE,
                                        max(0.0, top + TOL_ALGEBRAIC), 0.0,
                                        detail=f"max eigenvalue {top:.6g}"))
    else:
        entries.append(SuiteEntry.info("killing-max-eigenvalue", SUITE, top,
                                       detail="abelian tangent algebra"))

    psi_res = 0.0
    for _ in range(samples):
        g = group_element(palg, palg.random(rng, scale=0.7))
        moved = BracketContext(fctx.algebra, g.act_full(s)).killing()
        psi_res = max(psi_res, numerics.max_abs(g.vector.T @ moved @ g.vector - K))
    entries.append(SuiteEntry.check("killing-pseudoautomorphism-invariance", SUITE, psi_res,
                                    TOL_ALGEBRAIC * 1e2, samples=samples))

    def trace_form(x, y):
        return float(x @ K @ y)

    ad_res = 0.0
    lie_res = 0.0
    for _ in range(samples):
        gamma, eta, xi = rng.standard_normal((3, k))
        J_ge = np.stack([fctx.jacobiator(w, gamma, eta) for w in eye], axis=1)
        J_gx = np.stack([fctx.jacobiator(w, gamma, xi) for w in eye], axis=1)
        value = (trace_form(fctx.bracket(gamma, eta), xi) + trace_form(eta, fctx.bracket(gamma, xi))
                 + np.trace(J_ge @ fctx.ad(xi)) + np.trace(J_gx @ fctx.ad(eta)))
        ad_res = max(ad_res, abs(value))

        x = palg.random(rng)
        phi = imag(generator_at(palg, s, x))
        A_xi = np.stack([fctx.a(xi, w, phi) for w in eye], axis=1)
        A_eta = np.stack([fctx.a(eta, w, phi) for w in eye], axis=1)
        value = (trace_form(palg.act_vector(x, xi), eta) + trace_form(xi, palg.act_vector(x, eta))
                 + np.trace(A_xi @ fctx.ad(eta)) + np.trace(A_eta @ fctx.ad(xi)))
        lie_res = max(lie_res, abs(value))
    entries.append(SuiteEntry.check("killing-ad-invariance-defect", SUITE, ad_res,
                                    TOL_ALGEBRAIC * 1e2, samples=samples))
    entries.append(SuiteEntry.check("killing-p-invariance-defect", SUITE, lie_res,
                                    TOL_ALGEBRAIC * 1e2, samples=samples))
    return entries


def _float_algebra(alg: CompositionAlgebra) -> CompositionAlgebra:
    return CompositionAlgebra(alg.tag, ScalarMode.FLOAT, alg.table)


def xilbrack_check(ctx: BracketContext, palg, x, eta, gamma) -> float:
    """|x.[eta, gamma] - [x.eta, gamma] - [eta, x.gamma] - a_s(eta, gamma, phi_s(x))|."""
    from loopforge.services.pseudoauto import generator_at

    s = numerics.to_float(ctx.s)
    phi = imag(generator_at(palg, s, x))
    act = palg.act_vector
    value = (act(x, ctx.bracket(eta, gamma)) - ctx.bracket(act(x, eta), gamma)
             - ctx.bracket(eta, act(x, gamma)) - ctx.a(eta, gamma, phi))
    return numerics.max_abs(value)


def tangent_suite(alg: CompositionAlgebra, rng: np.random.Generator, samples: int,
                  palg=None) -> List[SuiteEntry]:
    """Float-mode checks at random unit base points plus exact checks at s = 1."""
    entries: List[SuiteEntry] = []
    samples = max(samples, 5)
    k = alg.imag_dim
    falg = _float_algebra(alg)
    one = np.eye(alg.dim)[0]

    def record(name, fn, tol, n=samples):
        try:
            entries.append(SuiteEntry.check(name, SUITE, fn(), tol, samples=n))
        except (ConsistencyError, NumericsError) as exc:
            entries.append(SuiteEntry.error(name, SUITE, str(exc)))

    points = falg.random(rng, samples, unit=True)
    vecs = rng.standard_normal((samples, 3, k)) * 0.8

    def exp_agreement():
        res = 0.0
        for xi in vecs[: min(samples, 5), 0]:
            res = max(res, numerics.max_abs(exp_ode(falg, xi) - exp_closed(falg, xi)))
            q = points[0]
            res = max(res, numerics.max_abs(exp_at(falg, q, xi)[0] - exp_closed(falg, xi)))
        return res

    record("exponential-ode-agreement", exp_agreement, TOL_FD_BRACKET * 1e-2, 5)

    def flow_property():
        xi, q = vecs[0, 0], points[0]
        y1 = flow_at(falg, q, xi, exp_at(falg, q, xi, 0.3)[0], 0.4)
        return numerics.max_abs(y1 - exp_at(falg, q, xi, 0.7)[0])

    record("exponential-flow-property", flow_property, 1e-7, 1)

    orders: List[float] = []

    def bracket_paths():
        res = 0.0
        for s, (xi, eta, _) in zip(points[:5], vecs[:5]):
            fd = bracket_fd(falg, s, xi, eta)
            orders.append(fd.order)
            res = max(res, numerics.max_abs(fd.value - bracket_transport(falg, s, xi, eta)))
            res = max(res, numerics.max_abs(bracket_transport(falg, s, xi, xi)))
        return res

    record("bracket-finite-difference", bracket_paths, TOL_FD_BRACKET, 5)
    if orders:
        # shortfall below the second-order rate
        worst = min(orders)
        entries.append(SuiteEntry.check("bracket-finite-difference-order", SUITE,
                                        max(0.0, MIN_FD_ORDER - worst), 0.0,
                                        samples=len(orders), detail=f"order={worst:.3f}"))

    def assoc_paths():
        res = 0.0
        forms = ClosedForms(falg.tensors())
        for s, (eta, gamma, xi) in list(zip(points[:2], vecs[:2])) + [(one, vecs[2])]:
            fd = associator_fd(falg, s, eta, gamma, xi).value
            res = max(res, numerics.max_abs(fd - associator_algebraic(falg, s, eta, gamma, xi)))
        eta, gamma, xi = vecs[3]
        res = max(res, numerics.max_abs(associator_algebraic(falg, one, eta, gamma, xi)
                                        - forms.associator(eta, gamma, xi)))
        return res

    record("associator-finite-difference", assoc_paths, TOL_FD_ASSOCIATOR, 3)

    def akivis():
        res = 0.0
        for s, (xi, eta, gamma) in zip(points[:5], vecs[:5]):
            res = max(res, akivis_residual(BracketContext(falg, s), xi, eta, gamma))
        return res

    record("akivis-identity", akivis, TOL_ALGEBRAIC * 1e2, 5)

    def db():
        res = 0.0
        for s, (eta, gamma, xi) in zip(points[:3], vecs[:3]):
            res = max(res, db_check(falg, s, eta, gamma, xi))
        return res

    record("bracket-derivative-along-flow", db, TOL_FD_ASSOCIATOR, 3)

    def thetas():
        return max(brackthetas_check(falg, s, u, v) for s, (u, v, _) in zip(points[:3], vecs[:3]))

    record("bracket-transport-from-unit", thetas, TOL_FD_BRACKET, 3)

    def alternating():
        ctx = BracketContext(falg, points[0])
        xi, eta = vecs[0, 0], vecs[0, 1]
        return numerics.max_abs(ctx.associator(xi, xi, eta))

    record("associator-left-alternative", alternating, TOL_ALGEBRAIC)

    ctx_one = BracketContext(falg, one)
    if alg.tag == AlgebraTag.O:
        K = ctx_one.killing()
        entries.append(SuiteEntry.check("killing-at-unit", SUITE,
                                        numerics.max_abs(K - OCTONION_KILLING * np.eye(k)),
                                        TOL_ALGEBRAIC))
    if palg is not None:
        entries.extend(killing_invariance_report(BracketContext(falg, points[0]), palg, rng))

        def xil():
            res = 0.0
            for s, (eta, gamma, _) in zip(points[:3], vecs[:3]):
                res = max(res, xilbrack_check(BracketContext(falg, s), palg, palg.random(rng),
                                              eta, gamma))
            return res

        record("p-action-on-bracket", xil, TOL_ALGEBRAIC * 1e2, 3)

    report = right_nucleus_report(BracketContext(falg, points[0]))
    entries.append(SuiteEntry.info("tangent-nucleus-dimension", SUITE,
                                   report["tangent_nucleus_dim"]))
    entries.append(SuiteEntry.info("lie-nucleus-dimension", SUITE, report["lie_nucleus_dim"]))
    entries.append(SuiteEntry.check("lie-nucleus-bracket-closure", SUITE,
                                    report["closure_residual"], TOL_ALGEBRAIC * 1e2))
    return entries


def exact_tangent_suite(alg: CompositionAlgebra, rng: np.random.Generator,
                        samples: int, forms: Optional[ClosedForms] = None) -> List[SuiteEntry]:
    """Closed-form identities at s = 1 in rational arithmetic."""
    forms = forms or ClosedForms(alg.tensors())
    k = alg.imag_dim
    vecs = numerics.random_rational(rng, (samples, 3, k))
    ctx = BracketContext(alg, alg.one())
    entries = []
    malcev = max(malcev_residual(forms, *v) for v in vecs)
    entries.append(SuiteEntry.check("malcev-identity", SUITE, malcev, 0.0, samples=samples))
    akivis = max(akivis_residual(ctx, *v) for v in vecs[: min(samples, 20)])
    entries.append(SuiteEntry.check("akivis-identity-exact", SUITE, akivis, 0.0,
                                    samples=min(samples, 20)))
    closed = max(
        max(numerics.max_abs(ctx.bracket(x, y) - forms.bracket(x, y)),
            numerics.max_abs(ctx.associator(x, y, z) - forms.associator(x, y, z)))
        for x, y, z in vecs[: min(samples, 20)]
    )
    entries.append(SuiteEntry.check("closed-forms-at-unit", SUITE, closed, 0.0,
                                    samples=min(samples, 20)))
    return entries
