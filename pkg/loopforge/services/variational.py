"""Torsion energy, the Chern-Simons type functional and the energy flow.

Integrals are periodic trapezoid sums over the uniform grid of the torus.
Grid quantities are flattened to (P, ...) in the C order of
``TorusDomain.grid_points``.
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np

from loopforge.constants import (
    FLOW_ARMIJO,
    FLOW_INITIAL_STEP,
    FLOW_LOG_EVERY,
    FLOW_MAX_BACKTRACKS,
    FLOW_MAX_ITERATIONS,
    FLOW_STEP_GROWTH,
    FLOW_TOLERANCE,
    TOL_ALGEBRAIC,
    TOL_FIELD,
    TOL_GAUGE,
    TOL_VARIATION,
)
from loopforge.errors import AlgebraError, LineSearchError, LoopforgeError
from loopforge.logging_config import get_logger
from loopforge.reports.models import FlowRecord, FlowSummary, FunctionalReport, SuiteEntry
from loopforge.services import numerics
from loopforge.services.algebra import AlgebraTag, embed, imag
from loopforge.services.bundle import (
    TrivializedBundle,
    deformation_step,
    gauge_transform,
    kernel_connection,
    random_bundle_fields,
    zero_connection,
)
from loopforge.services.fields import (
    ConstantField,
    ExpField,
    FormField,
    LoopField,
    ProductField,
    TorusDomain,
    TrigField,
    central_difference,
    jet_imag,
    one_parameter_field,
)
from loopforge.services.numerics import DiffConfig
from loopforge.services.phi_maps import PhiMap, lambda_compute, phi_bracket_fit
from loopforge.services.pseudoauto import PAlgebra
from loopforge.services.tangent import BracketContext

logger = get_logger(__name__)

SUITE = "variational"

CYCLIC = ((0, 1, 2), (1, 2, 0), (2, 0, 1))


class Metric(str, Enum):
    """Inner product on the tangent algebra used by the energy."""

    EUCLIDEAN = "euclidean"
    KILLING = "killing"


def metric_matrix(alg, metric: Metric = Metric.EUCLIDEAN) -> np.ndarray:
    """delta, or -K/24 with K the Killing form at the unit.

    Raises:
        AlgebraError: for the Killing metric on an abelian tangent algebra
    """
    if Metric(metric) == Metric.EUCLIDEAN:
        return np.eye(alg.imag_dim)
    killing = np.asarray(BracketContext(alg, alg.one()).killing(), dtype=float)
    if numerics.max_abs(killing) == 0.0:
        raise AlgebraError(f"the Killing form of {alg.tag.value} is zero; use the euclidean metric")
    return -killing / 24.0


def phi_lambda(palg: PAlgebra) -> float:
    """lambda with phi_s phi_s^t = lambda on the tangent space."""
    lam = lambda_compute(PhiMap(palg, palg.algebra.one()))
    if lam == 0.0:
        raise AlgebraError("phi_s vanishes identically; lambda is undefined")
    return lam


def omega_hat_density(palg: PAlgebra, s: np.ndarray) -> np.ndarray:
    """Sum of |phi_s(X_i)|^2 over a metric-orthonormal basis of p, per point."""
    alg = palg.algebra
    gs = np.einsum("kij,pj->pki", palg.full, s)
    phi = imag(alg.rdiv(gs, s[:, None]))
    return np.einsum("pan,ab,pbn->p", phi, np.linalg.inv(palg.metric), phi)


# Torsion energy

def energy(palg: PAlgebra, s_field: LoopField, a_field: FormField, domain: TorusDomain,
           metric: Metric = Metric.EUCLIDEAN) -> float:
    """Integral of |T|^2 from analytic torsion sampled on the grid."""
    pts = domain.grid_points()
    t = TrivializedBundle.from_fields(palg, s_field, a_field, pts, order=1).torsion_value
    m = metric_matrix(palg.algebra, metric)
    return domain.volume / len(pts) * float(np.einsum("pia,ab,pib->", t, m, t))


def dirichlet_energy(palg: PAlgebra, s_field: LoopField, a_field: FormField,
                     domain: TorusDomain) -> Tuple[float, float]:
    """(D, E) with D = E + integral of sum_i |phi_s(X_i)|^2."""
    pts = domain.grid_points()
    e = energy(palg, s_field, a_field, domain)
    density = omega_hat_density(palg, s_field(palg.algebra, pts))
    return e + domain.volume / len(pts) * float(np.sum(density)), e


@dataclass
class GridEnergy:
    """Discrete torsion energy of grid sections and its exact gradient.

    With D_i the periodic central difference and G(A_i) the full action,
    q_i = D_i s + G(A_i) s and T_i = Im(q_i / s). The divergence returned by
    ``divergence`` satisfies dE/dt = -2 h^d sum <xi, div> along s -> exp(t xi) s.
    """

    palg: PAlgebra
    domain: TorusDomain
    metric: np.ndarray

    @property
    def shape(self) -> tuple:
        return (self.domain.grid,) * self.domain.dimension

    @property
    def cell(self) -> float:
        return self.domain.spacing ** self.domain.dimension

    def _diff(self, values: np.ndarray, axis: int) -> np.ndarray:
        grid = values.reshape(self.shape + values.shape[1:])
        return central_difference(grid, axis, self.domain.spacing).reshape(values.shape)

    def torsion(self, s: np.ndarray, a: np.ndarray):
        """Returns (T, q), shapes (P, d, n-1) and (P, d, n)."""
        d = self.domain.dimension
        ds = np.stack([self._diff(s, i) for i in range(d)], axis=1)
        q = ds + np.einsum("pik,knm,pm->pin", a, self.palg.full, s)
        return imag(self.palg.algebra.rdiv(q, s[:, None])), q

    def energy(self, s: np.ndarray, a: np.ndarray) -> float:
        t, _ = self.torsion(s, a)
        return self.cell * float(np.einsum("pia,ab,pib->", t, self.metric, t))

    def divergence(self, s: np.ndarray, a: np.ndarray) -> np.ndarray:
        """Negative adjoint of the linearized torsion map applied to T, shape (P, n-1)."""
        alg = self.palg.algebra
        t, q = self.torsion(s, a)
        z = embed(t @ self.metric)
        zs = alg.mul(z, s[:, None])
        g = np.einsum("pik,knm,pin->pm", a, self.palg.full, zs) - np.sum(alg.mul(z, q), axis=1)
        for i in range(self.domain.dimension):
            g = g - self._diff(zs[:, i], i)
        return -imag(alg.mul(g, alg.conj(s)))


def energy_gradient_check(grid: GridEnergy, s: np.ndarray, a: np.ndarray, xi: np.ndarray,
                          cfg: Optional[DiffConfig] = None) -> float:
    """Relative gap between d/dt E(exp(t xi) s) and -2 h^d sum <xi, div>."""
    alg = grid.palg.algebra
    numeric = float(numerics.fd_derivative(
        lambda t: grid.energy(deformation_step(alg, s, xi, t)[0], a), 0.0, 1, cfg).value)
    predicted = -2.0 * grid.cell * float(np.sum(xi * grid.divergence(s, a)))
    return abs(numeric - predicted) / max(abs(predicted), abs(numeric), 1e-300)


# Energy flow

@dataclass
class FlowState:
    """Grid section under the energy flow; the connection stays fixed."""

    s: np.ndarray
    a: np.ndarray
    domain: TorusDomain
    step: float = FLOW_INITIAL_STEP
    iteration: int = 0
    energies: List[float] = field(default_factory=list)
    converged: bool = False
    line_search_failed: bool = False

    @classmethod
    def sample(cls, palg: PAlgebra, s_field: LoopField, a_field: FormField, domain: TorusDomain,
               step: float = FLOW_INITIAL_STEP) -> "FlowState":
        pts = domain.grid_points()
        return cls(s_field(palg.algebra, pts), a_field.jet(pts, order=1).value, domain, step)

    @property
    def monotone(self) -> bool:
        return all(b <= a for a, b in zip(self.energies, self.energies[1:]))


def armijo_step(grid: GridEnergy, state: FlowState, div: np.ndarray, value: float):
    """Backtrack from ``state.step`` until sufficient decrease.

    Returns:
        (new section, new energy, accepted step, norm drift)

    Raises:
        LineSearchError: if no step decreases the energy enough
    """
    alg = grid.palg.algebra
    slope = 2.0 * grid.cell * float(np.sum(div * div))
    step = state.step
    for _ in range(FLOW_MAX_BACKTRACKS):
        moved, drift = deformation_step(alg, state.s, div, step)
        trial = grid.energy(moved, state.a)
        if trial <= value - FLOW_ARMIJO * step * slope:
            return moved, trial, step, drift
        step *= 0.5
    raise LineSearchError(f"no sufficient decrease after {FLOW_MAX_BACKTRACKS} backtracks "
                          f"(last step {step:.3e})")


def energy_flow(palg: PAlgebra, state: FlowState, metric: Metric = Metric.EUCLIDEAN,
                max_iterations: int = FLOW_MAX_ITERATIONS,
                tolerance: float = FLOW_TOLERANCE) -> Tuple[FlowState, List[FlowRecord]]:
    """Steepest descent s <- exp(step div) s until |div|_inf < tolerance.

    A failed line search ends the run and keeps the last accepted state,
    which is also the lowest-energy one.
    """
    grid = GridEnergy(palg, state.domain, metric_matrix(palg.algebra, metric))
    records: List[FlowRecord] = []
    value = grid.energy(state.s, state.a)
    if not state.energies:
        state.energies.append(value)
    while True:
        div = grid.divergence(state.s, state.a)
        size = numerics.max_abs(div)
        if size < tolerance:
            state.converged = True
            break
        if state.iteration >= max_iterations:
            break
        try:
            moved, value, step, drift = armijo_step(grid, state, div, value)
        except LineSearchError as exc:
            logger.warning(f"Line search failed at iteration {state.iteration}: {exc}",
                           extra={"iteration": state.iteration})
            state.line_search_failed = True
            break
        state.s = moved
        state.iteration += 1
        state.energies.append(value)
        state.step = step * FLOW_STEP_GROWTH
        records.append(FlowRecord(iteration=state.iteration, energy=value, divergence=size,
                                  step=step, drift=drift))
        if state.iteration % FLOW_LOG_EVERY == 0:
            logger.info(f"Flow iteration {state.iteration}: E={value:.6e} |div|={size:.3e}",
                        extra={"iteration": state.iteration, "residual": size})
    logger.info(f"Flow finished after {state.iteration} iterations "
                f"(converged={state.converged}, E={value:.6e})")
    return state, records


def flow_summary(palg: PAlgebra, state: FlowState, metric: Metric = Metric.EUCLIDEAN) -> FlowSummary:
    grid = GridEnergy(palg, state.domain, metric_matrix(palg.algebra, metric))
    return FlowSummary(
        iterations=state.iteration,
        converged=state.converged,
        line_search_failed=state.line_search_failed,
        energy=grid.energy(state.s, state.a),
        divergence=numerics.max_abs(grid.divergence(state.s, state.a)),
        monotone=state.monotone,
        omega_hat_norm=float(np.mean(omega_hat_density(palg, state.s))),
    )


# Chern-Simons type functional on T^3

def phi_bracket_field(palg: PAlgebra, phi: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """[x, y]_phi = phi_s([phi_s^t x, phi_s^t y]_p) with phi of shape (P, m, n-1)."""
    adj = np.einsum("ab,pbn->pan", np.linalg.inv(palg.metric), phi)
    px = np.einsum("pan,pn->pa", adj, x)
    py = np.einsum("pan,pn->pa", adj, y)
    return np.einsum("pa,pan->pn", palg.bracket(px, py), phi)


def cs_density(palg: PAlgebra, bundle: TrivializedBundle, lam: float) -> np.ndarray:
    """<T wedge Fhat> - (1/6 lambda^2) <T wedge [T wedge T]_phi> as a density."""
    if bundle.dimension != 3:
        raise AlgebraError(f"the Chern-Simons functional needs d = 3, got {bundle.dimension}")
    t = bundle.torsion_value
    fh = bundle.fhat_value
    linear = sum(np.einsum("pn,pn->p", t[:, i], fh[:, j, k]) for i, j, k in CYCLIC)
    cubic = np.einsum("pn,pn->p", t[:, 0], phi_bracket_field(palg, bundle.phi_im.value, t[:, 1], t[:, 2]))
    return linear - cubic / lam ** 2


def cs_functional(palg: PAlgebra, s_field: LoopField, a_field: FormField, domain: TorusDomain) -> float:
    pts = domain.grid_points()
    bundle = TrivializedBundle.from_fields(palg, s_field, a_field, pts, order=1)
    return domain.volume / len(pts) * float(np.sum(cs_density(palg, bundle, phi_lambda(palg))))


def cs_variation_check(palg: PAlgebra, s_field: LoopField, a_field: FormField, xi_form: FormField,
                       domain: TorusDomain, cfg: Optional[DiffConfig] = None) -> Tuple[float, float, float]:
    """d/dt F along A + t phi_s^t(xi) / lambda against 2 integral <xi wedge Fhat>.

    Returns:
        (numeric derivative, predicted derivative, relative gap)
    """
    pts = domain.grid_points()
    lam = phi_lambda(palg)
    base = TrivializedBundle.from_fields(palg, s_field, a_field, pts, order=1)
    xi = xi_form.jet(pts, order=1)
    shift = base.adjoint_jet(xi).scale(1.0 / lam)
    weight = domain.volume / len(pts)

    def value(t):
        moved = TrivializedBundle(palg, base.s, base.a + shift.scale(t))
        return weight * float(np.sum(cs_density(palg, moved, lam)))

    numeric = float(numerics.fd_derivative(value, 0.0, 1, cfg).value)
    fh = base.fhat_value
    predicted = 2.0 * weight * float(sum(np.sum(xi.value[:, i] * fh[:, j, k]) for i, j, k in CYCLIC))
    gap = abs(numeric - predicted)
    return numeric, predicted, gap / max(abs(predicted), abs(numeric), 1e-300) if gap else 0.0


def cs_gauge_residual(palg: PAlgebra, s_field: LoopField, a_field: FormField, u_field: TrigField,
                      points: np.ndarray) -> float:
    """Relative change of the summed density under (s, A) -> (u^-1 s, u*A)."""
    lam = phi_lambda(palg)
    gauge = gauge_transform(palg, s_field, a_field, u_field, points)
    before = cs_density(palg, gauge.original, lam)
    after = cs_density(palg, gauge.transformed, lam)
    return abs(float(np.sum(after - before))) / max(float(np.sum(np.abs(before))), 1e-300)


def torsion_free_value(palg: PAlgebra, s_field: LoopField, domain: TorusDomain) -> float:
    """F for A = -phi_s^t(theta_s) / lambda, whose torsion vanishes identically."""
    pts = domain.grid_points()
    lam = phi_lambda(palg)
    flat = TrivializedBundle.from_fields(palg, s_field, zero_connection(3, palg), pts, order=2)
    a = flat.adjoint_jet(jet_imag(flat.theta)).scale(-1.0 / lam)
    bundle = TrivializedBundle(palg, flat.s, a)
    return domain.volume / len(pts) * float(np.sum(cs_density(palg, bundle, lam)))


def s_variation_report(palg: PAlgebra, s_field: LoopField, a_field: FormField, eta: TrigField,
                       domain: TorusDomain, cfg: Optional[DiffConfig] = None) -> Tuple[float, float, float]:
    """d/dt F(exp(t eta) s) against the critical-condition integrand.

    -integral <eta, 2 dH Fhat + (1 - kappa/lambda^2) [Fhat, T] + (2 kappa / 3 lambda^2) [T, [T, T]]>
    with [., .]_phi = kappa [., .]^(s).

    Returns:
        (numeric derivative, formula value, kappa)
    """
    alg = palg.algebra
    one = alg.one()
    lam = phi_lambda(palg)
    kappa, _ = phi_bracket_fit(PhiMap(palg, one), BracketContext(alg, one))
    pts = domain.grid_points()
    weight = domain.volume / len(pts)

    def value(t):
        moved = ProductField(ExpField(eta.scaled(t)), s_field)
        bundle = TrivializedBundle.from_fields(palg, moved, a_field, pts, order=1)
        return weight * float(np.sum(cs_density(palg, bundle, lam)))

    numeric = float(numerics.fd_derivative(value, 0.0, 1, cfg).value)
    bundle = TrivializedBundle.from_fields(palg, s_field, a_field, pts, order=2)
    fh = bundle.fhat
    t = bundle.torsion_value
    a = bundle.a.value
    dhf = sum(fh.grad[:, i, j, k] + bundle.act(a[:, i], fh.value[:, j, k]) for i, j, k in CYCLIC)
    ft = sum(bundle.bracket(fh.value[:, j, k], t[:, i]) for i, j, k in CYCLIC)
    ttt = sum(bundle.bracket(t[:, i], 2.0 * bundle.bracket(t[:, j], t[:, k])) for i, j, k in CYCLIC)
    integrand = 2.0 * dhf + (1.0 - kappa / lam ** 2) * ft + (2.0 * kappa / (3.0 * lam ** 2)) * ttt
    formula = -weight * float(np.sum(eta(pts) * integrand))
    return numeric, formula, kappa


# Critical points

def wedge_associator(bundle: TrivializedBundle) -> np.ndarray:
    """[T wedge T wedge T]^(s) on T^3 as a (P, n-1) density; zero for d < 3."""
    t = bundle.torsion_value
    total = np.zeros_like(t[:, 0])
    if bundle.dimension < 3:
        return total
    for i, j, k in CYCLIC:
        total = total + bundle.associator(t[:, i], t[:, j], t[:, k]) - bundle.associator(t[:, j], t[:, i], t[:, k])
    return total


def critical_detect(palg: PAlgebra, s_field: LoopField, a_field: FormField,
                    domain: TorusDomain) -> FunctionalReport:
    """Extanton and divergence-free diagnostics of (s, A) on the grid."""
    pts = domain.grid_points()
    bundle = TrivializedBundle.from_fields(palg, s_field, a_field, pts, order=1)
    grid = GridEnergy(palg, domain, metric_matrix(palg.algebra))
    s = s_field(palg.algebra, pts)
    a = bundle.a.value
    return FunctionalReport(
        name="critical-point",
        value=grid.energy(s, a),
        fhat_norm=numerics.max_abs(bundle.fhat_value),
        divergence_norm=numerics.max_abs(grid.divergence(s, a)),
        associator_norm=numerics.max_abs(wedge_associator(bundle)),
    )


def ricci_star(palg: PAlgebra, riem: np.ndarray) -> np.ndarray:
    """Riem_ijkl phi_ija phi_klb for curvature data on a 7-dimensional space."""
    if palg.algebra.tag != AlgebraTag.O:
        raise AlgebraError("the contraction needs the octonion 3-form")
    phi = np.asarray(palg.algebra.tensors().phi, dtype=float)
    riem = np.asarray(riem, dtype=float)
    if riem.shape != (7, 7, 7, 7):
        raise AlgebraError(f"curvature must have shape (7, 7, 7, 7), got {riem.shape}")
    return np.einsum("ijkl,ija,klb->ab", riem, phi, phi)


def round_sphere_curvature(dim: int = 7) -> np.ndarray:
    """R_ijkl = delta_ik delta_jl - delta_il delta_jk."""
    eye = np.eye(dim)
    return np.einsum("ik,jl->ijkl", eye, eye) - np.einsum("il,jk->ijkl", eye, eye)


# Suite

def variational_suite(palg: PAlgebra, rng: np.random.Generator, domain: TorusDomain,
                      points: int) -> List[SuiteEntry]:
    """Energy, Dirichlet, flow-gradient and Chern-Simons checks."""
    alg = palg.algebra
    d = domain.dimension
    entries: List[SuiteEntry] = []

    def record(name, fn, tol, report_only=False, detail=""):
        try:
            value = float(fn())
        except LoopforgeError as exc:
            logger.warning(f"{name} failed: {exc}", extra={"suite": SUITE, "identity": name})
            entries.append(SuiteEntry.error(name, SUITE, str(exc)))
            return
        if report_only:
            entries.append(SuiteEntry.info(name, SUITE, value, detail))
        else:
            entries.append(SuiteEntry.check(name, SUITE, value, tol, samples=points, detail=detail))

    s_field, a_field = random_bundle_fields(palg, rng, domain)
    xi = rng.standard_normal(alg.imag_dim)
    xi = xi / np.linalg.norm(xi)
    line = one_parameter_field(alg, d, xi)
    zero = zero_connection(d, palg)
    record("energy-one-parameter",
           lambda: abs(energy(palg, line, zero, domain) - domain.volume) / domain.volume, TOL_FIELD)
    record("energy-constant-section",
           lambda: energy(palg, ConstantField(alg.random(rng, unit=True)), zero, domain), TOL_ALGEBRAIC)

    def omega_norm():
        lam = phi_lambda(palg)
        dens = omega_hat_density(palg, s_field(alg, domain.sample_points(rng, points)))
        return numerics.max_abs(dens - lam * alg.imag_dim)

    record("omega-hat-pointwise-norm", omega_norm, TOL_ALGEBRAIC)

    def dirichlet_offset():
        dirichlet, e = dirichlet_energy(palg, s_field, a_field, domain)
        expected = phi_lambda(palg) * alg.imag_dim * domain.volume
        return abs(dirichlet - e - expected) / expected

    record("dirichlet-energy-offset", dirichlet_offset, TOL_FIELD)

    if alg.tag != AlgebraTag.C:
        record("killing-energy-ratio", lambda: energy(palg, s_field, a_field, domain, Metric.KILLING)
               / energy(palg, s_field, a_field, domain), 0.0, report_only=True)

    flat = TorusDomain(dimension=2, grid=16)
    s2, a2 = random_bundle_fields(palg, rng, flat, max_frequency=1)
    state = FlowState.sample(palg, s2, a2, flat)
    grid = GridEnergy(palg, flat, metric_matrix(alg))
    direction = rng.standard_normal(state.s.shape[:1] + (alg.imag_dim,))
    record("energy-gradient-adjoint", lambda: energy_gradient_check(grid, state.s, state.a, direction),
           TOL_VARIATION)
    circle = FlowState.sample(palg, one_parameter_field(alg, 2, xi), zero_connection(2, palg), flat)
    record("constant-torsion-divergence",
           lambda: numerics.max_abs(grid.divergence(circle.s, circle.a)), TOL_FIELD)

    if d == 3:
        xi_form = FormField.random(rng, d, alg.imag_dim)
        u_field = TrigField.random(rng, d, palg.dim)
        eta = TrigField.random(rng, d, alg.imag_dim)
        record("cs-first-variation",
               lambda: cs_variation_check(palg, s_field, a_field, xi_form, domain)[2], TOL_VARIATION)
        record("cs-gauge-invariance",
               lambda: cs_gauge_residual(palg, s_field, a_field, u_field,
                                         domain.sample_points(rng, max(8, points // 5))), TOL_GAUGE)
        record("cs-vanishing-torsion", lambda: abs(torsion_free_value(palg, s_field, domain)), TOL_FIELD)
        try:
            numeric, formula, kappa = s_variation_report(palg, s_field, a_field, eta, domain)
            entries.append(SuiteEntry.info("cs-section-variation", SUITE, abs(numeric - formula),
                                           detail=f"numeric={numeric:.12g} formula={formula:.12g} "
                                                  f"kappa={kappa:.12g}"))
        except LoopforgeError as exc:
            entries.append(SuiteEntry.error("cs-section-variation", SUITE, str(exc)))

    if alg.tag == AlgebraTag.O:
        report = critical_detect(palg, ConstantField(alg.one()), kernel_connection(palg, d), domain)
        record("extanton-fhat", lambda: report.fhat_norm, TOL_ALGEBRAIC)
        record("extanton-divergence", lambda: report.divergence_norm, TOL_ALGEBRAIC)
        record("ricci-star-round-sphere",
               lambda: numerics.max_abs(ricci_star(palg, round_sphere_curvature()) - 12.0 * np.eye(7)),
               TOL_ALGEBRAIC)

    logger.info(f"Variational suite: {sum(e.passed for e in entries)}/{len(entries)} passed",
                extra={"suite": SUITE, "algebra": alg.tag.value})
    return entries
