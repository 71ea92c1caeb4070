"""The map phi_s from p to the tangent algebra, its adjoint and the phi-bracket.

phi_s(x) is the imaginary part of (G_x s) / s, the generator field of the full
action read at s. The adjoint is taken against the Euclidean metric on Im L and
the Frobenius metric of the defining matrices on p.
"""
from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np

from loopforge.constants import (
    OCTONION_K,
    OCTONION_KERNEL_DIM,
    OCTONION_LAMBDA,
    TOL_ALGEBRAIC,
    TOL_CONSTANT_K,
)
from loopforge.errors import ConsistencyError
from loopforge.logging_config import get_logger
from loopforge.reports.models import SuiteEntry
from loopforge.services import numerics
from loopforge.services.algebra import AlgebraTag, embed, imag
from loopforge.services.pseudoauto import PAlgebra, PsiElement, generator_at, group_element
from loopforge.services.tangent import BracketContext

logger = get_logger(__name__)

SUITE = "phi"

EIGEN_CUT = 1e-9

ANNIHILATOR_DIMENSIONS: Dict[AlgebraTag, Dict[str, int]] = {
    AlgebraTag.O: {"kernel": OCTONION_KERNEL_DIM, "ann_phi": OCTONION_KERNEL_DIM,
                   "ann_b": OCTONION_KERNEL_DIM},
    AlgebraTag.H: {"ann_phi": 10},
    AlgebraTag.C: {"kernel": 3},
}
"""Known dimensions: g2 for the octonions, sp(2) for the quaternions, su(2) for the complex numbers."""


@dataclass
class PhiMap:
    """phi_s as a matrix of shape (dim Im L, dim p).

    Attributes:
        palg: Lie algebra data
        s: base point
        matrix: columns phi_s(X_b)
        adjoint: phi_s^t, shape (dim p, dim Im L)
    """

    palg: PAlgebra
    s: np.ndarray
    matrix: np.ndarray = field(init=False, repr=False)
    adjoint: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.s = numerics.to_float(self.s)
        eye = np.eye(self.palg.dim)
        self.matrix = imag(generator_at(self.palg, self.s, eye)).T
        self.adjoint = np.linalg.solve(self.palg.metric, self.matrix.T)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x) @ self.matrix.T

    def transpose(self, xi: np.ndarray) -> np.ndarray:
        """phi_s^t(xi) in p coordinates."""
        return np.asarray(xi) @ self.adjoint.T

    @property
    def gram(self) -> np.ndarray:
        """phi_s phi_s^t on Im L."""
        return self.matrix @ self.adjoint

    def rank(self) -> int:
        return numerics.rank(self.matrix)

    def kernel(self) -> np.ndarray:
        return numerics.nullspace(self.matrix)

    def bracket(self, xi: np.ndarray, eta: np.ndarray) -> np.ndarray:
        """[xi, eta]_phi = phi_s([phi_s^t xi, phi_s^t eta]_p)."""
        return self(self.palg.bracket(self.transpose(xi), self.transpose(eta)))


def phi_at(palg: PAlgebra, s: np.ndarray, x: np.ndarray) -> np.ndarray:
    """phi_s(x) for p coordinates ``x``."""
    return imag(generator_at(palg, numerics.to_float(s), x))


def phi_fd(palg: PAlgebra, s: np.ndarray, x: np.ndarray) -> np.ndarray:
    """d/dt (exp(t x)(s)) / s at t = 0, by finite differences."""
    alg = palg.algebra
    s = numerics.to_float(s)

    def f(t):
        return imag(alg.rdiv(group_element(palg, t * np.asarray(x)).act_full(s), s))

    return numerics.fd_derivative(f, 0.0, 1).value


def lambda_compute(phi: PhiMap) -> float:
    """The eigenvalue of phi_s phi_s^t on its image.

    Raises:
        ConsistencyError: if the nonzero spectrum is not a single value
    """
    eig = np.linalg.eigvalsh(0.5 * (phi.gram + phi.gram.T))
    top = float(np.max(np.abs(eig))) if eig.size else 0.0
    nonzero = eig[np.abs(eig) > EIGEN_CUT * max(top, 1.0)]
    if nonzero.size == 0:
        return 0.0
    spread = float(np.max(nonzero) - np.min(nonzero))
    if spread > EIGEN_CUT * max(top, 1.0):
        raise ConsistencyError(f"phi_s phi_s^t has a non-scalar spectrum (spread {spread:.3e})",
                               spread)
    return float(np.mean(nonzero))


def projection_residual(phi: PhiMap, lam: float) -> float:
    """|(phi^t phi)^2 - lambda phi^t phi|."""
    p = phi.adjoint @ phi.matrix
    return numerics.max_abs(p @ p - lam * p)


def fit_k(phi: PhiMap) -> tuple:
    """Fit phi_1(E_bc)_a = 2 k phi_abc on the so(7) basis; returns (k, residual)."""
    phi3 = phi.palg.algebra.tensors().phi
    k = phi3.shape[0]
    target = np.array([2.0 * phi3[:, b, c] for b in range(k) for c in range(b + 1, k)]).T
    return numerics.lstsq_fit(target, phi.matrix)


def phi_bracket_fit(phi: PhiMap, ctx: BracketContext) -> tuple:
    """Fit [., .]_phi = kappa [., .]^(s) on basis pairs; returns (kappa, residual)."""
    k = ctx.dim
    eye = np.eye(k)
    base = np.array([ctx.bracket(eye[a], eye[b]) for a in range(k) for b in range(k)])
    phib = np.array([phi.bracket(eye[a], eye[b]) for a in range(k) for b in range(k)])
    return numerics.lstsq_fit(base, phib)


def xiphi_residual(phi: PhiMap, ctx: BracketContext, x: np.ndarray, y: np.ndarray) -> float:
    """|x.phi(y) - y.phi(x) - phi([x, y]_p) - [phi(x), phi(y)]^(s)|."""
    palg = phi.palg
    lhs = palg.act_vector(x, phi(y)) - palg.act_vector(y, phi(x))
    rhs = phi(palg.bracket(x, y)) + ctx.bracket(phi(x), phi(y))
    return numerics.max_abs(lhs - rhs)


def piqsact_residual(phi: PhiMap, ctx: BracketContext, lam: float, xi: np.ndarray,
                     eta: np.ndarray) -> float:
    """|phi^t(xi).eta - (1/2 lambda)[xi, eta]_phi - (lambda/2)[xi, eta]^(s)|."""
    lhs = phi.palg.act_vector(phi.transpose(xi), eta)
    rhs = phi.bracket(xi, eta) / (2.0 * lam) + 0.5 * lam * ctx.bracket(xi, eta)
    return numerics.max_abs(lhs - rhs)


def _stacked_map(palg: PAlgebra, columns) -> np.ndarray:
    return np.stack([np.concatenate([np.ravel(v) for v in columns(e)]) for e in np.eye(palg.dim)],
                    axis=1)


def annihilators(phi: PhiMap, ctx: BracketContext) -> Dict[str, np.ndarray]:
    """ker phi_s, Ann(phi_s) and Ann(b_s) as row bases in p coordinates."""
    palg = phi.palg
    k = ctx.dim
    eye_l = np.eye(k)
    eye_p = np.eye(palg.dim)

    def ann_b(x):
        return [palg.act_vector(x, ctx.bracket(eye_l[a], eye_l[b]))
                - ctx.bracket(palg.act_vector(x, eye_l[a]), eye_l[b])
                - ctx.bracket(eye_l[a], palg.act_vector(x, eye_l[b]))
                for a in range(k) for b in range(k)]

    def ann_phi(x):
        return [palg.act_vector(x, phi(y)) - phi(palg.bracket(x, y)) for y in eye_p]

    b_map = _stacked_map(palg, ann_b)
    phi_map = _stacked_map(palg, ann_phi)
    return {
        "kernel": phi.kernel(),
        "ann_phi": numerics.nullspace(phi_map),
        "ann_b": numerics.nullspace(b_map),
        "_maps": {"kernel": phi.matrix, "ann_phi": phi_map, "ann_b": b_map},
    }


def inclusion_residual(spaces: Dict[str, np.ndarray]) -> float:
    """ker phi_s in Ann(phi_s) in Ann(b_s): apply each larger defining map to the smaller basis."""
    maps = spaces["_maps"]
    res = 0.0
    for small, large in (("kernel", "ann_phi"), ("ann_phi", "ann_b")):
        basis = spaces[small]
        if basis.shape[0]:
            res = max(res, numerics.max_abs(basis @ maps[large].T))
    return res


def ad_s(alg, s: np.ndarray, v: np.ndarray) -> np.ndarray:
    """(s v) / s on tangent coordinates."""
    return imag(alg.rdiv(alg.mul(s, embed(v)), s))


def quat_cplx_checks(palg: PAlgebra, rng: np.random.Generator, samples: int) -> List[SuiteEntry]:
    """Specializations for the complex and quaternionic loops."""
    alg = palg.algebra
    entries: List[SuiteEntry] = []
    points = alg.random(rng, samples, unit=True)
    if alg.tag == AlgebraTag.C:
        phi1 = PhiMap(palg, alg.one()).matrix
        res = max(numerics.max_abs(PhiMap(palg, s).matrix - phi1) for s in points)
        entries.append(SuiteEntry.check("complex-phi-independent-of-base", SUITE, res,
                                        TOL_ALGEBRAIC, samples=samples))
    elif alg.tag == AlgebraTag.H:
        act_res, brk_res = 0.0, 0.0
        for s in points:
            phi = PhiMap(palg, s)
            x, y = palg.random(rng), palg.random(rng)
            act_res = max(act_res, numerics.max_abs(phi(x) - ad_s(alg, s, x[-3:])))
            action = palg.act_vector(x, phi(y)) - phi(palg.bracket(x, y))
            comm = imag(alg.commutator(embed(x[-3:]), embed(y[-3:])))
            brk_res = max(brk_res, numerics.max_abs(action - ad_s(alg, s, comm)))
        entries.append(SuiteEntry.check("quaternion-phi-is-rotation", SUITE, act_res,
                                        TOL_ALGEBRAIC, samples=samples))
        entries.append(SuiteEntry.check("quaternion-phi-action-bracket", SUITE, brk_res,
                                        TOL_ALGEBRAIC, samples=samples))
    return entries


def phi_equivariance_residual(palg: PAlgebra, g: PsiElement, s: np.ndarray, x: np.ndarray) -> float:
    """|phi_{h(s)}(Ad_g x) - h' phi_s(x)|."""
    lhs = phi_at(palg, g.act_full(s), g.adjoint(x))
    rhs = g.act_vector(phi_at(palg, s, x))
    return numerics.max_abs(lhs - rhs)


def phi_left_translation_residual(palg: PAlgebra, a: np.ndarray, s: np.ndarray,
                                  x: np.ndarray) -> float:
    """|phi_{As}(x) - (R_A^(s))^{-1}(x.A) - Ad_A^(s) phi_s(x)|.

    With the modified product, (R_A^(s))^{-1}(w) = (w s) / (A s) and
    Ad_A^(s)(xi) = (A (xi s)) / (A s).
    """
    alg = palg.algebra
    as_ = alg.mul(a, s)
    lhs = phi_at(palg, as_, x)
    phi_s = embed(phi_at(palg, s, x))
    rhs = imag(alg.rdiv(alg.mul(palg.act_hat(x, a), s) + alg.mul(a, alg.mul(phi_s, s)), as_))
    return numerics.max_abs(lhs - rhs)


def omega_hat_norm(phi: PhiMap) -> float:
    """Sum of |phi_s(X_i)|^2 over a metric-orthonormal basis of p, i.e. tr(phi phi^t)."""
    return float(np.trace(phi.gram))


def phi_suite(palg: PAlgebra, rng: np.random.Generator, samples: int) -> List[SuiteEntry]:
    """phi_s identities at the unit and at random unit base points."""
    alg = palg.algebra
    k = alg.imag_dim
    samples = max(samples, 3)
    entries: List[SuiteEntry] = []
    points = np.concatenate([alg.one()[None, :], alg.random(rng, samples - 1, unit=True)])
    phis = [PhiMap(palg, s) for s in points]
    ctxs = [BracketContext(alg, s) for s in points]

    lams = []
    for phi in phis:
        try:
            lams.append(lambda_compute(phi))
        except ConsistencyError as exc:
            entries.append(SuiteEntry.error("phi-scalar-spectrum", SUITE, str(exc)))
            return entries
    lam = lams[0]
    entries.append(SuiteEntry.info("phi-lambda", SUITE, lam))
    entries.append(SuiteEntry.check("phi-lambda-independent-of-base", SUITE,
                                    max(abs(v - lam) for v in lams), TOL_ALGEBRAIC, samples))
    entries.append(SuiteEntry.check("phi-adjoint-projection", SUITE,
                                    max(projection_residual(phi, lam) for phi in phis),
                                    TOL_ALGEBRAIC, samples))

    fd_res = 0.0
    for s in points[:3]:
        x = palg.random(rng)
        fd_res = max(fd_res, numerics.max_abs(phi_fd(palg, s, x) - phi_at(palg, s, x)))
    entries.append(SuiteEntry.check("phi-finite-difference", SUITE, fd_res, 1e-9, 3))

    xi_res, inv_res, eq_res, lt_res = 0.0, 0.0, 0.0, 0.0
    for s, phi, ctx in zip(points, phis, ctxs):
        x, y = palg.random(rng), palg.random(rng)
        xi_res = max(xi_res, xiphi_residual(phi, ctx, x, y))
        u, v, w = rng.standard_normal((3, k))
        inv_res = max(inv_res, abs(float(phi.bracket(u, v) @ w + v @ phi.bracket(u, w))))
        g = group_element(palg, palg.random(rng, scale=0.7))
        eq_res = max(eq_res, phi_equivariance_residual(palg, g, s, x))
        lt_res = max(lt_res, phi_left_translation_residual(palg, alg.random(rng, unit=True), s, x))
    entries.append(SuiteEntry.check("phi-action-cocycle", SUITE, xi_res, TOL_ALGEBRAIC * 10, samples))
    entries.append(SuiteEntry.check("phi-bracket-invariance", SUITE, inv_res, TOL_ALGEBRAIC * 10,
                                    samples))
    entries.append(SuiteEntry.check("phi-equivariance", SUITE, eq_res, 1e-8, samples))
    entries.append(SuiteEntry.check("phi-left-translation", SUITE, lt_res, 1e-8, samples))

    spaces = annihilators(phis[-1], ctxs[-1])
    expected = ANNIHILATOR_DIMENSIONS.get(alg.tag, {})
    for name in ("kernel", "ann_phi", "ann_b"):
        identity = f"phi-{name.replace('_', '-')}-dimension"
        dim = spaces[name].shape[0]
        if name in expected:
            entries.append(SuiteEntry.check(identity, SUITE, abs(dim - expected[name]), 0.0,
                                            detail=f"dimension={dim}"))
        else:
            entries.append(SuiteEntry.info(identity, SUITE, dim))
    entries.append(SuiteEntry.check("phi-annihilator-inclusions", SUITE, inclusion_residual(spaces),
                                    1e-8))
    entries.append(SuiteEntry.info("phi-omega-hat-norm", SUITE, omega_hat_norm(phis[0])))

    kappa, kappa_res = phi_bracket_fit(phis[-1], ctxs[-1])
    if alg.tag == AlgebraTag.O:
        entries.append(SuiteEntry.check("phi-rank-surjective", SUITE,
                                        max(abs(phi.rank() - k) for phi in phis), 0.0, samples))
        entries.append(SuiteEntry.check("phi-lambda-value", SUITE, abs(lam - OCTONION_LAMBDA),
                                        TOL_ALGEBRAIC))
        k_fit, k_res = fit_k(phis[0])
        entries.append(SuiteEntry.check("phi-k-constant", SUITE,
                                        max(abs(k_fit - OCTONION_K), k_res), TOL_CONSTANT_K,
                                        detail=f"k={k_fit:.12g}"))
        entries.append(SuiteEntry.check("phi-bracket-proportional", SUITE,
                                        max(abs(kappa - 3 * k_fit ** 3), kappa_res),
                                        TOL_ALGEBRAIC, detail=f"kappa={kappa:.12g}"))
        pq_res = 0.0
        for phi, ctx in zip(phis, ctxs):
            u, v = rng.standard_normal((2, k))
            pq_res = max(pq_res, piqsact_residual(phi, ctx, lam, u, v))
        entries.append(SuiteEntry.check("phi-adjoint-action", SUITE, pq_res, TOL_ALGEBRAIC * 10,
                                        samples))
    else:
        entries.append(SuiteEntry.info("phi-bracket-fit-residual", SUITE, kappa_res,
                                       detail=f"kappa={kappa:.12g}"))
        entries.extend(quat_cplx_checks(palg, rng, samples))
    logger.info(f"phi suite on {palg.group.value}: lambda={lam:.12g}",
                extra={"algebra": alg.tag.value, "suite": SUITE})
    return entries
