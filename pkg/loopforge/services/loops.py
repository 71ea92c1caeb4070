"""Loop operations on invertible and unit elements of a composition algebra.

Quotients are linear solves (mul is bilinear), so nothing here relies on the
inverse property; identities such as p / q = p q^{-1} are checked, not assumed.
"""
from dataclasses import dataclass
from typing import Callable, Dict, List

import numpy as np

from loopforge.constants import DEFAULT_SAMPLES, TOL_ALGEBRAIC
from loopforge.errors import AlgebraError
from loopforge.logging_config import get_logger
from loopforge.reports.models import SuiteEntry
from loopforge.services import numerics
from loopforge.services.algebra import CompositionAlgebra
from loopforge.services.numerics import ScalarMode

logger = get_logger(__name__)


@dataclass(frozen=True)
class LoopContext:
    """A loop living in a composition algebra.

    Attributes:
        algebra: ambient algebra
        unit: True for the unit sphere, False for all invertible elements
    """

    algebra: CompositionAlgebra
    unit: bool = False

    @property
    def exact(self) -> bool:
        return self.algebra.mode == ScalarMode.EXACT

    @property
    def tolerance(self) -> float:
        return 0.0 if self.exact else TOL_ALGEBRAIC

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """Seeded loop elements (unit when the context asks for it and the mode allows)."""
        return self.algebra.random(rng, count, unit=self.unit and not self.exact)

    def mul(self, p, q):
        return self.algebra.mul(p, q)

    def ldiv(self, q, p):
        """x with q x = p."""
        return self.algebra.ldiv(q, p)

    def rdiv(self, p, q):
        """x with x q = p."""
        return self.algebra.rdiv(p, q)

    def modified(self, r: np.ndarray) -> "ModifiedContext":
        return ModifiedContext(self, r)


@dataclass(frozen=True)
class ModifiedContext:
    """The isotope (L, o_r) with p o_r q = (p (q r)) / r."""

    base: LoopContext
    r: np.ndarray

    def product(self, p, q):
        """p o_r q = (p (q r)) / r."""
        L = self.base
        return L.rdiv(L.mul(p, L.mul(q, self.r)), self.r)

    def rquot(self, p, q):
        """p /_r q = (p r) / (q r)."""
        L = self.base
        return L.rdiv(L.mul(p, self.r), L.mul(q, self.r))

    def lquot(self, p, q):
        """p \\_r q = (p \\ (q r)) / r."""
        L = self.base
        return L.rdiv(L.ldiv(p, L.mul(q, self.r)), self.r)

    def left_inverse(self, q):
        """q^lambda(r) = r / (q r)."""
        L = self.base
        return L.rdiv(np.broadcast_to(self.r, np.shape(q)), L.mul(q, self.r))

    def right_inverse(self, q):
        """q^rho(r) = (q \\ r) / r."""
        L = self.base
        return L.rdiv(L.ldiv(q, np.broadcast_to(self.r, np.shape(q))), self.r)


def mod_product(ctx: ModifiedContext, p, q):
    return ctx.product(p, q)


def loop_associator(ctx: LoopContext, p, q, r):
    """[p, q, r] = (p o_r q) / (p q)."""
    return ctx.rdiv(ModifiedContext(ctx, r).product(p, q), ctx.mul(p, q))


def loop_commutator(ctx: LoopContext, p, q):
    """[p, q] = ((p q) / p) / q."""
    return ctx.rdiv(ctx.rdiv(ctx.mul(p, q), p), q)


def right_nucleus_map(alg: CompositionAlgebra) -> np.ndarray:
    """Stacked matrices of r -> (e_a e_b) r - e_a (e_b r), r on the right."""
    basis = np.eye(alg.dim, dtype=int)
    Lm = [np.asarray(alg.left_matrix(e)) for e in basis]
    blocks = [np.asarray(alg.left_matrix(alg.mul(basis[a], basis[b]))) - Lm[a] @ Lm[b]
              for a in range(alg.dim) for b in range(alg.dim)]
    return np.concatenate(blocks, axis=0).astype(int)


def nucleus_basis(alg: CompositionAlgebra) -> np.ndarray:
    """Exact basis of the right nucleus direction space.

    Returns the real axis for O (so the unit-loop nucleus is {+1, -1}) and the
    whole space for the associative algebras.
    """
    return numerics.nullspace(right_nucleus_map(alg))


SUITE = "loop"


def _residual(lhs, rhs) -> float:
    return numerics.max_abs(np.asarray(lhs) - np.asarray(rhs))


def _evaluate(name: str, suite: str, fn: Callable[[], float], tolerance: float,
              samples: int) -> SuiteEntry:
    """Run one residual callable; an algebra failure marks the identity failed."""
    try:
        residual = fn()
    except AlgebraError as exc:
        logger.warning(f"{name} raised: {exc}", extra={"suite": suite, "identity": name})
        return SuiteEntry.error(name, suite, str(exc))
    entry = SuiteEntry.check(name, suite, residual, tolerance, samples=samples)
    if not entry.passed:
        logger.warning(f"{name} failed", extra={"suite": suite, "identity": name,
                                                "residual": entry.residual})
    return entry


def _nuclear_samples(ctx: LoopContext, rng: np.random.Generator, count: int) -> np.ndarray:
    basis = nucleus_basis(ctx.algebra)
    coeff = ctx.algebra.coerce(numerics.random_nonzero_rational(rng, (count, basis.shape[0])))
    return ctx.algebra.coerce(coeff @ ctx.algebra.coerce(basis))


def identity_suite(ctx: LoopContext, rng: np.random.Generator,
                   samples: int = DEFAULT_SAMPLES) -> List[SuiteEntry]:
    """Quasigroup, inverse, Moufang and modified-product identities on random samples.

    Args:
        ctx: loop to test
        rng: seeded generator
        samples: number of random tuples per identity

    Returns:
        One SuiteEntry per identity (exact mode demands residual 0)
    """
    alg = ctx.algebra
    p, q, r, x = (ctx.sample(rng, samples) for _ in range(4))
    nuc = _nuclear_samples(ctx, rng, samples)
    one = alg.one()
    mul, ld, rd = ctx.mul, ctx.ldiv, ctx.rdiv

    def inv(v):
        return alg.inverse(v)

    mod = ctx.modified(r)
    checks: Dict[str, Callable[[], float]] = {
        "quasigroup-left-division": lambda: _residual(mul(q, ld(q, p)), p),
        "quasigroup-left-cancellation": lambda: _residual(ld(q, mul(q, p)), p),
        "quasigroup-right-division": lambda: _residual(mul(rd(p, q), q), p),
        "quasigroup-right-cancellation": lambda: _residual(rd(mul(p, q), q), p),
        "two-sided-inverse": lambda: _residual(rd(one, q), ld(q, one)),
        "left-inverse-property": lambda: _residual(mul(inv(q), mul(q, p)), p),
        "right-inverse-property": lambda: _residual(mul(mul(p, q), inv(q)), p),
        "right-division-by-inverse": lambda: _residual(rd(p, q), mul(p, inv(q))),
        "left-alternative": lambda: _residual(mul(p, mul(p, q)), mul(mul(p, p), q)),
        "right-alternative": lambda: _residual(mul(mul(p, q), q), mul(p, mul(q, q))),
        "flexible": lambda: _residual(mul(p, mul(q, p)), mul(mul(p, q), p)),
        "left-bol": lambda: _residual(mul(p, mul(q, mul(p, r))), mul(mul(p, mul(q, p)), r)),
        "right-bol": lambda: _residual(mul(mul(mul(r, p), q), p), mul(r, mul(mul(p, q), p))),
        "power-associative": lambda: max(
            _residual(mul(p, mul(p, p)), mul(mul(p, p), p)),
            _residual(mul(mul(p, p), mul(p, p)), mul(p, mul(p, mul(p, p)))),
        ),
        "modified-identity": lambda: max(_residual(mod.product(one, p), p),
                                         _residual(mod.product(p, one), p)),
        "modified-right-quotient": lambda: _residual(mod.rquot(mod.product(p, q), q), p),
        "modified-left-quotient": lambda: _residual(mod.product(p, mod.lquot(p, q)), q),
        "modified-right-inverse": lambda: _residual(mod.product(q, mod.right_inverse(q)),
                                                    np.broadcast_to(one, np.shape(q))),
        "modified-left-inverse": lambda: _residual(mod.product(mod.left_inverse(q), q),
                                                   np.broadcast_to(one, np.shape(q))),
        "modified-product-shift": lambda: _modified_shift_residual(ctx, p, q, r, x),
        "associator-at-unit": lambda: _residual(
            loop_associator(ctx, p, q, np.broadcast_to(one, np.shape(p))),
            np.broadcast_to(one, np.shape(p))),
        "nucleus-transparency": lambda: max(
            _residual(ctx.modified(nuc).product(p, q), mul(p, q)),
            _residual(rd(mul(p, nuc), mul(q, nuc)), rd(p, q)),
            _residual(loop_associator(ctx, p, q, nuc), np.broadcast_to(one, np.shape(p))),
        ),
    }
    entries = [_evaluate(name, SUITE, fn, ctx.tolerance, samples) for name, fn in checks.items()]
    logger.info(f"Loop identity suite on {alg!r}: "
                f"{sum(e.passed for e in entries)}/{len(entries)} passed",
                extra={"algebra": alg.tag.value, "suite": SUITE})
    return entries


def _modified_shift_residual(ctx: LoopContext, p, q, r, x) -> float:
    """p o_{rx} q against (p o_x (q o_x r)) /_x r."""
    shifted = ctx.modified(ctx.mul(r, x)).product(p, q)
    mx = ctx.modified(x)
    return _residual(shifted, mx.rquot(mx.product(p, mx.product(q, r)), r))


def adq_companion_check(ctx: LoopContext, q: np.ndarray, rng: np.random.Generator,
                        samples: int = DEFAULT_SAMPLES) -> SuiteEntry:
    """Check that conjugation by q is a right pseudoautomorphism with companion q^3.

    Verifies q(xy)q^{-1} . q^3 = (q x q^{-1}) ((q y q^{-1}) q^3) on random x, y.
    """
    alg = ctx.algebra
    q = alg.coerce(q)

    def residual() -> float:
        qi = alg.inverse(q)
        q3 = alg.mul(q, alg.mul(q, q))
        x, y = ctx.sample(rng, samples), ctx.sample(rng, samples)

        def ad(v):
            return alg.mul(alg.mul(q, v), qi)

        lhs = alg.mul(ad(alg.mul(x, y)), q3)
        rhs = alg.mul(ad(x), alg.mul(ad(y), q3))
        return _residual(lhs, rhs)

    return _evaluate("conjugation-companion-cube", SUITE, residual, ctx.tolerance, samples)
