"""Scalar modes, small dense linear algebra and finite differences.

Two scalar modes coexist:

* ``exact``: numpy object arrays of ``fractions.Fraction``. Arithmetic is closed
  and lossless, used for the algebraic identities.
* ``float``: ordinary float64 arrays, used for ODEs, fields and flows.

Float comparisons always go through an explicit tolerance.
"""
import math
from enum import Enum
from fractions import Fraction
from typing import Callable, List, NamedTuple, Optional, Union

import numpy as np
import scipy.linalg
from pydantic import BaseModel, ConfigDict, Field

from loopforge.constants import (
    FD_LEVELS,
    FD_NOISE_FACTOR,
    FD_STEP,
    FD_TOLERANCE,
    NULLSPACE_RCOND,
    SAMPLE_DENOMINATOR_BOUND,
    SAMPLE_NUMERATOR_BOUND,
)
from loopforge.errors import AlgebraError, NumericsError


class ScalarMode(str, Enum):
    """Arithmetic mode for algebra values."""

    EXACT = "exact"
    FLOAT = "float"


def is_exact(a: np.ndarray) -> bool:
    """True when the array holds exact (object) scalars."""
    return np.asarray(a).dtype == object


def to_exact(values) -> np.ndarray:
    """Convert integers, Fractions or exactly-representable floats to a Fraction array."""
    arr = np.asarray(values)
    out = np.empty(arr.shape, dtype=object)
    for idx, v in np.ndenumerate(arr):
        out[idx] = Fraction(v)
    return out


def to_float(values) -> np.ndarray:
    """Convert any numeric array (including Fraction arrays) to float64."""
    arr = np.asarray(values)
    if arr.dtype == object:
        return np.vectorize(float, otypes=[float])(arr) if arr.size else arr.astype(float)
    return arr.astype(float)


def zeros(shape, mode: ScalarMode) -> np.ndarray:
    """Zero array in the requested mode."""
    if mode == ScalarMode.EXACT:
        out = np.empty(shape, dtype=object)
        out.fill(Fraction(0))
        return out
    return np.zeros(shape)


def max_abs(a) -> float:
    """Largest absolute entry as a float (0.0 for empty arrays)."""
    arr = np.asarray(a)
    if arr.size == 0:
        return 0.0
    if arr.dtype == object:
        return float(max(abs(v) for v in arr.flat))
    return float(np.max(np.abs(arr)))


def random_rational(rng: np.random.Generator, shape) -> np.ndarray:
    """Seeded rational samples with numerators in [-9, 9] and denominators in [1, 9].

    Args:
        rng: numpy random generator
        shape: output shape

    Returns:
        Object array of Fractions
    """
    num = rng.integers(-SAMPLE_NUMERATOR_BOUND, SAMPLE_NUMERATOR_BOUND + 1, size=shape)
    den = rng.integers(1, SAMPLE_DENOMINATOR_BOUND + 1, size=shape)
    out = np.empty(np.shape(num), dtype=object)
    for idx in np.ndindex(out.shape):
        out[idx] = Fraction(int(num[idx]), int(den[idx]))
    return out


def random_nonzero_rational(rng: np.random.Generator, shape) -> np.ndarray:
    """Like :func:`random_rational` but every trailing vector is nonzero."""
    out = random_rational(rng, shape)
    flat = out.reshape(-1, out.shape[-1])
    for row in flat:
        while all(v == 0 for v in row):
            row[:] = random_rational(rng, row.shape)
    return out


# Linear algebra

def rref(m: np.ndarray):
    """Exact reduced row echelon form.

    Args:
        m: 2-D array of Fractions (or ints)

    Returns:
        (reduced matrix, list of pivot columns)
    """
    a = to_exact(m).copy()
    rows, cols = a.shape
    pivots: List[int] = []
    r = 0
    for c in range(cols):
        if r >= rows:
            break
        nz = [i for i in range(r, rows) if a[i, c] != 0]
        if not nz:
            continue
        p = nz[0]
        if p != r:
            a[[r, p]] = a[[p, r]]
        a[r] = a[r] / a[r, c]
        for i in range(rows):
            if i != r and a[i, c] != 0:
                a[i] = a[i] - a[i, c] * a[r]
        pivots.append(c)
        r += 1
    return a, pivots


def nullspace(m: np.ndarray, tol: Optional[float] = None) -> np.ndarray:
    """Basis of {x : m x = 0}.

    Exact input gives the reduced basis from row reduction (one free variable set
    to 1 per vector); float input gives an orthonormal basis from the SVD, with
    singular values below ``tol`` times the largest treated as zero.

    Args:
        m: matrix of shape (rows, cols)
        tol: relative singular value cut (float mode only)

    Returns:
        Array of shape (k, cols) whose rows span the kernel (k may be 0)
    """
    m = np.asarray(m)
    if m.ndim != 2:
        raise AlgebraError(f"nullspace expects a matrix, got shape {m.shape}")
    cols = m.shape[1]
    if is_exact(m) or np.issubdtype(m.dtype, np.integer):
        if m.shape[0] == 0:
            return np.eye(cols, dtype=int).astype(object) * Fraction(1)
        reduced, pivots = rref(m)
        free = [c for c in range(cols) if c not in pivots]
        basis = zeros((len(free), cols), ScalarMode.EXACT)
        for k, f in enumerate(free):
            basis[k, f] = Fraction(1)
            for row, p in enumerate(pivots):
                basis[k, p] = -reduced[row, f]
        return basis
    if m.shape[0] == 0:
        return np.eye(cols)
    rcond = NULLSPACE_RCOND if tol is None else tol
    return scipy.linalg.null_space(m, rcond=rcond).T


def rank(m: np.ndarray, tol: Optional[float] = None) -> int:
    """Rank consistent with :func:`nullspace`."""
    m = np.asarray(m)
    return m.shape[1] - nullspace(m, tol).shape[0]


def solve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve a x = b, batched over leading axes.

    Args:
        a: (..., n, n) matrices
        b: (..., n) right-hand sides

    Returns:
        (..., n) solutions

    Raises:
        AlgebraError: if a system is singular
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape[-1] != a.shape[-2] or a.shape[-1] != b.shape[-1]:
        raise AlgebraError(f"incompatible system shapes {a.shape} and {b.shape}")
    if not (is_exact(a) or is_exact(b)):
        try:
            return np.linalg.solve(a, b[..., None])[..., 0]
        except np.linalg.LinAlgError as exc:
            raise AlgebraError("singular linear system") from exc
    return _solve_exact(a, b)


def _solve_exact(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    batch = np.broadcast_shapes(a.shape[:-2], b.shape[:-1])
    n = a.shape[-1]
    aug = np.empty(batch + (n, n + 1), dtype=object)
    aug[..., :n] = np.broadcast_to(a, batch + (n, n))
    aug[..., n] = np.broadcast_to(b, batch + (n,))
    aug = aug.reshape(-1, n, n + 1)
    count = aug.shape[0]
    rows = np.arange(count)
    for c in range(n):
        nonzero = (aug[:, c:, c] != 0).astype(bool)
        if not nonzero.any(axis=1).all():
            raise AlgebraError("singular linear system")
        p = c + nonzero.argmax(axis=1)
        pivot_rows = aug[rows, p].copy()
        aug[rows, p] = aug[:, c]
        aug[:, c] = pivot_rows
        aug[:, c] = aug[:, c] / aug[:, c, c][:, None]
        for r in range(n):
            if r != c:
                aug[:, r] = aug[:, r] - aug[:, r, c][:, None] * aug[:, c]
    return aug[:, :, n].reshape(batch + (n,))


def inverse(a: np.ndarray) -> np.ndarray:
    """Matrix inverse in either mode."""
    a = np.asarray(a)
    n = a.shape[-1]
    if is_exact(a):
        eye = to_exact(np.eye(n, dtype=int))
        cols = [solve(a, eye[:, j]) for j in range(n)]
        return np.stack(cols, axis=-1)
    try:
        return np.linalg.inv(a)
    except np.linalg.LinAlgError as exc:
        raise AlgebraError("singular matrix") from exc


def mat_exp(m: np.ndarray) -> np.ndarray:
    """Matrix exponential (scaling and squaring with Pade approximants).

    Args:
        m: square float matrix, or a batch of them

    Returns:
        exp(m)

    Raises:
        AlgebraError: if the input is not square
    """
    m = np.asarray(m, dtype=float)
    if m.ndim < 2 or m.shape[-1] != m.shape[-2]:
        raise AlgebraError(f"mat_exp expects square matrices, got shape {m.shape}")
    return scipy.linalg.expm(m)


def lstsq_fit(basis: np.ndarray, target: np.ndarray) -> tuple:
    """Least-squares scalar c minimizing |target - c * basis|.

    Returns:
        (c, residual sup norm)
    """
    basis = np.asarray(basis, dtype=float).ravel()
    target = np.asarray(target, dtype=float).ravel()
    denom = float(basis @ basis)
    c = float(basis @ target) / denom if denom else 0.0
    return c, float(np.max(np.abs(target - c * basis))) if target.size else 0.0


# Finite differences

class DiffConfig(BaseModel):
    """Finite-difference settings.

    Attributes:
        h: base step (dimensionless)
        levels: Richardson extrapolation levels
        tol: tolerance used by callers comparing against the derivative
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    h: float = Field(default=FD_STEP, gt=0)
    levels: int = Field(default=FD_LEVELS, ge=1)
    tol: float = Field(default=FD_TOLERANCE, gt=0)


class FDResult(NamedTuple):
    """Extrapolated derivative and the observed convergence order."""

    value: Union[float, np.ndarray]
    order: float


def _central(f: Callable, t0: float, order: int, h: float) -> np.ndarray:
    total = None
    for signs in np.ndindex(*(2,) * order):
        sigma = [1 - 2 * s for s in signs]
        args = [t0 + sg * h for sg in sigma]
        val = np.asarray(f(*args), dtype=float)
        if not np.all(np.isfinite(val)):
            raise NumericsError(f"non-finite sample at {args}")
        term = math.prod(sigma) * val
        total = term if total is None else total + term
    return total / (2.0 * h) ** order


def _sample_scale(f: Callable, t0: float, order: int, h: float) -> float:
    scale = 0.0
    for t in (t0, t0 + h):
        scale = max(scale, float(np.max(np.abs(np.asarray(f(*([t] * order)), dtype=float)))))
    return max(scale, 1.0e-300)


def fd_derivative(f: Callable, t0: float, order: int = 1,
                  cfg: Optional[DiffConfig] = None) -> FDResult:
    """Central-difference derivative with Richardson extrapolation.

    ``f`` takes ``order`` scalar arguments; the mixed derivative
    d^order f / dt_1 ... dt_order at (t0, ..., t0) is returned. Each step in
    the ladder h, h/2, ..., h/2^(levels+1) is used for a nested central
    difference with equal steps, and the Neville table eliminates the even
    error terms.

    The observed order is the log2 ratio of the first two successive
    differences in the highest extrapolation column whose differences rise
    above rounding noise; ``inf`` means the ladder converged to rounding level.

    Args:
        f: scalar- or vector-valued function of ``order`` scalars
        t0: expansion point
        order: 1, 2 or 3
        cfg: step configuration

    Returns:
        FDResult(value, order)

    Raises:
        NumericsError: if a sample is not finite
    """
    if order not in (1, 2, 3):
        raise NumericsError(f"unsupported derivative order {order}")
    cfg = cfg or DiffConfig()
    steps = [cfg.h / 2.0 ** k for k in range(cfg.levels + 2)]
    table = [[_central(f, t0, order, h)] for h in steps]
    for k in range(1, len(steps)):
        for j in range(1, k + 1):
            prev = table[k][j - 1]
            coarse = table[k - 1][j - 1]
            table[k].append(prev + (prev - coarse) / (4.0 ** j - 1.0))

    scale = _sample_scale(f, t0, order, steps[-1])
    noise = FD_NOISE_FACTOR * np.finfo(float).eps * scale / steps[-1] ** order
    observed = math.inf
    for col in range(cfg.levels - 1, -1, -1):
        entries = [table[k][col] for k in range(col, len(steps))]
        d1 = float(np.max(np.abs(entries[1] - entries[0])))
        d2 = float(np.max(np.abs(entries[2] - entries[1])))
        if d2 > noise and d1 > noise:
            observed = math.log2(d1 / d2)
            break
    value = table[-1][-1]
    if np.ndim(value) == 0:
        value = float(value)
    return FDResult(value, observed)
