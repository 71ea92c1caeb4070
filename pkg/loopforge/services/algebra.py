"""Composition algebras R, C, H, O by Cayley-Dickson doubling.

Algebra values are numpy arrays whose last axis holds the coordinates
(index 0 is the real part); leading axes broadcast like any numpy operation.
Tangent vectors (elements of the imaginary subspace) are stored by their
imaginary coordinates only, see :func:`embed` and :func:`imag`.

Doubling convention: (a, b)(c, d) = (ac - conj(d) b, da + b conj(c)), with the
doubling unit e4 = (0, 1) and e_{4+i} = (0, e_i). This fixes e1 e2 = e3 and the
G2 3-form entries phi_abc = <e_a e_b, e_c> = +1 on 123, 145, 176, 246, 257,
347, 365.
"""
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Dict, List, Tuple

import numpy as np

from loopforge.errors import AlgebraError
from loopforge.services import numerics
from loopforge.services.numerics import ScalarMode


class AlgebraTag(str, Enum):
    """Composition algebra selector."""

    R = "R"
    C = "C"
    H = "H"
    O = "O"  # noqa: E741

    @property
    def level(self) -> int:
        """Number of doublings from the reals."""
        return "RCHO".index(self.value)

    @property
    def dim(self) -> int:
        """Real dimension 2^level."""
        return 2 ** self.level


def _cd_conj(x: np.ndarray) -> np.ndarray:
    out = -x
    out[0] = x[0]
    return out


def _cd_product(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    n = len(x)
    if n == 1:
        return x * y
    h = n // 2
    a, b = x[:h], x[h:]
    c, d = y[:h], y[h:]
    return np.concatenate([
        _cd_product(a, c) - _cd_product(_cd_conj(d), b),
        _cd_product(d, a) + _cd_product(b, _cd_conj(c)),
    ])


@lru_cache(maxsize=None)
def cayley_dickson_table(level: int) -> np.ndarray:
    """Integer structure constants T[a, b, c] = coefficient of e_c in e_a e_b."""
    n = 2 ** level
    eye = np.eye(n, dtype=int)
    table = np.zeros((n, n, n), dtype=int)
    for a in range(n):
        for b in range(n):
            table[a, b] = _cd_product(eye[a], eye[b])
    table.setflags(write=False)
    return table


@dataclass(frozen=True)
class StructureTensors:
    """Multiplication table and the derived 3- and 4-forms on the imaginary units.

    Attributes:
        table: T[a, b, c], shape (n, n, n)
        phi: phi_abc = <e_a e_b, e_c> on imaginary units, shape (n-1,)*3
        psi: psi_abcd = 1/2 <[e_a, e_b, e_c], e_d> with [x, y, z] = x(yz) - (xy)z
        cross: (e_a x e_b) coordinates, the imaginary part of e_a e_b
    """

    table: np.ndarray
    phi: np.ndarray
    psi: np.ndarray
    cross: np.ndarray


class CompositionAlgebra:
    """A composition algebra with a fixed multiplication table and scalar mode.

    Args:
        tag: which algebra
        mode: exact (Fraction) or float arithmetic
        table: optional replacement structure constants, used to build
            deliberately corrupted algebras for negative tests
    """

    def __init__(self, tag: AlgebraTag, mode: ScalarMode = ScalarMode.FLOAT,
                 table: np.ndarray = None):
        self.tag = AlgebraTag(tag)
        self.mode = ScalarMode(mode)
        self.table = cayley_dickson_table(self.tag.level) if table is None else np.asarray(table)
        self.dim = self.tag.dim
        self.imag_dim = self.dim - 1
        nz = np.argwhere(self.table != 0)
        self._terms: List[Tuple[int, int, int, int]] = [
            (int(a), int(b), int(c), int(self.table[a, b, c])) for a, b, c in nz
        ]
        self._tensors: Dict[str, StructureTensors] = {}

    def __repr__(self) -> str:
        return f"CompositionAlgebra({self.tag.value}, {self.mode.value})"

    @property
    def is_corrupted(self) -> bool:
        """True when the table differs from the Cayley-Dickson table."""
        return not np.array_equal(self.table, cayley_dickson_table(self.tag.level))

    # Values

    def _check(self, *values: np.ndarray) -> None:
        for v in values:
            if np.shape(v)[-1:] != (self.dim,):
                raise AlgebraError(
                    f"value with trailing shape {np.shape(v)[-1:]} used in {self.tag.value} "
                    f"(dimension {self.dim})"
                )

    def coerce(self, values) -> np.ndarray:
        """Convert to this algebra's scalar mode."""
        if self.mode == ScalarMode.EXACT:
            return numerics.to_exact(values)
        return numerics.to_float(values)

    def one(self) -> np.ndarray:
        """The unit element."""
        e = numerics.zeros(self.dim, self.mode)
        e[0] = 1
        return self.coerce(e)

    def basis(self) -> np.ndarray:
        """The standard basis e_0, ..., e_{n-1} as rows."""
        return self.coerce(np.eye(self.dim, dtype=int))

    def random(self, rng: np.random.Generator, shape=(), unit: bool = False) -> np.ndarray:
        """Seeded samples.

        Exact mode draws nonzero rational vectors; float mode draws Gaussian
        vectors, normalized when ``unit`` is set.
        """
        full = tuple(np.atleast_1d(shape)) if shape != () else ()
        if self.mode == ScalarMode.EXACT:
            return numerics.random_nonzero_rational(rng, full + (self.dim,))
        x = rng.standard_normal(full + (self.dim,))
        if unit:
            x = x / np.linalg.norm(x, axis=-1, keepdims=True)
        return x

    # Products

    def mul(self, p: np.ndarray, q: np.ndarray) -> np.ndarray:
        """Product pq, broadcasting over leading axes."""
        p = np.asarray(p)
        q = np.asarray(q)
        self._check(p, q)
        shape = np.broadcast_shapes(p.shape[:-1], q.shape[:-1]) + (self.dim,)
        exact = numerics.is_exact(p) or numerics.is_exact(q)
        out = numerics.zeros(shape, ScalarMode.EXACT if exact else ScalarMode.FLOAT)
        for a, b, c, sign in self._terms:
            term = p[..., a] * q[..., b]
            if sign == 1:
                out[..., c] = out[..., c] + term
            elif sign == -1:
                out[..., c] = out[..., c] - term
            else:
                out[..., c] = out[..., c] + sign * term
        return out

    def conj(self, p: np.ndarray) -> np.ndarray:
        """Conjugate: negate the imaginary part."""
        p = np.asarray(p)
        self._check(p)
        out = -p
        out[..., 0] = p[..., 0]
        return out

    def norm2(self, p: np.ndarray) -> np.ndarray:
        """Squared norm |p|^2."""
        p = np.asarray(p)
        self._check(p)
        return (p * p).sum(axis=-1)

    def norm(self, p: np.ndarray) -> np.ndarray:
        """Norm |p| (float)."""
        return np.sqrt(numerics.to_float(self.norm2(p)))

    def inner(self, p: np.ndarray, q: np.ndarray) -> np.ndarray:
        """Euclidean inner product of coordinates."""
        return (np.asarray(p) * np.asarray(q)).sum(axis=-1)

    def inverse(self, p: np.ndarray) -> np.ndarray:
        """conj(p) / |p|^2.

        Raises:
            AlgebraError: if some p has norm zero
        """
        n2 = self.norm2(p)
        if np.any(np.asarray(n2) == 0):
            raise AlgebraError("zero divisor: inverse of an element of norm 0")
        return self.conj(p) / np.asarray(n2)[..., None]

    def commutator(self, p: np.ndarray, q: np.ndarray) -> np.ndarray:
        """pq - qp."""
        return self.mul(p, q) - self.mul(q, p)

    def associator(self, p: np.ndarray, q: np.ndarray, r: np.ndarray) -> np.ndarray:
        """(pq)r - p(qr)."""
        return self.mul(self.mul(p, q), r) - self.mul(p, self.mul(q, r))

    # Linear maps

    def left_matrix(self, p: np.ndarray) -> np.ndarray:
        """Matrix of x -> p x, shape (..., n, n)."""
        p = np.asarray(p)
        self._check(p)
        return np.moveaxis(np.tensordot(p, self.table, axes=([-1], [0])), -1, -2)

    def right_matrix(self, q: np.ndarray) -> np.ndarray:
        """Matrix of x -> x q, shape (..., n, n)."""
        q = np.asarray(q)
        self._check(q)
        return np.moveaxis(np.tensordot(q, self.table, axes=([-1], [1])), -1, -2)

    def ldiv(self, q: np.ndarray, p: np.ndarray) -> np.ndarray:
        """x with q x = p, solved as a linear system."""
        return numerics.solve(self.left_matrix(q), np.asarray(p))

    def rdiv(self, p: np.ndarray, q: np.ndarray) -> np.ndarray:
        """x with x q = p, solved as a linear system."""
        return numerics.solve(self.right_matrix(q), np.asarray(p))

    # Tensors

    def tensors(self) -> StructureTensors:
        """Structure tensors in this algebra's mode (cached)."""
        key = self.mode.value
        if key not in self._tensors:
            self._tensors[key] = build_tensors(self)
        return self._tensors[key]


def build_tensors(alg: CompositionAlgebra) -> StructureTensors:
    """Derive phi, psi and the cross product table from the multiplication table.

    Args:
        alg: algebra whose table is used

    Returns:
        StructureTensors with integer entries

    Raises:
        AlgebraError: if phi or psi fail to be totally antisymmetric
    """
    n = alg.dim
    k = n - 1
    table = np.asarray(alg.table, dtype=int)
    phi = table[1:, 1:, 1:].copy()
    cross = phi.copy()
    eye = np.eye(n, dtype=int)
    psi = np.zeros((k,) * 4, dtype=int)
    if k >= 3:
        int_alg = CompositionAlgebra(alg.tag, ScalarMode.FLOAT, table)
        e = eye.astype(float)
        for a in range(k):
            for b in range(k):
                ab = int_alg.mul(e[a + 1], e[b + 1])
                for c in range(k):
                    lhs = int_alg.mul(e[a + 1], int_alg.mul(e[b + 1], e[c + 1]))
                    assoc = lhs - int_alg.mul(ab, e[c + 1])
                    psi[a, b, c] = np.rint(assoc[1:] / 2.0).astype(int)
    tensors = StructureTensors(table=table, phi=phi, psi=psi, cross=cross)
    if not alg.is_corrupted:
        _check_antisymmetric(phi, "phi")
        _check_antisymmetric(psi, "psi")
    return tensors


def _check_antisymmetric(t: np.ndarray, name: str) -> None:
    axes = list(range(t.ndim))
    for i in range(t.ndim - 1):
        perm = axes.copy()
        perm[i], perm[i + 1] = perm[i + 1], perm[i]
        if not np.array_equal(t, -np.transpose(t, perm)):
            raise AlgebraError(f"{name} is not totally antisymmetric")


def phi_triples(tensors: StructureTensors) -> List[Tuple[int, int, int]]:
    """Independent positive entries (a < b, a < c) of phi, 1-based labels."""
    out = []
    k = tensors.phi.shape[0]
    for a in range(k):
        for b in range(a + 1, k):
            for c in range(k):
                if c > a and c != b and tensors.phi[a, b, c] == 1:
                    out.append((a + 1, b + 1, c + 1))
    return out


@lru_cache(maxsize=None)
def get_algebra(tag: AlgebraTag, mode: ScalarMode = ScalarMode.FLOAT) -> CompositionAlgebra:
    """Shared algebra instance for a tag and mode."""
    return CompositionAlgebra(AlgebraTag(tag), ScalarMode(mode))


def corrupted_algebra(tag: AlgebraTag = AlgebraTag.O, mode: ScalarMode = ScalarMode.EXACT,
                      entry: Tuple[int, int] = (1, 2)) -> CompositionAlgebra:
    """Algebra whose product e_a e_b has its sign flipped for one ordered pair."""
    table = cayley_dickson_table(AlgebraTag(tag).level).copy()
    a, b = entry
    table[a, b] = -table[a, b]
    return CompositionAlgebra(tag, mode, table)


# Tangent vectors

def embed(xi: np.ndarray) -> np.ndarray:
    """Tangent coordinates (..., n-1) to algebra values (..., n) with zero real part."""
    xi = np.asarray(xi)
    out = numerics.zeros(xi.shape[:-1] + (xi.shape[-1] + 1,),
                         ScalarMode.EXACT if numerics.is_exact(xi) else ScalarMode.FLOAT)
    out[..., 1:] = xi
    return out


def imag(p: np.ndarray) -> np.ndarray:
    """Imaginary coordinates of algebra values."""
    return np.asarray(p)[..., 1:]


@dataclass
class ClosedForms:
    """Bracket and associator at s = 1 written with phi and psi.

    [X, Y]^c = 2 phi_abc X^a Y^b and [X, Y, Z]^d = 2 psi_abcd X^a Y^b Z^c.
    """

    tensors: StructureTensors
    _phi2: np.ndarray = field(init=False)
    _psi2: np.ndarray = field(init=False)

    def __post_init__(self):
        self._phi2 = 2 * self.tensors.phi
        self._psi2 = 2 * self.tensors.psi

    def bracket(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Closed-form bracket of tangent coordinates (single vectors)."""
        return np.tensordot(y, np.tensordot(x, self._phi2, axes=(0, 0)), axes=(0, 0))

    def associator(self, x: np.ndarray, y: np.ndarray, z: np.ndarray) -> np.ndarray:
        """Closed-form associator of tangent coordinates (single vectors)."""
        t = np.tensordot(x, self._psi2, axes=(0, 0))
        t = np.tensordot(y, t, axes=(0, 0))
        return np.tensordot(z, t, axes=(0, 0))
