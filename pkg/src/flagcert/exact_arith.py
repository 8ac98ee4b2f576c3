"""Exact scalar arithmetic and small-matrix linear algebra.

Two scalar rings are used throughout the package: `Rational` (stdlib
fractions) and `QuadExt`, the real field Q(sqrt2, sqrt3) represented on the
basis (1, sqrt2, sqrt3, sqrt6).  The matrix routines below are duck-typed
over both.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

Rational = Fraction

_SQRT2 = math.sqrt(2.0)
_SQRT3 = math.sqrt(3.0)
_SQRT6 = math.sqrt(6.0)


class FieldOverflowError(ValueError):
    """A required square root does not lie in Q(sqrt2, sqrt3)."""


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    raise TypeError(f"expected a rational component, got {type(x).__name__}")


class QuadExt:
    """Element a + b*sqrt2 + c*sqrt3 + d*sqrt6 with rational components."""

    __slots__ = ("a", "b", "c", "d")

    def __init__(self, a=0, b=0, c=0, d=0):
        object.__setattr__(self, "a", _as_fraction(a))
        object.__setattr__(self, "b", _as_fraction(b))
        object.__setattr__(self, "c", _as_fraction(c))
        object.__setattr__(self, "d", _as_fraction(d))

    def __setattr__(self, name, value):  # value type; no mutation after init
        raise AttributeError("QuadExt is immutable")

    # -- conversions ----------------------------------------------------

    @staticmethod
    def coerce(x) -> "QuadExt":
        if isinstance(x, QuadExt):
            return x
        return QuadExt(_as_fraction(x))

    @property
    def is_rational(self) -> bool:
        return not (self.b or self.c or self.d)

    def rational_part(self) -> Fraction:
        """The element as a Fraction; raises if irrational."""
        if not self.is_rational:
            raise ValueError(f"{self!r} is irrational")
        return self.a

    def __float__(self) -> float:
        return (
            float(self.a)
            + float(self.b) * _SQRT2
            + float(self.c) * _SQRT3
            + float(self.d) * _SQRT6
        )

    # -- ring operations ------------------------------------------------

    def __add__(self, other):
        o = QuadExt.coerce(other)
        return QuadExt(self.a + o.a, self.b + o.b, self.c + o.c, self.d + o.d)

    __radd__ = __add__

    def __neg__(self):
        return QuadExt(-self.a, -self.b, -self.c, -self.d)

    def __sub__(self, other):
        return self + (-QuadExt.coerce(other))

    def __rsub__(self, other):
        return QuadExt.coerce(other) + (-self)

    def __mul__(self, other):
        o = QuadExt.coerce(other)
        a, b, c, d = self.a, self.b, self.c, self.d
        e, f, g, h = o.a, o.b, o.c, o.d
        return QuadExt(
            a * e + 2 * b * f + 3 * c * g + 6 * d * h,
            a * f + b * e + 3 * (c * h + d * g),
            a * g + c * e + 2 * (b * h + d * f),
            a * h + d * e + b * g + c * f,
        )

    __rmul__ = __mul__

    def inverse(self) -> "QuadExt":
        if not any((self.a, self.b, self.c, self.d)):
            raise ZeroDivisionError("inverse of zero")
        # product of the three nontrivial Galois conjugates
        s2 = QuadExt(self.a, -self.b, self.c, -self.d)
        s3 = QuadExt(self.a, self.b, -self.c, -self.d)
        s23 = QuadExt(self.a, -self.b, -self.c, self.d)
        y = s2 * s3 * s23
        norm = self * y
        assert norm.is_rational and norm.a != 0
        inv_n = 1 / norm.a
        return QuadExt(y.a * inv_n, y.b * inv_n, y.c * inv_n, y.d * inv_n)

    def __truediv__(self, other):
        return self * QuadExt.coerce(other).inverse()

    def __rtruediv__(self, other):
        return QuadExt.coerce(other) * self.inverse()

    def __eq__(self, other):
        if isinstance(other, (QuadExt, int, Fraction)):
            o = QuadExt.coerce(other)
            return (self.a, self.b, self.c, self.d) == (o.a, o.b, o.c, o.d)
        return NotImplemented

    def __hash__(self):
        if self.is_rational:
            return hash(self.a)
        return hash((self.a, self.b, self.c, self.d))

    def __bool__(self):
        return bool(self.a or self.b or self.c or self.d)

    def __repr__(self):
        return f"QuadExt({self.a}, {self.b}, {self.c}, {self.d})"


def _sqrt_interval(s: int, digits: int) -> tuple[Fraction, Fraction]:
    # integer isqrt at scale 10**digits gives a width-10**-digits enclosure
    scale = 10**digits
    r = math.isqrt(s * scale * scale)
    return Fraction(r, scale), Fraction(r + 1, scale)


def quad_sign(x) -> int:
    """Exact sign (-1, 0, +1) of a QuadExt or rational scalar."""
    if isinstance(x, (int, Fraction)):
        return (x > 0) - (x < 0)
    if not isinstance(x, QuadExt):
        raise TypeError(f"cannot take sign of {type(x).__name__}")
    if x.is_rational:
        return (x.a > 0) - (x.a < 0)
    digits = 24
    while digits <= 1 << 20:
        lo = hi = x.a
        for coef, s in ((x.b, 2), (x.c, 3), (x.d, 6)):
            if not coef:
                continue
            slo, shi = _sqrt_interval(s, digits)
            if coef > 0:
                lo += coef * slo
                hi += coef * shi
            else:
                lo += coef * shi
                hi += coef * slo
        if lo > 0:
            return 1
        if hi < 0:
            return -1
        # 1, sqrt2, sqrt3, sqrt6 are independent over Q, so x != 0 here
        digits *= 2
    raise RuntimeError("sign did not resolve; malformed element?")


def scalar_sign(x) -> int:
    return quad_sign(x)


# ---------------------------------------------------------------------------
# serialization


def rational_to_str(x: Fraction | int) -> str:
    f = Fraction(x)
    return f"{f.numerator}/{f.denominator}"


def rational_from_str(s: str) -> Fraction:
    return Fraction(s)


_QUAD_KEYS = ("1", "sqrt2", "sqrt3", "sqrt6")


def quadext_to_json(x: QuadExt) -> dict[str, str]:
    x = QuadExt.coerce(x)
    return {
        "1": rational_to_str(x.a),
        "sqrt2": rational_to_str(x.b),
        "sqrt3": rational_to_str(x.c),
        "sqrt6": rational_to_str(x.d),
    }


def quadext_from_json(obj: dict[str, str]) -> QuadExt:
    return QuadExt(*(Fraction(obj.get(k, 0)) for k in _QUAD_KEYS))


def scalar_to_json(x):
    """Rational -> "p/q" string, irrational QuadExt -> component dict."""
    if isinstance(x, QuadExt):
        if x.is_rational:
            return rational_to_str(x.a)
        return quadext_to_json(x)
    return rational_to_str(x)


def scalar_from_json(obj):
    if isinstance(obj, str):
        return Fraction(obj)
    return quadext_from_json(obj)


# ---------------------------------------------------------------------------
# generic dense linear algebra (square or rectangular, any exact field type)


def dot(u: Sequence, v: Sequence):
    assert len(u) == len(v)
    acc = u[0] * v[0]
    for i in range(1, len(u)):
        acc = acc + u[i] * v[i]
    return acc


def mat_vec(m: Sequence[Sequence], v: Sequence) -> list:
    return [dot(row, v) for row in m]


def mat_mul(a: Sequence[Sequence], b: Sequence[Sequence]) -> list[list]:
    cols = list(zip(*b))
    return [[dot(row, col) for col in cols] for row in a]


def transpose(m: Sequence[Sequence]) -> list[list]:
    return [list(col) for col in zip(*m)]


def mat_inner(a: Sequence[Sequence], b: Sequence[Sequence]):
    """Frobenius inner product sum_ij a_ij b_ij."""
    acc = None
    for ra, rb in zip(a, b):
        for x, y in zip(ra, rb):
            acc = x * y if acc is None else acc + x * y
    return acc


def _rref(rows: list[list], ncols: int) -> tuple[list[list], list[int]]:
    """In-place reduced row echelon form; returns (rows, pivot columns)."""
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        piv = None
        for i in range(r, len(rows)):
            if quad_sign(rows[i][c]) != 0:
                piv = i
                break
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        inv = rows[r][c]
        rows[r] = [x / inv for x in rows[r]]
        for i in range(len(rows)):
            if i != r and quad_sign(rows[i][c]) != 0:
                f = rows[i][c]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
        if r == len(rows):
            break
    return rows, pivots


def rank(m: Sequence[Sequence]) -> int:
    if not m:
        return 0
    rows = [list(r) for r in m]
    _, pivots = _rref(rows, len(rows[0]))
    return len(pivots)


def kernel_basis(m: Sequence[Sequence]) -> list[list]:
    """Basis of the right null space of m (rows = equations)."""
    if not m:
        return []
    ncols = len(m[0])
    rows = [list(r) for r in m]
    rows, pivots = _rref(rows, ncols)
    one = _unit_like(m)
    zero = one - one
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        v = [zero] * ncols
        v[f] = one
        for r, p in enumerate(pivots):
            v[p] = -rows[r][f]
        basis.append(v)
    return basis


def _unit_like(m: Sequence[Sequence]):
    for row in m:
        for x in row:
            if isinstance(x, QuadExt):
                return QuadExt(1)
            return Fraction(1)
    return Fraction(1)


@dataclass
class LinearSolution:
    """A particular solution plus a kernel basis for A x = b."""

    particular: list
    kernel: list[list]
    pivot_columns: tuple[int, ...]

    @property
    def is_unique(self) -> bool:
        return not self.kernel


def solve_linear(a: Sequence[Sequence], b: Sequence) -> LinearSolution:
    """Solve A x = b exactly; raises ValueError if inconsistent."""
    nrows = len(a)
    assert nrows == len(b)
    ncols = len(a[0]) if nrows else 0
    rows = [list(r) + [bv] for r, bv in zip(a, b)]
    rows, pivots = _rref(rows, ncols)
    for row in rows[len(pivots):]:
        if quad_sign(row[ncols]) != 0:
            raise ValueError("inconsistent linear system")
    if pivots and pivots[-1] == ncols:
        raise ValueError("inconsistent linear system")
    one = _unit_like(a) if nrows else Fraction(1)
    zero = one - one
    x = [zero] * ncols
    for r, p in enumerate(pivots):
        x[p] = rows[r][ncols]
    kernel = kernel_basis(a) if len(pivots) < ncols else []
    return LinearSolution(x, kernel, tuple(pivots))


# ---------------------------------------------------------------------------
# positive (semi)definiteness over an exact field


def _diag_sign(x) -> int:
    return quad_sign(x)


def is_pd(m: Sequence[Sequence]) -> bool:
    """Positive definiteness via LDL^T without pivoting (Sylvester)."""
    n = len(m)
    a = [[x for x in row] for row in m]
    for k in range(n):
        if _diag_sign(a[k][k]) <= 0:
            return False
        for i in range(k + 1, n):
            f = a[i][k] / a[k][k]
            for j in range(k, n):
                a[i][j] = a[i][j] - f * a[k][j]
    return True


def is_psd(m: Sequence[Sequence]) -> bool:
    """Positive semidefiniteness via symmetrically pivoted elimination."""
    n = len(m)
    a = [[x for x in row] for row in m]
    active = list(range(n))
    while active:
        piv = None
        for idx, i in enumerate(active):
            s = _diag_sign(a[i][i])
            if s < 0:
                return False
            if s > 0 and piv is None:
                piv = idx
        if piv is None:
            # all remaining diagonal entries vanish: need the whole block zero
            for i in active:
                for j in active:
                    if quad_sign(a[i][j]) != 0:
                        return False
            return True
        p = active.pop(piv)
        for i in active:
            if quad_sign(a[i][p]) == 0:
                continue
            f = a[i][p] / a[p][p]
            for j in active:
                a[i][j] = a[i][j] - f * a[p][j]
    return True


# ---------------------------------------------------------------------------
# orthonormalization inside Q(sqrt2, sqrt3)


def _square_split(n: int) -> tuple[int, int]:
    """n = s * t**2 with s squarefree; n > 0."""
    s, t = 1, 1
    d = 2
    while d * d <= n:
        if n % d == 0:
            e = 0
            while n % d == 0:
                n //= d
                e += 1
            t *= d ** (e // 2)
            if e % 2:
                s *= d
        d += 1 if d == 2 else 2
    return s * n, t


def _field_sqrt(q) -> QuadExt:
    """sqrt of a positive rational q, as a QuadExt; raises FieldOverflowError."""
    if isinstance(q, QuadExt):
        if not q.is_rational:
            raise FieldOverflowError(
                f"field overflow: sqrt of irrational element {q!r}"
            )
        q = q.a
    q = Fraction(q)
    if q <= 0:
        raise ValueError("sqrt of a nonpositive norm")
    # sqrt(p/r) = sqrt(p*r)/r
    s, t = _square_split(q.numerator * q.denominator)
    coef = Fraction(t, q.denominator)
    if s == 1:
        return QuadExt(coef)
    if s == 2:
        return QuadExt(0, coef)
    if s == 3:
        return QuadExt(0, 0, coef)
    if s == 6:
        return QuadExt(0, 0, 0, coef)
    raise FieldOverflowError(
        f"field overflow: sqrt({q}) not in Q(sqrt2, sqrt3)"
    )


def orthonormalize(vectors: Iterable[Sequence]) -> list[list[QuadExt]]:
    """Gram-Schmidt with exact normalization in Q(sqrt2, sqrt3).

    Dependent input vectors are skipped.  Raises FieldOverflowError when a
    residual's squared norm has no square root in the field.
    """
    ortho: list[list] = []
    norms: list = []
    for v in vectors:
        w = [QuadExt.coerce(x) for x in v]
        for u, q in zip(ortho, norms):
            coef = dot(w, u) / q
            w = [x - coef * y for x, y in zip(w, u)]
        nsq = dot(w, w)
        if quad_sign(nsq) == 0:
            continue
        ortho.append(w)
        norms.append(nsq)
    out = []
    for w, q in zip(ortho, norms):
        inv = _field_sqrt(q).inverse()
        out.append([x * inv for x in w])
    return out
