"""Prime-field arithmetic, polynomials and exact linear algebra over GF(p).

Hot paths (sharing, decoding) work on plain ``int`` residues with an explicit
modulus; :class:`FieldElement` wraps a residue for code that wants operator
syntax. Nothing here is constant-time.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

# Enumerable fields for brute-force oracles.
TEST_PRIMES = (17, 97, 257)
# Mersenne prime 2^61 - 1: keys never collide at simulation scale.
RUN_PRIME = (1 << 61) - 1


class FieldError(ValueError):
    """Domain error in field arithmetic (zero inverse, duplicate abscissa...)."""


def fe_inv(a: int, p: int) -> int:
    a %= p
    if a == 0:
        raise FieldError("zero has no multiplicative inverse")
    return pow(a, -1, p)


@dataclass(frozen=True)
class FieldElement:
    value: int
    p: int

    def __post_init__(self):
        if not 0 <= self.value < self.p:
            object.__setattr__(self, "value", self.value % self.p)

    def _coerce(self, other) -> int:
        if isinstance(other, FieldElement):
            if other.p != self.p:
                raise FieldError(f"mixed moduli {self.p} and {other.p}")
            return other.value
        return int(other) % self.p

    def __add__(self, other):
        return FieldElement((self.value + self._coerce(other)) % self.p, self.p)

    __radd__ = __add__

    def __sub__(self, other):
        return FieldElement((self.value - self._coerce(other)) % self.p, self.p)

    def __rsub__(self, other):
        return FieldElement((self._coerce(other) - self.value) % self.p, self.p)

    def __mul__(self, other):
        return FieldElement(self.value * self._coerce(other) % self.p, self.p)

    __rmul__ = __mul__

    def __neg__(self):
        return FieldElement(-self.value % self.p, self.p)

    def inverse(self) -> FieldElement:
        return FieldElement(fe_inv(self.value, self.p), self.p)

    def __truediv__(self, other):
        return self * FieldElement(fe_inv(self._coerce(other), self.p), self.p)

    def __pow__(self, e: int):
        return FieldElement(pow(self.value, e, self.p), self.p)

    def __int__(self):
        return self.value

    def __repr__(self):
        return f"F{self.p}({self.value})"


def _trim(coeffs: Iterable[int], p: int) -> tuple:
    c = [x % p for x in coeffs]
    while c and c[-1] == 0:
        c.pop()
    return tuple(c)


@dataclass(frozen=True)
class Polynomial:
    """Polynomial over GF(p), constant term first.

    Trailing zeros are trimmed on construction so equality is structural;
    the zero polynomial has an empty coefficient tuple and degree -1.
    """

    coeffs: tuple
    p: int

    def __init__(self, coeffs: Iterable[int], p: int):
        object.__setattr__(self, "coeffs", _trim(coeffs, p))
        object.__setattr__(self, "p", p)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, x: int) -> int:
        return poly_eval(self.coeffs, x, self.p)

    def __eq__(self, other):
        if isinstance(other, Polynomial):
            return self.p == other.p and self.coeffs == other.coeffs
        return NotImplemented

    def __hash__(self):
        return hash((self.coeffs, self.p))

    def __iter__(self):
        return iter(self.coeffs)

    def __len__(self):
        return len(self.coeffs)

    def __repr__(self):
        return f"Polynomial({list(self.coeffs)}, p={self.p})"


def poly_eval(coeffs: Sequence[int], x: int, p: int) -> int:
    """Horner evaluation of ``coeffs`` (constant first) at ``x``."""
    acc = 0
    for c in reversed(coeffs):
        acc = (acc * x + c) % p
    return acc


def poly_mul(a: Sequence[int], b: Sequence[int], p: int) -> list:
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai == 0:
            continue
        for j, bj in enumerate(b):
            out[i + j] = (out[i + j] + ai * bj) % p
    return out


def poly_divmod(num: Sequence[int], den: Sequence[int], p: int) -> tuple:
    """Exact long division; returns trimmed ``(quotient, remainder)`` lists."""
    num = list(_trim(num, p))
    den = list(_trim(den, p))
    if not den:
        raise FieldError("division by the zero polynomial")
    if len(num) < len(den):
        return [], num
    lead_inv = fe_inv(den[-1], p)
    quot = [0] * (len(num) - len(den) + 1)
    rem = num[:]
    for k in range(len(quot) - 1, -1, -1):
        coef = rem[k + len(den) - 1] * lead_inv % p
        quot[k] = coef
        if coef:
            for j, dj in enumerate(den):
                rem[k + j] = (rem[k + j] - coef * dj) % p
    return list(_trim(quot, p)), list(_trim(rem[: len(den) - 1], p))


def lagrange_interpolate(points: Sequence[tuple], p: int) -> Polynomial:
    """Unique polynomial of degree <= len(points)-1 through ``points``."""
    if not points:
        raise FieldError("cannot interpolate an empty point set")
    xs = [x % p for x, _ in points]
    if len(set(xs)) != len(xs):
        raise FieldError("duplicate x-coordinate in interpolation points")
    n = len(points)
    result = [0] * n
    for i, (xi, yi) in enumerate(points):
        yi %= p
        if yi == 0:
            continue
        # basis numerator prod_{j != i} (X - x_j), built incrementally
        basis = [1]
        denom = 1
        for j, xj in enumerate(xs):
            if j == i:
                continue
            basis = poly_mul(basis, [-xj % p, 1], p)
            denom = denom * (xs[i] - xj) % p
        scale = yi * fe_inv(denom, p) % p
        for k, b in enumerate(basis):
            result[k] = (result[k] + scale * b) % p
    return Polynomial(result, p)


def solve_linear_system(A: Sequence[Sequence[int]], b: Sequence[int], p: int) -> Optional[list]:
    """Solve ``A x = b`` over GF(p) by Gauss-Jordan elimination.

    ``A`` may be rectangular. Returns one solution (free variables set to
    zero) or ``None`` when the system is inconsistent.
    """
    rows = len(A)
    if rows != len(b):
        raise FieldError(f"dimension mismatch: {rows} rows but {len(b)} right-hand sides")
    cols = len(A[0]) if rows else 0
    if any(len(r) != cols for r in A):
        raise FieldError("ragged matrix")
    M = [[v % p for v in row] + [bi % p] for row, bi in zip(A, b)]
    pivots = []
    r = 0
    for c in range(cols):
        piv = next((i for i in range(r, rows) if M[i][c]), None)
        if piv is None:
            continue
        M[r], M[piv] = M[piv], M[r]
        inv = fe_inv(M[r][c], p)
        # columns left of c are already zero in the pivot row
        prow = [v * inv % p for v in M[r][c:]]
        M[r][c:] = prow
        for i in range(rows):
            if i != r and M[i][c]:
                f = M[i][c]
                M[i][c:] = [(vi - f * vp) % p for vi, vp in zip(M[i][c:], prow)]
        pivots.append(c)
        r += 1
        if r == rows:
            break
    for i in range(r, rows):
        if M[i][cols]:
            return None
    x = [0] * cols
    for i, c in enumerate(pivots):
        x[c] = M[i][cols]
    return x
