"""Threshold reveal: recover the sharing polynomial from noisy shares.

:func:`bw_decode` is Berlekamp-Welch unique decoding; :func:`brute_force_decode`
enumerates subsets and serves as its independent oracle. Both clamp the noise
budget to the unique-decoding radius ``(n - t) // 2``: inside it a
polynomial fitting ``n - e`` points is unique, so neither can return an
ambiguous answer.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations
from typing import Optional, Sequence

from .field import FieldError, Polynomial, lagrange_interpolate, poly_divmod, solve_linear_system
from .shamir import ShamirShare

BRUTE_FORCE_MAX_N = 14


class DecodeStatus(Enum):
    RECOVERED = "recovered"
    UNDECODABLE = "undecodable"


@dataclass(frozen=True)
class NoisyShareSet:
    shares: tuple
    t: int
    p: int
    e_max: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "shares", tuple(self.shares))
        xs = [s.x % self.p for s in self.shares]
        if len(set(xs)) != len(xs):
            raise FieldError("duplicate x-coordinate in share set")

    @property
    def n(self) -> int:
        return len(self.shares)

    @property
    def radius(self) -> int:
        """Largest noise count this set can be decoded under (clamped ``e_max``)."""
        r = max(0, (self.n - self.t) // 2)
        return r if self.e_max is None else max(0, min(self.e_max, r))


@dataclass(frozen=True)
class DecodeResult:
    status: DecodeStatus
    poly: Optional[Polynomial] = None
    inlier_xs: frozenset = field(default_factory=frozenset)

    @property
    def recovered(self) -> bool:
        return self.status is DecodeStatus.RECOVERED

    @property
    def secret(self) -> Optional[int]:
        return None if self.poly is None else self.poly(0)


UNDECODABLE = DecodeResult(DecodeStatus.UNDECODABLE)


def _finish(s: NoisyShareSet, poly: Polynomial) -> DecodeResult:
    inliers = frozenset(sh.x for sh in s.shares if poly(sh.x) == sh.y % s.p)
    if len(inliers) < s.t or s.n - len(inliers) > s.radius:
        return UNDECODABLE
    return DecodeResult(DecodeStatus.RECOVERED, poly, inliers)


def bw_decode(s: NoisyShareSet) -> DecodeResult:
    """Berlekamp-Welch, searching the error count upward from 0.

    For each ``e`` solve ``Q(x_i) = y_i E(x_i)`` with ``E`` monic of degree
    ``e`` and ``deg Q <= e + t - 1``; accept the first ``e`` whose solution
    divides exactly.
    """
    p, t, n = s.p, s.t, s.n
    if n < t or t < 1:
        return UNDECODABLE
    xs = [sh.x % p for sh in s.shares]
    ys = [sh.y % p for sh in s.shares]
    for e in range(s.radius + 1):
        nq = e + t
        A, b = [], []
        for x, y in zip(xs, ys):
            pw = [1] * (nq + e + 1)
            for k in range(1, len(pw)):
                pw[k] = pw[k - 1] * x % p
            # unknowns: q_0..q_{nq-1}, then e_0..e_{e-1}
            A.append(pw[:nq] + [(-y * pw[k]) % p for k in range(e)])
            b.append(y * pw[e] % p)
        sol = solve_linear_system(A, b, p)
        if sol is None:
            continue
        q_coeffs = sol[:nq]
        e_coeffs = sol[nq:] + [1]
        quot, rem = poly_divmod(q_coeffs, e_coeffs, p)
        if rem or len(quot) > t:
            continue
        return _finish(s, Polynomial(quot, p))
    return UNDECODABLE


def brute_force_decode(s: NoisyShareSet) -> DecodeResult:
    """Exhaustive oracle: the unique max-support polynomial, if it is within radius."""
    if s.n > BRUTE_FORCE_MAX_N:
        raise OverflowError(f"brute force is limited to n <= {BRUTE_FORCE_MAX_N}")
    p, t = s.p, s.t
    if s.n < t or t < 1:
        return UNDECODABLE
    pts = [(sh.x % p, sh.y % p) for sh in s.shares]
    best_support = -1
    best = set()
    for subset in combinations(pts, t):
        poly = lagrange_interpolate(list(subset), p)
        support = sum(1 for x, y in pts if poly(x) == y)
        if support > best_support:
            best_support, best = support, {poly}
        elif support == best_support:
            best.add(poly)
    if len(best) != 1 or best_support < s.n - s.radius:
        return UNDECODABLE
    (poly,) = best
    return DecodeResult(DecodeStatus.RECOVERED, poly, frozenset(x for x, y in pts if poly(x) == y))


def decode_shares(shares: Sequence[ShamirShare], t: int, p: int, e_max: Optional[int] = None) -> DecodeResult:
    return bw_decode(NoisyShareSet(tuple(shares), t, p, e_max))
