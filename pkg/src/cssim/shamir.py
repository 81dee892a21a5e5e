"""Threshold sharing of the per-account associated-data key."""

from __future__ import annotations

import random
import threading
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .field import FieldError, Polynomial, lagrange_interpolate

DEFAULT_THRESHOLD = 10


class ShareError(ValueError):
    """Domain error while dealing a share."""


class CapacityError(RuntimeError):
    """The x-coordinate space (or sequence counter) is exhausted."""


class InsufficientSharesError(ValueError):
    pass


class IntegrityError(ValueError):
    """Shares do not lie on a single polynomial of the expected degree."""


@dataclass(frozen=True)
class ShamirShare:
    x: int
    y: int


@dataclass
class AccountSecret:
    """Sharing polynomial for one account; ``poly(0)`` is the key."""

    poly: Polynomial
    t: int
    used_xs: set = field(default_factory=set)
    _counter: int = field(default=0, repr=False, compare=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    @property
    def p(self) -> int:
        return self.poly.p

    @property
    def adkey(self) -> int:
        return self.poly(0)

    @classmethod
    def generate(cls, t: int, p: int, rng: random.Random, adkey: int = None) -> AccountSecret:
        if t < 1:
            raise ShareError("threshold must be at least 1")
        s = rng.randrange(p) if adkey is None else adkey % p
        coeffs = [s] + [rng.randrange(p) for _ in range(t - 1)]
        # degree stays t-1 even if the top coefficient is drawn as 0; the
        # trimmed polynomial is still a valid degree <= t-1 sharing.
        return cls(Polynomial(coeffs, p), t)

    def next_x(self) -> int:
        """Reserve the next unused x-coordinate (per-account counter 1, 2, ...)."""
        with self._lock:
            x = self._counter + 1
            while x in self.used_xs:
                x += 1
            if x >= self.p:
                x = _reserve_next(self.used_xs, self.p)
            else:
                self.used_xs.add(x)
            self._counter = x
            return x

    def deal_next(self) -> ShamirShare:
        x = self.next_x()
        return ShamirShare(x, self.poly(x))

    def deal_synthetic(self, rng: random.Random) -> ShamirShare:
        return ShamirShare(self.next_x(), rng.randrange(self.p))


def _reserve_next(used_xs: set, p: int) -> int:
    x = max(used_xs, default=0) + 1
    if x >= p:
        # counter ran off the end; fall back to the smallest gap
        x = next((c for c in range(1, p) if c not in used_xs), None)
        if x is None:
            raise CapacityError(f"all {p - 1} nonzero x-coordinates are used")
    used_xs.add(x)
    return x


def deal_share(secret: AccountSecret, x: int) -> ShamirShare:
    x %= secret.p
    if x == 0:
        raise ShareError("x = 0 would reveal the secret")
    with secret._lock:
        if x in secret.used_xs:
            raise ShareError(f"x = {x} was already used by this account")
        secret.used_xs.add(x)
    return ShamirShare(x, secret.poly(x))


def deal_synthetic(rng: random.Random, used_xs: set, p: int) -> ShamirShare:
    """A decoy share: fresh x from the counter, y uniform on the field.

    ``used_xs`` is updated in place.
    """
    x = _reserve_next(used_xs, p)
    return ShamirShare(x, rng.randrange(p))


def reconstruct(shares: Sequence[ShamirShare], t: int, p: int) -> int:
    """Recover the secret from at least ``t`` real shares."""
    if len(shares) < t:
        raise InsufficientSharesError(f"need {t} shares, got {len(shares)}")
    xs = [s.x % p for s in shares]
    if len(set(xs)) != len(xs):
        raise FieldError("duplicate x-coordinate among shares")
    poly = lagrange_interpolate([(s.x, s.y) for s in shares[:t]], p)
    for s in shares[t:]:
        if poly(s.x) != s.y % p:
            raise IntegrityError(f"share at x = {s.x} is inconsistent with the first {t}")
    return poly(0)


def consistent_secrets(shares: Iterable[ShamirShare], t: int, p: int) -> dict:
    """Count degree <= t-1 polynomials through ``shares`` for every candidate secret.

    Brute force over all non-constant coefficient vectors; only feasible for
    tiny fields and thresholds. Returns ``{secret: count}``.
    """
    shares = list(shares)
    if t == 1:
        counts = {c: 1 for c in range(p)}
        for s in shares:
            for c in range(p):
                if c != s.y % p:
                    counts[c] = 0
        return counts
    grids = np.meshgrid(*([np.arange(p, dtype=np.int64)] * (t - 1)), indexing="ij")
    coeffs = [g.ravel() for g in grids]  # a_1 .. a_{t-1}
    counts = {}
    for c in range(p):
        ok = np.ones(coeffs[0].shape, dtype=bool)
        for s in shares:
            val = np.full(coeffs[0].shape, c, dtype=np.int64)
            xp = 1
            for a in coeffs:
                xp = xp * s.x % p
                val = (val + a * xp) % p
            ok &= val == s.y % p
        counts[c] = int(ok.sum())
    return counts
