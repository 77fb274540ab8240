"""Exact finite-precision arithmetic in Z_p and its unramified quadratic extension.

Values are residues mod p^N with an explicit precision N and an exact-zero
flag.  All arithmetic is integer arithmetic; there is no floating point
anywhere in this package.  Valuations are exact as long as they stay below
N - GUARD; beyond that the value is indistinguishable from zero at working
precision and valuation queries fail loudly instead of guessing.

The quadratic extension is Z_p[delta] with delta^2 = Delta, where Delta is
the smallest positive non-square unit mod p (2 for p = 3, 5; 3 for p = 7).
"""
from __future__ import annotations

import math

from .errors import ImpreciseZero, NotAUnit

# Digits of headroom below the precision ceiling.  A valuation must sit
# strictly below N - GUARD to be trusted.
GUARD = 4

INF = math.inf


def default_precision(a_max: int) -> int:
    """Working precision for a computation whose exponents are <= a_max."""
    return 2 * a_max + 12


def smallest_nonsquare(p: int) -> int:
    """Smallest positive integer that is a non-square unit mod p."""
    for d in range(2, p):
        if pow(d, (p - 1) // 2, p) == p - 1:
            return d
    raise ValueError(f"no non-square unit found mod {p}")  # impossible for odd p


def chi_int(u: int, p: int) -> int:
    """Quadratic residue character of a unit integer mod p: +1 or -1."""
    u %= p
    if u == 0:
        raise NotAUnit(f"{u} is divisible by {p}")
    return 1 if pow(u, (p - 1) // 2, p) == 1 else -1


def sign_pow(n: int) -> int:
    """(-1)**n for arbitrary integer n, staying in exact integers."""
    return -1 if n % 2 else 1


class PAdicValue:
    """An element of Z_p known modulo p^precision.

    known_zero marks the exact zero (constructed from the integer 0, or a
    product with an exact zero).  A residue that merely vanishes mod
    p^(precision - GUARD) is *not* a known zero; asking for its valuation
    raises ImpreciseZero.
    """

    __slots__ = ("prime", "precision", "residue", "known_zero")

    def __init__(self, prime: int, precision: int, value: int, known_zero: bool | None = None):
        if prime < 3 or prime % 2 == 0:
            raise ValueError(f"prime must be odd and >= 3, got {prime}")
        if precision <= 0:
            raise ValueError("precision must be positive")
        self.prime = prime
        self.precision = precision
        self.residue = value % prime**precision
        # from an exact integer we know zero-ness exactly
        self.known_zero = (value == 0) if known_zero is None else known_zero

    # -- ring structure -------------------------------------------------
    def _coerce(self, other) -> "PAdicValue":
        if isinstance(other, int):
            return PAdicValue(self.prime, self.precision, other)
        if isinstance(other, PAdicValue):
            if other.prime != self.prime:
                raise ValueError("mixed primes")
            return other
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        n = min(self.precision, o.precision)
        return PAdicValue(self.prime, n, self.residue + o.residue,
                          known_zero=self.known_zero and o.known_zero)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        n = min(self.precision, o.precision)
        return PAdicValue(self.prime, n, self.residue - o.residue,
                          known_zero=self.known_zero and o.known_zero)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        n = min(self.precision, o.precision)
        return PAdicValue(self.prime, n, self.residue * o.residue,
                          known_zero=self.known_zero or o.known_zero)

    __radd__ = __add__
    __rmul__ = __mul__

    def __neg__(self):
        return PAdicValue(self.prime, self.precision, -self.residue, known_zero=self.known_zero)

    def __eq__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        n = min(self.precision, o.precision)
        return self.prime == o.prime and (self.residue - o.residue) % self.prime**n == 0

    def __hash__(self):
        return hash((self.prime, self.residue % self.prime**min(self.precision, 8)))

    def __repr__(self):
        if self.known_zero:
            return f"PAdicValue(p={self.prime}, 0 exact)"
        return f"PAdicValue(p={self.prime}, {self.residue} mod {self.prime}^{self.precision})"

    # -- valuation ------------------------------------------------------
    def valuation(self):
        """Exact valuation, or math.inf for the exact zero.

        Raises ImpreciseZero when the residue vanishes mod p^(N - GUARD)
        without being a known zero — such a valuation cannot be trusted.
        """
        if self.known_zero:
            return INF
        p, n = self.prime, self.precision
        r = self.residue % p ** max(n - GUARD, 1)
        if r == 0:
            raise ImpreciseZero(
                f"residue vanishes mod {p}^{n - GUARD} but is not a known zero")
        v = 0
        x = self.residue
        while x % p == 0:
            x //= p
            v += 1
        return v

    def unit_part(self) -> "PAdicValue":
        """self / p^valuation, a unit; precision drops by the valuation."""
        v = self.valuation()
        if v is INF:
            raise NotAUnit("exact zero has no unit part")
        p = self.prime
        return PAdicValue(p, self.precision - v, self.residue // p**v, known_zero=False)

    def is_unit(self) -> bool:
        return not self.known_zero and self.residue % self.prime != 0

    def inverse(self) -> "PAdicValue":
        if not self.is_unit():
            raise NotAUnit("inverse of a non-unit")
        p, n = self.prime, self.precision
        return PAdicValue(p, n, pow(self.residue, -1, p**n), known_zero=False)


def valuation(x: PAdicValue):
    return x.valuation()


def chi(u: PAdicValue) -> int:
    """Quadratic residue character of a unit of Z_p."""
    if not u.is_unit():
        raise NotAUnit("chi is defined on units only")
    return chi_int(u.residue, u.prime)


class QuadExtValue:
    """c0 + c1*delta in the unramified quadratic extension, delta^2 = Delta."""

    __slots__ = ("c0", "c1", "delta_sq")

    def __init__(self, c0: PAdicValue, c1: PAdicValue, delta_sq: int | None = None):
        if c0.prime != c1.prime:
            raise ValueError("mixed primes")
        self.c0 = c0
        self.c1 = c1
        self.delta_sq = smallest_nonsquare(c0.prime) if delta_sq is None else delta_sq

    @classmethod
    def from_ints(cls, prime: int, precision: int, c0: int, c1: int) -> "QuadExtValue":
        return cls(PAdicValue(prime, precision, c0), PAdicValue(prime, precision, c1))

    @property
    def prime(self):
        return self.c0.prime

    def __add__(self, other):
        return QuadExtValue(self.c0 + other.c0, self.c1 + other.c1, self.delta_sq)

    def __sub__(self, other):
        return QuadExtValue(self.c0 - other.c0, self.c1 - other.c1, self.delta_sq)

    def __mul__(self, other):
        if isinstance(other, int):
            return QuadExtValue(self.c0 * other, self.c1 * other, self.delta_sq)
        d = self.delta_sq
        return QuadExtValue(self.c0 * other.c0 + (self.c1 * other.c1) * d,
                            self.c0 * other.c1 + self.c1 * other.c0,
                            d)

    __rmul__ = __mul__

    def __neg__(self):
        return QuadExtValue(-self.c0, -self.c1, self.delta_sq)

    def __eq__(self, other):
        return self.c0 == other.c0 and self.c1 == other.c1

    def __repr__(self):
        return f"QuadExtValue({self.c0.residue} + {self.c1.residue}*delta, p={self.prime})"

    def conj(self) -> "QuadExtValue":
        """Galois conjugate c0 - c1*delta (the Frobenius of the extension)."""
        return QuadExtValue(self.c0, -self.c1, self.delta_sq)

    def norm(self) -> PAdicValue:
        """x * conj(x) = c0^2 - Delta*c1^2; the delta-part is exactly zero."""
        return self.c0 * self.c0 - (self.c1 * self.c1) * self.delta_sq

    def valuation(self):
        """min of the component valuations (INF only for the exact zero)."""
        if self.c0.known_zero and self.c1.known_zero:
            return INF
        if self.c0.known_zero:
            return self.c1.valuation()
        if self.c1.known_zero:
            return self.c0.valuation()
        return min(self.c0.valuation(), self.c1.valuation())


def conj(x: QuadExtValue) -> QuadExtValue:
    return x.conj()


def norm(x: QuadExtValue) -> PAdicValue:
    return x.norm()
