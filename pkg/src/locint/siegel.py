"""Closed-form layer: the normalized density polynomial, the density series
A(X), its derivative at X = 1, the closed intersection formula, and the
exact relation tying the two together.

All coefficients are exact rationals.  Empty summation ranges (negative
upper bounds) contribute nothing; every division by 2 in an exponent is
asserted integral.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import ConsistencyViolation, Inadmissible
from .padic import sign_pow
from .quadform import TInvariants


@dataclass(frozen=True)
class IntPolynomial:
    """Dense polynomial with exact rational coefficients."""

    coefficients: tuple  # Fractions, index = degree

    @classmethod
    def from_dict(cls, d: dict) -> "IntPolynomial":
        if not d:
            return cls((Fraction(0),))
        deg = max(d)
        return cls(tuple(Fraction(d.get(k, 0)) for k in range(deg + 1)))

    @property
    def constant_term(self) -> Fraction:
        return self.coefficients[0]

    def __call__(self, x) -> Fraction:
        x = Fraction(x)
        acc = Fraction(0)
        for c in reversed(self.coefficients):
            acc = acc * x + c
        return acc

    def derivative_at_one(self) -> Fraction:
        return sum((Fraction(k) * c for k, c in enumerate(self.coefficients)),
                   Fraction(0))

    def compose_neg(self) -> "IntPolynomial":
        """P(-X)."""
        return IntPolynomial(tuple(c * sign_pow(k)
                                   for k, c in enumerate(self.coefficients)))

    def __mul__(self, other: "IntPolynomial") -> "IntPolynomial":
        a, b = self.coefficients, other.coefficients
        out = [Fraction(0)] * (len(a) + len(b) - 1)
        for i, ca in enumerate(a):
            if ca == 0:
                continue
            for j, cb in enumerate(b):
                out[i + j] += ca * cb
        return IntPolynomial(tuple(out))


def _half(n: int) -> int:
    assert n % 2 == 0, f"odd exponent {n} where an even one is forced"
    return n // 2


def ftilde(inv: TInvariants) -> IntPolynomial:
    """The normalized density polynomial of the invariant tuple.

    Three double sums over i = 0..a1; the shared j-bound of the first two is
    (a1+a2-sigma)/2 - i, the third runs j = 0..a3-a2+2*sigma-4 with an
    alternating xi weight.  Constant coefficient is 1 on every input.
    """
    p = inv.prime
    a1, a2, a3 = inv.exponents
    sg, xi, eta = inv.sigma, inv.xi_tilde, inv.eta
    half = _half(a1 + a2 - sg)
    coef: dict = {}

    def add(k, c):
        coef[k] = coef.get(k, 0) + c

    for i in range(a1 + 1):
        for j in range(half - i + 1):
            add(i + 2 * j, Fraction(p) ** (i + j))
            add(a3 + sg + i + 2 * j, eta * Fraction(p) ** (half - j))
    if xi != 0:
        pref = Fraction(p) ** _half(a1 + a2 - sg + 2)
        for i in range(a1 + 1):
            for j in range(a3 - a2 + 2 * sg - 4 + 1):
                add(a2 - sg + 2 + i + j, pref * xi**j)
    return IntPolynomial.from_dict(coef)


def a_series(inv: TInvariants) -> IntPolynomial:
    """(1 + p^-2 X)(1 - p^-2 X^2) * ftilde(-X); value at p^-r is the
    representation density of the r-extended ambient form."""
    p2 = Fraction(1, inv.prime**2)
    lead = IntPolynomial((Fraction(1), p2)) * IntPolynomial((Fraction(1), Fraction(0), -p2))
    return lead * ftilde(inv).compose_neg()


def alpha_prime(inv: TInvariants) -> Fraction:
    """d/dX of the density series at X = 1."""
    return a_series(inv).derivative_at_one()


def closed_intersection(inv: TInvariants) -> int:
    """The closed formula for the triple intersection number.

    Defined only for admissible tuples (eps_sign = -1).  Three double sums
    with the same index ranges as `ftilde`; the result is an exact integer,
    possibly negative.
    """
    if inv.eps_sign != -1:
        raise Inadmissible(f"eps_sign=+1 for {inv.exponents} {inv.classes}")
    p = inv.prime
    a1, a2, a3 = inv.exponents
    sg, xi, eta = inv.sigma, inv.xi_tilde, inv.eta
    half = _half(a1 + a2 - sg)
    tot = 0
    for i in range(a1 + 1):
        for j in range(half - i + 1):
            tot -= p ** (i + j) * sign_pow(i) * (i + 2 * j)
            tot -= eta * p ** (half - j) * sign_pow(a3 + sg + i) * (a3 + sg + i + 2 * j)
    if xi != 0:
        for i in range(a1 + 1):
            for j in range(a3 - a2 + 2 * sg - 4 + 1):
                tot -= p ** (half + 1) * xi**j * sign_pow(a2 - sg + i + j) * (a2 - sg + 2 + i + j)
    return tot


def density_intersection(inv: TInvariants) -> Fraction:
    """-p^4 / ((p^2+1)(p^2-1)) * alpha_prime: the derivative route to the
    same number."""
    p = inv.prime
    return -Fraction(p**4, (p**2 + 1) * (p**2 - 1)) * alpha_prime(inv)


def relation_check(inv: TInvariants):
    """Assert the exact identity between the closed and derivative routes.

    Returns (closed, derivative-route value); raises ConsistencyViolation
    with both values on mismatch.
    """
    closed = closed_intersection(inv)
    viaderiv = density_intersection(inv)
    if Fraction(closed) != viaderiv:
        raise ConsistencyViolation(
            f"closed {closed} != density route {viaderiv} on {inv.exponents} {inv.classes}",
            values=(closed, viaderiv))
    return closed, viaderiv
