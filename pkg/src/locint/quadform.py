"""Diagonalization of symmetric 3x3 matrices over Z_p (p odd) and the
derived invariants of the fundamental matrix.

Everything runs in exact rational arithmetic: the diagonalizing column
operations use p-integral multipliers only, so the accumulated transform is
unimodular over Z_p and the diagonal entries are exact rationals whose
valuations and unit classes are read off exactly.
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import SingularMatrix, PrecisionExhausted
from .padic import PAdicValue, chi_int, default_precision, sign_pow, smallest_nonsquare


def _vp_fraction(x: Fraction, p: int) -> int:
    if x == 0:
        raise ZeroDivisionError("valuation of zero")
    v = 0
    n = x.numerator
    while n % p == 0:
        n //= p
        v += 1
    d = x.denominator
    while d % p == 0:
        d //= p
        v -= 1
    return v


@dataclass(frozen=True)
class SymMatrix3:
    """A nonsingular symmetric 3x3 matrix with integer entries, read in Z_p."""

    entries: tuple
    prime: int

    def __post_init__(self):
        e = tuple(tuple(int(x) for x in row) for row in self.entries)
        object.__setattr__(self, "entries", e)
        if len(e) != 3 or any(len(r) != 3 for r in e):
            raise ValueError("need a 3x3 matrix")
        for i in range(3):
            for j in range(3):
                if e[i][j] != e[j][i]:
                    raise ValueError("matrix is not symmetric")
        if self.det() == 0:
            raise SingularMatrix("det = 0")
        if self.prime < 3 or self.prime % 2 == 0:
            raise ValueError("prime must be odd")

    def det(self) -> int:
        ((a, b, c), (d, e, f), (g, h, i)) = self.entries
        return a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g)

    @classmethod
    def diag(cls, d1: int, d2: int, d3: int, prime: int) -> "SymMatrix3":
        return cls(((d1, 0, 0), (0, d2, 0), (0, 0, d3)), prime)


@dataclass(frozen=True)
class DiagonalForm:
    """Sorted diagonal shape diag(eps_1 p^a1, eps_2 p^a2, eps_3 p^a3)."""

    prime: int
    exponents: tuple          # (a1, a2, a3) ascending
    units: tuple              # PAdicValue units, aligned with exponents
    classes: tuple            # square-class representatives, each 1 or Delta
    transform: tuple = field(repr=False, default=None)  # unimodular U with U^t T U diagonal

    @property
    def precision(self):
        return self.units[0].precision


def _pivot(M, k, p):
    """Minimal-valuation pivot position in the trailing block, diagonal preferred."""
    best = None
    best_v = None
    for i in range(k, 3):
        for j in range(k, 3):
            if M[i][j] == 0:
                continue
            v = _vp_fraction(M[i][j], p)
            better = best_v is None or v < best_v
            if not better and v == best_v:
                # prefer diagonal, then smallest index pair
                cur_diag, new_diag = best[0] == best[1], i == j
                better = (new_diag and not cur_diag) or (
                    new_diag == cur_diag and (i, j) < best)
            if better:
                best, best_v = (i, j), v
    if best is None:
        raise SingularMatrix("zero trailing block")
    return best, best_v


def _col_op(M, U, dst, src, factor):
    # column dst += factor * column src, and the congruent row operation
    for r in range(3):
        M[r][dst] += factor * M[r][src]
    for c in range(3):
        M[dst][c] += factor * M[src][c]
    for r in range(3):
        U[r][dst] += factor * U[r][src]


def _swap(M, U, i, j):
    for r in range(3):
        M[r][i], M[r][j] = M[r][j], M[r][i]
    M[i], M[j] = M[j], M[i]
    for r in range(3):
        U[r][i], U[r][j] = U[r][j], U[r][i]


def diagonalize(T: SymMatrix3) -> DiagonalForm:
    """Jordan splitting for p odd.

    Pivot rule: among entries of minimal valuation prefer diagonal ones,
    ties broken by smallest index; a purely off-diagonal minimum (i, j) is
    moved onto the diagonal by adding column j into column i — or
    subtracting it, whichever preserves the minimal valuation (one of the
    two always does, since their difference is 4 T_ij).
    """
    p = T.prime
    M = [[Fraction(x) for x in row] for row in T.entries]
    U = [[Fraction(int(i == j)) for j in range(3)] for i in range(3)]
    for k in range(3):
        (i, j), v = _pivot(M, k, p)
        if i != j:
            _col_op(M, U, i, j, Fraction(1))
            if M[i][i] == 0 or _vp_fraction(M[i][i], p) != v:
                _col_op(M, U, i, j, Fraction(-2))
            if M[i][i] == 0 or _vp_fraction(M[i][i], p) != v:
                raise PrecisionExhausted("could not move the pivot onto the diagonal")
        if i != k:
            _swap(M, U, k, i)
        piv = M[k][k]
        for r in range(k + 1, 3):
            if M[r][k] != 0:
                _col_op(M, U, r, k, -M[r][k] / piv)
    # exact sanity: U^t T U == M (diagonal) and U is unimodular over Z_p
    Tm = [[Fraction(x) for x in row] for row in T.entries]
    prod = [[sum(U[r][i] * Tm[r][s] * U[s][j] for r in range(3) for s in range(3))
             for j in range(3)] for i in range(3)]
    for a in range(3):
        for b in range(3):
            expect = M[a][b] if a == b else Fraction(0)
            if prod[a][b] != expect:
                raise PrecisionExhausted("diagonalization verification failed")
    det_u = (U[0][0] * (U[1][1] * U[2][2] - U[1][2] * U[2][1])
             - U[0][1] * (U[1][0] * U[2][2] - U[1][2] * U[2][0])
             + U[0][2] * (U[1][0] * U[2][1] - U[1][1] * U[2][0]))
    if det_u == 0 or _vp_fraction(det_u, p) != 0:
        raise PrecisionExhausted("transform is not unimodular")

    diag = sorted(((_vp_fraction(M[k][k], p), M[k][k]) for k in range(3)),
                  key=lambda t: t[0])
    a_max = diag[-1][0]
    prec = default_precision(a_max)
    pn = p**prec
    delta = smallest_nonsquare(p)
    exps, units, classes = [], [], []
    for a, d in diag:
        u = d / p**a  # unit rational
        res = u.numerator * pow(u.denominator, -1, pn) % pn
        units.append(PAdicValue(p, prec, res, known_zero=False))
        classes.append(1 if chi_int(res, p) == 1 else delta)
        exps.append(a)
    return DiagonalForm(p, tuple(exps), tuple(units), tuple(classes),
                        transform=tuple(tuple(row) for row in U))


@dataclass(frozen=True)
class TInvariants:
    """Exponents, derived invariants, and the representability sign."""

    prime: int
    exponents: tuple          # a1 <= a2 <= a3
    classes: tuple            # canonical square classes, (1,..,1,det) per block
    sigma: int                # 2 if a1 == a2 mod 2 else 1
    xi_tilde: int             # chi(-e1 e2) when sigma == 2, else 0
    eta: int                  # +1 iff the form is isotropic over Q_p
    eps_sign: int             # -1 iff admissible (represented by the non-split side)
    chi_pairs: tuple          # chi(-e_i e_j) for (i,j) = (0,1), (0,2), (1,2)

    @property
    def admissible(self) -> bool:
        return self.eps_sign == -1


def invariants_from_classes(p: int, exponents, classes) -> TInvariants:
    """Invariants straight from sorted exponents and unit classes.

    This is the entry point for grid sweeps; `compute_invariants` funnels
    here after diagonalization.
    """
    order = sorted(range(3), key=lambda k: exponents[k])
    a = tuple(int(exponents[k]) for k in order)
    e = [int(classes[k]) for k in order]
    if any(x < 0 for x in a):
        raise ValueError("exponents must be non-negative")
    if any(x % p == 0 for x in e):
        raise ValueError("classes must be units")
    # Canonicalize per Jordan block: slots sharing an exponent only carry a
    # well-defined determinant class, not individual unit classes, so a block
    # of size r is stored as (1, ..., 1, det).  Singletons reduce to 1/Delta.
    delta = smallest_nonsquare(p)
    i = 0
    while i < 3:
        j = i
        while j < 3 and a[j] == a[i]:
            j += 1
        prod = 1
        for k in range(i, j):
            prod *= e[k]
            e[k] = 1
        e[j - 1] = 1 if chi_int(prod, p) == 1 else delta
        i = j
    e = tuple(e)

    sigma = 2 if (a[0] - a[1]) % 2 == 0 else 1
    xi = chi_int(-e[0] * e[1], p) if sigma == 2 else 0
    eta = None
    for (i, j, k) in ((0, 1, 2), (0, 2, 1), (1, 2, 0)):
        if (a[i] - a[j]) % 2 == 0:
            eta = 1 if (chi_int(-e[i] * e[j], p) == 1 or (a[k] - a[j]) % 2 == 0) else -1
            break
    s = a[0] + a[1] + a[2]
    sign = sign_pow(s)
    sign *= chi_int(-1, p) ** ((s + a[0] * a[1] + a[1] * a[2] + a[0] * a[2]) % 2)
    sign *= chi_int(e[0], p) ** ((a[1] + a[2]) % 2)
    sign *= chi_int(e[1], p) ** ((a[0] + a[2]) % 2)
    sign *= chi_int(e[2], p) ** ((a[0] + a[1]) % 2)
    pairs = tuple(chi_int(-e[i] * e[j], p) for (i, j) in ((0, 1), (0, 2), (1, 2)))
    return TInvariants(p, a, e, sigma, xi, eta, sign, pairs)


def compute_invariants(D: DiagonalForm) -> TInvariants:
    return invariants_from_classes(D.prime, D.exponents, D.classes)


def invariants_of_matrix(T: SymMatrix3) -> TInvariants:
    return compute_invariants(diagonalize(T))


def random_unimodular_conjugate(T: SymMatrix3, seed: int) -> SymMatrix3:
    """U^t T U for a pseudorandom U with unit determinant mod p."""
    p = T.prime
    rng = random.Random(seed)
    # permutation * lower-unitriangular * unit-diagonal * upper-unitriangular
    perm = list(range(3))
    rng.shuffle(perm)
    P = [[int(perm[i] == j) for j in range(3)] for i in range(3)]
    L = [[1 if i == j else (rng.randrange(-p * p, p * p) if i > j else 0)
          for j in range(3)] for i in range(3)]
    Dg = [[(rng.randrange(1, p) + p * rng.randrange(-p, p)) if i == j else 0
           for j in range(3)] for i in range(3)]
    V = [[1 if i == j else (rng.randrange(-p * p, p * p) if i < j else 0)
          for j in range(3)] for i in range(3)]

    def mul(A, B):
        return [[sum(A[i][k] * B[k][j] for k in range(3)) for j in range(3)]
                for i in range(3)]

    U = mul(mul(P, L), mul(Dg, V))
    Ut = [[U[j][i] for j in range(3)] for i in range(3)]
    out = mul(Ut, mul([list(r) for r in T.entries], U))
    return SymMatrix3(tuple(tuple(r) for r in out), p)


def all_class_tuples(p: int):
    """The eight unit-class triples {1, Delta}^3."""
    d = smallest_nonsquare(p)
    return list(itertools.product((1, d), repeat=3))


def admissible_grid(p: int, a_max: int):
    """Every admissible (exponents, classes) pair with a1<=a2<=a3<=a_max,
    deduplicated by (exponents, all chi invariants)."""
    seen = set()
    out = []
    for a in itertools.combinations_with_replacement(range(a_max + 1), 3):
        for cls in all_class_tuples(p):
            inv = invariants_from_classes(p, a, cls)
            if not inv.admissible:
                continue
            key = (inv.exponents, inv.xi_tilde, inv.eta, inv.chi_pairs)
            if key in seen:
                continue
            seen.add(key)
            out.append(inv)
    return out
