"""Intersection calculus on the special fiber: line pairings, pairwise
divisor multiplicities, horizontal components, combinatorial triple products,
the closed case table for difference-divisor triples, and the cross-checked
final intersection number.

Three independent routes to the same integer are implemented:

  * the closed formula (`siegel.closed_intersection`) and its derivative
    counterpart;
  * a case-table route: per-level unit-class reduction, literal dispatch of
    the difference-divisor case values, and a memoized inclusion-exclusion
    that reassembles the full triple product by multilinearity;
  * a combinatorial route on an explicit tree ball: restrict two cycles into
    an odd ambient difference divisor and pair lines and horizontal parts.

Unit rescaling (multiplying the two units of an equal-exponent pair by a
non-square) is a lattice-basis change, hence legal only as a whole-triple
move: it is applied once per recursion level, never per summand.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .building import (SpecialEndo, TreeBall, gram_pairing,
                       sample_orthogonal_triple, vertex_distance)
from .errors import (ConsistencyViolation, Inadmissible, NoCaseMatches,
                     NotInAmbient, RadiusTooSmall, UnsupportedConfiguration)
from .padic import chi_int, sign_pow, smallest_nonsquare
from .quadform import SymMatrix3, TInvariants, invariants_from_classes, invariants_of_matrix
from .siegel import closed_intersection, density_intersection


def _sort3(a, eps):
    pairs = sorted(zip(a, eps), key=lambda t: t[0])
    return tuple(x for x, _ in pairs), tuple(x for _, x in pairs)


def _class_of(u: int, p: int) -> int:
    return 1 if chi_int(u, p) == 1 else smallest_nonsquare(p)


# ---------------------------------------------------------------- closed route
@lru_cache(maxsize=None)
def _zzz_closed(p: int, a: tuple, cls: tuple) -> int:
    """Full-cycle triple product of the (sorted) tuple via the closed formula;
    zero once any exponent drops below zero."""
    if min(a) < 0:
        return 0
    sa, se = _sort3(a, cls)
    return closed_intersection(invariants_from_classes(p, sa, se))


def ddd_second_difference(p: int, exponents, units) -> int:
    """Difference-divisor triple product as the eight-term alternating sum of
    closed full-cycle values over exponent shifts a -> a - 2{0,1}."""
    cls = tuple(_class_of(u, p) for u in units)
    a = tuple(int(x) for x in exponents)
    tot = 0
    for u, v, w in itertools.product((0, 1), repeat=3):
        b = (a[0] - 2 * u, a[1] - 2 * v, a[2] - 2 * w)
        tot += sign_pow(u + v + w) * _zzz_closed(p, b, cls)
    return tot


# ---------------------------------------------------------------- case table
def flip_class(u: int, p: int) -> int:
    """The other square class: 1 <-> smallest non-square."""
    return smallest_nonsquare(p) if chi_int(u, p) == 1 else 1


def reduce_units(p: int, a: tuple, eps: tuple) -> tuple:
    """One rescaling round + equal-slot permutations bringing the sorted
    tuple's chi-pattern into the dispatch table.

    Legal moves only: permuting equal-exponent slots; multiplying both units
    of an equal-exponent pair by a non-square (flips that pair's chi against
    the third slot).  Mixed-parity tuples need no reduction.
    """
    a1, a2, a3 = a
    if a1 % 2 == 0 or a2 % 2 == 0 or a3 % 2 == 0:
        return eps
    c = lambda e, i, j: chi_int(-e[i] * e[j], p)
    if a1 == a2 == a3:
        for perm in itertools.permutations(range(3)):
            pe = tuple(eps[i] for i in perm)
            for resc in (False, True):
                ee = (pe[0], flip_class(pe[1], p), flip_class(pe[2], p)) if resc else pe
                if c(ee, 0, 1) == -1 and c(ee, 0, 2) == -1:
                    return ee
        raise NoCaseMatches(f"equal-triple reduction failed for units {eps}")
    if a1 < a2 == a3:
        c12, c13 = c(eps, 0, 1), c(eps, 0, 2)
        if (c12, c13) == (1, -1):
            return (eps[0], eps[2], eps[1])
        if (c12, c13) == (-1, -1):
            return (eps[0], flip_class(eps[1], p), flip_class(eps[2], p))
    return eps


def mixed_window_value(p: int, e_small: int, e_big: int) -> int:
    """The mixed (difference, full, difference) product for an even-even pair
    below an odd top exponent, with the full cycle on the larger even slot."""
    assert e_small % 2 == 0 and e_big % 2 == 0 and 2 <= e_small <= e_big
    h = (e_small + e_big) // 2
    return p**h + p ** (h - 1) - 2 * p ** (e_small - 1)


def _dispatch_case(p: int, a: tuple, eps: tuple):
    """Literal dispatch of the sorted difference-level tuple (min >= 2).
    Returns (label, value); raises NoCaseMatches outside the table."""
    a1, a2, a3 = a
    assert a1 <= a2 <= a3 and a1 >= 2
    par = (a1 % 2, a2 % 2, a3 % 2)

    if par in ((0, 1, 1), (0, 1, 0)):
        return "even-min-odd-next", 2 * p ** ((a1 + a2 - 3) // 2) * (p - 1)
    if par == (1, 0, 1):
        return "odd-even-odd", 0
    if par == (1, 1, 0):
        v = -2 * p ** ((a1 + a2 - 4) // 2) * (((a1 + 1) // 2) * p - (a1 - 1) // 2) * (p - 1)
        return "odd-odd-even", v
    if par == (1, 0, 0):
        if a2 < a3:
            return "odd-even-even-distinct", 0
        v = -2 * p ** ((a1 + a2 - 3) // 2) * (((a1 + 1) // 2) * p - (a1 - 1) // 2)
        return "odd-even-even-equal", v
    if par == (0, 0, 1):
        raise NoCaseMatches("even-even-odd: evaluated through the mixed window")
    if par == (0, 0, 0):
        raise Inadmissible("all-even exponents are never admissible")

    c12 = chi_int(-eps[0] * eps[1], p)
    c13 = chi_int(-eps[0] * eps[2], p)
    c23 = chi_int(-eps[1] * eps[2], p)
    if a1 == a2 == a3:
        aa = a1
        if (c12, c13, c23) == (-1, -1, 1):
            v = (-(aa + 1) // 2 * p**aa + 3 * (aa + 1) // 2 * p ** (aa - 1)
                 - (aa - 1) * p ** (aa - 2))
            return "equal-triple-split", v
        if (c12, c13, c23) == (-1, -1, -1):
            v = (-(aa + 1) // 2 * p**aa + 3 * (aa + 1) // 2 * p ** (aa - 1)
                 - 2 * (aa - 1) * p ** (aa - 2))
            return "equal-triple-nonsplit", v
        raise NoCaseMatches(f"equal-triple pattern {(c12, c13, c23)} not in table")
    if a2 < a3:
        if c12 == -1:
            v = (-2 * p ** ((a1 + a2 - 4) // 2) * (p - 1)
                 * (((a1 + 1) // 2) * p - (a1 - 1) // 2))
            return "odd-low-pair-anisotropic", v
        if a1 == a2:
            return "odd-low-pair-isotropic", 2 * p ** (a1 - 1)
        return "odd-all-distinct-isotropic", 0
    # a1 < a2 == a3
    base = p ** ((a1 + a2 - 4) // 2) * (((a1 + 1) // 2) * p - (a1 - 1) // 2)
    if (c12, c13) == (1, 1):
        return "odd-top-pair-isotropic", -(p + 1) * base
    if (c12, c13) == (-1, 1):
        return "odd-top-pair-anisotropic", -(p - 1) * base
    raise NoCaseMatches(f"top-pair pattern {(c12, c13)} not in table")


def case_formula(p: int, exponents, units):
    """Closed case value for a difference-level triple with min exponent >= 2.

    Sorts, applies the single unit-rescaling reduction round, and dispatches
    the literal chi-pattern.  The even-even-odd parity returns the mixed
    (difference, full, difference) window value.  Returns (label, value).
    """
    cls = tuple(_class_of(u, p) for u in units)
    sa, se = _sort3(tuple(int(x) for x in exponents), cls)
    if sa[0] < 2:
        raise NoCaseMatches(f"minimum exponent {sa[0]} < 2: below the table")
    if not invariants_from_classes(p, sa, se).admissible:
        raise Inadmissible(f"exponents {sa} with classes {se} at p={p}")
    se = reduce_units(p, sa, se)
    if (sa[0] % 2, sa[1] % 2, sa[2] % 2) == (0, 0, 1):
        return "mixed-even-even-window", mixed_window_value(p, sa[0], sa[1])
    return _dispatch_case(p, sa, se)


@lru_cache(maxsize=None)
def _zzz_from_cases(p: int, a: tuple, cls: tuple) -> int:
    """Case-table route to the full-cycle triple product: per-level unit
    reduction, case value, and inclusion-exclusion over sub-levels."""
    if min(a) < 0:
        return 0
    sa, se = _sort3(a, cls)
    if sa[0] <= 1:
        return _zzz_closed(p, sa, se)  # base level: closed form
    se = reduce_units(p, sa, se)
    par = (sa[0] % 2, sa[1] % 2, sa[2] % 2)
    if par == (0, 0, 1):
        # mixed window: the even-even pair is evaluated against the full
        # cycle on the larger even slot, so the telescoping recursion only
        # strips the two difference slots
        return (mixed_window_value(p, sa[0], sa[1])
                + _zzz_from_cases(p, (sa[0] - 2, sa[1], sa[2]), se)
                + _zzz_from_cases(p, (sa[0], sa[1], sa[2] - 2), se)
                - _zzz_from_cases(p, (sa[0] - 2, sa[1], sa[2] - 2), se))
    tot = _dispatch_case(p, sa, se)[1]
    for u, v, w in itertools.product((0, 1), repeat=3):
        if (u, v, w) == (0, 0, 0):
            continue
        b = (sa[0] - 2 * u, sa[1] - 2 * v, sa[2] - 2 * w)
        tot -= sign_pow(u + v + w) * _zzz_from_cases(p, b, se)
    return tot


def case_table_intersection(p: int, exponents, units) -> int:
    """Full-cycle triple product assembled from the case table alone."""
    cls = tuple(_class_of(u, p) for u in units)
    a, se = _sort3(tuple(int(x) for x in exponents), cls)
    if not invariants_from_classes(p, a, se).admissible:
        raise Inadmissible(f"exponents {a} with classes {se} at p={p}")
    return _zzz_from_cases(p, a, se)


# ---------------------------------------------------------------- combinatorial
@dataclass(frozen=True)
class CycleDivisorInD:
    """Restriction of one cycle's divisor into an odd ambient difference
    divisor: vertical line multiplicities plus at most one horizontal part."""

    ambient_exponent: int
    partner_exponent: int
    vertical: dict                # vertex -> positive multiplicity
    horizontals: tuple            # ((attach_edge, pairing_weight), ...), len <= 1


def pair_multiplicity(p: int, ambient_exp: int, partner_exp: int,
                      dd_ambient: int, dd_partner: int, chi_product: int) -> int:
    """Multiplicity of a shared line in the intersection of two difference
    divisors, from the fiber exponents r = (a - 1 - dd)/2 of each side."""
    if dd_ambient > ambient_exp - 1 or dd_partner > partner_exp - 1:
        raise NotInAmbient("line outside a difference-divisor fiber")
    r1 = (ambient_exp - 1 - dd_ambient) // 2
    r2 = (partner_exp - 1 - dd_partner) // 2
    if r1 != r2:
        return p ** min(r1, r2)
    if ambient_exp == partner_exp:
        if chi_product != -1:
            raise UnsupportedConfiguration(
                "equal exponents with chi = +1 have no direct multiplicity rule")
        return ((ambient_exp + 1) // 2 - r1) * p**r1
    amin = min(ambient_exp, partner_exp)
    assert amin % 2 == 1, "unequal same-parity exponents cannot share a line"
    return ((amin + 1) // 2 - r1) * p**r1


def line_pairing(ball: TreeBall, j: SpecialEndo, P, P2) -> int:
    """Pairing of two lines of the difference divisor of j.

    Distinct lines meet with multiplicity 1 when adjacent and 0 otherwise;
    a line pairs with itself to -(p+1) at exponent 1, and otherwise to -2p
    on the locus of the p-divided cycle (dd <= a - 3) and -p off it.
    """
    p = ball.prime
    a = j.exponent
    lab = ball.distance_labels(j)
    if lab.get(P, a) > a - 1 or lab.get(P2, a) > a - 1:
        raise NotInAmbient("line not in the ambient difference divisor")
    if P == P2:
        if a == 1:
            return -(p + 1)
        return -2 * p if lab[P] <= a - 3 else -p
    return 1 if vertex_distance(p, P, P2) == 1 else 0


def zero_pairing_check(ball: TreeBall, j: SpecialEndo) -> int:
    """Assert (P, D(j)_p) = 0 for every interior line P of the difference
    divisor of an odd-exponent j; returns the number of lines checked."""
    p = ball.prime
    a = j.exponent
    assert a % 2 == 1
    lab = ball.distance_labels(j)
    checked = 0
    for K, dd in lab.items():
        if dd > a - 1 or not ball.interior(K):
            continue
        mK = p ** ((a - 1 - dd) // 2)
        tot = mK * line_pairing(ball, j, K, K)
        for N in ball.neighbors(K):
            ddn = lab[N]
            if ddn <= a - 1:
                tot += p ** ((a - 1 - ddn) // 2)
        if tot != 0:
            raise ConsistencyViolation(f"line at {K} pairs to {tot}, not 0",
                                       values={"vertex": K, "pairing": tot})
        checked += 1
    return checked


class TripleConfig:
    """Three pairwise orthogonal endomorphisms on a common ball, with the
    per-slot distance labels and core edges needed by the triple product.

    The scaling j -> p^l j moves every divisor level but fixes the tree
    action, so one label set per slot serves all levels.
    """

    def __init__(self, j1: SpecialEndo, j2: SpecialEndo, j3: SpecialEndo,
                 ball: TreeBall):
        js = (j1, j2, j3)
        p = ball.prime
        if any(j.prime != p for j in js):
            raise ValueError("prime mismatch between endomorphisms and ball")
        for i in range(3):
            for l in range(i + 1, 3):
                if gram_pairing(p, js[i].coords, js[l].coords) != 0:
                    raise ValueError(f"slots {i} and {l} are not orthogonal")
        self.ball = ball
        self.p = p
        self.js = js
        self.a = tuple(j.exponent for j in js)
        self.units = tuple(j.unit for j in js)
        if 2 * ball.radius < max(self.a) + 3:
            raise RadiusTooSmall(
                f"radius {ball.radius} < max exponent {max(self.a)}/2 + 3/2 + eps")
        inv = invariants_from_classes(p, self.a,
                                      tuple(_class_of(u, p) for u in self.units))
        if not inv.admissible:
            raise Inadmissible(f"sampled triple {self.a} is not admissible")
        self.invariants = inv
        self.dd = [ball.distance_labels(j) for j in js]
        self.core_edge = [ball.core_edge(j) if j.exponent % 2 == 0 else None
                          for j in js]

    def chi_pair(self, i: int, l: int) -> int:
        return chi_int(-self.units[i] * self.units[l], self.p)

    def restrict(self, i: int, l: int, Ai: int, Al: int):
        """CycleDivisorInD of slot l inside the ambient slot i at the level
        with exponents (Ai, Al); None when the chi-pattern is unsupported."""
        p = self.p
        vert = {}
        if Al >= 1:
            for K, ddl in self.dd[l].items():
                if ddl > Al - 1 or self.dd[i][K] > Ai - 1:
                    continue
                try:
                    vert[K] = pair_multiplicity(p, Ai, Al, self.dd[i][K], ddl,
                                                self.chi_pair(i, l))
                except UnsupportedConfiguration:
                    return None
        horiz = []
        if Al % 2 == 0:
            if Al == 0:
                horiz.append((self.core_edge[l], 1))
            elif Ai > Al:
                horiz.append((self.core_edge[l], p ** (Al // 2 - 1) * (p - 1)))
        return CycleDivisorInD(Ai, Al, vert, tuple(horiz))

    def level_product(self, A) -> int:
        """Difference-divisor triple product at level exponents A, formed
        inside the best supported odd ambient slot."""
        ball = self.ball
        odd_slots = [s for s in range(3) if A[s] % 2 == 1]
        if not odd_slots:
            raise UnsupportedConfiguration(f"no odd slot at level {A}")
        last = "no ambient attempted"
        for i in sorted(odd_slots, key=lambda s: -A[s]):
            l, k = [s for s in range(3) if s != i]
            E = self.restrict(i, l, A[i], A[l])
            F = self.restrict(i, k, A[i], A[k])
            if E is None or F is None:
                last = "chi-pattern unsupported"
                continue
            vE, hE = E.vertical, E.horizontals
            vF, hF = F.vertical, F.horizontals
            if hE and hF and not (A[l] == 0 and A[k] == 0):
                last = "two non-unit horizontal parts"
                continue
            # completeness: the two supports may only approach each other
            # strictly inside the ball
            for KE in vE:
                if not ball.interior(KE):
                    for KF in vF:
                        if vertex_distance(self.p, KE, KF) < 2:
                            raise RadiusTooSmall(
                                "supports meet at the ball shell")
            tot = 0
            for K, m in vE.items():
                fK = vF.get(K)
                if fK:
                    tot += m * fK * line_pairing(ball, self.js[i], K, K)
                if ball.interior(K):
                    for N in ball.neighbors(K):
                        fN = vF.get(N)
                        if fN:
                            tot += m * fN
            for (edge, w) in hE:
                tot += w * (vF.get(edge[0], 0) + vF.get(edge[1], 0))
            for (edge, w) in hF:
                tot += w * (vE.get(edge[0], 0) + vE.get(edge[1], 0))
            if hE and hF:
                # exponent-0 pair: both horizontal parts carry weight 1 and
                # meet transversally in the shared core point
                tot += hE[0][1] * hF[0][1]
            return tot
        raise UnsupportedConfiguration(
            f"level {A}: {last}; use the case-table path")

    def assembled_product(self, check_levels: bool = False) -> int:
        """Full-cycle triple product: sum of level products over all
        downward exponent scalings of the three slots."""
        a = self.a
        tot = 0
        for l in range(a[0] // 2 + 1):
            for m in range(a[1] // 2 + 1):
                for n in range(a[2] // 2 + 1):
                    A = (a[0] - 2 * l, a[1] - 2 * m, a[2] - 2 * n)
                    val = self.level_product(A)
                    if check_levels:
                        exp = ddd_second_difference(self.p, A, self.units)
                        if val != exp:
                            raise ConsistencyViolation(
                                f"level {A}: combinatorial {val} != closed {exp}",
                                values={"level": A, "combinatorial": val,
                                        "closed": exp})
                    tot += val
        return tot


def restrict_to_D(j_partner: SpecialEndo, j_ambient: SpecialEndo,
                  ball: TreeBall) -> CycleDivisorInD:
    """Restriction of the partner's difference divisor into the ambient odd
    difference divisor at the full exponents."""
    if j_ambient.exponent % 2 != 1:
        raise UnsupportedConfiguration("ambient exponent must be odd")
    p = ball.prime
    if gram_pairing(p, j_partner.coords, j_ambient.coords) != 0:
        raise ValueError("endomorphisms are not orthogonal")
    dd_a = ball.distance_labels(j_ambient)
    dd_l = ball.distance_labels(j_partner)
    Ai, Al = j_ambient.exponent, j_partner.exponent
    chi_prod = chi_int(-j_ambient.unit * j_partner.unit, p)
    vert = {}
    if Al >= 1:
        for K, ddl in dd_l.items():
            if ddl > Al - 1 or dd_a[K] > Ai - 1:
                continue
            vert[K] = pair_multiplicity(p, Ai, Al, dd_a[K], ddl, chi_prod)
    horiz = []
    if Al % 2 == 0:
        if Al == 0:
            horiz.append((ball.core_edge(j_partner), 1))
        elif Ai > Al:
            horiz.append((ball.core_edge(j_partner), p ** (Al // 2 - 1) * (p - 1)))
    return CycleDivisorInD(Ai, Al, vert, tuple(horiz))


def triple_combinatorial(j1: SpecialEndo, j2: SpecialEndo, j3: SpecialEndo,
                         ball: TreeBall, *, level=None,
                         check_levels: bool = False) -> int:
    """Triple product on an explicit ball: the difference-divisor level
    product at `level` when given, otherwise the full assembled value."""
    cfg = TripleConfig(j1, j2, j3, ball)
    if level is not None:
        level = tuple(int(x) for x in level)
        for s in range(3):
            if not (0 <= level[s] <= cfg.a[s] and (level[s] - cfg.a[s]) % 2 == 0):
                raise ValueError(f"level {level} is not a downward scaling of {cfg.a}")
        return cfg.level_product(level)
    return cfg.assembled_product(check_levels=check_levels)


# ---------------------------------------------------------------- full report
@dataclass(frozen=True)
class TripleReport:
    """All computed routes to one intersection number, with agreement flags."""

    prime: int
    exponents: tuple
    classes: tuple
    value_closed: int
    value_density: Fraction
    value_case_table: int
    value_combinatorial: int = None   # None when the path was skipped
    agreement: bool = True
    notes: tuple = ()
    global_multiplier: Fraction = None
    value_scaled: Fraction = None


def full_intersection(T, *, with_combinatorial: bool = False,
                      ball: TreeBall = None, box: int = 10, seed=None,
                      check_levels: bool = False, global_multiplier=None,
                      strict: bool = True) -> TripleReport:
    """Compute the local intersection number of the triple attached to T by
    every available route and cross-check.

    T may be a SymMatrix3 or a ready TInvariants.  The combinatorial route
    samples an orthogonal triple realizing the invariants and runs the tree
    calculus; it is skipped (with a note) for configurations the direct
    calculus does not support.  A global multiplier is only ever applied as
    a separate labeled product.
    """
    if isinstance(T, TInvariants):
        inv = T
    elif isinstance(T, SymMatrix3):
        inv = invariants_of_matrix(T)
    else:
        raise TypeError("expected SymMatrix3 or TInvariants")
    if not inv.admissible:
        raise Inadmissible(
            f"representability sign is +1 for exponents {inv.exponents}")
    p = inv.prime
    closed = closed_intersection(inv)
    dens = density_intersection(inv)
    cases = _zzz_from_cases(p, inv.exponents, inv.classes)
    comb = None
    notes = []
    if with_combinatorial:
        try:
            targets = tuple((a, chi_int(c, p)) for a, c in zip(inv.exponents, inv.classes))
            js = sample_orthogonal_triple(p, targets, box=box, seed=seed)
            if ball is None:
                ball = TreeBall(p, max(2, (max(inv.exponents) + 4) // 2))
            comb = triple_combinatorial(*js, ball, check_levels=check_levels)
        except UnsupportedConfiguration as e:
            notes.append(f"combinatorial path unsupported: {e}")
    values = {"closed": closed, "density": dens, "case_table": cases}
    if comb is not None:
        values["combinatorial"] = comb
    agree = all(v == closed for v in values.values())
    if not agree:
        if strict:
            raise ConsistencyViolation("intersection routes disagree", values=values)
        notes.append("routes disagree: " + repr(values))
    mult = None
    scaled = None
    if global_multiplier is not None:
        mult = Fraction(global_multiplier)
        scaled = mult * closed
    return TripleReport(p, inv.exponents, inv.classes, closed, dens, cases,
                        comb, agree, tuple(notes), mult, scaled)
