"""The (p^2+1)-regular tree of lattice classes, special endomorphisms, their
semilinear action, fixed loci, and special-fiber divisors.

Vertices are homothety classes of rank-2 lattices over the unramified
quadratic extension, held in a canonical Hermite-style reduced form
[[p^alpha, c], [0, p^d]] with c reduced mod p^alpha and min(alpha, d,
v(c)) = 0 — equality of classes is equality of keys, and the tree distance
between two keys is a four-integer valuation computation.

A special endomorphism j with coordinates (x1..x4) in the orthogonal basis
of the endomorphism module (Gram diag(1, -1, p, -Delta p)) acts on the tree
through the semilinear map beta: the vertex with reduced basis B goes to
the class of M~ . conj(B), where M~ = p * M_beta is integral.  Because
beta^2 is the scalar q(j)/p, beta is an involution of the tree and

    dd(x) := d(x, beta x)  =  2 * dist(x, fixed locus)

is the doubled distance label that drives every divisor multiplicity.  For
odd valuation of q the fixed locus is a (p+1)-regular subtree (dd even);
for even valuation it is the midpoint of a single edge whose two endpoints
are swapped (dd odd, the endpoints being exactly the dd = 1 vertices).

Hot paths run on plain integer pairs (x, y) = x + y*delta mod p^PRECISION;
the public types carry QuadExtValue views of the same data.
"""
from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field
from typing import NamedTuple

import sympy

from .errors import (GeometryViolation, Inadmissible, InconsistentDeterminant,
                     RadiusTooSmall, SearchExhausted, ShapeViolation)
from .padic import QuadExtValue, chi_int, smallest_nonsquare
from .quadform import invariants_from_classes

PRECISION = 48  # residue digits carried by the tree engine


# ---------------------------------------------------------------- raw ring ops
# ring = (p, Delta, p**prec, prec); elements are int pairs (x, y) = x + y*delta.
def _ring(p: int, prec: int = PRECISION):
    return (p, smallest_nonsquare(p), p**prec, prec)


def _add(R, A, B):
    return ((A[0] + B[0]) % R[2], (A[1] + B[1]) % R[2])


def _sub(R, A, B):
    return ((A[0] - B[0]) % R[2], (A[1] - B[1]) % R[2])


def _mul(R, A, B):
    p, D, PN, _ = R
    return ((A[0] * B[0] + D * A[1] * B[1]) % PN, (A[0] * B[1] + A[1] * B[0]) % PN)


def _scal(R, k, A):
    return ((k * A[0]) % R[2], (k * A[1]) % R[2])


def _cj(R, A):
    return (A[0], (-A[1]) % R[2])


def _vp(R, x):
    p, _, PN, prec = R
    x %= PN
    if x == 0:
        return prec
    v = 0
    while x % p == 0:
        x //= p
        v += 1
    return v


def _val(R, A):
    return min(_vp(R, A[0]), _vp(R, A[1]))


def _div_pk(R, A, k):
    pk = R[0] ** k
    assert A[0] % pk == 0 and A[1] % pk == 0
    return (A[0] // pk, A[1] // pk)


def _inv_unit(R, A):
    p, D, PN, _ = R
    n = (A[0] * A[0] - D * A[1] * A[1]) % PN
    assert n % p != 0
    ni = pow(n, -1, PN)
    return ((A[0] * ni) % PN, (-A[1] * ni) % PN)


# matrices (a, b, c, d) = [[a, b], [c, d]], entries int pairs
def _mat_mul(R, M, N):
    a, b, c, d = M
    e, f, g, h = N
    return (_add(R, _mul(R, a, e), _mul(R, b, g)),
            _add(R, _mul(R, a, f), _mul(R, b, h)),
            _add(R, _mul(R, c, e), _mul(R, d, g)),
            _add(R, _mul(R, c, f), _mul(R, d, h)))


def _mat_cj(R, M):
    return tuple(_cj(R, x) for x in M)


def _mat_det(R, M):
    a, b, c, d = M
    return _sub(R, _mul(R, a, d), _mul(R, b, c))


class LatticeVertex(NamedTuple):
    """Canonical key of a lattice class: basis [[p^alpha, c], [0, p^dexp]],
    c = c0 + c1*delta reduced mod p^alpha, min(alpha, dexp, v(c)) = 0."""

    alpha: int
    dexp: int
    c0: int
    c1: int


def _canonical(R, M) -> LatticeVertex:
    p, D, PN, prec = R
    a, b, c, d = M
    vc, vd = _val(R, c), _val(R, d)
    if vc < vd:
        a, b = b, a
        c, d = d, c
        vd = vc
    if vd >= prec - 8:
        raise ShapeViolation("singular lattice basis or precision exhausted")
    u = _div_pk(R, d, vd)
    b = _mul(R, b, _inv_unit(R, u))
    qq = _div_pk(R, c, vd)
    a = _sub(R, a, _mul(R, qq, b))
    va = _val(R, a)
    if va >= prec - 8:
        raise ShapeViolation("singular lattice basis or precision exhausted")
    pa = p**va
    c0, c1 = b[0] % pa, b[1] % pa
    if c0 == 0 and c1 == 0:
        vb = prec
    else:
        vb = min(_vp(R, c0) if c0 else prec, _vp(R, c1) if c1 else prec)
    k = min(va, vd, vb)
    if k:
        pk = p**k
        va -= k
        vd -= k
        pa = p**va
        c0, c1 = (c0 // pk) % pa, (c1 // pk) % pa
    return LatticeVertex(va, vd, c0, c1)


def _from_key(R, K: LatticeVertex):
    p, _, PN, _ = R
    return ((p**K.alpha % PN, 0), (K.c0, K.c1), (0, 0), (p**K.dexp % PN, 0))


def vertex_distance(p: int, K1: LatticeVertex, K2: LatticeVertex) -> int:
    """Tree distance: the gap between the two elementary divisors of the
    change-of-basis matrix."""
    R = _ring(p)
    PN = R[2]
    s0 = (p**K1.dexp * K2.c0 - K1.c0 * p**K2.dexp) % PN
    s1 = (p**K1.dexp * K2.c1 - K1.c1 * p**K2.dexp) % PN
    v01 = min(_vp(R, s0), _vp(R, s1))
    m = min(K1.dexp + K2.alpha, K1.alpha + K2.dexp, v01)
    return (K1.alpha + K1.dexp + K2.alpha + K2.dexp) - 2 * m


def vertex_neighbors(p: int, K: LatticeVertex):
    """The p^2 + 1 index-p sublattice classes: lines in L/pL over F_{p^2}."""
    R = _ring(p)
    PN = R[2]
    v1t, v1b = (p**K.alpha % PN, 0), (0, 0)
    v2t, v2b = (K.c0, K.c1), (p**K.dexp % PN, 0)
    out = []
    for t0 in range(p):
        for t1 in range(p):
            t = (t0, t1)
            na = _add(R, v1t, _mul(R, t, v2t))
            nc = _add(R, v1b, _mul(R, t, v2b))
            out.append(_canonical(R, (na, _scal(R, p, v2t), nc, _scal(R, p, v2b))))
    out.append(_canonical(R, (v2t, _scal(R, p, v1t), v2b, _scal(R, p, v1b))))
    return out


BASE_VERTEX = LatticeVertex(0, 0, 0, 0)


# ---------------------------------------------------------------- special endos
def gram_pairing(p: int, x, y) -> int:
    """Bilinear form of the coordinate basis: Gram diag(1, -1, p, -Delta p)."""
    D = smallest_nonsquare(p)
    s = (1, -1, p, -D * p)
    return sum(s[i] * x[i] * y[i] for i in range(4))


@dataclass(frozen=True)
class SpecialEndo:
    """x1 s1 + x2 s2 + x3 s3 + x4 s4 with q = x1^2 - x2^2 + p x3^2 - Delta p x4^2.

    In the 2x2 shape [[a, b], [c, p conj(a)]] the coordinates give
    a = x3 + x4 delta, b = (x2 - x1) delta, c = (x1 + x2) delta / Delta —
    both b and c are pure delta-multiples, so conj(b) = -b, conj(c) = -c.
    """

    prime: int
    coords: tuple
    a: QuadExtValue = field(repr=False, default=None)
    b: QuadExtValue = field(repr=False, default=None)
    c: QuadExtValue = field(repr=False, default=None)

    def __post_init__(self):
        x = tuple(int(v) for v in self.coords)
        object.__setattr__(self, "coords", x)
        p = self.prime
        D = smallest_nonsquare(p)
        dinv = pow(D, -1, p**PRECISION)
        object.__setattr__(self, "a", QuadExtValue.from_ints(p, PRECISION, x[2], x[3]))
        object.__setattr__(self, "b", QuadExtValue.from_ints(p, PRECISION, 0, x[1] - x[0]))
        object.__setattr__(self, "c", QuadExtValue.from_ints(p, PRECISION, 0, (x[0] + x[1]) * dinv))

    @property
    def q_value(self) -> int:
        x = self.coords
        p = self.prime
        return x[0] ** 2 - x[1] ** 2 + p * x[2] ** 2 - smallest_nonsquare(p) * p * x[3] ** 2

    @property
    def exponent(self) -> int:
        q = self.q_value
        if q == 0:
            raise ValueError("q = 0: not a quasi-isogeny")
        v = 0
        while q % self.prime == 0:
            q //= self.prime
            v += 1
        return v

    @property
    def unit(self) -> int:
        return self.q_value // self.prime**self.exponent

    @property
    def chi_class(self) -> int:
        return chi_int(self.unit, self.prime)

    def scaled(self, k: int) -> "SpecialEndo":
        """p^k * j (k may be negative when every coordinate allows it)."""
        f = self.prime**k if k >= 0 else None
        if f is None:
            f = self.prime ** (-k)
            assert all(v % f == 0 for v in self.coords), "not divisible"
            return SpecialEndo(self.prime, tuple(v // f for v in self.coords))
        return SpecialEndo(self.prime, tuple(v * f for v in self.coords))


def endo_from_coords(p: int, x1: int, x2: int, x3: int, x4: int) -> SpecialEndo:
    return SpecialEndo(p, (x1, x2, x3, x4))


@dataclass(frozen=True)
class BetaAction:
    """Descriptor of the semilinear tree action of an endomorphism.

    The underlying map is v -> M_beta . conj(v) with
    M_beta = [[conj(a), conj(b)], [conj(c)/p, a]]; since the [1][0] entry is
    not integral, `matrix` holds the integral rescale p * M_beta, which acts
    on lattice bases directly and moves homothety classes identically.  The
    conjugation twist direction is immaterial for fixed loci (conjugation
    has order 2); the determinant-valuation law nu(det M_beta) = nu(q) - 1
    guards the construction.
    """

    endo: SpecialEndo
    matrix: tuple               # p * M_beta, 2x2 of QuadExtValue
    integral_matrix: tuple = field(repr=False, default=None)  # int-pair engine form

    @property
    def det_valuation(self) -> int:
        """nu_p det M_beta (the unscaled matrix)."""
        return self.endo.exponent - 1


def _engine_matrix(p: int, coords):
    """p * M_beta as int pairs: [[p conj(a), p conj(b)], [conj(c), p a]]."""
    R = _ring(p)
    PN = R[2]
    x = coords
    a = (x[2] % PN, x[3] % PN)
    b = (0, (x[1] - x[0]) % PN)
    c = (0, ((x[0] + x[1]) * pow(R[1], -1, PN)) % PN)
    return (_scal(R, p, _cj(R, a)), _scal(R, p, _cj(R, b)), _cj(R, c), _scal(R, p, a))


def beta_action(j: SpecialEndo) -> BetaAction:
    if j.q_value == 0:
        raise ValueError("q = 0")
    p = j.prime
    R = _ring(p)
    Mt = _engine_matrix(p, j.coords)
    # nu(det(p M_beta)) = nu(q) + 1, i.e. nu(det M_beta) = nu(q) - 1
    if _val(R, _mat_det(R, Mt)) != j.exponent + 1:
        raise InconsistentDeterminant(
            f"det valuation != {j.exponent - 1} for coords {j.coords}")
    # involution: (p M_beta) conj(p M_beta) = p q * Id
    sq = _mat_mul(R, Mt, _mat_cj(R, Mt))
    pq = (p * j.q_value) % R[2]
    if sq != ((pq, 0), (0, 0), (0, 0), (pq, 0)):
        raise InconsistentDeterminant(f"action is not an involution for {j.coords}")
    mk = QuadExtValue.from_ints
    mat = tuple(tuple(mk(p, PRECISION, e[0], e[1]) for e in row)
                for row in ((Mt[0], Mt[1]), (Mt[2], Mt[3])))
    return BetaAction(j, mat, integral_matrix=Mt)


# ---------------------------------------------------------------- tree ball
class TreeBall:
    """BFS ball in the tree around the base vertex, with cached doubled
    distance labels dd(x) = d(x, beta x) per endomorphism."""

    def __init__(self, p: int, radius: int, center: LatticeVertex = BASE_VERTEX):
        if radius < 1:
            raise ValueError("radius >= 1")
        self.prime = p
        self.radius = radius
        self.center = center
        self._ring = _ring(p)
        depth = {center: 0}
        order = [center]
        nbrs = {}
        i = 0
        while i < len(order):
            K = order[i]
            i += 1
            if depth[K] >= radius:
                continue
            ns = vertex_neighbors(p, K)
            nbrs[K] = ns
            for N in ns:
                if N not in depth:
                    depth[N] = depth[K] + 1
                    order.append(N)
        self.depth = depth
        self.order = order
        self._nbrs = nbrs
        self._labels: dict = {}

    def __len__(self):
        return len(self.order)

    def interior(self, K: LatticeVertex) -> bool:
        return K in self._nbrs

    def neighbors(self, K: LatticeVertex):
        return self._nbrs[K]

    def beta_image(self, j: SpecialEndo, K: LatticeVertex) -> LatticeVertex:
        R = self._ring
        Mt = _engine_matrix(self.prime, j.coords)
        return _canonical(R, _mat_mul(R, Mt, _mat_cj(R, _from_key(R, K))))

    def distance_labels(self, j: SpecialEndo) -> dict:
        """dd(x) = d(x, beta x) for every ball vertex, with structural checks."""
        key = j.coords
        if key in self._labels:
            return self._labels[key]
        p = self.prime
        R = self._ring
        Mt = _engine_matrix(p, j.coords)
        a = j.exponent
        lab = {}
        for K in self.order:
            img = _canonical(R, _mat_mul(R, Mt, _mat_cj(R, _from_key(R, K))))
            lab[K] = vertex_distance(p, K, img)
        par = (a - 1) % 2
        if any(v % 2 != par for v in lab.values()):
            raise ShapeViolation(f"dd parity broken for coords {j.coords}")
        for K, ns in self._nbrs.items():
            dK = lab[K]
            for N in ns:
                dN = lab[N]
                # equal labels occur only inside the fixed locus: on the
                # centre subtree (odd) or across the core edge (even)
                if not (abs(dK - dN) == 2 or (dK == dN and dK <= 1)):
                    raise ShapeViolation(f"dd step broken at {K}->{N} for {j.coords}")
        self._labels[key] = lab
        return lab

    def core_edge(self, j: SpecialEndo):
        """The unique swapped edge of an even endomorphism (dd = 1 pair)."""
        if j.exponent % 2 != 0:
            raise ShapeViolation("core edge exists only for even exponent")
        lab = self.distance_labels(j)
        ends = [K for K in self.order if lab[K] == 1]
        if len(ends) != 2 or not all(self.interior(K) for K in ends):
            raise RadiusTooSmall(f"core edge of {j.coords} not inside the ball")
        u, w = ends
        if w not in self._nbrs[u]:
            raise ShapeViolation("core endpoints not adjacent")
        if self.beta_image(j, u) != w or self.beta_image(j, w) != u:
            raise ShapeViolation("core edge not swapped by the action")
        return (u, w)


@dataclass(frozen=True)
class FixedLocus:
    kind: str                  # "subtree" | "edge-midpoint"
    vertices: tuple            # fixed vertices in the ball (subtree) or ()
    edge: tuple = None         # the swapped edge (edge-midpoint) or None


def fixed_locus(j: SpecialEndo, ball: TreeBall) -> FixedLocus:
    """Classify the fixed point set within the ball.

    Odd q-valuation: a (p+1)-regular subtree of fixed vertices (dd = 0).
    Even: no fixed vertex; the midpoint of the unique swapped edge.
    """
    a = j.exponent
    if 2 * ball.radius < a + 2:
        raise RadiusTooSmall(f"radius {ball.radius} < {a}/2 + 1")
    lab = ball.distance_labels(j)
    p = ball.prime
    if a % 2 == 1:
        cent = [K for K in ball.order if lab[K] == 0]
        if not cent:
            raise RadiusTooSmall(f"fixed subtree of {j.coords} misses the ball")
        for K in cent:
            if ball.interior(K):
                deg = sum(1 for N in ball.neighbors(K) if lab[N] == 0)
                if deg != p + 1:
                    raise ShapeViolation(f"fixed subtree not ({p}+1)-regular at {K}")
        return FixedLocus("subtree", tuple(cent))
    edge = ball.core_edge(j)
    if any(v == 0 for v in lab.values()):
        raise ShapeViolation("even endomorphism with a fixed vertex")
    return FixedLocus("edge-midpoint", (), edge)


# ---------------------------------------------------------------- fiber divisors
@dataclass(frozen=True)
class FiberDivisor:
    lines: dict                   # vertex -> positive multiplicity
    s_part_multiplicity: int      # 0 when exponent odd
    s_attach: tuple = None        # core edge, present iff exponent even

    def support(self):
        return set(self.lines)


def _divisor(j: SpecialEndo, ball: TreeBall, difference: bool) -> FiberDivisor:
    p = ball.prime
    a = j.exponent
    if 2 * ball.radius < a + 1:
        raise RadiusTooSmall(f"radius {ball.radius} too small for exponent {a}")
    lab = ball.distance_labels(j)
    lines = {}
    for K, dd in lab.items():
        if dd > a - 1:
            continue
        r = (a - 1 - dd) // 2
        lines[K] = p**r if difference else (p ** (r + 1) - 1) // (p - 1)
    s_mult = 0
    s_attach = None
    if a % 2 == 0:
        s_attach = ball.core_edge(j)
        if difference:
            s_mult = 1 if a == 0 else p ** (a // 2 - 1) * (p - 1)
        else:
            s_mult = p ** (a // 2)
    return FiberDivisor(lines, s_mult, s_attach)


def special_fiber_divisor(j: SpecialEndo, ball: TreeBall) -> FiberDivisor:
    """Fiber of the full cycle: line multiplicities 1 + p + ... + p^{(a-1-dd)/2}
    on dd <= a-1, plus an s-part p^{a/2} at the core edge when a is even."""
    return _divisor(j, ball, difference=False)


def difference_fiber_divisor(j: SpecialEndo, ball: TreeBall) -> FiberDivisor:
    """Fiber of the difference divisor: p^{(a-1-dd)/2} on dd <= a-1, s-part
    p^{a/2-1}(p-1) for even a >= 2, and the bare s-part for a = 0."""
    return _divisor(j, ball, difference=True)


# ---------------------------------------------------------------- sampling
def _integer_kernel(rows):
    """Primitive integer basis of the rational kernel of an int matrix."""
    if not rows:
        return [(1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1)]
    M = sympy.Matrix(rows)
    out = []
    for v in M.nullspace():
        den = 1
        for x in v:
            den = sympy.lcm(den, sympy.fraction(sympy.Rational(x))[1])
        w = [int(x * den) for x in v]
        g = 0
        for x in w:
            g = math.gcd(g, abs(x))
        out.append(tuple(x // g for x in w))
    return out


def find_orthogonal_endo(p: int, target_exp: int, target_chi: int, perps,
                         box: int = 10, seed=None) -> SpecialEndo:
    """Deterministic box search for a coordinate vector orthogonal to
    `perps` with the requested q-valuation and unit class."""
    D = smallest_nonsquare(p)
    srow = (1, -1, p, -D * p)
    rows = [[srow[i] * w.coords[i] for i in range(4)] for w in perps]
    basis = _integer_kernel(rows)
    if len(basis) != 4 - len(perps):
        raise SearchExhausted("degenerate orthogonal complement")
    dim = len(basis)
    for rad in range(1, box + 1):
        shell = [c for c in itertools.product(range(-rad, rad + 1), repeat=dim)
                 if max(abs(x) for x in c) == rad]
        if seed is not None:
            random.Random(seed * 1000003 + rad).shuffle(shell)
        for c in shell:
            v = tuple(sum(c[k] * basis[k][i] for k in range(dim)) for i in range(4))
            cand = SpecialEndo(p, v)
            q = cand.q_value
            if q == 0:
                continue
            if cand.exponent == target_exp and cand.chi_class == target_chi:
                return cand
    raise SearchExhausted(f"no endo with (exp, chi) = ({target_exp}, {target_chi}) "
                          f"orthogonal to {len(perps)} vectors in box {box}")


def sample_orthogonal_triple(p: int, targets, box: int = 10, seed=None):
    """Three pairwise orthogonal endomorphisms realizing (exponent, chi) targets.

    The target diagonal must be admissible (representability sign -1);
    all-even targets are rejected up front.
    """
    exps = [t[0] for t in targets]
    classes = [1 if t[1] == 1 else smallest_nonsquare(p) for t in targets]
    inv = invariants_from_classes(p, exps, classes)
    if inv.eps_sign != -1:
        raise Inadmissible(f"targets {targets} are not admissible at p={p}")
    out = []
    for (te, tc) in targets:
        out.append(find_orthogonal_endo(p, te, tc, out, box=box, seed=seed))
    for i in range(3):
        for j in range(i + 1, 3):
            assert gram_pairing(p, out[i].coords, out[j].coords) == 0
    return tuple(out)


# ---------------------------------------------------------------- pair geometry
def classify_pair_geometry(j1: SpecialEndo, j2: SpecialEndo, ball: TreeBall) -> str:
    """Joint geometry of two orthogonal fixed loci.

    odd/odd with chi(-e1 e2) = +1  -> "single-line" (one shared vertex);
    odd/odd with chi = -1          -> "apartment" (bi-infinite geodesic);
    odd/even                        -> "core-on-edge" (core endpoints lie in
    the odd locus).  Violations of the predicted shape raise.
    """
    if gram_pairing(ball.prime, j1.coords, j2.coords) != 0:
        raise ValueError("endomorphisms are not orthogonal")
    a1, a2 = j1.exponent, j2.exponent
    if a1 % 2 == 0 and a2 % 2 == 0:
        raise GeometryViolation("no classification for two even exponents")
    if a1 % 2 == 1 and a2 % 2 == 1:
        lab1, lab2 = ball.distance_labels(j1), ball.distance_labels(j2)
        shared = [K for K in ball.order if lab1[K] == 0 and lab2[K] == 0]
        ch = chi_int(-j1.unit * j2.unit, ball.prime)
        if ch == 1:
            if len(shared) != 1 or not ball.interior(shared[0]):
                raise GeometryViolation(
                    f"expected one shared vertex, found {len(shared)}")
            return "single-line"
        if not shared:
            raise GeometryViolation("apartment misses the ball")
        shell_hits = 0
        for K in shared:
            if ball.interior(K):
                deg = sum(1 for N in ball.neighbors(K)
                          if lab1[N] == 0 and lab2[N] == 0)
                if deg != 2:
                    raise GeometryViolation(f"geodesic degree {deg} at {K}")
            else:
                shell_hits += 1
        if shell_hits != 2:
            raise GeometryViolation(f"geodesic leaves the ball {shell_hits} times")
        return "apartment"
    odd, even = (j1, j2) if a1 % 2 == 1 else (j2, j1)
    lab_odd = ball.distance_labels(odd)
    edge = ball.core_edge(even)
    if not all(lab_odd[K] == 0 for K in edge):
        raise GeometryViolation("core endpoints not in the odd fixed locus")
    return "core-on-edge"
