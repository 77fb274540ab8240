"""Brute-force representation densities from the counting definition.

Counts solutions x in M_{m,n}(Z/p^t) of x^t S x = U mod p^t, normalizes by
p^{-t n (2m-n-1)/2}, and detects stabilization.  Two interchangeable
enumeration engines:

  * "columns" — the literal column-by-column pruned enumeration.  Column k
    is filtered against its diagonal congruence and the k-1 cross terms
    before the next column is opened.  Exact but exponential in m*t.
  * "dp" — for diagonal S: a row transfer-matrix count.  The state is the
    partial Gram matrix mod q (n(n+1)/2 residues); each row of x acts by a
    convolution kernel (the histogram of d*v_i*v_j over row values v), so a
    row costs #kernel-support * q^{n(n+1)/2} array adds.  Exact, and the
    only engine that fits the r=1, t=2 budget.

Both engines are cost-estimated before running and raise BudgetExceeded
instead of silently truncating.

Stabilization uses three certificates, in order: a zero count at level t
forces zero at every higher level (reduction maps solutions downward);
equal consecutive normalized values; and a smoothness certificate at t=2 —
if every mod-p solution that lifts to mod p^2 has a full-rank differential,
every later level multiplies the count by exactly p^{mn - n(n+1)/2} and the
normalized value is constant from t=2 on.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import BudgetExceeded, NoStabilization

DEFAULT_BUDGET = 2 * 10**9


@dataclass(frozen=True)
class GramMatrix:
    """Symmetric integer Gram matrix read mod powers of p."""

    entries: tuple
    prime: int

    def __post_init__(self):
        e = tuple(tuple(int(x) for x in row) for row in self.entries)
        object.__setattr__(self, "entries", e)
        m = len(e)
        if any(len(r) != m for r in e):
            raise ValueError("matrix must be square")
        for i in range(m):
            for j in range(m):
                if e[i][j] != e[j][i]:
                    raise ValueError("matrix must be symmetric")

    @property
    def size(self) -> int:
        return len(self.entries)

    @classmethod
    def diag(cls, values, prime: int) -> "GramMatrix":
        m = len(values)
        return cls(tuple(tuple(values[i] if i == j else 0 for j in range(m))
                         for i in range(m)), prime)

    def is_diagonal(self) -> bool:
        return all(self.entries[i][j] == 0
                   for i in range(self.size) for j in range(self.size) if i != j)

    def diagonal(self):
        return tuple(self.entries[i][i] for i in range(self.size))


@dataclass(frozen=True)
class CountResult:
    t: int
    raw_count: int
    normalized: Fraction
    stabilized: bool
    rule: str = ""


def ambient_form(p: int) -> GramMatrix:
    """The fixed 4-dimensional ambient form diag(1, -1, 1, -Delta)."""
    from .padic import smallest_nonsquare
    return GramMatrix.diag((1, -1, 1, -smallest_nonsquare(p)), p)


def extend_S_r(S: GramMatrix, r: int) -> GramMatrix:
    """Block diagonal of S, an identity of size r, and a negated identity."""
    if r < 0:
        raise ValueError("r must be >= 0")
    m = S.size
    n = m + 2 * r
    out = [[0] * n for _ in range(n)]
    for i in range(m):
        for j in range(m):
            out[i][j] = S.entries[i][j]
    for k in range(r):
        out[m + k][m + k] = 1
        out[m + r + k][m + r + k] = -1
    return GramMatrix(tuple(tuple(row) for row in out), S.prime)


def _normalize(raw: int, p: int, t: int, m: int, n: int) -> Fraction:
    e = t * n * (2 * m - n - 1)
    assert e % 2 == 0
    return Fraction(raw, p ** (e // 2))


# ---------------------------------------------------------------- columns engine
def _count_columns(S: GramMatrix, U: GramMatrix, t: int, budget: int) -> int:
    p, m, n = S.prime, S.size, U.size
    q = p**t
    Se = S.entries
    # tightest congruence first: columns ordered by the valuation of U's diagonal
    order = sorted(range(n), key=lambda j: _vp(U.entries[j][j], p, t))
    Ue = U.entries

    def sdot(u, v):
        return sum(Se[i][j] * u[i] * v[j] for i in range(m) for j in range(m)) % q

    spent = 0
    partial = [()]  # tuples of chosen columns (in `order` positions)
    for step, col_idx in enumerate(order):
        stage = len(partial) * q**m
        spent += stage
        if spent > budget:
            raise BudgetExceeded(f"columns engine needs ~{spent:.2e} checks")
        new = []
        for chosen in partial:
            for cand in itertools.product(range(q), repeat=m):
                if sdot(cand, cand) != Ue[col_idx][col_idx] % q:
                    continue
                ok = True
                for prev_step, prev_col in enumerate(chosen):
                    pi = order[prev_step]
                    if sdot(prev_col, cand) != Ue[pi][col_idx] % q:
                        ok = False
                        break
                if ok:
                    new.append(chosen + (cand,))
        partial = new
        if not partial:
            return 0
    return len(partial)


def _vp(x: int, p: int, cap: int) -> int:
    if x % p**cap == 0:
        return cap
    v = 0
    while x % p == 0:
        x //= p
        v += 1
    return v


# ---------------------------------------------------------------- dp engine
def _dp_kernel(d: int, q: int, n: int):
    """Histogram of the Gram contribution of one row with diagonal weight d:
    shift tuple (d*v_i*v_j for i<=j) -> multiplicity, over v in (Z/q)^n."""
    pairs = [(i, j) for i in range(n) for j in range(i, n)]
    kern: dict = {}
    for v in itertools.product(range(q), repeat=n):
        key = tuple((d * v[i] * v[j]) % q for (i, j) in pairs)
        kern[key] = kern.get(key, 0) + 1
    return kern, pairs


# final DP states are independent of the target Gram matrix, so one pass per
# (S mod q, n) serves every U at that level; states are read-only once stored
_DP_STATES: dict = {}


def _dp_state(p: int, diag_q: tuple, q: int, n: int, budget: int):
    key = (p, diag_q, q, n)
    hit = _DP_STATES.get(key)
    if hit is not None:
        return hit
    dims = n * (n + 1) // 2
    kernels = {}
    for d in set(diag_q):
        kernels[d] = _dp_kernel(d, q, n)
    cost = sum(len(kernels[x][0]) for x in diag_q) * q**dims
    if cost > budget:
        raise BudgetExceeded(f"dp engine needs ~{cost:.2e} state updates")
    # counts are bounded by the total vector mass q^(m*n); fall back to exact
    # python integers when that cannot live in int64
    dtype = np.int64 if q ** (len(diag_q) * n) < 2**62 else object
    state = np.zeros((q,) * dims, dtype=dtype)
    state[(0,) * dims] = 1
    axes = tuple(range(dims))
    for x in diag_q:
        kern, _ = kernels[x]
        new = np.zeros_like(state)
        for shift, mult in kern.items():
            new += mult * np.roll(state, shift, axis=axes)
        state = new
    _DP_STATES[key] = state
    return state


def _count_dp(S: GramMatrix, U: GramMatrix, t: int, budget: int) -> int:
    p, n = S.prime, U.size
    q = p**t
    diag_q = tuple(x % q for x in S.diagonal())
    state = _dp_state(p, diag_q, q, n, budget)
    pairs = [(i, j) for i in range(n) for j in range(i, n)]
    target = tuple(U.entries[i][j] % q for (i, j) in pairs)
    return int(state[target])


# ---------------------------------------------------------------- public counting
def brute_density(S: GramMatrix, U: GramMatrix, t: int, *,
                  budget: int = DEFAULT_BUDGET, method: str = "auto") -> CountResult:
    """Normalized solution count of x^t S x = U mod p^t."""
    if U.size > S.size:
        raise ValueError("U larger than S")
    if t < 1:
        raise ValueError("t >= 1 required")
    if S.prime != U.prime:
        raise ValueError("mixed primes")
    if method == "auto":
        method = "dp" if (S.is_diagonal() and U.size >= 2) else "columns"
    if method == "dp":
        if not S.is_diagonal():
            raise ValueError("dp engine requires diagonal S")
        raw = _count_dp(S, U, t, budget)
    elif method == "columns":
        raw = _count_columns(S, U, t, budget)
    else:
        raise ValueError(f"unknown method {method!r}")
    return CountResult(t, raw, _normalize(raw, S.prime, t, S.size, U.size), False)


# ---------------------------------------------------------------- smoothness certificate
def _solutions_mod_p(S: GramMatrix, U: GramMatrix) -> np.ndarray:
    """All solutions of x^t S x = U over F_p as an (N, n, m) array,
    built column by column against the already-fixed pairings."""
    p, m, n = S.prime, S.size, U.size
    Smat = np.array(S.entries, dtype=np.int64) % p
    V = np.array(list(itertools.product(range(p), repeat=m)), dtype=np.int64)
    SV = V @ Smat % p
    quad = (V * SV).sum(axis=1) % p
    sols = np.zeros((1, 0, m), dtype=np.int64)
    for k in range(n):
        cand = np.nonzero(quad == U.entries[k][k] % p)[0]
        ok = np.ones((sols.shape[0], cand.size), dtype=bool)
        for i in range(k):
            pair = sols[:, i, :] @ SV[cand].T % p
            ok &= pair == U.entries[i][k] % p
        rows, cols = np.nonzero(ok)
        sols = np.concatenate(
            [sols[rows], V[cand[cols]][:, None, :]], axis=1)
    return sols


def _differential(S: GramMatrix, x, n: int):
    """The linearization of x -> x^t S x at x, as a (n(n+1)/2) x (m*n)
    matrix over F_p; row order matches the pair order (i<=j)."""
    p, m = S.prime, S.size
    Se = S.entries
    pairs = [(i, j) for i in range(n) for j in range(i, n)]
    rows = []
    for (i, j) in pairs:
        coef = [0] * (m * n)
        for r in range(m):
            si_r = sum(Se[r][s] * x[i][s] for s in range(m)) % p
            sj_r = sum(Se[r][s] * x[j][s] for s in range(m)) % p
            coef[j * m + r] = (coef[j * m + r] + si_r) % p
            coef[i * m + r] = (coef[i * m + r] + sj_r) % p
        rows.append(coef)
    return rows, pairs


def _rank_and_solvable(rows, target, p: int):
    """Gaussian elimination over F_p: returns (rank, target in column space)."""
    a = [row[:] + [t % p] for row, t in zip((r[:] for r in rows), target)]
    nrows = len(a)
    ncols = len(a[0]) - 1
    rank = 0
    for col in range(ncols):
        piv = next((r for r in range(rank, nrows) if a[r][col] % p), None)
        if piv is None:
            continue
        a[rank], a[piv] = a[piv], a[rank]
        inv = pow(a[rank][col], -1, p)
        a[rank] = [(v * inv) % p for v in a[rank]]
        for r in range(nrows):
            if r != rank and a[r][col]:
                f = a[r][col]
                a[r] = [(v - f * w) % p for v, w in zip(a[r], a[rank])]
        rank += 1
        if rank == nrows:
            break
    solvable = all(row[-1] % p == 0 for row in a[rank:])
    return rank, solvable


def _batched_rank_solvable(A: np.ndarray, p: int):
    """Gauss elimination over F_p on a batch of augmented matrices
    (N, rows, cols+1); returns (rank, solvable) arrays of length N."""
    A = A.astype(np.int16, copy=True)
    N, nrows, ncols1 = A.shape
    ncols = ncols1 - 1
    inv_table = np.array([0] + [pow(v, -1, p) for v in range(1, p)],
                         dtype=np.int16)
    r = np.zeros(N, dtype=np.int64)
    row_idx = np.arange(nrows)
    for col in range(ncols):
        cand = (A[:, :, col] != 0) & (row_idx[None, :] >= r[:, None])
        sel = np.nonzero(cand.any(axis=1))[0]
        if sel.size == 0:
            continue
        piv = np.argmax(cand[sel], axis=1)
        rs = r[sel]
        tmp = A[sel, rs].copy()
        A[sel, rs] = A[sel, piv]
        A[sel, piv] = tmp
        A[sel, rs] = A[sel, rs] * inv_table[A[sel, rs, col]][:, None] % p
        factors = A[sel, :, col].copy()
        factors[np.arange(sel.size), rs] = 0
        A[sel] = (A[sel] - factors[:, :, None] * A[sel, rs][:, None, :]) % p
        r[sel] = rs + 1
    below = row_idx[None, :] >= r[:, None]
    solvable = ~((A[:, :, -1] != 0) & below).any(axis=1)
    return r, solvable


def smoothness_certificate(S: GramMatrix, U: GramMatrix) -> bool:
    """True iff no mod-p solution is simultaneously liftable to mod p^2 and
    rank-deficient.  Under the certificate the count at every t >= 2 is
    p^{mn - n(n+1)/2} times the previous one, so t=2 already carries the
    limit value."""
    p, m, n = S.prime, S.size, U.size
    full = n * (n + 1) // 2
    X = _solutions_mod_p(S, U)           # (N, n, m)
    if X.shape[0] == 0:
        return True
    Smat = np.array(S.entries, dtype=np.int64)
    SX = X @ Smat % p                    # (N, n, m): row i is (S x_i)^t
    pairs = [(i, j) for i in range(n) for j in range(i, n)]
    N = X.shape[0]
    A = np.zeros((N, full, m * n + 1), dtype=np.int16)
    # gram of the canonical integer lifts, exact, for the defect column
    G = np.einsum("nim,mk,njk->nij", X, Smat, X)
    P2 = p * p
    for row, (i, j) in enumerate(pairs):
        A[:, row, j * m:(j + 1) * m] += SX[:, i, :]
        A[:, row, i * m:(i + 1) * m] += SX[:, j, :]
        d = (U.entries[i][j] - G[:, i, j]) % P2
        assert (d % p == 0).all()
        A[:, row, -1] = d // p % p
    A[:, :, :-1] %= p
    rank, liftable = _batched_rank_solvable(A, p)
    return not bool((liftable & (rank < full)).any())


def stabilized_density(S: GramMatrix, U: GramMatrix, t_max: int = 4, *,
                       budget: int = DEFAULT_BUDGET, method: str = "auto") -> CountResult:
    """Increase t until some certificate locks the value."""
    if t_max < 2:
        raise ValueError("t_max >= 2 required")
    prev = None
    for t in range(1, t_max + 1):
        cur = brute_density(S, U, t, budget=budget, method=method)
        if cur.raw_count == 0:
            # solutions at t+1 reduce to solutions at t, so zero persists
            return CountResult(t, 0, Fraction(0), True, "zero-count")
        if prev is not None and cur.normalized == prev.normalized:
            return CountResult(t, cur.raw_count, cur.normalized, True, "consecutive-equal")
        if t >= 2 and smoothness_certificate(S, U):
            return CountResult(t, cur.raw_count, cur.normalized, True, "hensel-smooth")
        prev = cur
    raise NoStabilization(f"no certificate up to t={t_max}")
