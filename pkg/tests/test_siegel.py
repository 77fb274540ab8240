from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from locint.errors import Inadmissible
from locint.quadform import admissible_grid, invariants_from_classes
from locint.siegel import (IntPolynomial, a_series, alpha_prime,
                           closed_intersection, density_intersection, ftilde,
                           relation_check)


def inv3(exps, classes=(1, 1, 1), p=3):
    return invariants_from_classes(p, exps, classes)


def poly_dict(P):
    return {k: c for k, c in enumerate(P.coefficients) if c != 0}


def test_ftilde_minimal_tuple():
    # exponents (0,0,1): one unit pair of non-square product, a3 odd
    inv = inv3((0, 0, 1), (1, 2, 1))
    assert inv.admissible
    P = ftilde(inv)
    assert P.constant_term == 1
    # sigma=2, half=-1: both leading sums are empty except the xi window
    assert poly_dict(P) == {0: 1, 1: Fraction(inv.xi_tilde)}


def test_ftilde_all_ones():
    inv = inv3((1, 1, 1), (1, 1, 2))
    P = ftilde(inv)
    d = poly_dict(P)
    assert d[0] == 1
    assert P.constant_term == 1
    # degree bounded by a3 + sigma + a1 + 2*half
    assert len(P.coefficients) - 1 <= 1 + 2 + 1


def test_constant_term_always_one():
    for inv in admissible_grid(3, 4):
        assert ftilde(inv).constant_term == 1


def test_a_series_vanishes_at_one():
    for inv in admissible_grid(5, 3):
        assert a_series(inv)(1) == 0


def test_alpha_prime_hand_value():
    inv = inv3((0, 0, 1), (1, 2, 1))
    assert alpha_prime(inv) == Fraction(-80, 81)


def test_a_series_hand_value():
    # the (0,0,1) tuple of diag(1,2,3) evaluated at X = 1/3
    inv = inv3((0, 0, 1), (1, 2, 1))
    assert a_series(inv)(Fraction(1, 3)) == Fraction(4480, 6561)


def test_closed_small_values():
    assert closed_intersection(inv3((0, 0, 1), (1, 2, 1))) == 1
    assert closed_intersection(inv3((0, 1, 1), (1, 1, 1))) == 2
    assert closed_intersection(inv3((1, 1, 1), (1, 1, 1))) == 0  # 3 - p at p=3
    p5 = invariants_from_classes(5, (1, 1, 1), (1, 1, 1))
    assert closed_intersection(p5) == 3 - 5


def test_closed_growing_odd_exponent():
    for a in (1, 3, 5, 7):
        inv = inv3((0, 0, a), (1, 2, 1))
        assert closed_intersection(inv) == (a + 1) // 2


def test_closed_rejects_inadmissible():
    with pytest.raises(Inadmissible):
        closed_intersection(inv3((0, 0, 1), (1, 1, 1)))


def test_relation_check_passes_on_grid():
    for inv in admissible_grid(3, 4):
        closed, deriv = relation_check(inv)
        assert Fraction(closed) == deriv


def test_density_intersection_matches_closed_other_primes():
    for p in (5, 7):
        for inv in admissible_grid(p, 3):
            assert density_intersection(inv) == closed_intersection(inv)


def test_polynomial_helpers():
    P = IntPolynomial((Fraction(1), Fraction(2), Fraction(3)))
    assert P(2) == 1 + 4 + 12
    assert P.derivative_at_one() == 2 + 6
    assert poly_dict(P.compose_neg()) == {0: 1, 1: -2, 2: 3}
    Q = IntPolynomial((Fraction(0), Fraction(1)))
    assert poly_dict(P * Q) == {1: 1, 2: 2, 3: 3}


@settings(max_examples=60, deadline=None)
@given(st.sampled_from((3, 5, 7)),
       st.tuples(st.integers(0, 5), st.integers(0, 5), st.integers(0, 5)),
       st.tuples(st.booleans(), st.booleans(), st.booleans()))
def test_relation_identity_random(p, exps, nonsq):
    from locint.padic import smallest_nonsquare
    d = smallest_nonsquare(p)
    inv = invariants_from_classes(p, exps, tuple(d if b else 1 for b in nonsq))
    if not inv.admissible:
        return
    assert density_intersection(inv) == closed_intersection(inv)
