from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from locint.building import TreeBall, endo_from_coords, find_orthogonal_endo
from locint.errors import (ConsistencyViolation, Inadmissible, NoCaseMatches,
                           NotInAmbient, RadiusTooSmall,
                           UnsupportedConfiguration)
from locint.intersect import (TripleConfig, case_formula,
                              case_table_intersection, ddd_second_difference,
                              full_intersection, line_pairing,
                              mixed_window_value, pair_multiplicity,
                              reduce_units, restrict_to_D,
                              triple_combinatorial, zero_pairing_check)
from locint.quadform import SymMatrix3, admissible_grid, invariants_from_classes
from locint.siegel import closed_intersection


# ---------------------------------------------------------------- case table
def test_case_values_by_parity():
    assert case_formula(3, (2, 3, 3), (1, 1, 1)) == ("even-min-odd-next", 12)
    assert case_formula(3, (3, 4, 5), (1, 1, 1)) == ("odd-even-odd", 0)
    assert case_formula(3, (3, 3, 4), (1, 1, 1)) == ("odd-odd-even", -60)
    lbl, v = case_formula(3, (2, 2, 3), (1, 2, 1))
    assert (lbl, v) == ("mixed-even-even-window", mixed_window_value(3, 2, 2))
    assert v == 9 + 3 - 2 * 3


def test_case_below_table_raises():
    with pytest.raises(NoCaseMatches):
        case_formula(3, (1, 2, 3), (1, 2, 1))


def test_case_rejects_inadmissible():
    with pytest.raises(Inadmissible):
        case_formula(3, (2, 2, 3), (1, 1, 1))  # even pair with chi(-1) = -1


def test_reduce_units_moves():
    p = 3
    # a1 < a2 == a3 with (chi12, chi13) = (1, -1): swap the equal slots
    assert reduce_units(p, (3, 5, 5), (1, 2, 1)) == (1, 1, 2)
    # (-1, -1): rescale the equal pair
    out = reduce_units(p, (3, 5, 5), (1, 1, 1))
    assert out == (1, 2, 2)
    # mixed parity: untouched
    assert reduce_units(p, (2, 3, 3), (1, 2, 1)) == (1, 2, 1)


def test_ddd_small_values():
    assert ddd_second_difference(3, (0, 0, 1), (1, 2, 1)) == 1
    assert ddd_second_difference(3, (0, 1, 1), (1, 1, 1)) == 2
    assert ddd_second_difference(3, (1, 1, 1), (1, 1, 1)) == 0       # 3 - p
    assert ddd_second_difference(5, (1, 1, 1), (1, 1, 1)) == 3 - 5


def test_ddd_matches_case_table_above_floor():
    # the case rows describe realizations whose chi pattern is already in
    # reduced form, so the oracle runs on the reduced units; the difference
    # product at a fixed level is a property of the realization, not of the
    # equivalence class alone
    rows = {3: [((2, 3, 3), (1, 1, 1)), ((3, 3, 4), (1, 1, 1)),
                ((3, 4, 5), (1, 1, 1)), ((2, 3, 4), (1, 1, 2)),
                ((3, 5, 5), (1, 2, 2))],
            5: [((2, 3, 3), (1, 1, 2)), ((3, 3, 4), (1, 2, 1)),
                ((3, 4, 5), (1, 1, 2)), ((2, 3, 4), (1, 1, 1)),
                ((3, 5, 5), (1, 2, 1))]}
    for p, cases in rows.items():
        for exps, units in cases:
            assert reduce_units(p, exps, units) == units, (p, exps)
            got = case_formula(p, exps, units)[1]
            want = ddd_second_difference(p, exps, units)
            assert got == want, (p, exps, got, want)


def test_reduction_preserves_assembled_value():
    # the full-cycle assembly is invariant under the equal-pair rescaling
    # even though individual difference levels are not
    p = 3
    rawv = case_table_intersection(p, (3, 5, 5), (1, 1, 1))
    redv = case_table_intersection(p, (3, 5, 5), (1, 2, 2))
    assert rawv == redv
    assert rawv == closed_intersection(invariants_from_classes(p, (3, 5, 5), (1, 1, 1)))
    assert (ddd_second_difference(p, (3, 5, 5), (1, 1, 1))
            != ddd_second_difference(p, (3, 5, 5), (1, 2, 2)))


def test_mixed_window_is_two_slot_difference():
    # parity (0,0,1): the full cycle stays on the larger even slot, so the
    # window equals the second difference over the two outer slots only
    def closed_of(p, exps, units):
        if min(exps) < 0:
            return 0
        return closed_intersection(invariants_from_classes(p, exps, units))

    for p, units in ((3, (1, 2, 1)), (5, (1, 1, 1))):
        for sa in [(2, 2, 3), (2, 4, 5), (2, 2, 5), (4, 4, 5), (2, 4, 7)]:
            want = (closed_of(p, sa, units)
                    - closed_of(p, (sa[0] - 2, sa[1], sa[2]), units)
                    - closed_of(p, (sa[0], sa[1], sa[2] - 2), units)
                    + closed_of(p, (sa[0] - 2, sa[1], sa[2] - 2), units))
            got = case_formula(p, sa, units)
            assert got == ("mixed-even-even-window", want), (p, sa, got, want)


def test_case_table_assembly_equals_closed_on_grid():
    for p in (3, 5):
        for inv in admissible_grid(p, 5):
            got = case_table_intersection(p, inv.exponents, inv.classes)
            assert got == closed_intersection(inv), inv


@settings(max_examples=50, deadline=None)
@given(st.sampled_from((3, 5, 7)),
       st.tuples(st.integers(0, 6), st.integers(0, 6), st.integers(0, 6)),
       st.tuples(st.booleans(), st.booleans(), st.booleans()))
def test_case_assembly_identity_random(p, exps, nonsq):
    from locint.padic import smallest_nonsquare
    from locint.quadform import invariants_from_classes
    d = smallest_nonsquare(p)
    inv = invariants_from_classes(p, exps, tuple(d if b else 1 for b in nonsq))
    if not inv.admissible:
        return
    got = case_table_intersection(p, inv.exponents, inv.classes)
    assert got == closed_intersection(inv)


# ---------------------------------------------------------------- line calculus
def test_pair_multiplicity_rules():
    p = 3
    assert pair_multiplicity(p, 3, 1, 0, 0, 1) == 1          # r = (1, 0)
    assert pair_multiplicity(p, 5, 3, 0, 0, 1) == p          # r = (2, 1)
    assert pair_multiplicity(p, 3, 3, 0, 0, -1) == 3         # ((a+1)/2 - r) p^r
    assert pair_multiplicity(p, 3, 3, 2, 2, -1) == 2
    assert pair_multiplicity(p, 3, 5, 0, 2, 1) == 3          # equal r, amin = 3
    with pytest.raises(UnsupportedConfiguration):
        pair_multiplicity(p, 3, 3, 0, 0, 1)
    with pytest.raises(NotInAmbient):
        pair_multiplicity(p, 3, 1, 0, 2, 1)


@pytest.fixture(scope="module")
def ball3():
    return TreeBall(3, 3)


def test_line_pairing_values(ball3):
    p = 3
    j1 = endo_from_coords(p, 0, 0, 1, 0)          # a = 1
    lab1 = ball3.distance_labels(j1)
    fixed = [K for K, v in lab1.items() if v == 0]
    assert line_pairing(ball3, j1, fixed[0], fixed[0]) == -(p + 1)
    j3 = find_orthogonal_endo(p, 3, 1, [])
    lab3 = ball3.distance_labels(j3)
    inner = next(K for K, v in lab3.items() if v == 0 and ball3.interior(K))
    outer = next(K for K, v in lab3.items() if v == 2)
    assert line_pairing(ball3, j3, inner, inner) == -2 * p
    assert line_pairing(ball3, j3, outer, outer) == -p
    nb = next(N for N in ball3.neighbors(inner) if lab3[N] <= 2)
    assert line_pairing(ball3, j3, inner, nb) == 1
    far = next(K for K, v in lab3.items()
               if v == 2 and ball3.depth[K] == 3)
    assert line_pairing(ball3, j3, inner, far) in (0, 1)
    bad = next(K for K, v in lab3.items() if v > 2)
    with pytest.raises(NotInAmbient):
        line_pairing(ball3, j3, inner, bad)


def test_zero_pairing_inside_ball(ball3):
    p = 3
    for j in (endo_from_coords(p, 0, 0, 1, 0), find_orthogonal_endo(p, 3, 1, [])):
        assert zero_pairing_check(ball3, j) > 0


def test_restrict_to_d_horizontal_weights(ball3):
    p = 3
    # explicit pairwise setups against the q = 27 scaling of (0, 0, 1, 0):
    # everything with third coordinate 0 is orthogonal to it
    amb = endo_from_coords(p, 0, 0, 1, 0).scaled(1)
    assert amb.exponent == 3
    unitp = endo_from_coords(p, 1, 0, 0, 0)
    E0 = restrict_to_D(unitp, amb, ball3)
    assert E0.vertical == {}
    assert len(E0.horizontals) == 1
    assert E0.horizontals[0][1] == 1
    ev = endo_from_coords(p, 5, 4, 0, 0)                     # q = 9
    E2 = restrict_to_D(ev, amb, ball3)
    assert len(E2.horizontals) == 1
    assert E2.horizontals[0][1] == p - 1                     # p^(1-1) (p-1)
    odd = endo_from_coords(p, 2, 1, 0, 0)                    # q = 3
    E1 = restrict_to_D(odd, amb, ball3)
    assert E1.horizontals == ()
    assert E1.vertical
    with pytest.raises(UnsupportedConfiguration):
        restrict_to_D(odd, ev, ball3)                        # even ambient


# ---------------------------------------------------------------- triple product
def test_triple_examples_all_routes():
    for d, want in [((1, 2, 3), 1), ((1, 3, 3), 2), ((1, 2, 27), 2)]:
        rep = full_intersection(SymMatrix3.diag(*d, prime=3),
                                with_combinatorial=True, check_levels=True)
        assert rep.value_closed == want
        assert rep.value_density == want
        assert rep.value_case_table == want
        assert rep.value_combinatorial == want
        assert rep.agreement


def test_documented_example_is_rejected():
    # diag(1, 6, 3) has representability sign +1: the cycles meet improperly
    # and no finite multiplicity is defined
    with pytest.raises(Inadmissible):
        full_intersection(SymMatrix3.diag(1, 6, 3, prime=3))


def test_triple_level_argument(ball3):
    from locint.building import sample_orthogonal_triple
    js = sample_orthogonal_triple(3, ((0, 1), (1, 1), (1, 1)), seed=5)
    top = triple_combinatorial(*js, ball3, level=(0, 1, 1))
    assert top == ddd_second_difference(3, (0, 1, 1), (1, 1, 1))
    full = triple_combinatorial(*js, ball3)
    assert full == 2
    with pytest.raises(ValueError):
        triple_combinatorial(*js, ball3, level=(0, 1, 2))


def test_config_radius_guard():
    from locint.building import sample_orthogonal_triple
    js = sample_orthogonal_triple(3, ((0, 1), (1, 1), (1, 1)), seed=5)
    with pytest.raises(RadiusTooSmall):
        TripleConfig(*js, TreeBall(3, 1))


def test_report_multiplier_is_separate():
    rep = full_intersection(SymMatrix3.diag(1, 2, 3, prime=3),
                            global_multiplier=Fraction(7, 2))
    assert rep.value_closed == 1
    assert rep.global_multiplier == Fraction(7, 2)
    assert rep.value_scaled == Fraction(7, 2)


def test_strict_flag_controls_mismatch_behavior(monkeypatch):
    import locint.intersect as it
    monkeypatch.setattr(it, "_zzz_from_cases", lambda p, a, cls: 10**9)
    with pytest.raises(ConsistencyViolation):
        it.full_intersection(SymMatrix3.diag(1, 2, 3, prime=3))
    rep = it.full_intersection(SymMatrix3.diag(1, 2, 3, prime=3), strict=False)
    assert not rep.agreement
    assert any("disagree" in n for n in rep.notes)
