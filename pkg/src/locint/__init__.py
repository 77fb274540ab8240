"""Exact local intersection numbers of triples of special cycles attached to
nonsingular ternary quadratic forms over the p-adic integers, p odd.

Four independent routes to the same number: a closed formula, the derivative
of a representation-density series, a case-table recursion over difference
divisors, and an explicit combinatorial calculus on the (p^2+1)-regular tree
— plus a brute-force congruence-counting oracle for the density route.
"""
from .building import (BetaAction, FiberDivisor, FixedLocus, LatticeVertex,
                       SpecialEndo, TreeBall, beta_action,
                       classify_pair_geometry, difference_fiber_divisor,
                       endo_from_coords, fixed_locus, sample_orthogonal_triple,
                       special_fiber_divisor)
from .density import (CountResult, GramMatrix, ambient_form, brute_density,
                      extend_S_r, smoothness_certificate, stabilized_density)
from .errors import (BudgetExceeded, ConsistencyViolation, GeometryViolation,
                     ImpreciseZero, Inadmissible, InconsistentDeterminant,
                     LocintError, NoCaseMatches, NoStabilization, NotAUnit,
                     NotInAmbient, PrecisionExhausted, RadiusTooSmall,
                     SearchExhausted, ShapeViolation, SingularMatrix,
                     UnsupportedConfiguration)
from .intersect import (CycleDivisorInD, TripleReport, case_formula,
                        case_table_intersection, ddd_second_difference,
                        full_intersection, line_pairing, pair_multiplicity,
                        restrict_to_D, triple_combinatorial)
from .padic import PAdicValue, QuadExtValue, chi, conj, norm, valuation
from .quadform import (DiagonalForm, SymMatrix3, TInvariants,
                       compute_invariants, diagonalize, invariants_of_matrix,
                       random_unimodular_conjugate)
from .siegel import (IntPolynomial, a_series, alpha_prime, closed_intersection,
                     density_intersection, ftilde, relation_check)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
