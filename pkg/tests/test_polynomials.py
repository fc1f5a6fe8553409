from fractions import Fraction

import numpy as np
import pytest

from hofa.errors import CapacityExceeded, ParseError
from hofa.field import FieldParams
from hofa.polynomials import (
    NonClassicalPoly,
    TorsionValue,
    add_derivative,
    bias,
    count_polys,
    enumerate_poly_tables,
    enumerate_polys,
    eval_poly,
    read_polys,
    verify_degree,
    write_polys,
)
from hofa.rng import make_rng

QUARTER = NonClassicalPoly.monomial(2, (1,), k=1)           # |x1| / 4


def test_zero_polynomial_evaluates_to_zero():
    Z = NonClassicalPoly.zero(3, 2)
    assert all(eval_poly(Z, x) == TorsionValue(0, 0, 3) for x in [(0, 0), (1, 2), (2, 2)])
    assert verify_degree(Z, 0)


def test_classical_linear_value():
    P = NonClassicalPoly.linear(2, [1, 0, 0])
    assert eval_poly(P, (1, 0, 1)).as_fraction() == Fraction(1, 2)


def test_quarter_x1_values_degree_and_depth():
    assert [QUARTER(x).as_fraction() for x in [(0,), (1,)]] == [0, Fraction(1, 4)]
    assert (QUARTER.degree, QUARTER.depth) == (2, 1)
    assert verify_degree(QUARTER, 2) and not verify_degree(QUARTER, 1)
    assert QUARTER.table().degree() == 2


def test_quarter_x1_derivative():
    D = add_derivative(QUARTER, (1,))
    assert D[0].as_fraction() == Fraction(1, 4)
    assert D[1].as_fraction() == Fraction(3, 4)


def test_derivative_along_zero_vanishes():
    P = NonClassicalPoly(3, 2, {((1, 1), 0): 2, ((2, 0), 0): 1})
    assert add_derivative(P, (0, 0)).is_zero()


def test_linear_derivative_is_constant():
    P = NonClassicalPoly.linear(3, [1, 2, 0])
    for h in [(1, 0, 0), (2, 2, 1)]:
        D = add_derivative(P, h)
        assert len(set(D.num.tolist())) == 1
        assert D[0] == eval_poly(P, h) - eval_poly(P, (0, 0, 0))


def test_classical_quadratic_degree():
    Q = NonClassicalPoly.monomial(2, (1, 1))
    assert verify_degree(Q, 2) and not verify_degree(Q, 1)


def test_sampled_verification_agrees():
    rng = make_rng(0)
    Q = NonClassicalPoly.monomial(2, (1, 1, 1, 0))
    assert verify_degree(Q, 3, samples=2000, rng=rng)
    assert not verify_degree(Q, 2, samples=2000, rng=rng)


def test_bias_examples():
    assert bias(NonClassicalPoly.zero(2, 3)) == 1
    assert bias(NonClassicalPoly.linear(3, [0, 1])) == pytest.approx(0, abs=1e-12)
    assert bias(NonClassicalPoly.monomial(2, (1, 1))) == pytest.approx(0.5, abs=1e-12)


@pytest.mark.parametrize("n,d,K,count", [(3, 1, 0, 16), (3, 2, 0, 128), (1, 2, 1, 8)])
def test_enumeration_counts(n, d, K, count):
    polys = list(enumerate_polys(FieldParams(2, n), d, K))
    assert len(polys) == count == count_polys(2, n, d, K)
    assert len(set(polys)) == count


def test_depth_one_enumeration_contains_quarter_x1():
    assert QUARTER in set(enumerate_polys(FieldParams(2, 1), 2, 1))


def test_distinct_polynomials_have_distinct_tables():
    tabs = [P.table().at_level(1).tolist() for P in enumerate_polys(FieldParams(2, 2), 3, 1)]
    assert len({tuple(t) for t in tabs}) == len(tabs)


def test_table_enumeration_matches_objects():
    params = FieldParams(3, 2)
    objs = [P.table().num.tolist() for P in enumerate_polys(params, 2)]
    blocks = [t for _, _, tabs in enumerate_poly_tables(params, 2) for t in tabs.tolist()]
    assert objs == blocks


def test_enumeration_cap():
    with pytest.raises(CapacityExceeded):
        list(enumerate_polys(FieldParams(2, 6), 3, cap=2**10))


def test_text_round_trip_and_factor_file():
    P = NonClassicalPoly(2, 3, {((1, 0, 1), 0): 1, ((1, 0, 0), 1): 1})
    assert NonClassicalPoly.from_text(P.to_text()) == P
    Q = NonClassicalPoly.linear(2, [0, 1, 1])
    p, n, polys = read_polys(write_polys([P, Q], 2, 3))
    assert (p, n, polys) == (2, 3, [P, Q])


def test_bad_monomials_rejected():
    with pytest.raises(ValueError):
        NonClassicalPoly(2, 2, {((2, 0), 0): 1})
    with pytest.raises(ValueError):
        NonClassicalPoly(2, 2, {((0, 0), 1): 1})
    with pytest.raises(ParseError):
        NonClassicalPoly.from_text("2 2\n0 1 1\n")


def test_torsion_arithmetic():
    a, b = TorsionValue(1, 1), TorsionValue(1, 0)
    assert (a + b).as_fraction() == Fraction(3, 4)
    assert (a - a).numerator == 0
    assert abs(TorsionValue(1, 1).e() - 1j) < 1e-12
    assert np.isclose(QUARTER.table().e().values[1], 1j)
