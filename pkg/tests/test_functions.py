import io

import numpy as np
import pytest

from hofa.errors import DimensionError, ParseError, RangeError
from hofa.field import AffineMap, sample_affine_embedding
from hofa.functions import (
    FINITE,
    SIGNED,
    UNIT,
    FiniteFunction,
    combine_slices,
    hamming_distance,
    indicator_slices,
    l1_distance,
    l2_distance,
    linf_distance,
    read_functions,
    restrict,
    round_randomized,
)
from hofa.rng import make_rng


def test_kind_inference():
    assert FiniteFunction(np.array([0, 1, 1, 0])).kind == FINITE
    assert FiniteFunction(np.array([0.2, 1.0])).kind == UNIT
    assert FiniteFunction(np.array([1j, 1, -1, 0])).kind == "complex"


def test_range_validation():
    with pytest.raises(RangeError):
        FiniteFunction(np.array([0, 2, 1, 0]), R=2)
    with pytest.raises(RangeError):
        FiniteFunction(np.array([0.5, 1.5]), kind=UNIT)
    with pytest.raises(DimensionError):
        FiniteFunction(np.zeros(6))


def test_values_are_read_only():
    f = FiniteFunction(np.array([0, 1]))
    with pytest.raises(ValueError):
        f.values[0] = 1


def test_restrict_along_identity_is_noop():
    f = FiniteFunction.random_boolean(make_rng(0), 3, 2)
    assert restrict(f, AffineMap.identity(3, 2)) == f


def test_restrict_constant_stays_constant():
    f = FiniteFunction.constant(1, 2, 5)
    for s in range(5):
        A = sample_affine_embedding(make_rng(s), 2, 5)
        assert restrict(f, A).values.tolist() == [1] * 4


def test_x1_on_shifted_plane_is_one():
    f = FiniteFunction.from_callable(lambda x: x[0], 2, 3)
    # the plane {x1 = 1}: spanned by e2, e3, shifted by e1
    A = AffineMap(2, np.array([[0, 0], [1, 0], [0, 1]]), np.array([1, 0, 0]))
    assert restrict(f, A).values.tolist() == [1, 1, 1, 1]


def test_restrict_dimension_mismatch():
    f = FiniteFunction.constant(0, 2, 3)
    with pytest.raises(DimensionError):
        restrict(f, AffineMap.identity(2, 2))


def test_distances():
    f = FiniteFunction.random_unit(make_rng(1), 2, 4)
    assert l1_distance(f, f) == 0
    zero, one = FiniteFunction.constant(0, 3, 2), FiniteFunction.constant(1, 3, 2)
    assert l1_distance(zero, one) == 1
    delta = FiniteFunction.from_callable(lambda x: int(not any(x)), 2, 3)
    assert l1_distance(delta, FiniteFunction.constant(0, 2, 3)) == 1 / 8
    assert hamming_distance(delta, FiniteFunction.constant(0, 2, 3)) == 1 / 8
    assert l2_distance(delta, FiniteFunction.constant(0, 2, 3)) == pytest.approx(8 ** -0.5)
    assert linf_distance(delta, FiniteFunction.constant(0, 2, 3)) == 1


def test_round_constants():
    rng = make_rng(5)
    for c in (0.0, 1.0):
        f = FiniteFunction(np.full(16, c), kind=UNIT)
        assert round_randomized(f, rng).values.tolist() == [int(c)] * 16


def test_round_half_has_mean_half():
    f = FiniteFunction(np.full(2**12, 0.5), kind=UNIT)
    means = [round_randomized(f, make_rng(s)).values.mean() for s in range(20)]
    assert abs(np.mean(means) - 0.5) <= 0.01


def test_round_rejects_signed():
    with pytest.raises(RangeError):
        round_randomized(FiniteFunction(np.array([-0.5, 0.5]), kind=SIGNED), make_rng(0))


def test_slices_round_trip():
    rng = make_rng(9)
    f = FiniteFunction(rng.integers(0, 4, 27), 3, R=4)
    sl = indicator_slices(f)
    assert len(sl) == 4
    assert sum(s.values.astype(int) for s in sl).tolist() == [1] * 27
    assert combine_slices(sl) == f


def test_text_round_trip():
    rng = make_rng(2)
    for f in (FiniteFunction(rng.integers(0, 3, 9), 3, R=3),
              FiniteFunction.random_unit(rng, 2, 3),
              FiniteFunction.random_signed(rng, 2, 3)):
        assert FiniteFunction.from_text(f.to_text()) == f


def test_read_several_blocks_with_comments():
    text = "# two blocks\n2 1 2\n0 1\n2 2 real\n0.5 0.25\n1 0\n"
    a, b = read_functions(io.StringIO(text))
    assert a.values.tolist() == [0, 1]
    assert b.kind == UNIT and b.values.tolist() == [0.5, 0.25, 1.0, 0.0]


def test_parse_errors_carry_line_numbers():
    with pytest.raises(ParseError) as err:
        FiniteFunction.from_text("2 2 2\n0 1\nx 1\n", source="f.txt")
    assert "f.txt:3:" in str(err.value)
    with pytest.raises(ParseError):
        FiniteFunction.from_text("2 2 2\n0 1 1\n")
    with pytest.raises(ParseError):
        FiniteFunction.from_text("2 1 2\n0 5\n")


def test_fractional_value_in_finite_table_names_its_line():
    with pytest.raises(ParseError) as info:
        FiniteFunction.from_text("2 2 2\n0.5 1 1 0\n", source="r.txt")
    assert "r.txt:2:" in str(info.value)
