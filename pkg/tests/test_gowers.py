import numpy as np
import pytest

from hofa.errors import CapacityExceeded, InvalidOrder
from hofa.functions import SIGNED, FiniteFunction
from hofa.gowers import (
    fourier_transform,
    gowers_norm,
    gowers_norm_estimate,
    gowers_norm_exact,
    mult_derivative,
    u2_norm_fourier,
)
from hofa.rng import make_rng

import oracles


def chi1(n):
    return FiniteFunction.from_callable(lambda x: (-1) ** x[0], 2, n, kind=SIGNED)


def test_derivative_at_zero_is_modulus_squared():
    f = FiniteFunction(np.exp(2j * np.pi * make_rng(0).random(9)), 3, kind="complex")
    assert np.allclose(mult_derivative(f, 0).values, 1)


def test_derivative_of_constant_one():
    f = FiniteFunction.constant(1, 3, 2, kind=SIGNED)
    for h in range(9):
        assert np.allclose(mult_derivative(f, h).values, 1)


def test_derivative_of_character_along_e1():
    assert mult_derivative(chi1(2), (1, 0)).values.tolist() == [-1, -1, -1, -1]


def test_constant_one_has_unit_norm():
    for d in (1, 2, 3):
        assert gowers_norm(FiniteFunction.constant(1, 2, 3, kind=SIGNED), d) == pytest.approx(1, abs=1e-12)


def test_character_has_unit_u2_norm():
    assert gowers_norm(chi1(2), 2) == pytest.approx(1, abs=1e-12)


def test_point_indicator_u2_norm():
    # frozen brute-force value: 4 * (1/4)^4 = 2^-6, fourth root 2^-1.5
    f = FiniteFunction.from_callable(lambda x: float(not any(x)), 2, 2, kind=SIGNED)
    assert gowers_norm(f, 2) == pytest.approx(2**-1.5, abs=1e-12)
    assert oracles.gowers(f.real(), 2, 2, 2) == pytest.approx(2**-1.5, abs=1e-12)


@pytest.mark.parametrize("p,n,d", [(2, 2, 2), (2, 3, 2), (2, 2, 3), (3, 1, 2), (3, 2, 2), (5, 1, 3)])
def test_exact_matches_brute_force(p, n, d):
    rng = make_rng(p * 100 + n * 10 + d)
    vals = np.exp(2j * np.pi * rng.random(p**n)) * rng.random(p**n)
    f = FiniteFunction(vals, p, kind="complex")
    assert gowers_norm_exact(f, d).value == pytest.approx(oracles.gowers(vals, p, n, d), abs=1e-12)


def test_u2_matches_fourier_for_p3():
    rng = make_rng(4)
    f = FiniteFunction(rng.uniform(-1, 1, 27), 3, kind=SIGNED)
    assert gowers_norm(f, 2) == pytest.approx(u2_norm_fourier(f), abs=1e-12)
    assert u2_norm_fourier(f) ** 4 == pytest.approx(oracles.fourier4(f.real(), 3, 3), abs=1e-12)


def test_fourier_of_character_is_a_delta():
    fh = fourier_transform(chi1(3))
    assert abs(fh[1] - 1) < 1e-12
    assert np.abs(np.delete(fh, 1)).max() < 1e-12


def test_monotone_in_order():
    rng = make_rng(8)
    for _ in range(20):
        f = FiniteFunction.random_signed(rng, 2, 4)
        vals = [gowers_norm(f, d) for d in (1, 2, 3)]
        assert vals[0] <= vals[1] + 1e-12 <= vals[2] + 2e-12


def test_estimator_exact_on_constants():
    one = FiniteFunction.constant(1, 2, 6, kind=SIGNED)
    zero = FiniteFunction.constant(0, 2, 6, kind=SIGNED)
    for s in range(3):
        assert gowers_norm_estimate(one, 3, 1000, s).value == 1
        assert gowers_norm_estimate(zero, 2, 1000, s).value == 0


def test_estimator_within_four_standard_errors():
    f = FiniteFunction((-1.0) ** make_rng(123).integers(0, 2, 256), 2, kind=SIGNED)
    exact = gowers_norm_exact(f, 2).power
    hits = 0
    for seed in range(100):
        est = gowers_norm_estimate(f, 2, 100_000, seed)
        hits += abs(est.power - exact) <= 4 * est.std_error
    assert hits >= 95


def test_estimator_is_deterministic_and_records_seed():
    f = FiniteFunction.random_signed(make_rng(1), 2, 5)
    a = gowers_norm_estimate(f, 2, 5000, 11)
    b = gowers_norm_estimate(f, 2, 5000, 11)
    assert a == b and a.seed == 11 and a.mode == "monte_carlo"


def test_bad_order_and_capacity():
    f = FiniteFunction.constant(1, 2, 3, kind=SIGNED)
    with pytest.raises(InvalidOrder):
        gowers_norm_exact(f, 0)
    with pytest.raises(CapacityExceeded):
        gowers_norm_exact(FiniteFunction.constant(1, 2, 12, kind=SIGNED), 3)
