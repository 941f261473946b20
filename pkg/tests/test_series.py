import math

import numpy as np
import pytest

from spiralfire import InvalidParameterError, PrecisionOverflowError, critical_angle_and_speed, derive_params
from spiralfire.analytic import predict_rounds
from spiralfire.series import (
    NOT_WITHIN_LIMIT,
    coefficients_by_convolution,
    coefficients_by_division,
    containment_round,
    engine_deviation,
    engine_tolerance,
    nested_integral_In,
)

from oracles import interior_free_strings, mp_series, nested_quadrature

V_C = critical_angle_and_speed()[1]
ENGINES = [coefficients_by_convolution, coefficients_by_division]


@pytest.mark.parametrize("engine", ENGINES)
@pytest.mark.parametrize("v", [1.5, 2.7, 3.0, 10.0])
def test_round_zero_value(engine, v):
    p = derive_params(v, 1.7)
    res = engine(p, 0)
    assert res.Fj[0] == pytest.approx(p.A * math.exp(2 * math.pi * p.cot_alpha), rel=1e-14)
    assert res.phij[0] == p.A


def test_first_coefficient_by_hand():
    p = derive_params(3.0)
    c1 = (p.vcoef - p.r) - (p.w - p.s)
    assert coefficients_by_division(p, 1).Fj[1] / p.F0_l1 == pytest.approx(c1, rel=1e-14)


@pytest.mark.parametrize("v", [2.0, 3.0, 7.0])
def test_seed_identity(v):
    p = derive_params(v)
    expected = p.F0_l1 / p.A * (p.phi0_l2 - 2 * math.pi / p.sin_alpha * p.A)
    assert coefficients_by_convolution(p, 1).Fj[1] == pytest.approx(expected, rel=1e-13)


@pytest.mark.parametrize("v", [2.7, 3.0, 5.0])
def test_engines_against_high_precision_taylor(v):
    ref = np.array(mp_series(v, 20))
    for engine in ENGINES:
        got = engine(derive_params(v), 20).Fj
        assert np.allclose(got, ref, rtol=1e-9, atol=0), engine.__name__


@pytest.mark.parametrize("v", [2.7, 3.0, 4.0])
def test_engines_against_integral_recursions(v):
    p = derive_params(v)
    _, F, _, P = interior_free_strings(p, 6)
    res = coefficients_by_convolution(p, 6)
    for j in range(7):
        scale = max(abs(res.Fj[j]), p.A)
        assert abs(F[j][-1] - res.Fj[j]) < 1e-8 * scale
        assert abs(P[j][-1] - res.phi(j)) < 1e-8 * max(abs(res.phi(j)), p.A)
    div = coefficients_by_division(p, 6)
    assert np.allclose(div.phij, res.phij, rtol=1e-10)


@pytest.mark.parametrize("v", [2.7, 3, 4, 6, 10])
def test_engine_equivalence(v):
    p = derive_params(v)
    dev = engine_deviation(coefficients_by_convolution(p, 50), coefficients_by_division(p, 50))
    assert dev.max() < 1e-9


def test_engine_equivalence_long_range():
    p = derive_params(V_C + 1e-3)
    a, b = coefficients_by_convolution(p, 300), coefficients_by_division(p, 300)
    dev = engine_deviation(a, b)
    for j in range(301):
        assert dev[j] < engine_tolerance(j)


def test_positive_just_above_critical():
    p = derive_params(2.614401)
    for engine in ENGINES:
        assert np.all(engine(p, 50).Fj > 0.0)


def test_v10_containment_agrees():
    p = derive_params(10.0)
    a, b = coefficients_by_convolution(p, 20), coefficients_by_division(p, 20)
    assert a.containment_round == b.containment_round == 1
    j = containment_round(p, 20)
    assert j == 1 and a.Fj[j] <= 0 and np.all(a.Fj[:j] > 0)


def test_v262_bracket():
    p = derive_params(2.62)
    j = containment_round(p, 1000)
    pred = predict_rounds(p)
    assert pred["lower"] < j <= pred["upper"]


def test_below_critical_not_within_limit():
    assert containment_round(derive_params(V_C - 0.1), 200) == NOT_WITHIN_LIMIT


def test_overflow_carries_partial():
    p = derive_params(V_C - 0.1)
    for engine in ENGINES:
        with pytest.raises(PrecisionOverflowError) as info:
            engine(p, 1000)
        err = info.value
        assert 100 < err.last_valid_j < 1000
        assert err.partial.Fj.size == err.last_valid_j + 1
        assert np.all(np.isfinite(err.partial.Fj))
    with pytest.raises(PrecisionOverflowError):
        containment_round(p, 1000)


def test_sign_structure():
    for v in [2.65, 2.8, 3.5, 8.0]:
        p = derive_params(v)
        res = coefficients_by_convolution(p, 200)
        j = res.containment_round
        assert j is not None
        assert np.all(res.Fj[:j] > 0.0)
        assert np.all(res.phij[:j] > 0.0)  # phi_{-1} .. phi_{j-2}


@pytest.mark.parametrize("v", np.linspace(V_C + 0.05, 20.0, 25))
def test_contained_within_predicted_limit(v):
    p = derive_params(v)
    limit = math.ceil(2 * math.pi / predict_rounds(p)["phi"]) + 2
    assert containment_round(p, limit) != NOT_WITHIN_LIMIT


def test_containment_round_validates():
    with pytest.raises(InvalidParameterError):
        containment_round(derive_params(3.0), 0)
    with pytest.raises(InvalidParameterError):
        coefficients_by_convolution(derive_params(3.0), -1)


# nested integrals

def test_In_zero_is_one():
    p = derive_params(3.0)
    assert nested_integral_In(p, 0, 0.3 * p.l1) == 1.0


@pytest.mark.parametrize("v", [1.5, 3.0, 9.0])
def test_I1_at_l1(v):
    p = derive_params(v)
    assert nested_integral_In(p, 1, p.l1) == pytest.approx(2 * math.pi * p.cot_alpha / p.cos_alpha, rel=1e-13)


@pytest.mark.parametrize("n", range(7))
@pytest.mark.parametrize("frac", [0.25, 0.5, 1.0])
def test_In_against_nested_quadrature(n, frac):
    p = derive_params(3.0)
    x = frac * p.l1
    assert nested_integral_In(p, n, x) == pytest.approx(nested_quadrature(p, n, x), rel=1e-6)


def test_I3_half_l1_value():
    # frozen from the nested-quadrature oracle
    p = derive_params(3.0)
    assert nested_integral_In(p, 3, p.l1 / 2) == pytest.approx(19.533566451716712, rel=1e-9)


def test_In_preconditions():
    p = derive_params(3.0)
    with pytest.raises(InvalidParameterError):
        nested_integral_In(p, 7, 1.0)
    with pytest.raises(InvalidParameterError):
        nested_integral_In(p, 2, 2 * p.l1)
