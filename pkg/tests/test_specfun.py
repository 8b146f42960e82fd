import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from selftrap.specfun import (
    BESSEL_K0_ACCURACY,
    ERFCX_ACCURACY,
    EULER_GAMMA,
    EXP_E1_ACCURACY,
    Accuracy,
    bessel_k0,
    erfcx,
    exp_e1,
)

mp.mp.dps = 40


def _max_rel_err(fn, ref, xs):
    got = fn(np.asarray(xs))
    want = np.array([float(ref(mp.mpf(float(x)))) for x in xs])
    return np.max(np.abs(got / want - 1))


def test_erfcx_matches_high_precision_on_contract_range():
    xs = np.concatenate([np.linspace(0, 30, 601), np.linspace(1.9, 2.1, 41)])
    err = _max_rel_err(erfcx, lambda x: mp.exp(x * x) * mp.erfc(x), xs)
    assert err < ERFCX_ACCURACY.bound


def test_exp_e1_matches_high_precision_on_contract_range():
    xs = np.concatenate([np.logspace(-8, math.log10(700), 601), np.linspace(0.9, 1.1, 41)])
    err = _max_rel_err(exp_e1, lambda x: mp.exp(x) * mp.e1(x), xs)
    assert err < EXP_E1_ACCURACY.bound


def test_k0_matches_high_precision_on_contract_range():
    xs = np.logspace(-4, math.log10(50), 301)
    err = _max_rel_err(bessel_k0, lambda x: mp.besselk(0, x), xs)
    assert err < BESSEL_K0_ACCURACY.bound


# reference values computed with 40-digit arithmetic and frozen here
@pytest.mark.parametrize("fn, x, want", [
    (erfcx, 0.0, 1.0),
    (erfcx, 10.0, 0.056140992743822585858),
    (erfcx, math.sqrt(2.0), 0.33620400244634121285),
    (exp_e1, 1.0, 0.59634736232319407434),
    (exp_e1, 100.0, 0.0099019422867330184064),
    (bessel_k0, 1.0, 0.42102443824070833334),
])
def test_frozen_values(fn, x, want):
    assert fn(x) == pytest.approx(want, rel=1e-12)


def test_scalar_in_scalar_out_and_shape_preserved():
    assert isinstance(erfcx(1.0), float)
    assert exp_e1(np.ones((2, 3))).shape == (2, 3)
    assert bessel_k0(np.array([1.0, 2.0])).shape == (2,)


def test_erfcx_plus_erf_series_is_one():
    def erf_series(x):
        # alternating Maclaurin series, summed in high precision
        x = mp.mpf(x)
        return 2 / mp.sqrt(mp.pi) * mp.nsum(lambda n: (-1) ** n * x ** (2 * n + 1) / (mp.factorial(n) * (2 * n + 1)), [0, mp.inf])

    for x in np.linspace(0, 5, 26):
        total = erfcx(x) * math.exp(-x * x) + float(erf_series(x))
        assert abs(total - 1) < 1e-9


def test_exp_e1_derivative_identity():
    for x in np.logspace(-2, 2, 10):
        h = 1e-5 * x
        deriv = (exp_e1(x + h) - exp_e1(x - h)) / (2 * h)
        assert deriv == pytest.approx(exp_e1(x) - 1 / x, rel=1e-6, abs=1e-9)


def test_small_and_large_argument_limits():
    x = 1e-8
    assert exp_e1(x) == pytest.approx(-EULER_GAMMA - math.log(x), rel=1e-7)
    assert bessel_k0(1e-4) == pytest.approx(-math.log(0.5e-4) - EULER_GAMMA, rel=1e-7)
    assert bessel_k0(50.0) == pytest.approx(math.sqrt(math.pi / 100) * math.exp(-50), rel=3e-3)
    assert erfcx(30.0) * 30.0 * math.sqrt(math.pi) == pytest.approx(1, rel=1e-3)
    assert exp_e1(700.0) * 700.0 == pytest.approx(1, rel=2e-3)


@pytest.mark.parametrize("fn, lo, hi", [(erfcx, 0, 30), (exp_e1, 1e-8, 700), (bessel_k0, 1e-4, 50)])
def test_positive_and_decreasing(fn, lo, hi):
    xs = np.geomspace(max(lo, 1e-8), hi, 2000)
    if lo == 0:
        xs = np.concatenate([[0.0], xs])
    v = fn(xs)
    assert np.all(v > 0)
    assert np.all(np.diff(v) < 0)


@pytest.mark.parametrize("fn, bad", [(erfcx, -1e-3), (erfcx, math.nan), (exp_e1, 0.0),
                                     (exp_e1, -2.0), (bessel_k0, 0.0), (bessel_k0, math.inf)])
def test_rejects_out_of_domain(fn, bad):
    with pytest.raises(ValueError):
        fn(bad)


def test_accuracy_validation():
    assert Accuracy().bound == 1e-10
    with pytest.raises(ValueError):
        Accuracy(bound=0)
    with pytest.raises(ValueError):
        Accuracy(1e-10, 2.0, 1.0)


@settings(max_examples=60, deadline=None)
@given(st.floats(min_value=0.0, max_value=30.0))
def test_erfcx_bounds(x):
    # 1/(x + sqrt(x^2 + 2)) < sqrt(pi)/2 * erfcx(x) <= 1/(x + sqrt(x^2 + 4/pi))
    v = erfcx(x) * math.sqrt(math.pi) / 2
    assert 1 / (x + math.sqrt(x * x + 2)) < v * (1 + 1e-12)
    assert v <= 1 / (x + math.sqrt(x * x + 4 / math.pi)) * (1 + 1e-12)


@settings(max_examples=60, deadline=None)
@given(st.floats(min_value=1e-6, max_value=700.0))
def test_exp_e1_bounds(x):
    # 1/2 ln(1 + 2/x) < e^x E1(x) < ln(1 + 1/x)
    v = exp_e1(x)
    assert 0.5 * math.log1p(2 / x) < v * (1 + 1e-12)
    assert v < math.log1p(1 / x) * (1 + 1e-12)
