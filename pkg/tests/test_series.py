import math

import numpy as np
import pytest

from cone_rigidity.services.series import (
    CLOSED_FORMS,
    LogSeries,
    TruncatedSeries,
    coefficient_expansion,
    series_arithmetic,
)
from cone_rigidity.utils.errors import SeriesError, SeriesOrderError


def test_coth_leading_terms():
    coth = coefficient_expansion("coth", 12)
    assert coth.leading_power == -1
    assert coth.coefficient(-1) == pytest.approx(1.0)
    assert coth.coefficient(0) == pytest.approx(0.0)
    assert coth.coefficient(1) == pytest.approx(1 / 3)
    assert coth.coefficient(3) == pytest.approx(-1 / 45)


def test_tanh_coefficients():
    tanh = coefficient_expansion("tanh", 12)
    np.testing.assert_allclose(tanh.dense(0, 5), [0, 1, 0, -1 / 3, 0, 2 / 15], atol=1e-15)


@pytest.mark.parametrize("name", sorted(CLOSED_FORMS))
def test_expansions_match_closed_forms(name):
    series = coefficient_expansion(name, 20)
    r = 0.1
    assert series.evaluate(r).real == pytest.approx(float(CLOSED_FORMS[name](r)), rel=1e-12)


def test_unknown_expansion():
    with pytest.raises(SeriesError):
        coefficient_expansion("sec", 10)


def test_low_order_rejected():
    with pytest.raises(SeriesOrderError):
        coefficient_expansion("coth", 1)


def test_product_of_inverses():
    sinh = coefficient_expansion("tanh", 16) / coefficient_expansion("sech", 16)
    product = sinh * coefficient_expansion("inv_sinh", 16)
    assert product.coefficient(0) == pytest.approx(1.0)
    for power in range(1, product.precision + 1):
        assert abs(product.coefficient(power)) < 1e-12


def test_precision_tracking():
    a = TruncatedSeries.from_coefficients([1.0, 2.0, 3.0])
    b = TruncatedSeries.from_coefficients([1.0, 1.0, 1.0, 1.0, 1.0], leading_power=-1)
    total = a + b
    assert total.precision == min(a.precision, b.precision)
    with pytest.raises(SeriesOrderError):
        total.coefficient(total.precision + 1)


def test_normalizes_leading_zeros():
    s = TruncatedSeries.from_coefficients([0.0, 0.0, 5.0, 1.0])
    assert s.leading_power == 2
    assert s.coefficient(2) == 5.0


def test_division_by_zero_series():
    zero = TruncatedSeries.zero(5)
    one = TruncatedSeries.constant(1.0, 5)
    with pytest.raises(SeriesError):
        series_arithmetic(one, zero, "div")
    with pytest.raises(SeriesError):
        one / 0


def test_arithmetic_dispatch():
    a = TruncatedSeries.from_coefficients([1.0, 1.0, 0.5])
    assert series_arithmetic(a, a, "add").coefficient(1) == 2.0
    assert series_arithmetic(a, a, "mul").coefficient(1) == 2.0
    assert series_arithmetic(a, None, "differentiate").coefficient(0) == 1.0
    with pytest.raises(SeriesError):
        series_arithmetic(a, a, "pow")


def test_differentiate_monomial():
    s = TruncatedSeries.monomial(-2, 4, coefficient=3.0)
    d = s.differentiate()
    assert d.leading_power == -3
    assert d.coefficient(-3) == pytest.approx(-6.0)


class TestLogSeries:
    def test_derivative_of_log(self):
        # d/dr (r^k ln r) = r^(k-1) (1 + k ln r)
        k = 0.5
        s = LogSeries(k, TruncatedSeries.zero(6), TruncatedSeries.constant(1.0, 6))
        d = s.differentiate()
        r = 0.3
        expected = r ** (k - 1) * (1 + k * math.log(r))
        assert d.evaluate(r).real == pytest.approx(expected, rel=1e-12)

    def test_leading_term(self):
        s = LogSeries(1.5, TruncatedSeries.from_coefficients([0.0, 2.0, 1.0]), TruncatedSeries.zero(3))
        assert s.leading_term(1e-12) == (2.5, False)
        with_log = LogSeries(1.5, TruncatedSeries.constant(1.0, 3), TruncatedSeries.constant(1.0, 3))
        assert with_log.leading_term(1e-12) == (1.5, True)

    def test_identically_zero(self):
        s = LogSeries(0.0, TruncatedSeries.zero(4), TruncatedSeries.zero(4))
        exponent, has_log = s.leading_term(1e-12)
        assert math.isinf(exponent) and not has_log

    def test_mismatched_exponents(self):
        a = LogSeries(0.0, TruncatedSeries.constant(1.0, 3), TruncatedSeries.zero(3))
        b = LogSeries(0.5, TruncatedSeries.constant(1.0, 3), TruncatedSeries.zero(3))
        with pytest.raises(SeriesError):
            a + b
