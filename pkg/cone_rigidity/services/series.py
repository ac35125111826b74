"""
Truncated Laurent series over complex coefficients

A TruncatedSeries stores c_0..c_N with value Σ c_m r^{leading_power + m};
everything above the power leading_power + N is unknown.  Arithmetic keeps
track of the highest reliable power, so results never claim more accuracy
than their inputs.  LogSeries adds the non-integer prefactor r^k and a
single ln r ladder, which is what Frobenius branches need.
"""

import logging
import math
from dataclasses import dataclass
from numbers import Number
from typing import Callable, Dict, Optional, Tuple, Union

import numpy as np
from numpy.polynomial import polynomial as npoly

from cone_rigidity.config import settings
from cone_rigidity.utils.errors import SeriesError, SeriesOrderError

logger = logging.getLogger(__name__)

Scalar = Union[int, float, complex, np.number]


@dataclass(frozen=True, eq=False)
class TruncatedSeries:
    leading_power: int
    coefficients: np.ndarray

    def __post_init__(self):
        coefficients = np.atleast_1d(np.asarray(self.coefficients, dtype=complex))
        if coefficients.ndim != 1 or coefficients.size == 0:
            raise SeriesOrderError("A truncated series needs at least one coefficient")
        object.__setattr__(self, "coefficients", coefficients)
        object.__setattr__(self, "leading_power", int(self.leading_power))

    # -- construction -------------------------------------------------

    @classmethod
    def from_coefficients(cls, coefficients, leading_power: int = 0) -> "TruncatedSeries":
        """Build and normalize so that c_0 != 0 unless the series is zero"""
        coefficients = np.atleast_1d(np.asarray(coefficients, dtype=complex))
        if coefficients.size == 0:
            raise SeriesOrderError("Order underflow: no reliable coefficient left")
        nonzero = np.flatnonzero(coefficients)
        if nonzero.size == 0 or nonzero[0] == 0:
            return cls(leading_power, coefficients)
        first = int(nonzero[0])
        return cls(leading_power + first, coefficients[first:])

    @classmethod
    def zero(cls, order: int, leading_power: int = 0) -> "TruncatedSeries":
        return cls(leading_power, np.zeros(order + 1, dtype=complex))

    @classmethod
    def constant(cls, value: Scalar, order: int) -> "TruncatedSeries":
        coefficients = np.zeros(order + 1, dtype=complex)
        coefficients[0] = value
        return cls.from_coefficients(coefficients)

    @classmethod
    def monomial(cls, power: int, order: int, coefficient: Scalar = 1.0) -> "TruncatedSeries":
        coefficients = np.zeros(order + 1, dtype=complex)
        coefficients[0] = coefficient
        return cls(power, coefficients)

    # -- properties ---------------------------------------------------

    @property
    def order(self) -> int:
        return self.coefficients.size - 1

    @property
    def precision(self) -> int:
        """Highest power whose coefficient is known"""
        return self.leading_power + self.order

    @property
    def is_zero(self) -> bool:
        return not np.any(self.coefficients)

    def coefficient(self, power: int) -> complex:
        if power > self.precision:
            raise SeriesOrderError(
                f"Coefficient of r^{power} requested beyond precision r^{self.precision}"
            )
        if power < self.leading_power:
            return 0j
        return complex(self.coefficients[power - self.leading_power])

    def dense(self, start: int, stop: int) -> np.ndarray:
        """Coefficients of the powers start..stop (inclusive)"""
        if stop > self.precision:
            raise SeriesOrderError(
                f"Order underflow: r^{stop} requested beyond precision r^{self.precision}"
            )
        out = np.zeros(stop - start + 1, dtype=complex)
        lo = max(start, self.leading_power)
        if lo <= stop:
            out[lo - start:] = self.coefficients[lo - self.leading_power: stop - self.leading_power + 1]
        return out

    def first_significant_power(self, threshold: float) -> Optional[int]:
        """Lowest power whose coefficient exceeds threshold in modulus, None if none does"""
        significant = np.flatnonzero(np.abs(self.coefficients) > threshold)
        if significant.size == 0:
            return None
        return self.leading_power + int(significant[0])

    # -- arithmetic ---------------------------------------------------

    def shift(self, power: int) -> "TruncatedSeries":
        """Multiply by r^power"""
        return TruncatedSeries(self.leading_power + power, self.coefficients)

    def truncate(self, order: int) -> "TruncatedSeries":
        if order > self.order:
            raise SeriesOrderError(f"Cannot raise order {self.order} to {order}")
        return TruncatedSeries(self.leading_power, self.coefficients[: order + 1])

    def _as_series(self, other) -> "TruncatedSeries":
        if isinstance(other, TruncatedSeries):
            return other
        if isinstance(other, Number):
            if self.precision < 0:
                raise SeriesOrderError("Order underflow: constant term beyond precision")
            return TruncatedSeries.constant(other, self.precision)
        return NotImplemented

    def __add__(self, other) -> "TruncatedSeries":
        other = self._as_series(other)
        if other is NotImplemented:
            return NotImplemented
        lead = min(self.leading_power, other.leading_power)
        precision = min(self.precision, other.precision)
        if precision < lead:
            raise SeriesOrderError("Order underflow in series addition")
        total = self.dense(lead, precision) + other.dense(lead, precision)
        return TruncatedSeries.from_coefficients(total, lead)

    __radd__ = __add__

    def __neg__(self) -> "TruncatedSeries":
        return TruncatedSeries(self.leading_power, -self.coefficients)

    def __sub__(self, other) -> "TruncatedSeries":
        other = self._as_series(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> "TruncatedSeries":
        return (-self) + other

    def __mul__(self, other) -> "TruncatedSeries":
        if isinstance(other, Number):
            return TruncatedSeries(self.leading_power, self.coefficients * other)
        if not isinstance(other, TruncatedSeries):
            return NotImplemented
        order = min(self.order, other.order)
        product = np.convolve(self.coefficients[: order + 1], other.coefficients[: order + 1])
        return TruncatedSeries.from_coefficients(
            product[: order + 1], self.leading_power + other.leading_power
        )

    __rmul__ = __mul__

    def inverse(self) -> "TruncatedSeries":
        if self.is_zero:
            raise SeriesError("Division by an identically zero series")
        b = self.coefficients
        inverse = np.zeros_like(b)
        inverse[0] = 1.0 / b[0]
        for m in range(1, b.size):
            inverse[m] = -np.dot(b[1: m + 1], inverse[m - 1:: -1][:m]) / b[0]
        return TruncatedSeries(-self.leading_power, inverse)

    def __truediv__(self, other) -> "TruncatedSeries":
        if isinstance(other, Number):
            if other == 0:
                raise SeriesError("Division of a series by zero")
            return self * (1.0 / other)
        if not isinstance(other, TruncatedSeries):
            return NotImplemented
        return self * other.inverse()

    def __rtruediv__(self, other) -> "TruncatedSeries":
        if not isinstance(other, Number):
            return NotImplemented
        return self.inverse() * other

    def differentiate(self) -> "TruncatedSeries":
        powers = self.leading_power + np.arange(self.coefficients.size)
        return TruncatedSeries.from_coefficients(
            self.coefficients * powers, self.leading_power - 1
        )

    def evaluate(self, r):
        r = np.asarray(r, dtype=float)
        value = npoly.polyval(r, self.coefficients) * r ** float(self.leading_power)
        return complex(value) if value.ndim == 0 else value

    def __repr__(self) -> str:
        terms = ", ".join(f"{c:.6g}" for c in self.coefficients[:6])
        more = ", ..." if self.coefficients.size > 6 else ""
        return f"TruncatedSeries(r^{self.leading_power}·[{terms}{more}], order={self.order})"


def series_arithmetic(
    a: TruncatedSeries, b: Optional[TruncatedSeries], kind: str
) -> TruncatedSeries:
    """Dispatch add | mul | div | differentiate (b is ignored for differentiate)"""
    if kind == "add":
        return a + b
    if kind == "mul":
        return a * b
    if kind == "div":
        return a / b
    if kind == "differentiate":
        return a.differentiate()
    raise SeriesError(f"Unknown series operation: {kind}")


# -- expansions of the metric coefficient functions -------------------


def _sinh_series(order: int) -> TruncatedSeries:
    coefficients = [1.0 / math.factorial(m + 1) if m % 2 == 0 else 0.0 for m in range(order + 1)]
    return TruncatedSeries(1, coefficients)


def _cosh_series(order: int) -> TruncatedSeries:
    coefficients = [1.0 / math.factorial(m) if m % 2 == 0 else 0.0 for m in range(order + 1)]
    return TruncatedSeries(0, coefficients)


_EXPANSIONS: Dict[str, Callable[[TruncatedSeries, TruncatedSeries], TruncatedSeries]] = {
    "coth": lambda s, c: c / s,
    "tanh": lambda s, c: s / c,
    "csch2": lambda s, c: (s * s).inverse(),
    "sech2": lambda s, c: (c * c).inverse(),
    "inv_sinh": lambda s, c: s.inverse(),
    "sech": lambda s, c: c.inverse(),
    "tanh_sech": lambda s, c: s / (c * c),
}

CLOSED_FORMS: Dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "coth": lambda r: 1.0 / np.tanh(r),
    "tanh": np.tanh,
    "csch2": lambda r: 1.0 / np.sinh(r) ** 2,
    "sech2": lambda r: 1.0 / np.cosh(r) ** 2,
    "inv_sinh": lambda r: 1.0 / np.sinh(r),
    "sech": lambda r: 1.0 / np.cosh(r),
    "tanh_sech": lambda r: np.tanh(r) / np.cosh(r),
}


def coefficient_expansion(name: str, N: Optional[int] = None) -> TruncatedSeries:
    """Expansion of a metric coefficient function at r = 0, built from sinh/cosh by division"""
    N = settings.SERIES_ORDER if N is None else N
    if name not in _EXPANSIONS:
        raise SeriesError(f"Unknown coefficient function: {name}")
    if N < 2:
        raise SeriesOrderError(f"Expansion order must be at least 2, got {N}")
    return _EXPANSIONS[name](_sinh_series(N), _cosh_series(N))


@dataclass(frozen=True, eq=False)
class LogSeries:
    """r^k · (plain(r) + ln r · log(r)) with integer-offset truncated series"""
    exponent: float
    plain: TruncatedSeries
    log: TruncatedSeries

    def _check(self, other: "LogSeries"):
        if abs(self.exponent - other.exponent) > 1e-12:
            raise SeriesError(
                f"Cannot combine r^{self.exponent} and r^{other.exponent} ladders"
            )

    def __add__(self, other: "LogSeries") -> "LogSeries":
        if not isinstance(other, LogSeries):
            return NotImplemented
        self._check(other)
        return LogSeries(self.exponent, self.plain + other.plain, self.log + other.log)

    def __neg__(self) -> "LogSeries":
        return LogSeries(self.exponent, -self.plain, -self.log)

    def __sub__(self, other: "LogSeries") -> "LogSeries":
        return self + (-other)

    def __mul__(self, other) -> "LogSeries":
        if isinstance(other, (TruncatedSeries, Number)):
            return LogSeries(self.exponent, self.plain * other, self.log * other)
        return NotImplemented

    __rmul__ = __mul__

    def differentiate(self) -> "LogSeries":
        k = self.exponent
        plain = self.plain.shift(-1) * k + self.plain.differentiate() + self.log.shift(-1)
        log = self.log.shift(-1) * k + self.log.differentiate()
        return LogSeries(k, plain, log)

    @property
    def precision(self) -> int:
        return min(self.plain.precision, self.log.precision)

    def leading_term(self, threshold: float) -> Tuple[float, bool]:
        """(leading exponent, carries ln r); exponent is +inf when nothing exceeds threshold"""
        plain = self.plain.first_significant_power(threshold)
        log = self.log.first_significant_power(threshold)
        if plain is None and log is None:
            return math.inf, False
        if log is not None and (plain is None or log <= plain):
            return self.exponent + log, True
        return self.exponent + plain, False

    def evaluate(self, r):
        r = np.asarray(r, dtype=float)
        prefactor = r ** self.exponent
        return prefactor * (self.plain.evaluate(r) + np.log(r) * self.log.evaluate(r))
