"""Systolic ratios of p-products, the auxiliary function g and its audit."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Tuple

import numpy as np

from .bodies import gamma_ratio
from .capacities_ehz import ehz_p_product
from .errors import InvalidInputError
from .report import CheckResult, VerificationReport


class BodyData(NamedTuple):
    """Closed-form data of a convex body in R^{2n}."""

    capacity: float
    volume: float
    n: int


def systolic_ratio(capacity: float, volume: float, n: int) -> float:
    """c / (n! V)^(1/n)."""
    if not (capacity > 0 and volume > 0 and n >= 1):
        raise InvalidInputError("capacity, volume and n must be positive")
    den = math.factorial(n) * volume if n <= 170 else math.inf
    if math.isfinite(den) and den > 0:
        return capacity / den ** (1.0 / n)
    return capacity / math.exp((math.lgamma(n + 1) + math.log(volume)) / n)


def _as_data(d) -> BodyData:
    d = BodyData(*d)
    if not (d.capacity > 0 and d.volume > 0 and int(d.n) == d.n and d.n >= 1):
        raise InvalidInputError(f"body data must be (capacity > 0, volume > 0, n >= 1), got {tuple(d)}")
    return BodyData(float(d.capacity), float(d.volume), int(d.n))


def p_product_data(K, T, p: float) -> BodyData:
    """Capacity and volume of K x_p T from the factor data."""
    K, T = _as_data(K), _as_data(T)
    c = ehz_p_product([K.capacity, T.capacity], p)
    v = K.volume * T.volume * gamma_ratio([2 * K.n, 2 * T.n], p)
    return BodyData(c, v, K.n + T.n)


def _sys_power(d: BodyData) -> float:
    """sys_n(d)^n, in log space."""
    return math.exp(d.n * math.log(d.capacity) - math.lgamma(d.n + 1) - math.log(d.volume))


def systolic_gap(K, T, p: float) -> float:
    """sys_{n+m}(K x_p T)^{n+m} / (sys_n(K)^n sys_m(T)^m); at most 1."""
    K, T = _as_data(K), _as_data(T)
    return _sys_power(p_product_data(K, T, p)) / (_sys_power(K) * _sys_power(T))


def p_product_systolic_check(K_data, T_data, p: float, rtol: float = 1e-12) -> VerificationReport:
    """Check the systolic inequality for K x_p T and whether equality holds exactly when expected."""
    K, T = _as_data(K_data), _as_data(T_data)
    ratio = systolic_gap(K, T, p)
    equal_caps = abs(K.capacity - T.capacity) <= rtol * max(K.capacity, T.capacity)
    expect_equality = p == 2 and equal_caps
    is_equal = abs(ratio - 1.0) <= rtol
    report = VerificationReport(meta={"p": p, "K": list(K), "T": list(T)})
    report.add(CheckResult(
        check="systolic_inequality",
        status="pass" if ratio <= 1.0 + rtol else "fail",
        computed=ratio,
        expected=1.0,
        tolerance=rtol,
        witness=None if ratio <= 1.0 + rtol else {"lhs_over_rhs": ratio},
    ))
    report.add(CheckResult(
        check="systolic_equality_case",
        status="pass" if is_equal == expect_equality else "fail",
        computed=1.0 - ratio,
        expected=0.0 if expect_equality else "> 0",
        tolerance=rtol,
        witness={"equality_expected": expect_equality, "equality_found": is_equal},
    ))
    return report


# -- free sum ----------------------------------------------------------------------------


def free_sum_ratio(n: int) -> float:
    """(n/(n+1)) (2n+1)^(1/(n+1))."""
    if n < 1:
        raise InvalidInputError("n must be >= 1")
    return n / (n + 1.0) * (2.0 * n + 1.0) ** (1.0 / (n + 1))


def free_sum_ratio_direct(n: int) -> float:
    """sys(K x_1 T) / sys(K x_2 T) for K = B^{2n}[1], T = B^2[n], from capacities and volumes."""
    if n < 1:
        raise InvalidInputError("n must be >= 1")
    K = BodyData(1.0, 1.0 / math.factorial(n), n)
    T = BodyData(float(n), float(n), 1)
    free, cartesian = p_product_data(K, T, 1.0), p_product_data(K, T, 2.0)
    return systolic_ratio(*free) / systolic_ratio(*cartesian)


# -- g -----------------------------------------------------------------------------------


def log_g(x: float, n: int, m: int) -> float:
    if n < 1 or m < 1:
        raise InvalidInputError("n and m must be >= 1")
    if not 0.5 <= x <= 1.0:
        raise InvalidInputError(f"x must lie in [1/2, 1], got {x}")
    s = n + m
    base = s * math.log(s) - m * math.log(m) - n * math.log(n)
    return ((1.0 - 2.0 * x) * base
            + math.lgamma(1.0 + 2.0 * s * x) - math.lgamma(1.0 + 2.0 * n * x) - math.lgamma(1.0 + 2.0 * m * x)
            + math.lgamma(n + 1.0) + math.lgamma(m + 1.0) - math.lgamma(s + 1.0))


def g_function(x: float, n: int, m: int) -> float:
    """g(x) for x in [1/2, 1]; g(1/p) is the worst-case systolic gap of a p-product."""
    return math.exp(log_g(x, n, m))


def g_logconvexity_audit(n: int, m: int, grid: int = 1001) -> VerificationReport:
    """Second differences of ln g on a uniform grid of [1/2, 1], and the location of max g."""
    if grid < 3:
        raise InvalidInputError("grid must be >= 3")
    xs = np.linspace(0.5, 1.0, grid)
    lg = np.array([log_g(float(x), n, m) for x in xs])
    second = lg[:-2] - 2.0 * lg[1:-1] + lg[2:]
    bad = np.flatnonzero(second <= 0)
    report = VerificationReport(meta={"n": n, "m": m, "grid": grid})
    report.add(CheckResult(
        check="g_log_convexity",
        status="pass" if bad.size == 0 else "fail",
        computed=float(second.min()),
        expected="> 0",
        tolerance=0.0,
        witness=None if bad.size == 0 else {"x": float(xs[bad[0] + 1]), "second_difference": float(second[bad[0]])},
    ))
    g = np.exp(lg)
    strict = bool(np.all(g[1:] < 1.0))
    report.add(CheckResult(
        check="g_max_at_half",
        status="pass" if abs(g[0] - 1.0) <= 1e-12 and strict else "fail",
        computed=float(g.max()),
        expected=1.0,
        tolerance=1e-12,
        witness={"g_half": float(g[0]), "g_one": float(g[-1]), "strict_below_one": strict},
    ))
    return report


# -- tensor powers -----------------------------------------------------------------------


@dataclass(frozen=True)
class TensorPowerDemo:
    sys_values: Tuple[float, ...]
    padding_lhs: float
    padding_rhs: float


def tensor_power_demo(sys_value: float, n: int, m_powers: int, pad_to: int = None) -> TensorPowerDemo:
    """Systolic ratios of the 1..m_powers-fold 2-products of a body with ratio ``sys_value``.

    The body is represented by capacity 1 and the matching volume; the values
    are recomputed from the product capacity and volume rules, so they exhibit
    (not assume) the invariance.  Also returns sys_n(K)^n and sys_N(K x_2 B)^N
    for a capacity-matched ball B padding K to half-dimension ``pad_to``.
    """
    if not (sys_value > 0 and n >= 1 and m_powers >= 1):
        raise InvalidInputError("sys_value, n and m_powers must be positive")
    pad_to = 2 * n if pad_to is None else pad_to
    if pad_to <= n:
        raise InvalidInputError("pad_to must exceed n")
    K = BodyData(1.0, 1.0 / (math.factorial(n) * sys_value ** n), n)
    values = []
    power = K
    for i in range(m_powers):
        if i:
            power = p_product_data(power, K, 2.0)
        values.append(systolic_ratio(*power))
    d = pad_to - n
    ball_data = BodyData(K.capacity, K.capacity ** d / math.factorial(d), d)
    padded = p_product_data(K, ball_data, 2.0)
    return TensorPowerDemo(tuple(values), _sys_power(K), _sys_power(padded))
