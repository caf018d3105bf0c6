"""Numeric evaluation.

Two entry points:

* ``evaluate`` -- strict scalar evaluation; any domain problem (log of a
  non-positive number, Ei at zero, division by zero, overflow to a
  non-finite value) raises EvaluationError instead of returning NaN.
* ``eval_array`` -- vectorized evaluation over numpy arrays for the Monte
  Carlo integrators; non-finite values propagate and the caller masks them.
"""

from __future__ import annotations

import math
from typing import Mapping, Optional, Union

import numpy as np
from scipy.integrate import quad

from .nodes import (
    AntiDeriv,
    Apply,
    Const,
    Expr,
    Neg,
    Param,
    Power,
    Product,
    Sum,
    Var,
    VarId,
)

_EULER_GAMMA = 0.57721566490153286060651209008240243


class EvaluationError(ValueError):
    pass


def expint_ei(z: float) -> float:
    """Principal-value exponential integral Ei(z) for real z != 0.

    Power series (all terms positive for z > 0, mild cancellation down to
    z = -10) for z >= -10; for z < -10 the continued fraction of E1(-z) is
    used, which is where the series loses accuracy.
    """
    if z == 0.0:
        raise EvaluationError("Ei is singular at 0")
    if not math.isfinite(z):
        raise EvaluationError("Ei of a non-finite argument")
    if z >= -10.0:
        if z > 700.0:
            raise EvaluationError("Ei overflow")
        total = _EULER_GAMMA + math.log(abs(z))
        power = 1.0
        for k in range(1, 1000):
            power *= z / k
            term = power / k
            total += term
            if abs(term) < 1e-18 * max(1.0, abs(total)):
                break
        return total
    # z < -10: Ei(z) = -E1(-z); modified Lentz on the standard E1 fraction
    x = -z
    tiny = 1e-300
    b = x + 1.0
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for k in range(1, 400):
        a = -(k * k)
        b += 2.0
        d = 1.0 / (a * d + b)
        c = b + a / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return -math.exp(-x) * h


def _ei_array(z: np.ndarray) -> np.ndarray:
    """Vectorized Ei; series computed with masks, non-finite where singular."""
    z = np.asarray(z, dtype=float)
    out = np.full(z.shape, np.nan)
    ok = np.isfinite(z) & (z != 0.0)
    series = ok & (z >= -10.0) & (z <= 700.0)
    if np.any(series):
        zs = z[series]
        total = _EULER_GAMMA + np.log(np.abs(zs))
        power = np.ones_like(zs)
        kmax = int(3 * np.max(np.abs(zs))) + 40
        for k in range(1, kmax):
            power = power * zs / k
            total = total + power / k
        out[series] = total
    rest = ok & ~series
    if np.any(rest):
        out[rest] = [expint_ei(v) if v < -10.0 else np.inf for v in z[rest]]
    return out


_UNARY_NUMPY = {
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "sin": np.sin,
    "cos": np.cos,
    "arctan": np.arctan,
    "Ei": _ei_array,
}

ArrayLike = Union[float, np.ndarray]


def eval_array(
    e: Expr,
    point: Mapping[VarId, ArrayLike],
    params: Optional[Mapping[str, float]] = None,
) -> ArrayLike:
    """Vectorized, non-strict evaluation (NaN/inf propagate)."""
    params = params or {}
    with np.errstate(all="ignore"):
        return _eval_array(e, point, params)


def _eval_array(e, point, params):
    if isinstance(e, Const):
        return float(e.value)
    if isinstance(e, Var):
        try:
            return point[e.var]
        except KeyError:
            raise EvaluationError(f"unbound variable {e.var.name}") from None
    if isinstance(e, Param):
        try:
            return params[e.name]
        except KeyError:
            raise EvaluationError(f"unbound parameter {e.name}") from None
    if isinstance(e, Neg):
        return -_eval_array(e.arg, point, params)
    if isinstance(e, Sum):
        total = _eval_array(e.terms[0], point, params)
        for term in e.terms[1:]:
            total = total + _eval_array(term, point, params)
        return total
    if isinstance(e, Product):
        total = _eval_array(e.factors[0], point, params)
        for factor in e.factors[1:]:
            total = total * _eval_array(factor, point, params)
        return total
    if isinstance(e, Power):
        base = _eval_array(e.base, point, params)
        exponent = _eval_array(e.exponent, point, params)
        return np.power(base, exponent)
    if isinstance(e, Apply):
        return _UNARY_NUMPY[e.fn](_eval_array(e.arg, point, params))
    if isinstance(e, AntiDeriv):
        return _eval_antideriv(e, point, params)
    raise TypeError(f"unknown node {e!r}")


def _eval_antideriv(e: AntiDeriv, point, params):
    upper = point.get(e.var)
    if upper is None:
        raise EvaluationError(f"unbound variable {e.var.name}")

    def integrand(u):
        inner = dict(point)
        inner[e.var] = u
        return _eval_array(e.integrand, inner, params)

    def one(u):
        value, _ = quad(integrand, e.base, u, limit=200)
        return value

    if np.ndim(upper) == 0:
        return one(float(upper))
    return np.array([one(float(u)) for u in np.asarray(upper).ravel()]).reshape(
        np.shape(upper)
    )


def evaluate(
    e: Expr,
    point: Mapping[VarId, float],
    params: Optional[Mapping[str, float]] = None,
) -> float:
    """Strict scalar evaluation: IEEE double result or EvaluationError."""
    params = params or {}
    value = _eval_scalar(e, point, params)
    if not math.isfinite(value):
        raise EvaluationError(f"non-finite result for {e}")
    return value


def _eval_scalar(e, point, params) -> float:
    if isinstance(e, Const):
        return float(e.value)
    if isinstance(e, Var):
        try:
            return float(point[e.var])
        except KeyError:
            raise EvaluationError(f"unbound variable {e.var.name}") from None
    if isinstance(e, Param):
        try:
            return float(params[e.name])
        except KeyError:
            raise EvaluationError(f"unbound parameter {e.name}") from None
    if isinstance(e, Neg):
        return -_eval_scalar(e.arg, point, params)
    if isinstance(e, Sum):
        return math.fsum(_eval_scalar(t, point, params) for t in e.terms)
    if isinstance(e, Product):
        total = 1.0
        for factor in e.factors:
            total *= _eval_scalar(factor, point, params)
        return total
    if isinstance(e, Power):
        base = _eval_scalar(e.base, point, params)
        exponent = _eval_scalar(e.exponent, point, params)
        try:
            value = math.pow(base, exponent)
        except (ValueError, OverflowError) as err:
            raise EvaluationError(f"domain error in {e}: {err}") from None
        if isinstance(value, complex):
            raise EvaluationError(f"complex result in {e}")
        return value
    if isinstance(e, Apply):
        arg = _eval_scalar(e.arg, point, params)
        if e.fn == "exp":
            try:
                return math.exp(arg)
            except OverflowError:
                raise EvaluationError(f"overflow in exp({arg})") from None
        if e.fn == "log":
            if arg <= 0.0:
                raise EvaluationError(f"log of non-positive value {arg}")
            return math.log(arg)
        if e.fn == "sqrt":
            if arg < 0.0:
                raise EvaluationError(f"sqrt of negative value {arg}")
            return math.sqrt(arg)
        if e.fn == "sin":
            return math.sin(arg)
        if e.fn == "cos":
            return math.cos(arg)
        if e.fn == "arctan":
            return math.atan(arg)
        if e.fn == "Ei":
            return expint_ei(arg)
        raise EvaluationError(f"unknown builtin {e.fn}")
    if isinstance(e, AntiDeriv):
        return float(_eval_antideriv(e, dict(point), params))
    raise TypeError(f"unknown node {e!r}")


def eval_magnitude(e: Expr, point, params=None) -> float:
    """Upper bound on the cancellation-free magnitude of ``e`` at ``point``.

    Sums add absolute values of their terms; used to scale zero-test
    tolerances so that a residual is compared against the size of the
    quantities that cancelled to produce it.
    """
    params = params or {}
    return _eval_mag(e, point, params)


def _eval_mag(e, point, params) -> float:
    if isinstance(e, Sum):
        return sum(_eval_mag(t, point, params) for t in e.terms)
    if isinstance(e, Product):
        total = 1.0
        for factor in e.factors:
            total *= _eval_mag(factor, point, params)
        return total
    if isinstance(e, Neg):
        return _eval_mag(e.arg, point, params)
    if isinstance(e, Power):
        base = _eval_mag(e.base, point, params)
        exponent = _eval_scalar(e.exponent, point, params)
        try:
            return abs(math.pow(base, exponent))
        except (ValueError, OverflowError):
            raise EvaluationError("domain error in magnitude bound") from None
    return abs(_eval_scalar(e, point, params))
