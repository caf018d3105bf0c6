"""Infix printer.

The printer and the parser are written as a pair: for every tree e built
from grammar-expressible nodes, parse(to_string(e)) is structurally equal
to e.  That forces a few conventions:

* sums print negative-leading terms with " - " and the parser undoes the
  sign with the same `negate` helper;
* exponents and fragile bases are parenthesized;
* a Power(base, -1) factor prints as a division.
"""

from __future__ import annotations

from fractions import Fraction

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
    is_negative_leading,
    negate,
)

_ATOM, _POW, _UNARY, _PROD, _SUM = 50, 30, 25, 20, 10


def _const_str(value) -> str:
    if isinstance(value, float):
        return repr(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def _precedence(e: Expr) -> int:
    if isinstance(e, Sum):
        return _SUM
    if isinstance(e, Product):
        return _PROD
    if isinstance(e, Neg):
        return _UNARY
    if isinstance(e, Power):
        return _POW
    if isinstance(e, Const):
        if isinstance(e.value, Fraction) and e.value.denominator != 1:
            return _SUM  # prints as a quotient, fragile everywhere but top level
        if e.value < 0:
            return _UNARY
        return _ATOM
    return _ATOM


def _wrap(e: Expr, minimum: int) -> str:
    s = to_string(e)
    if _precedence(e) < minimum:
        return f"({s})"
    return s


def to_string(e: Expr) -> str:
    if isinstance(e, Const):
        return _const_str(e.value)
    if isinstance(e, Var):
        return e.var.name
    if isinstance(e, Param):
        return e.name
    if isinstance(e, Apply):
        return f"{e.fn}({to_string(e.arg)})"
    if isinstance(e, Neg):
        return "-" + _wrap(e.arg, _UNARY)
    if isinstance(e, Power):
        base = _wrap(e.base, _ATOM)
        exponent = _wrap(e.exponent, _ATOM)
        return f"{base}^{exponent}"
    if isinstance(e, Product):
        parts = []
        for i, factor in enumerate(e.factors):
            if (
                i > 0
                and isinstance(factor, Power)
                and isinstance(factor.exponent, Const)
                and factor.exponent.value == -1
                and not isinstance(factor.base, Const)  # 'c/d' would re-fold
            ):
                parts.append("/" + _wrap(factor.base, _ATOM))
            else:
                if i > 0:
                    parts.append("*" + _wrap(factor, _PROD + 1))
                else:
                    parts.append(_wrap(factor, _PROD + 1))
        return "".join(parts)
    if isinstance(e, Sum):
        out = [_wrap(e.terms[0], _SUM + 1)]
        for term in e.terms[1:]:
            flipped = negate(term)
            if is_negative_leading(term) and negate(flipped) == term:
                out.append(" - " + _wrap(flipped, _SUM + 1))
            else:
                out.append(" + " + _wrap(term, _SUM + 1))
        return "".join(out)
    if isinstance(e, AntiDeriv):
        return f"antideriv({to_string(e.integrand)}, {e.var.name}, {e.base!r})"
    raise TypeError(f"cannot print {e!r}")
