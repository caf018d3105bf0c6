"""Symbolic expression engine: AST, parsing, calculus, simplification,
numeric evaluation and probabilistic zero testing."""

from .calculus import DifferentiationError, differentiate, substitute, subst_many
from .evaluate import EvaluationError, eval_array, evaluate, expint_ei
from .nodes import (
    BUILTINS,
    AntiDeriv,
    Apply,
    Const,
    Context,
    Expr,
    HALF,
    MINUS_ONE,
    Neg,
    ONE,
    Param,
    Power,
    Product,
    Sum,
    TIME,
    Var,
    VarId,
    VarKind,
    ZERO,
    add,
    const,
    depends_on_wiener,
    div,
    free_params,
    free_vars,
    mul,
    negate,
    state,
    wiener,
)
from .parser import ExprSyntaxError, parse
from .printing import to_string
from .simplify import is_structural_zero, simplify
from .zerotest import (
    DEFAULT_POINTS,
    DEFAULT_TOL,
    SamplingBox,
    ZeroTestConfig,
    ZeroVerdict,
    expressions_equal,
    is_identically_zero,
)

__all__ = [
    "AntiDeriv",
    "Apply",
    "BUILTINS",
    "Const",
    "Context",
    "DEFAULT_POINTS",
    "DEFAULT_TOL",
    "DifferentiationError",
    "EvaluationError",
    "Expr",
    "ExprSyntaxError",
    "HALF",
    "MINUS_ONE",
    "Neg",
    "ONE",
    "Param",
    "Power",
    "Product",
    "SamplingBox",
    "Sum",
    "TIME",
    "Var",
    "VarId",
    "VarKind",
    "ZERO",
    "ZeroTestConfig",
    "ZeroVerdict",
    "add",
    "const",
    "depends_on_wiener",
    "differentiate",
    "div",
    "eval_array",
    "evaluate",
    "expint_ei",
    "expressions_equal",
    "free_params",
    "free_vars",
    "is_identically_zero",
    "is_structural_zero",
    "mul",
    "negate",
    "parse",
    "simplify",
    "subst_many",
    "substitute",
    "to_string",
    "wiener",
    "state",
]
