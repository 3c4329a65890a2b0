"""Whitelisted expression grammar for scenario files.

Expressions are parsed with :mod:`ast` and rebuilt as sympy trees; only
arithmetic, numeric literals, declared variables and the functions in
``FUNCTIONS`` are accepted.  ``integrate(f, s, a, b)`` must have a closed form.
"""

from __future__ import annotations

import ast
from typing import Sequence

import sympy as sp

from .errors import ExpressionError
from .geomkit import ScalarField, _modules

FUNCTIONS = {
    "exp": sp.exp,
    "log": sp.log,
    "sqrt": sp.sqrt,
    "sin": sp.sin,
    "cos": sp.cos,
    "tan": sp.tan,
    "sinh": sp.sinh,
    "cosh": sp.cosh,
    "tanh": sp.tanh,
    "sech": sp.sech,
    "erf": sp.erf,
    "abs": sp.Abs,
}
CONSTANTS = {"pi": sp.pi, "E": sp.E}

_BINOPS = {
    ast.Add: lambda a, b: a + b,
    ast.Sub: lambda a, b: a - b,
    ast.Mult: lambda a, b: a * b,
    ast.Div: lambda a, b: a / b,
    ast.Pow: lambda a, b: a**b,
}


def parse(text: str | float | int, variables: Sequence[str] = ("t",)) -> sp.Expr:
    """Parse ``text`` into a sympy expression over real symbols named ``variables``."""
    if isinstance(text, (int, float)):
        return sp.Float(text) if isinstance(text, float) else sp.Integer(text)
    symbols = {name: sp.Symbol(name, real=True) for name in variables}
    try:
        tree = ast.parse(str(text).replace("^", "**"), mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse {text!r}: {exc.msg}") from exc
    return _build(tree.body, symbols, str(text))


def _build(node, symbols, text):
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
        return sp.nsimplify(node.value) if isinstance(node.value, int) else sp.Float(node.value)
    if isinstance(node, ast.Name):
        if node.id in symbols:
            return symbols[node.id]
        if node.id in CONSTANTS:
            return CONSTANTS[node.id]
        raise ExpressionError(f"unknown name {node.id!r} in {text!r}")
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        return _BINOPS[type(node.op)](_build(node.left, symbols, text), _build(node.right, symbols, text))
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        val = _build(node.operand, symbols, text)
        return -val if isinstance(node.op, ast.USub) else val
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and not node.keywords:
        name = node.func.id
        if name == "integrate":
            return _integral(node, symbols, text)
        if name in FUNCTIONS:
            return FUNCTIONS[name](*[_build(a, symbols, text) for a in node.args])
        raise ExpressionError(f"function {name!r} is not allowed in {text!r}")
    raise ExpressionError(f"unsupported syntax {type(node).__name__} in {text!r}")


def _integral(node, symbols, text):
    if len(node.args) != 4 or not isinstance(node.args[1], ast.Name):
        raise ExpressionError("integrate takes (integrand, variable, lower, upper)")
    var = node.args[1].id
    inner = dict(symbols)
    inner[var] = sp.Symbol(var, real=True)
    integrand = _build(node.args[0], inner, text)
    lo = _build(node.args[2], symbols, text)
    hi = _build(node.args[3], symbols, text)
    out = sp.integrate(integrand, (inner[var], lo, hi))
    if out.has(sp.Integral):
        raise ExpressionError(f"no closed form for the integral in {text!r}")
    return out


def field(text, variables: Sequence[str] = ("t",), name: str | None = None) -> ScalarField:
    expr = parse(text, variables)
    coords = [sp.Symbol(v, real=True) for v in variables]
    return ScalarField.from_expr(expr, coords, name or str(text))


def function_of_t(text):
    """Numeric callable ``t -> float``, or the float itself for numeric input."""
    if isinstance(text, (int, float)):
        return float(text)
    expr = parse(text, ("t",))
    if not expr.free_symbols:
        return float(expr)
    f = sp.lambdify(sp.Symbol("t", real=True), expr, modules=_modules())
    return lambda t: float(f(t))

