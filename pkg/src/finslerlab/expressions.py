"""Closed-form expression trees for custom metric families.

An expression is serialized as nested arrays (JSON-friendly):

    ["add", ["pow", "v1", 4], ["mul", 2, ["sqrt", "x1"]]]

Leaves are numbers or variable names ``x1..xn`` / ``v1..vn``.  Supported
operators: add, sub, mul, div, pow, neg, sqrt, exp, log, sin, cos.  The
tree is evaluated over generic scalars, so the jet engine can
differentiate it without any symbolic machinery.
"""

from __future__ import annotations

from . import jets
from .errors import SpecError

_BINARY = {
    "add": lambda a, b: a + b,
    "sub": lambda a, b: a - b,
    "mul": lambda a, b: a * b,
    "div": lambda a, b: a / b,
    "pow": lambda a, b: a ** b,
}

_UNARY = {
    "neg": lambda a: -a,
    "sqrt": jets.sqrt,
    "exp": jets.exp,
    "log": jets.log,
    "sin": jets.sin,
    "cos": jets.cos,
}


def compile_expression(tree, dimension):
    """Compile a nested-array expression into ``f(x, v) -> scalar``.

    ``x`` and ``v`` are length-``dimension`` sequences of generic scalars.
    """
    names = {}
    for i in range(dimension):
        names[f"x{i + 1}"] = ("x", i)
        names[f"v{i + 1}"] = ("v", i)

    def build(node):
        if isinstance(node, (int, float)):
            val = float(node)
            return lambda x, v: val
        if isinstance(node, str):
            if node not in names:
                raise SpecError(f"unknown variable {node!r}", field="expression")
            kind, i = names[node]
            if kind == "x":
                return lambda x, v, i=i: x[i]
            return lambda x, v, i=i: v[i]
        if not isinstance(node, (list, tuple)) or not node:
            raise SpecError(f"malformed expression node {node!r}", field="expression")
        op = node[0]
        if op in _BINARY:
            if len(node) != 3:
                raise SpecError(f"operator {op!r} needs 2 operands", field="expression")
            fa, fb = build(node[1]), build(node[2])
            fn = _BINARY[op]
            if op == "pow" and isinstance(node[2], (int, float)):
                p = node[2]
                p = int(p) if float(p).is_integer() else float(p)
                return lambda x, v, fa=fa, p=p: fa(x, v) ** p
            return lambda x, v, fa=fa, fb=fb, fn=fn: fn(fa(x, v), fb(x, v))
        if op in _UNARY:
            if len(node) != 2:
                raise SpecError(f"operator {op!r} needs 1 operand", field="expression")
            fa = build(node[1])
            fn = _UNARY[op]
            return lambda x, v, fa=fa, fn=fn: fn(fa(x, v))
        raise SpecError(f"unknown operator {op!r}", field="expression")

    return build(tree)
