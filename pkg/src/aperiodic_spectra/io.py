"""Output formatting and small parsers shared by the command line."""

from __future__ import annotations

import ast
import json
import math
import operator
from fractions import Fraction
from typing import Any

import numpy as np

from .errors import ConfigurationError

SIGNIFICANT = 12

_CONSTANTS = {"pi": math.pi, "tau": (1 + math.sqrt(5)) / 2, "e": math.e}
_BINARY = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_UNARY = {ast.UAdd: operator.pos, ast.USub: operator.neg}


def fmt(x: float) -> str:
    """A float at 12 significant digits; infinities as ``"-inf"`` / ``"inf"``."""
    x = float(x)
    if math.isinf(x):
        return "-inf" if x < 0 else "inf"
    if math.isnan(x):
        return "nan"
    return f"{x:.{SIGNIFICANT}g}"


def clean(obj: Any) -> Any:
    """Recursively round floats to 12 significant digits and replace non-finite
    floats by strings, so the result is plain, deterministic JSON."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [clean(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, complex):
        return {"re": clean(obj.real), "im": clean(obj.imag)}
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return float(fmt(x)) if math.isfinite(x) else fmt(x)
    return obj


def dumps(obj: Any) -> str:
    return json.dumps(clean(obj), ensure_ascii=False, indent=1)


def parse_real(text: str | float | int) -> float:
    """Evaluate a numeric expression such as ``"2*pi/3"`` or ``"1/tau"``."""
    if isinstance(text, (int, float)) and not isinstance(text, bool):
        return float(text)

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return node.value
        if isinstance(node, ast.Name) and node.id in _CONSTANTS:
            return _CONSTANTS[node.id]
        if isinstance(node, ast.BinOp) and type(node.op) in _BINARY:
            return _BINARY[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
            return _UNARY[type(node.op)](ev(node.operand))
        raise ValueError
    try:
        return float(ev(ast.parse(str(text).strip(), mode="eval")))
    except (SyntaxError, ValueError, TypeError, ZeroDivisionError, OverflowError):
        raise ConfigurationError(f"cannot evaluate {text!r} as a number") from None


def parse_list(value, item=parse_real) -> list:
    """A comma-separated string or a list; ``"a:b"`` expands to the integers a..b."""
    if value is None:
        return []
    if isinstance(value, (list, tuple)):
        return [item(v) for v in value]
    text = str(value).strip()
    if not text:
        return []
    if ":" in text and "," not in text:
        lo, hi = text.split(":", 1)
        try:
            return [item(v) for v in range(int(lo), int(hi) + 1)]
        except ValueError:
            raise ConfigurationError(f"bad range {text!r}") from None
    return [item(v) for v in text.split(",")]


def parse_mapping(value, item=parse_real) -> dict[str, Any]:
    """``"a=1,b=-1"`` or a JSON object."""
    if value is None:
        return {}
    if isinstance(value, dict):
        return {str(k): item(v) for k, v in value.items()}
    out = {}
    for part in str(value).split(","):
        if "=" not in part:
            raise ConfigurationError(f"expected symbol=value, got {part!r}")
        k, v = part.split("=", 1)
        out[k.strip()] = item(v)
    return out
