"""Covariance kernels on [0, 1]^2, including user expressions from config files.

Grammar for CUSTOM kernels (parsed with :mod:`ast`, nothing is ``eval``'d)::

    expr   := expr ('+' | '-' | '*' | '/') expr | expr '**' expr | '-' expr
            | 'min(' expr ',' expr ')' | 'max(' expr ',' expr ')'
            | 'pow(' expr ',' expr ')' | 'exp(' expr ')' | 'abs(' expr ')'
            | 's' | 't' | 'pi' | number | '(' expr ')'

Example: ``"min(s, t) - s*t"`` is the Brownian bridge covariance.
"""
import ast
import operator
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import KERNEL_NOT_SYMMETRIC, KERNEL_SYNTAX, SpecPertError

BROWNIAN_MOTION = "BROWNIAN_MOTION"
BROWNIAN_BRIDGE = "BROWNIAN_BRIDGE"
CUSTOM = "CUSTOM"

_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: np.power,
}
_CALLS = {
    "min": (2, np.minimum),
    "max": (2, np.maximum),
    "pow": (2, np.power),
    "exp": (1, np.exp),
    "abs": (1, np.abs),
}
_NAMES = {"pi": np.pi}


def _compile(node):
    if isinstance(node, ast.Expression):
        return _compile(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) \
            and not isinstance(node.value, bool):
        value = float(node.value)
        return lambda s, t: value
    if isinstance(node, ast.Name):
        if node.id == "s":
            return lambda s, t: s
        if node.id == "t":
            return lambda s, t: t
        if node.id in _NAMES:
            value = _NAMES[node.id]
            return lambda s, t: value
        raise SpecPertError(KERNEL_SYNTAX, f"unknown name {node.id!r}")
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        inner = _compile(node.operand)
        if isinstance(node.op, ast.USub):
            return lambda s, t: -inner(s, t)
        return inner
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        op = _BINOPS[type(node.op)]
        left, right = _compile(node.left), _compile(node.right)
        return lambda s, t: op(left(s, t), right(s, t))
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and not node.keywords:
        name = node.func.id
        if name not in _CALLS:
            raise SpecPertError(KERNEL_SYNTAX, f"unknown function {name!r}")
        arity, fn = _CALLS[name]
        if len(node.args) != arity:
            raise SpecPertError(KERNEL_SYNTAX, f"{name} takes {arity} argument(s)")
        args = [_compile(a) for a in node.args]
        return lambda s, t: fn(*(a(s, t) for a in args))
    raise SpecPertError(KERNEL_SYNTAX, f"unsupported syntax: {ast.dump(node)[:60]}")


def parse_kernel_expression(text):
    """Compile ``text`` into a vectorised ``f(s, t)``."""
    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError as exc:
        raise SpecPertError(KERNEL_SYNTAX, f"cannot parse {text!r}: {exc.msg}") from None
    return _compile(tree)


@dataclass(frozen=True)
class KernelSpec:
    """Symmetric kernel ``G(s, t)`` on [0, 1]^2 evaluated with numpy broadcasting."""

    name: str
    evaluator: Callable = field(compare=False)
    expression: Optional[str] = None

    def __post_init__(self):
        grid = np.linspace(0.0, 1.0, 17)
        s, t = grid[:, None], grid[None, :]
        g = np.broadcast_to(self.evaluator(s, t), (17, 17))
        gt = np.broadcast_to(self.evaluator(t, s), (17, 17))
        if not np.all(np.isfinite(g)) or np.max(np.abs(g - gt)) > 1e-14:
            raise SpecPertError(KERNEL_NOT_SYMMETRIC, f"kernel {self.name} is not symmetric on the test grid")

    def matrix(self, x):
        """``G(x_i, x_j)`` as a dense array."""
        x = np.asarray(x, dtype=np.float64)
        g = self.evaluator(x[:, None], x[None, :])
        return np.array(np.broadcast_to(g, (x.size, x.size)), dtype=np.float64)

    def to_config(self):
        if self.name == CUSTOM:
            return {"name": CUSTOM, "expression": self.expression}
        return {"name": self.name}


def brownian_motion():
    return KernelSpec(BROWNIAN_MOTION, lambda s, t: np.minimum(s, t), "min(s, t)")


def brownian_bridge():
    return KernelSpec(BROWNIAN_BRIDGE, lambda s, t: np.minimum(s, t) - s * t, "min(s, t) - s*t")


def custom(expression):
    return KernelSpec(CUSTOM, parse_kernel_expression(expression), expression)


def kernel_from_config(cfg):
    """Build a kernel from ``{"name": ..., "expression": ...}`` or a bare name."""
    if isinstance(cfg, str):
        cfg = {"name": cfg}
    name = str(cfg.get("name", "")).upper()
    if name == BROWNIAN_MOTION:
        return brownian_motion()
    if name == BROWNIAN_BRIDGE:
        return brownian_bridge()
    if name == CUSTOM:
        if "expression" not in cfg:
            raise SpecPertError(KERNEL_SYNTAX, "CUSTOM kernel needs an 'expression'")
        return custom(cfg["expression"])
    raise SpecPertError(KERNEL_SYNTAX, f"unknown kernel {cfg.get('name')!r}")


def parse_constant(value):
    """A number, or a constant expression in the kernel grammar such as ``"-pi/2"``."""
    if isinstance(value, bool):
        raise SpecPertError(KERNEL_SYNTAX, "booleans are not numbers")
    if isinstance(value, (int, float)):
        return float(value)
    if not isinstance(value, str):
        raise SpecPertError(KERNEL_SYNTAX, f"expected a number or expression, got {value!r}")
    try:
        with np.errstate(all="ignore"):
            out = np.asarray(parse_kernel_expression(value)(np.nan, np.nan), dtype=np.float64)
    except (ArithmeticError, ValueError) as exc:
        raise SpecPertError(KERNEL_SYNTAX, f"{value!r} cannot be evaluated: {exc}") from None
    if out.ndim != 0 or not np.isfinite(out):
        raise SpecPertError(KERNEL_SYNTAX, f"{value!r} is not a finite constant expression")
    return float(out)
