"""A small closed algebra of phase-space observables ``F(y, xi)``.

Observables are immutable expression trees. They are evaluated on arrays
whose trailing axis holds the coordinates, together with the potential
(needed by ``H``). Expressions can also be parsed from strings such as
``"sin(2*pi*y) * xi"`` or ``"xi1 * xi2"`` (axes are numbered from 1).
"""
from __future__ import annotations

import ast
import math
import operator
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .errors import DimensionError
from .potential import Potential, eval_u


def _prepare(p: Potential, y, xi):
    y = np.asarray(y, dtype=float)
    xi = np.asarray(xi, dtype=float)
    if p.dim == 1 and (y.ndim == 0 or y.shape[-1] != 1):
        y = y[..., None]
        xi = xi[..., None]
    if y.shape[-1] != p.dim or xi.shape != y.shape:
        raise DimensionError(f"observable arguments {y.shape}, {xi.shape} do not match dimension {p.dim}")
    return y, xi


class Observable:
    """Base class. Subclasses implement :meth:`ev` on arrays with a coordinate axis."""

    invariant = False

    def ev(self, y: np.ndarray, xi: np.ndarray, p: Potential) -> np.ndarray:  # pragma: no cover
        raise NotImplementedError

    def evaluate(self, p: Potential, y, xi):
        y, xi = _prepare(p, y, xi)
        out = np.broadcast_to(self.ev(y, xi, p), y.shape[:-1])
        return float(out) if out.ndim == 0 else np.array(out)

    def at(self, p: Potential, s) -> float:
        return float(self.evaluate(p, s.y, s.xi))

    def axes(self) -> frozenset[int]:
        """Coordinate axes the expression reads (``None`` in the set means all axes)."""
        return frozenset()

    # operator sugar
    def __add__(self, o):
        return BinOp("+", self, wrap(o))

    def __radd__(self, o):
        return BinOp("+", wrap(o), self)

    def __sub__(self, o):
        return BinOp("-", self, wrap(o))

    def __rsub__(self, o):
        return BinOp("-", wrap(o), self)

    def __mul__(self, o):
        return BinOp("*", self, wrap(o))

    def __rmul__(self, o):
        return BinOp("*", wrap(o), self)

    def __truediv__(self, o):
        return BinOp("/", self, wrap(o))

    def __rtruediv__(self, o):
        return BinOp("/", wrap(o), self)

    def __pow__(self, o):
        return BinOp("**", self, wrap(o))

    def __neg__(self):
        return BinOp("*", Const(-1.0), self)


def wrap(v) -> Observable:
    if isinstance(v, Observable):
        return v
    return Const(float(v))


@dataclass(frozen=True, eq=False)
class Const(Observable):
    value: float
    invariant = True

    def ev(self, y, xi, p):
        return np.full(y.shape[:-1], self.value)

    def __str__(self):
        return repr(self.value)


@dataclass(frozen=True, eq=False)
class Coord(Observable):
    """Position (``which='y'``) or momentum (``which='xi'``) component ``axis``."""

    which: str
    axis: int = 0

    def ev(self, y, xi, p):
        src = y if self.which == "y" else xi
        if self.axis >= src.shape[-1]:
            raise DimensionError(f"axis {self.axis} out of range for dimension {src.shape[-1]}")
        return src[..., self.axis]

    def axes(self):
        return frozenset({self.axis})

    def __str__(self):
        return f"{self.which}{self.axis + 1}"


@dataclass(frozen=True, eq=False)
class Energy(Observable):
    """Total energy ``H = |xi|^2/2 + u(y)``; constant along the flow."""

    invariant = True

    def ev(self, y, xi, p):
        u = eval_u(p, y) if p.dim > 1 else eval_u(p, y[..., 0])
        return 0.5 * np.sum(xi * xi, axis=-1) + u

    def axes(self):
        return frozenset({None})

    def __str__(self):
        return "H"


_BINOPS: dict[str, Callable] = {
    "+": operator.add, "-": operator.sub, "*": operator.mul,
    "/": operator.truediv, "**": operator.pow,
}


@dataclass(frozen=True, eq=False)
class BinOp(Observable):
    op: str
    left: Observable
    right: Observable

    @property
    def invariant(self):
        return self.left.invariant and self.right.invariant

    def ev(self, y, xi, p):
        return _BINOPS[self.op](self.left.ev(y, xi, p), self.right.ev(y, xi, p))

    def axes(self):
        return self.left.axes() | self.right.axes()

    def __str__(self):
        return f"({self.left} {self.op} {self.right})"


_MAPS: dict[str, Callable] = {
    "sin": np.sin, "cos": np.cos, "exp": np.exp, "tanh": np.tanh, "abs": np.abs,
    "sqrt": np.sqrt, "sign": np.sign,
}


@dataclass(frozen=True, eq=False)
class Map(Observable):
    name: str
    arg: Observable

    @property
    def invariant(self):
        return self.arg.invariant

    def ev(self, y, xi, p):
        return _MAPS[self.name](self.arg.ev(y, xi, p))

    def axes(self):
        return self.arg.axes()

    def __str__(self):
        return f"{self.name}({self.arg})"


@dataclass(frozen=True, eq=False)
class Clamp(Observable):
    arg: Observable
    lo: float
    hi: float

    @property
    def invariant(self):
        return self.arg.invariant

    def ev(self, y, xi, p):
        return np.clip(self.arg.ev(y, xi, p), self.lo, self.hi)

    def axes(self):
        return self.arg.axes()

    def __str__(self):
        return f"clamp({self.arg}, {self.lo!r}, {self.hi!r})"


@dataclass(frozen=True, eq=False)
class Band(Observable):
    """Indicator ``1{lo < H < hi}``."""

    lo: float
    hi: float
    invariant = True

    def ev(self, y, xi, p):
        H = Energy().ev(y, xi, p)
        return ((H > self.lo) & (H < self.hi)).astype(float)

    def axes(self):
        return frozenset({None})

    def __str__(self):
        return f"band({self.lo!r}, {self.hi!r})"


@dataclass(frozen=True, eq=False)
class Table(Observable):
    """Function of ``(y_axis, xi_axis)`` tabulated on a grid, 1-periodic in ``y``.

    ``values[i, j]`` is the value at ``(y_grid[i], xi_grid[j])``; ``y_grid``
    must cover ``[0, 1]`` including both ends. Momenta outside the grid are
    clamped to its edge. Interpolation is bilinear.
    """

    y_grid: np.ndarray
    xi_grid: np.ndarray
    values: np.ndarray
    axis: int = 0
    name: str = "table"

    def __post_init__(self):
        yg = np.asarray(self.y_grid, dtype=float)
        xg = np.asarray(self.xi_grid, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if v.shape != (yg.size, xg.size):
            raise ValueError(f"table shape {v.shape} != ({yg.size}, {xg.size})")
        if abs(yg[0]) > 1e-12 or abs(yg[-1] - 1.0) > 1e-12:
            raise ValueError("table position grid must span [0, 1]")
        object.__setattr__(self, "_interp",
                           RegularGridInterpolator((yg, xg), v, method="linear"))
        object.__setattr__(self, "_xi_range", (xg[0], xg[-1]))

    @classmethod
    def from_function(cls, fn, n_y: int, xi_grid, axis: int = 0, name: str = "table") -> "Table":
        yg = np.linspace(0.0, 1.0, n_y)
        xg = np.asarray(xi_grid, dtype=float)
        Y, X = np.meshgrid(yg, xg, indexing="ij")
        return cls(yg, xg, fn(Y, X), axis, name)

    def ev(self, y, xi, p):
        yy = np.mod(y[..., self.axis], 1.0)
        xx = np.clip(xi[..., self.axis], *self._xi_range)
        pts = np.stack([yy.ravel(), xx.ravel()], axis=-1)
        return self._interp(pts).reshape(yy.shape)

    def axes(self):
        return frozenset({self.axis})

    def __str__(self):
        return self.name


class Shift(Observable):
    """``F`` evaluated with its axis-0 arguments taken from axis ``axis``.

    Lets a 1-D observable act on one axis of an N-D state.
    """

    def __init__(self, inner: Observable, axis: int):
        self.inner = inner
        self.axis = axis

    @property
    def invariant(self):
        return False

    def ev(self, y, xi, p):
        sub = p.axis(self.axis) if p.dim > 1 else p
        return self.inner.ev(y[..., self.axis:self.axis + 1], xi[..., self.axis:self.axis + 1], sub)

    def axes(self):
        return frozenset({self.axis})

    def __str__(self):
        return f"axis{self.axis + 1}[{self.inner}]"


# ------------------------------------------------------------ constructors

y = Coord("y", 0)
xi = Coord("xi", 0)
H = Energy()


def coord_y(i: int = 0) -> Coord:
    return Coord("y", i)


def coord_xi(i: int = 0) -> Coord:
    return Coord("xi", i)


def sin(o):
    return Map("sin", wrap(o))


def cos(o):
    return Map("cos", wrap(o))


def exp(o):
    return Map("exp", wrap(o))


def tanh(o):
    return Map("tanh", wrap(o))


def absolute(o):
    return Map("abs", wrap(o))


def clamp(o, lo: float, hi: float):
    return Clamp(wrap(o), float(lo), float(hi))


def band(lo: float, hi: float):
    return Band(float(lo), float(hi))


def on_axis(F: Observable, axis: int) -> Observable:
    return Shift(F, axis)


# ------------------------------------------------------------------ parser

class ParseError(ValueError):
    pass


_NAMES = {"pi": math.pi, "e": math.e}


def parse(text: str) -> Observable:
    """Parse an expression over ``y, xi, y1.., xi1.., H, pi`` with
    ``+ - * / **``, ``sin cos exp tanh abs sqrt sign``, ``clamp(F, lo, hi)``
    and ``band(lo, hi)``."""
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        raise ParseError(f"cannot parse observable {text!r}: {exc.msg}") from None
    return _build(tree.body, text)


def _number(node, text) -> float:
    o = _build(node, text)
    if not isinstance(o, Const):
        raise ParseError(f"expected a number in {text!r}")
    return o.value


def _build(node, text):
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        return Const(float(node.value))
    if isinstance(node, ast.Name):
        n = node.id
        if n in _NAMES:
            return Const(_NAMES[n])
        if n == "H":
            return Energy()
        for prefix in ("xi", "y"):
            if n.startswith(prefix):
                rest = n[len(prefix):]
                if rest == "":
                    return Coord(prefix, 0)
                if rest.isdigit() and int(rest) >= 1:
                    return Coord(prefix, int(rest) - 1)
        raise ParseError(f"unknown name {n!r} in {text!r}")
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        inner = _build(node.operand, text)
        if isinstance(node.op, ast.UAdd):
            return inner
        if isinstance(inner, Const):
            return Const(-inner.value)
        return -inner
    if isinstance(node, ast.BinOp):
        ops = {ast.Add: "+", ast.Sub: "-", ast.Mult: "*", ast.Div: "/", ast.Pow: "**"}
        op = ops.get(type(node.op))
        if op is None:
            raise ParseError(f"operator {type(node.op).__name__} not allowed in {text!r}")
        a, b = _build(node.left, text), _build(node.right, text)
        if isinstance(a, Const) and isinstance(b, Const):
            return Const(float(_BINOPS[op](a.value, b.value)))
        return BinOp(op, a, b)
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and not node.keywords:
        fn = node.func.id
        if fn in _MAPS and len(node.args) == 1:
            return Map(fn, _build(node.args[0], text))
        if fn == "clamp" and len(node.args) == 3:
            return clamp(_build(node.args[0], text), _number(node.args[1], text), _number(node.args[2], text))
        if fn == "band" and len(node.args) == 2:
            return band(_number(node.args[0], text), _number(node.args[1], text))
        raise ParseError(f"unknown function or wrong arity: {fn} in {text!r}")
    raise ParseError(f"unsupported syntax in {text!r}")
