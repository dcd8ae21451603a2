"""Lipschitz functions on boxes as expression trees with certified constants.

Every node carries two certified numbers on its declared box ``B``:
``lip`` (upper bound for the Lipschitz constant w.r.t. the Euclidean
metric) and ``sup`` (upper bound for sup_B |f|).  They propagate by

* sum: ``lip_f + lip_g``; scalar multiple: ``|lam| * lip_f``
* product: ``lip_f * sup_g + lip_g * sup_f``
* distance to a point or finite set: 1
* precomposition with an affine map: ``lip_f * ratio``
"""

from __future__ import annotations

import ast
import math
from typing import Mapping, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .affine import AffineMap
from .metric import box_corners, in_box

Box = tuple


class LipError(ValueError):
    pass


def as_box(box) -> Box:
    out = tuple((float(lo), float(hi)) for lo, hi in box)
    for lo, hi in out:
        if hi < lo:
            raise LipError(f"bad interval [{lo}, {hi}]")
    return out


def _same_box(a: Box, b: Box) -> bool:
    return len(a) == len(b) and all(
        math.isclose(x[0], y[0], abs_tol=1e-12) and math.isclose(x[1], y[1], abs_tol=1e-12)
        for x, y in zip(a, b)
    )


class LipFunction:
    """Scalar (real or complex) Lipschitz function on a box."""

    __slots__ = ("op", "args", "box", "lip", "sup", "real")

    def __init__(self, op: str, args: tuple, box: Box, lip: float, sup: float, real: bool = True):
        self.op = op
        self.args = args
        self.box = box
        self.lip = float(lip)
        self.sup = float(sup)
        self.real = real

    # constructors

    @classmethod
    def const(cls, value: complex, box) -> "LipFunction":
        box = as_box(box)
        real = isinstance(value, (int, float, np.floating, np.integer)) or np.imag(value) == 0
        value = float(np.real(value)) if real else complex(value)
        return cls("const", (value,), box, 0.0, abs(value), real)

    @classmethod
    def coord(cls, i: int, box) -> "LipFunction":
        box = as_box(box)
        if not 0 <= i < len(box):
            raise LipError(f"coordinate x{i} outside dimension {len(box)}")
        lo, hi = box[i]
        return cls("coord", (i,), box, 1.0, max(abs(lo), abs(hi)))

    @classmethod
    def dist(cls, p: Sequence[float], box) -> "LipFunction":
        """Euclidean distance to a fixed point ``p``."""
        box = as_box(box)
        p = np.asarray(p, dtype=float).reshape(-1)
        if p.shape[0] != len(box):
            raise LipError("dist point has wrong dimension")
        sup = float(np.max(np.linalg.norm(box_corners(box) - p, axis=1)))
        return cls("dist", (p,), box, 1.0, sup)

    @classmethod
    def dist_set(cls, points: np.ndarray, box) -> "LipFunction":
        """Euclidean distance to a finite point set."""
        box = as_box(box)
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[1] != len(box):
            raise LipError("dist_set points have wrong dimension")
        corners = box_corners(box)
        far = np.sqrt(((corners[:, None, :] - pts[None, :, :]) ** 2).sum(-1)).max(axis=0)
        return cls("dist_set", (pts, cKDTree(pts)), box, 1.0, float(far.min()))

    # algebra

    @property
    def is_const(self) -> bool:
        return self.op == "const"

    @property
    def value(self):
        if not self.is_const:
            raise LipError("not a constant")
        return self.args[0]

    @property
    def dim(self) -> int:
        return len(self.box)

    def _check_box(self, other: "LipFunction") -> None:
        if not _same_box(self.box, other.box):
            raise LipError(f"box mismatch: {self.box} vs {other.box}")

    def __add__(self, other):
        if not isinstance(other, LipFunction):
            other = LipFunction.const(other, self.box)
        self._check_box(other)
        if self.is_const and other.is_const:
            return LipFunction.const(self.value + other.value, self.box)
        if self.is_const and self.value == 0:
            return other
        if other.is_const and other.value == 0:
            return self
        return LipFunction("add", (self, other), self.box, self.lip + other.lip,
                           self.sup + other.sup, self.real and other.real)

    __radd__ = __add__

    def scale(self, lam: complex) -> "LipFunction":
        if self.is_const:
            return LipFunction.const(lam * self.value, self.box)
        if lam == 0:
            return LipFunction.const(0.0, self.box)
        if lam == 1:
            return self
        real = self.real and np.imag(lam) == 0
        if real:
            lam = float(np.real(lam))
        return LipFunction("scale", (lam, self), self.box, abs(lam) * self.lip,
                           abs(lam) * self.sup, real)

    def __neg__(self):
        return self.scale(-1.0)

    def __sub__(self, other):
        if not isinstance(other, LipFunction):
            other = LipFunction.const(other, self.box)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, LipFunction):
            return self.scale(other)
        self._check_box(other)
        if self.is_const:
            return other.scale(self.value)
        if other.is_const:
            return self.scale(other.value)
        lip = self.lip * other.sup + other.lip * self.sup
        if not (self.real and other.real) and (
                (other.op == "conj" and other.args[0] is self)
                or (self.op == "conj" and self.args[0] is other)):
            # |f|^2 evaluated as re^2 + im^2, so it is real and nonnegative exactly
            base = self if other.op == "conj" else other
            return LipFunction("abs2", (base,), self.box, lip, self.sup * other.sup, True)
        return LipFunction("mul", (self, other), self.box, lip, self.sup * other.sup,
                           self.real and other.real)

    def __rmul__(self, other):
        return self * other

    def conj(self) -> "LipFunction":
        if self.real:
            return self
        if self.is_const:
            return LipFunction.const(np.conj(self.value), self.box)
        return LipFunction("conj", (self,), self.box, self.lip, self.sup, False)

    def compose(self, phi: AffineMap, domain_box) -> "LipFunction":
        """``self o phi`` declared on ``domain_box``; phi must map it into ``self.box``."""
        domain_box = as_box(domain_box)
        if phi.d_out != self.dim or phi.d_in != len(domain_box):
            raise LipError("affine map dimensions do not match the boxes")
        if not in_box(phi(box_corners(domain_box)), self.box):
            raise LipError("affine image of the domain box leaves the function's box")
        if self.is_const:
            return LipFunction.const(self.value, domain_box)
        if self.op == "compose":
            inner, f = self.args
            phi = inner.after(phi)
            return LipFunction("compose", (phi, f), domain_box,
                               f.lip * phi.certified_ratio, self.sup, self.real)
        return LipFunction("compose", (phi, self), domain_box,
                           self.lip * phi.certified_ratio, self.sup, self.real)

    # evaluation

    def evaluate(self, X: np.ndarray) -> np.ndarray:
        """Vectorized evaluation on an ``(n, dim)`` array; no box check."""
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, self.dim)
        op, a = self.op, self.args
        if op == "const":
            return np.full(X.shape[0], a[0], dtype=float if self.real else complex)
        if op == "coord":
            return X[:, a[0]].copy()
        if op == "dist":
            return np.linalg.norm(X - a[0], axis=1)
        if op == "dist_set":
            d, _ = a[1].query(X, k=1)
            return np.asarray(d, dtype=float)
        if op == "add":
            return a[0].evaluate(X) + a[1].evaluate(X)
        if op == "scale":
            return a[0] * a[1].evaluate(X)
        if op == "mul":
            return a[0].evaluate(X) * a[1].evaluate(X)
        if op == "conj":
            return np.conj(a[0].evaluate(X))
        if op == "abs2":
            v = a[0].evaluate(X)
            return v.real ** 2 + v.imag ** 2
        if op == "compose":
            return a[1].evaluate(a[0](X))
        raise LipError(f"unknown node {op}")

    def __call__(self, x):
        return eval_lip(self, x)

    def expr(self) -> str:
        op, a = self.op, self.args
        if op == "const":
            return repr(a[0])
        if op == "coord":
            return f"x{a[0]}"
        if op == "dist":
            return "dist(" + ", ".join(repr(float(v)) for v in a[0]) + ")"
        if op == "dist_set":
            return f"dist_set[{len(a[0])} pts]"
        if op == "add":
            return f"({a[0].expr()} + {a[1].expr()})"
        if op == "scale":
            return f"{a[0]!r}*{a[1].expr()}"
        if op == "mul":
            return f"{a[0].expr()}*{a[1].expr()}"
        if op == "conj":
            return f"conj({a[0].expr()})"
        if op == "abs2":
            return f"|{a[0].expr()}|^2"
        return f"{a[1].expr()}o[{a[0].A.tolist()}x+{a[0].b.tolist()}]"

    def __repr__(self) -> str:
        return f"LipFunction({self.expr()}, lip<={self.lip:g}, sup<={self.sup:g})"


def eval_lip(f: LipFunction, x) -> complex | float:
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != f.dim:
        raise LipError(f"point of dimension {x.shape[0]} for a function on dimension {f.dim}")
    if not in_box(x, f.box):
        raise LipError(f"point {x.tolist()} outside the box {f.box}")
    val = f.evaluate(x.reshape(1, -1))[0]
    return float(val) if f.real else complex(val)


# families: one function per vertex

def family_lip(a: Mapping[str, LipFunction]) -> float:
    return max((f.lip for f in a.values()), default=0.0)


def family_sup(a: Mapping[str, LipFunction]) -> float:
    return max((f.sup for f in a.values()), default=0.0)


def family_product(a: Mapping[str, LipFunction], b: Mapping[str, LipFunction]) -> dict:
    return {v: a[v] * b[v] for v in a}


def family_conj(a: Mapping[str, LipFunction]) -> dict:
    return {v: f.conj() for v, f in a.items()}


def family_linear(lam: complex, a: Mapping[str, LipFunction], b: Mapping[str, LipFunction]) -> dict:
    return {v: a[v].scale(lam) + b[v] for v in a}


# expression grammar: numbers, x0 x1 ..., + - *, parentheses, dist(p0, p1, ...)

_BINOPS = (ast.Add, ast.Sub, ast.Mult)


def parse_expr(text: str, box) -> LipFunction:
    """Parse an expression such as ``"x0*x0 + 0.5*dist(0.25)"`` on ``box``."""
    box = as_box(box)
    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError as exc:
        raise LipError(f"cannot parse expression {text!r}: {exc.msg}") from None

    def number(node) -> complex:
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float, complex)) \
                and not isinstance(node.value, bool):
            return node.value
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = number(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        raise LipError(f"expected a number in {text!r}")

    def walk(node) -> LipFunction:
        if isinstance(node, ast.Expression):
            return walk(node.body)
        if isinstance(node, ast.Constant):
            return LipFunction.const(number(node), box)
        if isinstance(node, ast.Name):
            if node.id.startswith("x") and node.id[1:].isdigit():
                return LipFunction.coord(int(node.id[1:]), box)
            if node.id == "x" and len(box) == 1:
                return LipFunction.coord(0, box)
            raise LipError(f"unknown name {node.id!r} in {text!r}")
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.USub):
            return -walk(node.operand)
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.UAdd):
            return walk(node.operand)
        if isinstance(node, ast.BinOp) and isinstance(node.op, _BINOPS):
            lhs, rhs = walk(node.left), walk(node.right)
            if isinstance(node.op, ast.Add):
                return lhs + rhs
            if isinstance(node.op, ast.Sub):
                return lhs - rhs
            return lhs * rhs
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id == "dist":
            if node.keywords:
                raise LipError("dist takes positional coordinates only")
            return LipFunction.dist([float(np.real(number(n))) for n in node.args], box)
        raise LipError(f"unsupported construct in {text!r}")

    return walk(tree)
