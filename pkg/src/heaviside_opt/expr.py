"""Compiler from the arithmetic expression grammar to :class:`FunctionHandle`.

Grammar (Python-style syntax, parsed with :mod:`ast`)::

    expr   := expr ('+' | '-') term | term
    term   := term ('*' | '/') factor | factor
    factor := ('-' | '+') factor | power
    power  := atom ('**' | '^') factor
    atom   := NUMBER | 'x' INDEX | '(' expr ')'
            | ('min' | 'max') '(' expr (',' expr)+ ')'
            | 'abs' '(' expr ')' | 'pow' '(' expr ',' NUMBER ')'
            | ('exp' | 'log' | 'sqrt') '(' expr ')'

Variables are ``x1`` ... ``xn``. Subexpressions free of min/max/abs stay symbolic
(sympy) and become one smooth piece, so gradients are exact. Products and
quotients involving a nonsmooth factor must have a constant on the other side.
"""

from __future__ import annotations

import ast
import re
from typing import Union

import numpy as np
import sympy as sp

from .functions import FunctionHandle, SmoothPiece, absolute, constant, maximum, minimum

_VAR = re.compile(r"^x([1-9][0-9]*)$")
_SMOOTH_FUNCS = {"exp": sp.exp, "log": sp.log, "sqrt": sp.sqrt}


class ExpressionError(ValueError):
    def __init__(self, message: str, text: str = "", col: int = -1):
        where = f" at column {col + 1}" if col >= 0 else ""
        super().__init__(f"{message}{where}: {text!r}" if text else message)
        self.col = col


Node = Union[sp.Expr, FunctionHandle]


class _Compiler:
    def __init__(self, n: int, text: str):
        self.n = n
        self.text = text
        self.symbols = sp.symbols(f"x1:{n + 1}") if n > 0 else ()

    def fail(self, msg, node=None):
        raise ExpressionError(msg, self.text, getattr(node, "col_offset", -1))

    # -- smooth materialization -----------------------------------------------------
    def piece(self, e: sp.Expr) -> FunctionHandle:
        e = sp.sympify(e)
        syms = self.symbols
        if e.is_number:
            return constant(float(e), self.n)
        poly = None
        try:
            poly = sp.Poly(e, *syms)
        except sp.PolynomialError:
            poly = None
        if poly is not None and poly.total_degree() <= 1:
            a = np.array([float(poly.coeff_monomial(s)) for s in syms])
            b = float(poly.coeff_monomial(1))
            return FunctionHandle(self.n, (SmoothPiece.make_affine(a, b, label=str(e)),), name=str(e))
        grad = [sp.diff(e, s) for s in syms]
        convex = False
        if poly is not None and poly.total_degree() == 2:
            H = np.array(sp.hessian(e, syms), dtype=float)
            convex = bool(np.all(np.linalg.eigvalsh(0.5 * (H + H.T)) >= -1e-12))
        f_val = sp.lambdify(syms, e, "numpy")
        f_grad = sp.lambdify(syms, grad, "numpy")

        def value(X, f=f_val, n=self.n):
            X = np.asarray(X, dtype=float)
            return np.broadcast_to(np.asarray(f(*[X[..., i] for i in range(n)]), dtype=float), X.shape[:-1])

        def gradient(x, g=f_grad):
            return np.array([float(v) for v in g(*np.asarray(x, dtype=float))])

        return FunctionHandle(self.n, (SmoothPiece(self.n, value, gradient, convex=convex, label=str(e)),),
                              name=str(e))

    def handle(self, v: Node) -> FunctionHandle:
        return v if isinstance(v, FunctionHandle) else self.piece(v)

    @staticmethod
    def number(v: Node):
        if isinstance(v, FunctionHandle):
            return v.constant_value() if v.is_constant else None
        v = sp.sympify(v)
        return float(v) if v.is_number else None

    # -- tree walk --------------------------------------------------------------
    def visit(self, node) -> Node:
        if isinstance(node, ast.Expression):
            return self.visit(node.body)
        if isinstance(node, ast.Constant):
            if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
                self.fail("only numeric constants are allowed", node)
            return sp.Float(node.value) if isinstance(node.value, float) else sp.Integer(node.value)
        if isinstance(node, ast.Name):
            m = _VAR.match(node.id)
            if not m:
                self.fail(f"unknown name {node.id!r}", node)
            i = int(m.group(1))
            if i > self.n:
                self.fail(f"variable {node.id} exceeds dimension {self.n}", node)
            return self.symbols[i - 1]
        if isinstance(node, ast.UnaryOp):
            v = self.visit(node.operand)
            if isinstance(node.op, ast.USub):
                return -v
            if isinstance(node.op, ast.UAdd):
                return v
            self.fail("unsupported unary operator", node)
        if isinstance(node, ast.BinOp):
            return self.binop(node.op, self.visit(node.left), self.visit(node.right), node)
        if isinstance(node, ast.Call):
            return self.call(node)
        self.fail(f"unsupported syntax {type(node).__name__}", node)

    def binop(self, op, a: Node, b: Node, node) -> Node:
        both_smooth = not isinstance(a, FunctionHandle) and not isinstance(b, FunctionHandle)
        if isinstance(op, (ast.Pow, ast.BitXor)):
            p = self.number(b)
            if p is None:
                self.fail("exponent must be a constant", node)
            if both_smooth:
                return a ** sp.nsimplify(p)
            if p == 1:
                return a
            self.fail("powers of nonsmooth expressions are not representable", node)
        if both_smooth:
            if isinstance(op, ast.Add):
                return a + b
            if isinstance(op, ast.Sub):
                return a - b
            if isinstance(op, ast.Mult):
                return a * b
            if isinstance(op, ast.Div):
                return a / b
        ha, hb = self.handle(a), self.handle(b)
        if isinstance(op, ast.Add):
            return ha + hb
        if isinstance(op, ast.Sub):
            return ha - hb
        if isinstance(op, ast.Mult):
            try:
                return ha * hb
            except TypeError as exc:
                self.fail(str(exc), node)
        if isinstance(op, ast.Div):
            c = self.number(b)
            if c is None:
                self.fail("division of a nonsmooth expression needs a constant divisor", node)
            return ha * (1.0 / c)
        self.fail("unsupported binary operator", node)

    def call(self, node) -> Node:
        if not isinstance(node.func, ast.Name) or node.keywords:
            self.fail("unsupported call", node)
        name = node.func.id
        args = [self.visit(a) for a in node.args]
        if name in ("min", "max"):
            if len(args) < 2:
                self.fail(f"{name} needs at least two arguments", node)
            nums = [self.number(a) for a in args]
            if all(v is not None for v in nums):
                return sp.Float(min(nums) if name == "min" else max(nums))
            hs = [self.handle(a) for a in args]
            return maximum(*hs) if name == "max" else minimum(*hs)
        if name == "abs":
            if len(args) != 1:
                self.fail("abs takes one argument", node)
            v = self.number(args[0])
            return sp.Float(abs(v)) if v is not None else absolute(self.handle(args[0]))
        if name == "pow":
            if len(args) != 2:
                self.fail("pow takes two arguments", node)
            return self.binop(ast.Pow(), args[0], args[1], node)
        if name in _SMOOTH_FUNCS:
            if len(args) != 1 or isinstance(args[0], FunctionHandle):
                self.fail(f"{name} applies only to smooth arguments", node)
            return _SMOOTH_FUNCS[name](args[0])
        self.fail(f"unknown function {name!r}", node)


def compile_expression(text: str, n: int) -> FunctionHandle:
    """Parses ``text`` into a structured handle over ``n`` variables."""
    src = str(text).strip()
    if not src:
        raise ExpressionError("empty expression")
    try:
        tree = ast.parse(src.replace("^", "**"), mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"syntax error ({exc.msg})", src, (exc.offset or 1) - 1) from None
    comp = _Compiler(n, src)
    return comp.handle(comp.visit(tree)).with_name(src)
