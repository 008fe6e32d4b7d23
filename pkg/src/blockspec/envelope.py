"""Closed-form envelopes over the block index ``n``.

An envelope is a small arithmetic expression such as ``"1/n"`` or
``"2*n^(-3/2)*log(n+1)"``.  The grammar is a whitelist over Python
expressions: numeric constants, ``pi``, ``e``, the variables declared for the
envelope (``n`` always, ``q`` for singular-value envelopes, ``tau`` for
spectral clearances), the operators ``+ - * /``, powers (``^`` or ``**``) and
the functions ``log``, ``abs`` and ``sqrt``.

Parsed expressions are held as sympy objects so limits, tail integrals and
monotonicity on ``[n0, oo)`` can be decided symbolically rather than guessed
from samples.
"""

from __future__ import annotations

import ast
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import sympy as sp

N = sp.Symbol("n", positive=True)
Q = sp.Symbol("q", positive=True)
TAU = sp.Symbol("tau")

_SYMBOLS = {"n": N, "q": Q, "tau": TAU}
_FUNCS = {"log": sp.log, "abs": sp.Abs, "sqrt": sp.sqrt}
_CONSTS = {"pi": sp.pi, "e": sp.E}
_BINOPS = {
    ast.Add: lambda a, b: a + b,
    ast.Sub: lambda a, b: a - b,
    ast.Mult: lambda a, b: a * b,
    ast.Div: lambda a, b: a / b,
    ast.Pow: lambda a, b: a**b,
    ast.BitXor: lambda a, b: a**b,
}

# sample points used when sympy cannot settle monotonicity
_SAMPLE_OFFSETS = np.unique(
    np.concatenate([np.arange(0, 64), np.round(np.geomspace(64, 1e9, 60))])
).astype(np.int64)


class EnvelopeSyntaxError(ValueError):
    """Malformed envelope text; ``offset`` is the 0-based column of the fault."""

    def __init__(self, message, text, offset=0):
        self.text = text
        self.offset = offset
        super().__init__(f"{message} at column {offset + 1} in {text!r}")


def exact(value):
    """Convert a Python number to an exact sympy number (decimal reading)."""
    if isinstance(value, complex) or isinstance(value, np.complexfloating):
        return exact(value.real) + sp.I * exact(value.imag)
    if isinstance(value, (int, np.integer)):
        return sp.Integer(int(value))
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"non-finite value {value!r}")
    frac = Fraction(repr(value))
    return sp.Rational(frac.numerator, frac.denominator)


def _convert(node, text, variables):
    if isinstance(node, ast.Expression):
        return _convert(node.body, text, variables)
    if isinstance(node, ast.Constant):
        if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
            raise EnvelopeSyntaxError("unsupported literal", text, node.col_offset)
        return exact(node.value)
    if isinstance(node, ast.Name):
        if node.id in variables:
            return _SYMBOLS[node.id]
        if node.id in _CONSTS:
            return _CONSTS[node.id]
        raise EnvelopeSyntaxError(f"unknown name {node.id!r}", text, node.col_offset)
    if isinstance(node, ast.BinOp):
        op = _BINOPS.get(type(node.op))
        if op is None:
            raise EnvelopeSyntaxError("unsupported operator", text, node.col_offset)
        return op(_convert(node.left, text, variables), _convert(node.right, text, variables))
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        inner = _convert(node.operand, text, variables)
        return -inner if isinstance(node.op, ast.USub) else inner
    if isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCS:
            raise EnvelopeSyntaxError("unsupported function", text, node.col_offset)
        if len(node.args) != 1 or node.keywords:
            raise EnvelopeSyntaxError("functions take one argument", text, node.col_offset)
        return _FUNCS[node.func.id](_convert(node.args[0], text, variables))
    raise EnvelopeSyntaxError("unsupported syntax", text, getattr(node, "col_offset", 0))


@dataclass(frozen=True)
class Envelope:
    """A parsed closed-form expression in ``n`` (and optionally ``q``/``tau``)."""

    text: str
    variables: tuple[str, ...] = ("n",)
    expr: sp.Expr = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.expr is None:
            object.__setattr__(self, "expr", self._parse(self.text, self.variables))
        fn = sp.lambdify([_SYMBOLS[v] for v in self.variables], self.expr, modules=["numpy"])
        object.__setattr__(self, "_fn", fn)

    @staticmethod
    def _parse(text, variables):
        if not isinstance(text, str) or not text.strip():
            raise EnvelopeSyntaxError("empty expression", str(text), 0)
        unknown = set(variables) - set(_SYMBOLS)
        if unknown:
            raise ValueError(f"unknown envelope variables {sorted(unknown)}")
        try:
            tree = ast.parse(text.strip(), mode="eval")
        except SyntaxError as exc:
            # the parser reports no usable column for an unexpected end of input
            at_end = not exc.offset or exc.lineno != 1
            raise EnvelopeSyntaxError("syntax error", text, len(text.strip()) if at_end else exc.offset - 1) from None
        return _convert(tree, text, variables)

    @classmethod
    def coerce(cls, value, variables=("n",)):
        if value is None or isinstance(value, Envelope):
            return value
        if isinstance(value, (int, float)):
            value = repr(value)
        return cls(value, tuple(variables))

    def __call__(self, n, **kw):
        args = [n] + [kw[v] for v in self.variables[1:]]
        with np.errstate(all="ignore"):
            out = self._fn(*args)
        out = complex(out) if np.iscomplexobj(out) else float(out)
        if isinstance(out, complex):
            if abs(out.imag) > 1e-12 * max(1.0, abs(out.real)):
                raise ValueError(f"envelope {self.text!r} is not real at n={n}")
            out = out.real
        return out

    def bind(self, **values):
        """Substitute the non-``n`` variables, returning a sympy expression in ``n``."""
        expr = self.expr
        for name, value in values.items():
            expr = expr.subs(_SYMBOLS[name], exact(value))
        return expr

    def limit(self, **values):
        """Limit as ``n -> oo``; a sympy number, ``oo`` or an ``AccumBounds``."""
        return sp.limit(self.bind(**values), N, sp.oo)

    def limit_value(self, **values):
        """Lower value of the limit as a float (``inf`` for ``oo``); ``None`` if undecided.

        Oscillating envelopes give an ``AccumBounds`` whose lower end is used.
        """
        lim = self.limit(**values)
        if isinstance(lim, sp.AccumBounds):
            lim = lim.min
        if lim == sp.oo:
            return math.inf
        try:
            return float(lim)
        except TypeError:
            return None

    def tail_integral(self, start, power=1, **values):
        """``integral_{start}^{oo} env(x)^power dx`` as a float (``inf`` when divergent).

        Returns ``None`` when sympy cannot evaluate the integral in closed form.
        """
        integrand = self.bind(**values) ** exact(power)
        try:
            result = sp.integrate(integrand, (N, exact(start), sp.oo))
        except Exception:  # sympy raises a zoo of types on hard integrands
            return None
        if result.has(sp.Integral):
            return None
        if result in (sp.oo, sp.zoo) or result.has(sp.oo):
            return math.inf
        try:
            return float(result)
        except TypeError:
            return None

    def is_nonincreasing(self, start, **values):
        """Decide whether the envelope is nonincreasing on ``[start, oo)``."""
        expr = self.bind(**values)
        try:
            verdict = sp.is_decreasing(expr, sp.Interval(start, sp.oo), N)
        except Exception:
            verdict = None
        if verdict is not None:
            return bool(verdict)
        samples = self.samples(start, **values)
        return bool(np.all(np.diff(samples) <= 1e-12 * np.maximum(1.0, np.abs(samples[:-1]))))

    def samples(self, start, **values):
        pts = start + _SAMPLE_OFFSETS
        return np.array([self(int(k), **values) for k in pts])

    def to_json(self):
        return self.text
