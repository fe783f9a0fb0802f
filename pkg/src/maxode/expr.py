"""Scalar expression language for right-hand sides and max-functionals.

Grammar (EBNF)::

    expr    = term , { ("+" | "-") , term } ;
    term    = unary , { ("*" | "/") , unary } ;
    unary   = "-" , unary | power ;
    power   = atom , [ "^" , unary ] ;             (* right associative *)
    atom    = number | "t" | state | maxvar
            | func , "(" , expr , ")" | "(" , expr , ")" ;
    state   = "x" , index ;                        (* x1 .. xm *)
    maxvar  = "m" , index ;                        (* m1 .. mk *)
    index   = nonzero digit , { digit } ;
    func    = "exp" | "log" | "abs" | "sqrt" | "sin" | "cos" ;
    number  = digits , [ "." , [ digits ] ] , [ exponent ]
            | "." , digits , [ exponent ] ;

``-x1^2`` therefore parses as ``-(x1^2)`` and ``2^-1`` as ``2^(-1)``.

Evaluation accepts plain floats or numpy arrays (broadcast elementwise);
domain violations raise :class:`EvalDomainError` instead of yielding nan.
"""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import EvalDomainError, ParseError, ProblemError

__all__ = [
    "Expr", "Constant", "TimeVar", "StateVar", "MaxVar", "Neg",
    "Add", "Sub", "Mul", "Div", "Pow", "Func", "FUNCTIONS",
    "parse", "to_string", "evaluate", "variables",
    "Box", "ProblemSpec", "estimate_bound", "estimate_lipschitz",
    "load_problem", "problem_from_dict",
    "DEFAULT_SAMPLES", "MAX_EVALUATIONS",
]

DEFAULT_SAMPLES = 33
MAX_EVALUATIONS = 1_000_000


# --------------------------------------------------------------------------
# AST
# --------------------------------------------------------------------------

class Expr:
    """Base class of expression nodes. Nodes are immutable and hashable."""

    __slots__ = ()

    def __str__(self):
        return to_string(self)


@dataclass(frozen=True)
class Constant(Expr):
    value: float

    def _eval(self, t, x, m):
        return self.value


@dataclass(frozen=True)
class TimeVar(Expr):
    def _eval(self, t, x, m):
        return t


@dataclass(frozen=True)
class StateVar(Expr):
    index: int  # 1-based

    def _eval(self, t, x, m):
        return x[self.index - 1]


@dataclass(frozen=True)
class MaxVar(Expr):
    index: int  # 1-based

    def _eval(self, t, x, m):
        return m[self.index - 1]


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr

    def _eval(self, t, x, m):
        return -self.arg._eval(t, x, m)


@dataclass(frozen=True)
class _Binary(Expr):
    left: Expr
    right: Expr
    symbol = "?"


@dataclass(frozen=True)
class Add(_Binary):
    symbol = "+"

    def _eval(self, t, x, m):
        return self.left._eval(t, x, m) + self.right._eval(t, x, m)


@dataclass(frozen=True)
class Sub(_Binary):
    symbol = "-"

    def _eval(self, t, x, m):
        return self.left._eval(t, x, m) - self.right._eval(t, x, m)


@dataclass(frozen=True)
class Mul(_Binary):
    symbol = "*"

    def _eval(self, t, x, m):
        return self.left._eval(t, x, m) * self.right._eval(t, x, m)


@dataclass(frozen=True)
class Div(_Binary):
    symbol = "/"

    def _eval(self, t, x, m):
        num = self.left._eval(t, x, m)
        den = self.right._eval(t, x, m)
        if np.any(np.asarray(den) == 0):
            raise EvalDomainError(f"division by zero in {to_string(self)}")
        return num / den


@dataclass(frozen=True)
class Pow(_Binary):
    symbol = "^"

    def _eval(self, t, x, m):
        base = self.left._eval(t, x, m)
        ex = self.right._eval(t, x, m)
        b, e = np.asarray(base, dtype=float), np.asarray(ex, dtype=float)
        if np.any((b == 0) & (e < 0)):
            raise EvalDomainError(f"0 raised to a negative power in {to_string(self)}")
        if np.any((b < 0) & (e != np.round(e))):
            raise EvalDomainError(
                f"negative base with non-integer exponent in {to_string(self)}")
        out = np.power(b, e)
        return out if out.ndim else float(out)


def _checked_log(v):
    if np.any(np.asarray(v) <= 0):
        raise EvalDomainError("log of a nonpositive value")
    return np.log(v)


def _checked_sqrt(v):
    if np.any(np.asarray(v) < 0):
        raise EvalDomainError("sqrt of a negative value")
    return np.sqrt(v)


FUNCTIONS = {
    "exp": np.exp,
    "log": _checked_log,
    "abs": np.abs,
    "sqrt": _checked_sqrt,
    "sin": np.sin,
    "cos": np.cos,
}


@dataclass(frozen=True)
class Func(Expr):
    name: str
    arg: Expr

    def __post_init__(self):
        if self.name not in FUNCTIONS:
            raise ValueError(f"unknown function {self.name!r}")

    def _eval(self, t, x, m):
        out = FUNCTIONS[self.name](self.arg._eval(t, x, m))
        return out if np.ndim(out) else float(out)


# --------------------------------------------------------------------------
# Parsing
# --------------------------------------------------------------------------

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),])
""", re.VERBOSE)

_INDEXED_RE = re.compile(r"([xm])(\d+)$")


def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        mo = _TOKEN_RE.match(text, pos)
        if mo is None:
            raise ParseError(f"unexpected character {text[pos]!r}", pos, text)
        kind = mo.lastgroup
        if kind != "ws":
            tokens.append((kind, mo.group(), pos))
        pos = mo.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def next(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message, tok=None):
        tok = tok or self.peek()
        return ParseError(message, tok[2], self.text)

    def expect(self, value):
        tok = self.next()
        if tok[1] != value:
            found = "end of input" if tok[0] == "end" else repr(tok[1])
            raise self.error(f"expected {value!r}, found {found}", tok)
        return tok

    def parse(self):
        if self.peek()[0] == "end":
            raise self.error("empty expression")
        node = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise self.error(f"unexpected {tok[1]!r}")
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.next()[1]
            rhs = self.term()
            node = Add(node, rhs) if op == "+" else Sub(node, rhs)
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/"):
            op = self.next()[1]
            rhs = self.unary()
            node = Mul(node, rhs) if op == "*" else Div(node, rhs)
        return node

    def unary(self):
        if self.peek()[1] == "-":
            self.next()
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[1] == "^":
            self.next()
            return Pow(base, self.unary())
        return base

    def atom(self):
        tok = self.next()
        kind, value, pos = tok
        if kind == "number":
            return Constant(float(value))
        if value == "(":
            node = self.expr()
            self.expect(")")
            return node
        if kind == "ident":
            if value in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Func(value, arg)
            if value == "t":
                return TimeVar()
            mo = _INDEXED_RE.match(value)
            if mo:
                digits = mo.group(2)
                if digits[0] == "0":
                    raise self.error(f"malformed index in {value!r} "
                                     "(indices start at 1, no leading zeros)", tok)
                idx = int(digits)
                return StateVar(idx) if mo.group(1) == "x" else MaxVar(idx)
            raise self.error(f"unknown identifier {value!r}", tok)
        if kind == "end":
            raise self.error("unexpected end of input", tok)
        raise self.error(f"unexpected {value!r}", tok)


def parse(text: str) -> Expr:
    """Parse ``text`` into an expression tree.

    >>> parse("x1 - m1")
    Sub(left=StateVar(index=1), right=MaxVar(index=1))
    """
    if not isinstance(text, str):
        raise TypeError("expression text must be a string")
    return _Parser(text).parse()


# --------------------------------------------------------------------------
# Printing
# --------------------------------------------------------------------------

def _format_number(v):
    v = float(v)
    if not math.isfinite(v):
        raise ValueError(f"cannot print non-finite constant {v!r}")
    if v == int(v) and abs(v) < 1e15:
        s = str(int(v))
    else:
        s = repr(v)
    # a negative literal does not exist in the grammar
    return f"(-{s[1:]})" if v < 0 else s


def to_string(expr: Expr) -> str:
    """Canonical, fully parenthesized rendering; ``parse`` inverts it."""
    if isinstance(expr, Constant):
        return _format_number(expr.value)
    if isinstance(expr, TimeVar):
        return "t"
    if isinstance(expr, StateVar):
        return f"x{expr.index}"
    if isinstance(expr, MaxVar):
        return f"m{expr.index}"
    if isinstance(expr, Neg):
        return f"(-{to_string(expr.arg)})"
    if isinstance(expr, _Binary):
        return f"({to_string(expr.left)} {expr.symbol} {to_string(expr.right)})"
    if isinstance(expr, Func):
        return f"{expr.name}({to_string(expr.arg)})"
    raise TypeError(f"not an expression node: {expr!r}")


# --------------------------------------------------------------------------
# Evaluation and inspection
# --------------------------------------------------------------------------

def evaluate(expr: Expr, t=0.0, x: Sequence = (), mvals: Sequence = ()):
    """Evaluate ``expr`` at time ``t``, state ``x`` and running-max values ``mvals``.

    Arguments may be scalars or broadcast-compatible numpy arrays; ``x[i-1]``
    supplies ``xi``. Out-of-range indices raise ``IndexError``.
    """
    try:
        return expr._eval(t, x, mvals)
    except IndexError:
        raise IndexError(
            f"{to_string(expr)} references a variable not supplied "
            f"(len(x)={len(x)}, len(mvals)={len(mvals)})") from None


def variables(expr: Expr) -> set:
    """Variables referenced by ``expr`` as tuples ``('t',)``, ``('x', i)``, ``('m', j)``."""
    out = set()
    stack = [expr]
    while stack:
        node = stack.pop()
        if isinstance(node, TimeVar):
            out.add(("t",))
        elif isinstance(node, StateVar):
            out.add(("x", node.index))
        elif isinstance(node, MaxVar):
            out.add(("m", node.index))
        elif isinstance(node, (Neg, Func)):
            stack.append(node.arg)
        elif isinstance(node, _Binary):
            stack.extend((node.left, node.right))
    return out


# --------------------------------------------------------------------------
# Problem definition
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ProblemSpec:
    """An initial value problem x' = f(t, x, m), x(0) = x0, where
    m_j(t) = max over [0, t] of maxima[j](x(s))."""

    f: tuple
    maxima: tuple
    x0: tuple
    T: float

    def __post_init__(self):
        object.__setattr__(self, "f", tuple(self.f))
        object.__setattr__(self, "maxima", tuple(self.maxima))
        object.__setattr__(self, "x0", tuple(float(v) for v in self.x0))
        object.__setattr__(self, "T", float(self.T))
        m, k = len(self.f), len(self.maxima)
        if m < 1:
            raise ProblemError("at least one right-hand side is required", "f")
        if len(self.x0) != m:
            raise ProblemError(f"expected {m} initial values, got {len(self.x0)}", "x0")
        if not all(math.isfinite(v) for v in self.x0):
            raise ProblemError("initial values must be finite", "x0")
        if not (self.T > 0 and math.isfinite(self.T)):
            raise ProblemError("horizon must be positive and finite", "T")
        for where, exprs, allow_t, allow_m in (("f", self.f, True, True),
                                              ("maxima", self.maxima, False, False)):
            for i, e in enumerate(exprs):
                for var in variables(e):
                    path = f"{where}[{i}]"
                    if var[0] == "x" and var[1] > m:
                        raise ProblemError(
                            f"{to_string(e)} references x{var[1]} but m = {m}", path)
                    if var[0] == "m" and (not allow_m or var[1] > k):
                        reason = (f"but there are {k} max-functionals" if allow_m
                                  else "but max-functionals may not nest")
                        raise ProblemError(f"{to_string(e)} references m{var[1]} {reason}", path)
                    if var[0] == "t" and not allow_t:
                        raise ProblemError(
                            f"{to_string(e)} references t; max-functionals are state-only", path)

    @property
    def m(self) -> int:
        return len(self.f)

    @property
    def k(self) -> int:
        return len(self.maxima)

    @property
    def x0_array(self):
        return np.array(self.x0)

    def rhs(self, t, x, mvals):
        """Vector of right-hand sides; with array inputs returns shape (m, ...)."""
        shape = np.broadcast_shapes(np.shape(t), *(np.shape(v) for v in x),
                                    *(np.shape(v) for v in mvals))
        return np.array([np.broadcast_to(evaluate(e, t, x, mvals), shape) for e in self.f],
                        dtype=float)

    def functionals(self, x):
        """Values of the max-functionals at state ``x`` (shape (k, ...))."""
        shape = np.broadcast_shapes(*(np.shape(v) for v in x))
        return np.array([np.broadcast_to(evaluate(e, 0.0, x, ()), shape)
                         for e in self.maxima], dtype=float).reshape((self.k,) + shape)

    def is_componentwise(self) -> bool:
        """True when there is one functional per component and functional j
        depends on x_j alone."""
        if self.k != self.m:
            return False
        return all(variables(h) <= {("x", j + 1)} for j, h in enumerate(self.maxima))

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "f": [to_string(e) for e in self.f],
            "maxima": [to_string(e) for e in self.maxima],
            "x0": list(self.x0),
            "T": self.T,
        }

    def canonical(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def with_horizon(self, T) -> "ProblemSpec":
        return ProblemSpec(self.f, self.maxima, self.x0, T)

    @classmethod
    def from_strings(cls, f, maxima, x0, T):
        return cls(tuple(parse(s) for s in f), tuple(parse(s) for s in maxima), x0, T)


def problem_from_dict(doc) -> ProblemSpec:
    """Build a :class:`ProblemSpec` from a decoded problem document."""
    if not isinstance(doc, dict):
        raise ProblemError("problem document must be a JSON object")
    for key in ("m", "f", "maxima", "x0", "T"):
        if key not in doc:
            raise ProblemError("missing required field", key)
    m = doc["m"]
    if isinstance(m, bool) or not isinstance(m, int) or m < 1:
        raise ProblemError("must be a positive integer", "m")
    for key in ("f", "maxima", "x0"):
        if not isinstance(doc[key], list):
            raise ProblemError("must be a list", key)
    if len(doc["f"]) == 0:
        raise ProblemError("must not be empty", "f")
    if len(doc["f"]) != m:
        raise ProblemError(f"expected {m} expressions, got {len(doc['f'])}", "f")

    def parse_all(key):
        out = []
        for i, s in enumerate(doc[key]):
            if not isinstance(s, str):
                raise ProblemError("must be an expression string", f"{key}[{i}]")
            try:
                out.append(parse(s))
            except ParseError as exc:
                raise ProblemError(str(exc), f"{key}[{i}]") from exc
        return out

    f = parse_all("f")
    maxima = parse_all("maxima")
    for i, v in enumerate(doc["x0"]):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ProblemError("must be a number", f"x0[{i}]")
    T = doc["T"]
    if isinstance(T, bool) or not isinstance(T, (int, float)):
        raise ProblemError("must be a number", "T")
    return ProblemSpec(f, maxima, doc["x0"], T)


def load_problem(path) -> ProblemSpec:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ProblemError(f"invalid JSON: {exc}") from exc
    return problem_from_dict(doc)


# --------------------------------------------------------------------------
# Sampled bounds and Lipschitz constants
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Box:
    """Closed box of inputs: time interval ``t``, state intervals ``x`` and
    running-max intervals ``m`` (one ``(lo, hi)`` pair per coordinate)."""

    t: tuple = (0.0, 0.0)
    x: tuple = ()
    m: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "t", tuple(map(float, self.t)))
        object.__setattr__(self, "x", tuple(tuple(map(float, iv)) for iv in self.x))
        object.__setattr__(self, "m", tuple(tuple(map(float, iv)) for iv in self.m))
        for name, iv in self._intervals():
            if len(iv) != 2 or not iv[0] <= iv[1]:
                raise ValueError(f"empty or malformed interval for {name}: {iv}")

    def _intervals(self):
        yield ("t",), self.t
        for i, iv in enumerate(self.x):
            yield ("x", i + 1), iv
        for j, iv in enumerate(self.m):
            yield ("m", j + 1), iv

    def interval(self, var):
        return dict(self._intervals())[var]


def _lattice(exprs, box, n_samples):
    """Deterministic lattice over the coordinates the expressions reference.

    Returns ``(coords, points)`` where ``points[var]`` is a flat array.
    """
    if n_samples < 2:
        raise ValueError("n_samples must be at least 2 per dimension")
    used = set().union(*(variables(e) for e in exprs)) if exprs else set()
    coords = sorted(used)
    for var in coords:
        box.interval(var)  # KeyError if the box lacks it
    live = [v for v in coords if box.interval(v)[0] < box.interval(v)[1]]
    n = n_samples
    while live and n > 2 and n ** len(live) > MAX_EVALUATIONS:
        n -= 1
    axes = []
    for var in coords:
        lo, hi = box.interval(var)
        axes.append(np.linspace(lo, hi, n) if lo < hi else np.array([lo]))
    if coords:
        grids = np.meshgrid(*axes, indexing="ij")
        points = {var: g.ravel() for var, g in zip(coords, grids)}
    else:
        points = {}
    return coords, points


def _eval_at(exprs, points, box, size):
    m_len = len(box.m)
    x_len = len(box.x)
    t = points.get(("t",), 0.0)
    x = [points.get(("x", i + 1), 0.0) for i in range(x_len)]
    mv = [points.get(("m", j + 1), 0.0) for j in range(m_len)]
    return np.array([np.broadcast_to(evaluate(e, t, x, mv), (size,)) for e in exprs],
                    dtype=float)


def estimate_bound(exprs, box: Box, n_samples: int = DEFAULT_SAMPLES) -> float:
    """Largest Euclidean norm of the vector of ``exprs`` over a lattice in ``box``.

    This is a sampled lower estimate of the true supremum, not a certified
    bound. The lattice has ``n_samples`` points per referenced coordinate,
    coarsened if needed to stay under ``MAX_EVALUATIONS`` points.
    """
    exprs = list(exprs)
    coords, points = _lattice(exprs, box, n_samples)
    size = len(next(iter(points.values()))) if points else 1
    vals = _eval_at(exprs, points, box, size)
    return float(np.max(np.sqrt(np.sum(vals ** 2, axis=0))))


def estimate_lipschitz(exprs, box: Box, n_samples: int = DEFAULT_SAMPLES,
                       wrt=("x", "m"), rel_step: float = 1e-6) -> float:
    """Estimated Lipschitz constant of the vector of ``exprs`` over ``box``.

    Central differences with step ``rel_step * width`` give the Jacobian with
    respect to the coordinate kinds in ``wrt`` at every lattice point; the
    largest spectral norm is returned. Sampled, so an estimate only.
    """
    exprs = list(exprs)
    coords, points = _lattice(exprs, box, n_samples)
    diff_vars = [v for v in coords if v[0] in wrt]
    if not diff_vars:
        return 0.0
    size = len(next(iter(points.values())))
    jac = np.empty((size, len(exprs), len(diff_vars)))
    for col, var in enumerate(diff_vars):
        lo, hi = box.interval(var)
        step = rel_step * (hi - lo) if hi > lo else rel_step * max(1.0, abs(lo))
        fwd = dict(points)
        bwd = dict(points)
        fwd[var] = points[var] + step
        bwd[var] = points[var] - step
        d = (_eval_at(exprs, fwd, box, size) - _eval_at(exprs, bwd, box, size)) / (2 * step)
        jac[:, :, col] = d.T
    return float(np.max(np.linalg.norm(jac, ord=2, axis=(1, 2))))
