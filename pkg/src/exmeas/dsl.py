"""A small expression language for the measurable functions of a model.

Expressions are parsed by recursive descent into an immutable tree of frozen
dataclasses, so structural equality is plain ``==``.  Evaluation is
vectorised: variables may be bound to numpy arrays and the result broadcasts
like any numpy expression.

Grammar::

    expr   := term (("+"|"-") term)*
    term   := factor (("*"|"/") factor)*
    factor := unary
    unary  := "-" unary | power
    power  := atom ("^" unary)?
    atom   := number | var | func "(" expr ("," expr)* ")" | "(" expr ")"

``^`` binds tighter than unary minus (``-x^2 == -(x^2)``) and is
right-associative.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence, Union

import numpy as np

VARIABLES = ("x", "y", "z", "k", "v")
FUNCTIONS = {
    # name: (min args, max args or None)
    "exp": (1, 1),
    "log": (1, 1),
    "abs": (1, 1),
    "floor": (1, 1),
    "mod": (2, 2),
    "min": (2, None),
    "max": (2, None),
    "ind": (3, 3),
    "piecewise": (3, None),
}


class ParseError(ValueError):
    """Raised on malformed input; ``position`` is the byte offset of the fault."""

    def __init__(self, position: int, message: str):
        super().__init__(f"{message} at offset {position}")
        self.position = position
        self.message = message


class DomainError(ArithmeticError):
    """Evaluation left the domain of an operation (log of a nonpositive
    number, division by zero, non-finite result)."""


class UnboundVariableError(KeyError):
    pass


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple["Expr", ...]


Expr = Union[Num, Var, Neg, BinOp, Call]


# ---------------------------------------------------------------------------
# tokenizer / parser

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),])
    """,
    re.VERBOSE,
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    raw = text.encode("utf-8")
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(len(text[:pos].encode("utf-8")), f"unexpected character {text[pos]!r}")
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group(), len(text[:pos].encode("utf-8"))))
        pos = m.end()
    tokens.append(("end", "", len(raw)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    @property
    def tok(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, text, pos = self.tok
        if text != value or kind == "end":
            found = "end of input" if kind == "end" else repr(text)
            raise ParseError(pos, f"expected {value!r}, found {found}")
        self.advance()

    def parse(self) -> Expr:
        e = self.expr()
        kind, text, pos = self.tok
        if kind != "end":
            raise ParseError(pos, f"unexpected token {text!r}")
        return e

    def expr(self) -> Expr:
        left = self.term()
        while self.tok[1] in ("+", "-") and self.tok[0] == "op":
            op = self.advance()[1]
            left = BinOp(op, left, self.term())
        return left

    def term(self) -> Expr:
        left = self.unary()
        while self.tok[1] in ("*", "/") and self.tok[0] == "op":
            op = self.advance()[1]
            left = BinOp(op, left, self.unary())
        return left

    def unary(self) -> Expr:
        if self.tok[0] == "op" and self.tok[1] == "-":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.tok[0] == "op" and self.tok[1] == "^":
            self.advance()
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Expr:
        kind, text, pos = self.tok
        if kind == "num":
            self.advance()
            return Num(float(text))
        if kind == "name":
            self.advance()
            if text in VARIABLES:
                return Var(text)
            if text not in FUNCTIONS:
                raise ParseError(pos, f"unknown name {text!r}")
            self.expect("(")
            args = [self.expr()]
            while self.tok[0] == "op" and self.tok[1] == ",":
                self.advance()
                args.append(self.expr())
            close = self.tok[2]
            self.expect(")")
            lo, hi = FUNCTIONS[text]
            if len(args) < lo or (hi is not None and len(args) > hi):
                raise ParseError(pos, f"{text} takes {lo}{'' if hi == lo else '+'} arguments, got {len(args)}")
            if text == "piecewise" and len(args) % 2 == 0:
                raise ParseError(close, "piecewise needs (cond, value) pairs and a default")
            return Call(text, tuple(args))
        if kind == "op" and text == "(":
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        found = "end of input" if kind == "end" else repr(text)
        raise ParseError(pos, f"expected an operand, found {found}")


def parse(text: str) -> Expr:
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# pretty printer

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def _prec(e: Expr) -> int:
    if isinstance(e, BinOp):
        return 4 if e.op == "^" else _PREC[e.op]
    if isinstance(e, Neg):
        return 3
    return 5


def _fmt_num(value: float) -> str:
    text = repr(float(value))
    if text.endswith(".0"):
        text = text[:-2]
    return text


def pretty_print(e: Expr) -> str:
    if isinstance(e, Num):
        return _fmt_num(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Neg):
        inner = pretty_print(e.operand)
        return "-" + (inner if _prec(e.operand) >= 3 else f"({inner})")
    if isinstance(e, Call):
        return f"{e.func}({', '.join(pretty_print(a) for a in e.args)})"
    if e.op == "^":
        base = pretty_print(e.left)
        if _prec(e.left) < 5:
            base = f"({base})"
        expo = pretty_print(e.right)
        if _prec(e.right) < 3:
            expo = f"({expo})"
        return f"{base}^{expo}"
    p = _PREC[e.op]
    left = pretty_print(e.left)
    if _prec(e.left) < p:
        left = f"({left})"
    right = pretty_print(e.right)
    if _prec(e.right) <= p:
        right = f"({right})"
    return f"{left} {e.op} {right}"


# ---------------------------------------------------------------------------
# evaluation


def free_variables(e: Expr) -> frozenset[str]:
    if isinstance(e, Var):
        return frozenset([e.name])
    if isinstance(e, Num):
        return frozenset()
    if isinstance(e, Neg):
        return free_variables(e.operand)
    if isinstance(e, BinOp):
        return free_variables(e.left) | free_variables(e.right)
    out = frozenset()
    for a in e.args:
        out |= free_variables(a)
    return out


def _check(value, what: str):
    if not np.all(np.isfinite(value)):
        raise DomainError(f"{what} produced a non-finite value")
    return value


def _eval(e: Expr, env: Mapping[str, np.ndarray]):
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        try:
            return env[e.name]
        except KeyError:
            raise UnboundVariableError(e.name) from None
    if isinstance(e, Neg):
        return -_eval(e.operand, env)
    if isinstance(e, BinOp):
        a = _eval(e.left, env)
        b = _eval(e.right, env)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        if e.op == "/":
            if np.any(np.asarray(b) == 0):
                raise DomainError("division by zero")
            return a / b
        return _check(np.power(np.asarray(a, dtype=float), b), "power")
    return _call(e, env)


def _call(e: Call, env):
    name = e.func
    if name == "piecewise":
        return _piecewise(e, env)
    args = [_eval(a, env) for a in e.args]
    if name == "exp":
        return _check(np.exp(args[0]), "exp")
    if name == "log":
        if np.any(np.asarray(args[0]) <= 0):
            raise DomainError("log of a nonpositive number")
        return np.log(args[0])
    if name == "abs":
        return np.abs(args[0])
    if name == "floor":
        return np.floor(args[0])
    if name == "mod":
        a, b = args
        if np.any(np.asarray(b) == 0):
            raise DomainError("mod by zero")
        return a - b * np.floor(np.divide(a, b))
    if name == "min":
        out = args[0]
        for a in args[1:]:
            out = np.minimum(out, a)
        return out
    if name == "max":
        out = args[0]
        for a in args[1:]:
            out = np.maximum(out, a)
        return out
    # ind(e, a, b): closed interval
    val, lo, hi = args
    return np.where((lo <= val) & (val <= hi), 1.0, 0.0)


def _piecewise(e: Call, env):
    # Branches are evaluated only where selected so a guarded log(0) is fine.
    shape = np.broadcast_shapes(*(np.shape(v) for v in env.values())) if env else ()
    flat_env = {k: np.broadcast_to(np.asarray(v, dtype=float), shape).ravel() for k, v in env.items()}
    n = int(np.prod(shape)) if shape else 1
    if not shape:
        flat_env = {k: v.reshape(1) for k, v in flat_env.items()}
    out = np.empty(n)
    todo = np.ones(n, dtype=bool)
    pairs = e.args[:-1]
    for cond, branch in zip(pairs[0::2], pairs[1::2]):
        if not todo.any():
            break
        sub = {k: v[todo] for k, v in flat_env.items()}
        c = np.broadcast_to(_eval(cond, sub), (int(todo.sum()),)) != 0
        idx = np.flatnonzero(todo)[c]
        if idx.size:
            sub = {k: v[idx] for k, v in flat_env.items()}
            out[idx] = np.broadcast_to(_eval(branch, sub), (idx.size,))
            todo[idx] = False
    if todo.any():
        sub = {k: v[todo] for k, v in flat_env.items()}
        out[todo] = np.broadcast_to(_eval(e.args[-1], sub), (int(todo.sum()),))
    return out.reshape(shape) if shape else float(out[0])


def evaluate(e: Expr, env: Mapping[str, object]):
    """Evaluate ``e`` with variables bound from ``env`` (scalars or arrays).

    Raises :class:`UnboundVariableError` for a free variable missing from
    ``env`` and :class:`DomainError` for log of a nonpositive number,
    division by zero or a non-finite result.
    """
    missing = free_variables(e) - set(env)
    if missing:
        raise UnboundVariableError(", ".join(sorted(missing)))
    env = {name: np.asarray(value, dtype=float) for name, value in env.items()}
    with np.errstate(all="ignore"):
        out = _eval(e, env)
    _check(out, "expression")
    if np.ndim(out) == 0:
        return float(out)
    return np.asarray(out, dtype=float)


# ---------------------------------------------------------------------------
# function handles


class DSLFunction:
    """A parsed expression exposed as a vectorised function of positional
    arguments bound to ``variables`` in order.

    >>> g = DSLFunction("ind(x,0,1)*ind(mod(floor(y),2),0,0)", ("x", "y"))
    >>> g(0.5, 2.5), g(0.5, 1.5)
    (1.0, 0.0)
    """

    def __init__(self, source: Union[str, Expr], variables: Sequence[str]):
        self.expr = parse(source) if isinstance(source, str) else source
        self.variables = tuple(variables)
        extra = free_variables(self.expr) - set(self.variables)
        if extra:
            raise ValueError(
                f"expression uses {', '.join(sorted(extra))}; allowed: {', '.join(self.variables)}"
            )

    @property
    def source(self) -> str:
        return pretty_print(self.expr)

    @property
    def is_zero(self) -> bool:
        return isinstance(self.expr, Num) and self.expr.value == 0.0

    def depends_on(self, name: str) -> bool:
        return name in free_variables(self.expr)

    def __call__(self, *args):
        if len(args) != len(self.variables):
            raise TypeError(f"expected {len(self.variables)} arguments, got {len(args)}")
        env = dict(zip(self.variables, args))
        out = evaluate(self.expr, env)
        shape = np.broadcast_shapes(*(np.shape(a) for a in args))
        if shape:
            return np.broadcast_to(out, shape)
        return out

    def __repr__(self):
        return f"DSLFunction({self.source!r}, {self.variables})"

    def __eq__(self, other):
        return isinstance(other, DSLFunction) and (self.expr, self.variables) == (other.expr, other.variables)

    def __hash__(self):
        return hash((self.expr, self.variables))


class ZeroFunction:
    """The identically-zero function; samplers and certifiers skip it."""

    is_zero = True

    def __init__(self, arity: int):
        self.arity = arity

    def depends_on(self, name: str) -> bool:
        return False

    def __call__(self, *args):
        return np.zeros(np.broadcast_shapes(*(np.shape(a) for a in args)))

    def __repr__(self):
        return "ZeroFunction()"


def as_function(obj, variables: Sequence[str]) -> Callable:
    """Coerce a DSL string, parsed tree, number or callable into a
    vectorised function handle of ``variables``."""
    if obj is None:
        return ZeroFunction(len(variables))
    if isinstance(obj, (DSLFunction, ZeroFunction)):
        return obj
    if isinstance(obj, (int, float)):
        if obj == 0:
            return ZeroFunction(len(variables))
        return DSLFunction(Num(float(obj)), variables)
    if isinstance(obj, (str, Num, Var, Neg, BinOp, Call)):
        fn = DSLFunction(obj, variables)
        return ZeroFunction(len(variables)) if fn.is_zero else fn
    if callable(obj):
        return _Wrapped(obj, len(variables))
    raise TypeError(f"cannot use {obj!r} as a function")


class _Wrapped:
    is_zero = False

    def __init__(self, fn, arity):
        self.fn = fn
        self.arity = arity

    def depends_on(self, name: str) -> bool:
        return True

    def __call__(self, *args):
        shape = np.broadcast_shapes(*(np.shape(a) for a in args))
        return np.broadcast_to(np.asarray(self.fn(*args), dtype=float), shape)

    def __repr__(self):
        return f"<function {getattr(self.fn, '__name__', self.fn)!r}>"
