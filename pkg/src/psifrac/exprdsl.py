"""A small closed-form expression language for right-hand sides, traces and weights.

Grammar (highest precedence first)::

    primary  := NUMBER | IDENT | IDENT '(' args ')' | '(' expr ')'
    power    := primary ('^' unary)?          right-associative
    unary    := '-' unary | power
    term     := unary (('*' | '/') unary)*
    expr     := term (('+' | '-') term)*

Identifiers are either declared variables, the constants ``pi`` and ``e``
(shadowed by a variable of the same name) or catalog functions. Evaluation is
vectorised: variables may be bound to floats or numpy arrays.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Union

import numpy as np

from psifrac.exceptions import DomainError, PsifracError

__all__ = [
    "ExprSyntaxError",
    "UnknownIdentifierError",
    "ArityError",
    "UnboundVariableError",
    "EvalDomainError",
    "Num",
    "Var",
    "Neg",
    "BinOp",
    "Call",
    "Expr",
    "FUNCTIONS",
    "parse",
    "evaluate",
    "render",
    "estimate_lipschitz",
    "as_function",
    "RHS_VARS",
    "DEFAULT_SEED",
]

#: variables of a right-hand side ``f(x, y, u, p, q)``
RHS_VARS = ("x", "y", "u", "p", "q")

#: seed used by :func:`estimate_lipschitz` unless overridden
DEFAULT_SEED = 20190731


class ExprSyntaxError(PsifracError, ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class UnknownIdentifierError(PsifracError, ValueError):
    def __init__(self, name: str, offset: int):
        super().__init__(f"unknown identifier {name!r} at offset {offset}")
        self.name = name
        self.offset = offset


class ArityError(PsifracError, ValueError):
    def __init__(self, name: str, expected: int, got: int, offset: int):
        super().__init__(f"{name}() takes {expected} argument(s), got {got} (offset {offset})")
        self.name = name
        self.offset = offset


class UnboundVariableError(PsifracError, KeyError):
    def __str__(self) -> str:
        return str(self.args[0])


class EvalDomainError(DomainError):
    pass


# {{{ AST


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple


Node = Union[Num, Var, Neg, BinOp, Call]

CONSTANTS = {"pi": math.pi, "e": math.e}


def _guard_positive(name: str, x):
    if np.any(np.asarray(x) <= 0):
        raise EvalDomainError(f"{name} of nonpositive argument")
    return x


def _ln(x):
    return np.log(_guard_positive("ln", x))


def _sqrt(x):
    if np.any(np.asarray(x) < 0):
        raise EvalDomainError("sqrt of negative argument")
    return np.sqrt(x)


#: name -> (arity, implementation)
FUNCTIONS: dict[str, tuple[int, Callable]] = {
    "sin": (1, np.sin),
    "cos": (1, np.cos),
    "exp": (1, np.exp),
    "ln": (1, _ln),
    "sqrt": (1, _sqrt),
    "abs": (1, np.abs),
    "atan": (1, np.arctan),
    "tanh": (1, np.tanh),
    "min": (2, np.minimum),
    "max": (2, np.maximum),
}

# }}}


# {{{ tokenizer

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
    | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
    | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
    | (?P<op>[-+*/^(),])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    offset: int


def _tokenize(src: str) -> list[_Token]:
    tokens = []
    pos = 0
    # offsets are reported in bytes of the UTF-8 encoding
    byte = 0
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {src[pos]!r}", byte)
        text = m.group()
        if m.lastgroup != "ws":
            tokens.append(_Token(m.lastgroup, text, byte))
        byte += len(text.encode("utf-8"))
        pos = m.end()
    tokens.append(_Token("end", "", byte))
    return tokens


# }}}


# {{{ parser

_BINARY_BP = {"+": 10, "-": 10, "*": 20, "/": 20}
_UNARY_BP = 30
_POWER_BP = 40


class _Parser:
    def __init__(self, src: str, variables: frozenset):
        self.tokens = _tokenize(src)
        self.i = 0
        self.variables = variables

    @property
    def tok(self) -> _Token:
        return self.tokens[self.i]

    def advance(self) -> _Token:
        t = self.tokens[self.i]
        self.i += 1
        return t

    def expect(self, text: str) -> _Token:
        t = self.tok
        if t.text != text or t.kind == "end":
            what = "end of input" if t.kind == "end" else repr(t.text)
            raise ExprSyntaxError(f"expected {text!r}, found {what}", t.offset)
        return self.advance()

    def parse(self) -> Node:
        node = self.expression(0)
        if self.tok.kind != "end":
            raise ExprSyntaxError(f"unexpected token {self.tok.text!r}", self.tok.offset)
        return node

    def expression(self, rbp: int) -> Node:
        left = self.prefix()
        while True:
            t = self.tok
            if t.kind == "op" and t.text == "^":
                if _POWER_BP <= rbp:
                    break
                self.advance()
                # exponent may carry a unary minus: 2^-x
                left = BinOp("^", left, self.expression(_UNARY_BP - 1))
            elif t.kind == "op" and t.text in _BINARY_BP and _BINARY_BP[t.text] > rbp:
                self.advance()
                left = BinOp(t.text, left, self.expression(_BINARY_BP[t.text]))
            else:
                break
        return left

    def prefix(self) -> Node:
        t = self.advance()
        if t.kind == "num":
            return Num(float(t.text))
        if t.kind == "op" and t.text == "-":
            return Neg(self.expression(_UNARY_BP))
        if t.kind == "op" and t.text == "(":
            node = self.expression(0)
            self.expect(")")
            return node
        if t.kind == "ident":
            if self.tok.text == "(" and self.tok.kind == "op":
                return self.call(t)
            if t.text in self.variables:
                return Var(t.text)
            if t.text in CONSTANTS:
                return Num(CONSTANTS[t.text])
            if t.text in FUNCTIONS:
                raise ExprSyntaxError(f"function {t.text!r} used without arguments", t.offset)
            raise UnknownIdentifierError(t.text, t.offset)
        if t.kind == "end":
            raise ExprSyntaxError("unexpected end of input", t.offset)
        raise ExprSyntaxError(f"unexpected token {t.text!r}", t.offset)

    def call(self, name_tok: _Token) -> Node:
        if name_tok.text not in FUNCTIONS:
            raise UnknownIdentifierError(name_tok.text, name_tok.offset)
        self.expect("(")
        args = []
        if self.tok.text != ")":
            args.append(self.expression(0))
            while self.tok.text == ",":
                self.advance()
                args.append(self.expression(0))
        self.expect(")")
        arity = FUNCTIONS[name_tok.text][0]
        if len(args) != arity:
            raise ArityError(name_tok.text, arity, len(args), name_tok.offset)
        return Call(name_tok.text, tuple(args))


# }}}


# {{{ rendering

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def _prec(node: Node) -> int:
    if isinstance(node, BinOp):
        return 4 if node.op == "^" else _PREC[node.op]
    if isinstance(node, Neg):
        return 3
    return 5


def _render(node: Node) -> str:
    if isinstance(node, Num):
        return repr(float(node.value))
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Call):
        return f"{node.name}({', '.join(_render(a) for a in node.args)})"
    if isinstance(node, Neg):
        inner = _render(node.operand)
        return f"-({inner})" if _prec(node.operand) < 3 else f"-{inner}"
    p = _prec(node)
    left, right = _render(node.left), _render(node.right)
    if node.op == "^":
        if _prec(node.left) <= 4:
            left = f"({left})"
        if _prec(node.right) < 3:
            right = f"({right})"
        return f"{left}^{right}"
    if _prec(node.left) < p:
        left = f"({left})"
    if _prec(node.right) <= p:
        right = f"({right})"
    return f"{left} {node.op} {right}"


# }}}


@dataclass(frozen=True)
class Expr:
    """A parsed expression over a declared variable set.

    Equality is structural: two expressions are equal when their trees and
    declared variables agree, regardless of the source text.
    """

    root: Node
    variables: frozenset
    source: str = field(default="", compare=False)

    def __call__(self, **env):
        return evaluate(self, env)

    def render(self) -> str:
        return render(self)

    @property
    def free_variables(self) -> frozenset:
        found = set()

        def walk(n):
            if isinstance(n, Var):
                found.add(n.name)
            elif isinstance(n, Neg):
                walk(n.operand)
            elif isinstance(n, BinOp):
                walk(n.left)
                walk(n.right)
            elif isinstance(n, Call):
                for a in n.args:
                    walk(a)

        walk(self.root)
        return frozenset(found)

    def __str__(self) -> str:
        return self.render()


def parse(src: str, variables: Iterable[str]) -> Expr:
    """Parse ``src`` into an :class:`Expr` over the declared ``variables``.

    :raises ExprSyntaxError: malformed input, with the byte offset of the
        offending token.
    :raises UnknownIdentifierError: an identifier that is neither declared,
        a constant nor a catalog function.
    :raises ArityError: wrong number of function arguments.
    """
    if not isinstance(src, str):
        raise TypeError(f"expression source must be a string, got {type(src).__name__}")
    variables = frozenset(variables)
    return Expr(_Parser(src, variables).parse(), variables, src)


def render(e: Expr | Node) -> str:
    """Canonical text of an expression; ``parse(render(e))`` reproduces the tree."""
    return _render(e.root if isinstance(e, Expr) else e)


def _checked(op: str, value, *inputs):
    if np.all(np.isfinite(value)):
        return value
    if all(np.all(np.isfinite(x)) for x in inputs):
        raise EvalDomainError(f"{op} produced a non-finite value")
    return value


def _eval(node: Node, env: Mapping):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        try:
            return env[node.name]
        except KeyError:
            raise UnboundVariableError(f"variable {node.name!r} is not bound") from None
    if isinstance(node, Neg):
        return -_eval(node.operand, env)
    if isinstance(node, Call):
        args = [_eval(a, env) for a in node.args]
        with np.errstate(all="ignore"):
            return _checked(node.name, FUNCTIONS[node.name][1](*args), *args)
    a = _eval(node.left, env)
    b = _eval(node.right, env)
    with np.errstate(all="ignore"):
        if node.op == "+":
            r = np.add(a, b)
        elif node.op == "-":
            r = np.subtract(a, b)
        elif node.op == "*":
            r = np.multiply(a, b)
        elif node.op == "/":
            if np.any(np.asarray(b) == 0):
                raise EvalDomainError("division by zero")
            r = np.divide(a, b)
        else:
            r = np.power(np.asarray(a, dtype=float), b)
    return _checked(node.op, r, a, b)


def evaluate(e: Expr, env: Mapping):
    """Evaluate ``e`` with variables bound by ``env`` (floats or arrays).

    Scalars in, float out; arrays broadcast with numpy rules.

    :raises UnboundVariableError: a variable used by ``e`` is missing.
    :raises EvalDomainError: ``ln``/``sqrt`` outside their domain, division by
        zero, or any other non-finite intermediate result.
    """
    result = _eval(e.root, env)
    if np.ndim(result) == 0:
        return float(result)
    return np.asarray(result, dtype=float)


def as_function(src, variables: Iterable[str]) -> Callable:
    """Turn a string, :class:`Expr`, number or callable into a vectorised callable.

    The callable takes the variables positionally in the given order and
    returns an array broadcast against its inputs.
    """
    variables = tuple(variables)
    if isinstance(src, str):
        src = parse(src, variables)
    if isinstance(src, Expr):
        expr = src

        def fn(*args):
            env = dict(zip(variables, args))
            shape = np.broadcast_shapes(*(np.shape(a) for a in args)) if args else ()
            return np.broadcast_to(evaluate(expr, env), shape).astype(float)

        fn.expr = expr
        return fn
    if isinstance(src, (int, float)):
        value = float(src)

        def const(*args):
            shape = np.broadcast_shapes(*(np.shape(a) for a in args)) if args else ()
            return np.full(shape, value)

        const.expr = parse(repr(value), variables)
        return const
    if callable(src):
        return src
    raise TypeError(f"cannot interpret {src!r} as a function of {variables}")


def estimate_lipschitz(
    e: Expr,
    box: Mapping[str, tuple[float, float]],
    n: int = 4096,
    seed: int = DEFAULT_SEED,
) -> float:
    """Sampled lower bound for the Lipschitz constant of ``f`` in ``(u, p, q)``.

    Returns ``max |f(x,y,z) - f(x,y,z')| / max_i |z_i - z'_i|`` over ``n``
    sampled pairs sharing ``(x, y)``. Even-indexed pairs draw ``z'`` uniformly
    from the box, odd-indexed pairs perturb ``z`` locally. The first ``m``
    pairs drawn for any ``n >= m`` coincide, so the estimate is non-decreasing
    in ``n`` for a fixed seed.

    Variables missing from ``box`` are held at 0. The result is advisory: a
    lower bound on the true constant, never an upper bound.
    """
    if n < 2:
        raise ValueError(f"need at least 2 sample pairs, got {n}")
    names = RHS_VARS
    lo = np.array([float(box.get(v, (0.0, 0.0))[0]) for v in names])
    hi = np.array([float(box.get(v, (0.0, 0.0))[1]) for v in names])
    if np.any(~np.isfinite(lo)) or np.any(~np.isfinite(hi)) or np.any(hi < lo):
        raise ValueError(f"box must be finite with lo <= hi, got {dict(box)}")
    width = hi - lo

    rng = np.random.default_rng(seed)
    r = rng.random((n, 8))
    z = lo + r[:, :5] * width
    partner_uniform = lo[2:] + r[:, 5:] * width[2:]
    partner_local = np.clip(z[:, 2:] + (2.0 * r[:, 5:] - 1.0) * 1.0e-3 * width[2:], lo[2:], hi[2:])
    local = (np.arange(n) % 2 == 1)[:, None]
    zp = np.where(local, partner_local, partner_uniform)

    dz = np.max(np.abs(z[:, 2:] - zp), axis=1)
    keep = dz > 0
    if not np.any(keep):
        return 0.0

    env = dict(zip(names, z[keep].T))
    env_p = dict(zip(names, np.concatenate([z[keep, :2], zp[keep]], axis=1).T))
    f0 = np.broadcast_to(evaluate(e, env), dz[keep].shape)
    f1 = np.broadcast_to(evaluate(e, env_p), dz[keep].shape)
    return float(np.max(np.abs(f0 - f1) / dz[keep]))
