"""Payoff expression language.

Grammar::

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := '-' factor | atom ('^' factor)?
    atom   := number | ident | '(' expr ')' | func '(' expr (',' expr)* ')'

Expressions compile to a small AST that evaluates on broadcastable numpy
arrays and supports interval evaluation, which is how domain errors (log of a
nonpositive number, division by an interval containing zero, ...) are
rejected before a game is accepted.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import ParseError

FUNCTIONS = {"min", "max", "abs", "exp", "log", "sqrt"}
_ARITY = {"abs": 1, "exp": 1, "log": 1, "sqrt": 1}

_TOKEN = re.compile(r"\s*(?:(\d+\.\d*(?:[eE][-+]?\d+)?|\.\d+(?:[eE][-+]?\d+)?|\d+(?:[eE][-+]?\d+)?)"
                    r"|([A-Za-z_][A-Za-z_0-9]*)|(.))")


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: object


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple


def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            break
        num, ident, other = m.groups()
        start = m.start(m.lastindex) if m.lastindex else m.end()
        if num is not None:
            tokens.append(("num", num, start))
        elif ident is not None:
            tokens.append(("ident", ident, start))
        elif other is not None:
            if other not in "+-*/^(),":
                raise ParseError(f"unexpected character {other!r}", column=start + 1)
            tokens.append(("op", other, start))
        pos = m.end()
    tokens.append(("end", "", len(text.rstrip())))
    return tokens


class _Parser:
    def __init__(self, text, variables):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0
        self.variables = variables

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message, tok=None):
        tok = tok or self.peek()
        raise ParseError(message, column=tok[2] + 1)

    def expect(self, value):
        tok = self.peek()
        if tok[1] != value or tok[0] == "end":
            self.error(f"expected {value!r}")
        return self.take()

    def parse(self):
        node = self.expr()
        if self.peek()[0] != "end":
            self.error(f"unexpected token {self.peek()[1]!r}")
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.factor())
        return node

    def factor(self):
        # unary minus binds looser than '^': -a^2 == -(a^2); exponents may be signed
        if self.peek()[1] == "-" and self.peek()[0] == "op":
            self.take()
            return Neg(self.factor())
        node = self.atom()
        if self.peek()[1] == "^" and self.peek()[0] == "op":
            self.take()
            node = BinOp("^", node, self.factor())
        return node

    def atom(self):
        kind, value, _ = tok = self.peek()
        if kind == "num":
            self.take()
            return Num(float(value))
        if kind == "ident":
            self.take()
            if value in FUNCTIONS:
                self.expect("(")
                args = [self.expr()]
                while self.peek()[1] == ",":
                    self.take()
                    args.append(self.expr())
                self.expect(")")
                want = _ARITY.get(value)
                if want is not None and len(args) != want:
                    self.error(f"{value} takes {want} argument", tok)
                return Call(value, tuple(args))
            if self.variables is not None and value not in self.variables:
                self.error(f"unknown identifier {value!r}", tok)
            return Var(value)
        if value == "(" and kind == "op":
            self.take()
            node = self.expr()
            self.expect(")")
            return node
        if kind == "end":
            if self.i > 0 and self.tokens[self.i - 1][0] == "op":
                prev = self.tokens[self.i - 1]
                self.error(f"dangling operator {prev[1]!r}", prev)
            self.error("unexpected end of expression")
        self.error(f"unexpected token {value!r}")


def parse_expression(text, variables=None):
    """Parse ``text``; ``variables`` restricts the allowed identifiers."""
    return _Parser(text, None if variables is None else set(variables)).parse()


def evaluate(node, env):
    """Evaluate on numpy arrays (broadcasting) or scalars."""
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return env[node.name]
    if isinstance(node, Neg):
        return -evaluate(node.arg, env)
    if isinstance(node, BinOp):
        a, b = evaluate(node.left, env), evaluate(node.right, env)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if node.op == "/":
            return a / b
        return np.power(a, b)
    args = [evaluate(a, env) for a in node.args]
    f = node.func
    if f == "min":
        out = args[0]
        for a in args[1:]:
            out = np.minimum(out, a)
        return out
    if f == "max":
        out = args[0]
        for a in args[1:]:
            out = np.maximum(out, a)
        return out
    return {"abs": np.abs, "exp": np.exp, "log": np.log, "sqrt": np.sqrt}[f](args[0])


def variables_of(node):
    if isinstance(node, Var):
        return {node.name}
    if isinstance(node, Num):
        return set()
    if isinstance(node, Neg):
        return variables_of(node.arg)
    if isinstance(node, BinOp):
        return variables_of(node.left) | variables_of(node.right)
    return set().union(*(variables_of(a) for a in node.args))


class DomainError(ValueError):
    pass


def _ival_pow(a, b):
    (alo, ahi), (blo, bhi) = a, b
    if blo == bhi and float(blo).is_integer():
        n = int(blo)
        if n >= 0:
            cands = [alo ** n, ahi ** n]
            if n % 2 == 0 and alo < 0 < ahi:
                cands.append(0.0)
            return min(cands), max(cands)
        if alo <= 0 <= ahi:
            raise DomainError("negative power of an interval containing 0")
        cands = [alo ** n, ahi ** n]
        return min(cands), max(cands)
    if alo < 0 or (alo == 0 and blo <= 0):
        raise DomainError("non-integer power of a possibly nonpositive base")
    cands = [x ** y for x in (alo, ahi) for y in (blo, bhi)]
    return min(cands), max(cands)


def interval_eval(node, box):
    """Enclosure of the expression over ``box`` (name -> (lo, hi)).

    Raises :class:`DomainError` where the expression may be undefined.
    """
    if isinstance(node, Num):
        return node.value, node.value
    if isinstance(node, Var):
        return box[node.name]
    if isinstance(node, Neg):
        lo, hi = interval_eval(node.arg, box)
        return -hi, -lo
    if isinstance(node, BinOp):
        a = interval_eval(node.left, box)
        b = interval_eval(node.right, box)
        if node.op == "+":
            return a[0] + b[0], a[1] + b[1]
        if node.op == "-":
            return a[0] - b[1], a[1] - b[0]
        if node.op == "*":
            c = [x * y for x in a for y in b]
            return min(c), max(c)
        if node.op == "/":
            if b[0] <= 0 <= b[1]:
                raise DomainError("division by an interval containing 0")
            c = [x / y for x in a for y in b]
            return min(c), max(c)
        return _ival_pow(a, b)
    args = [interval_eval(a, box) for a in node.args]
    f = node.func
    if f == "min":
        return min(a[0] for a in args), min(a[1] for a in args)
    if f == "max":
        return max(a[0] for a in args), max(a[1] for a in args)
    lo, hi = args[0]
    if f == "abs":
        if lo >= 0:
            return lo, hi
        if hi <= 0:
            return -hi, -lo
        return 0.0, max(-lo, hi)
    if f == "exp":
        return math.exp(lo), math.exp(hi)
    if f == "log":
        if lo <= 0:
            raise DomainError("log of a possibly nonpositive argument")
        return math.log(lo), math.log(hi)
    if lo < 0:
        raise DomainError("sqrt of a possibly negative argument")
    return math.sqrt(lo), math.sqrt(hi)
