"""Tiny arithmetic expression language for config-driven coefficients.

Grammar (recursive descent, right-associative '^'):

    expr    := term (('+' | '-') term)*
    term    := factor (('*' | '/') factor)*
    factor  := '-' factor | power
    power   := primary ('^' factor)?
    primary := NUMBER | NAME | NAME '(' expr (',' expr)* ')' | '(' expr ')'

Variables are ``x``, ``y`` (coordinates) and ``s`` (state); ``pi`` and ``e``
are constants.  Functions: sin, cos, exp, log, pow, abs, min, max.  Parsing
errors carry the character position.  Compiled expressions evaluate with
numpy broadcasting, so they vectorize over nodes and states.
"""

import numpy as np

__all__ = ["Expression", "ExpressionError", "parse_expression"]

_FUNCTIONS = {
    "sin": (np.sin, 1),
    "cos": (np.cos, 1),
    "exp": (np.exp, 1),
    "log": (np.log, 1),
    "abs": (np.abs, 1),
    "pow": (np.power, 2),
    "min": (np.minimum, 2),
    "max": (np.maximum, 2),
}
_CONSTANTS = {"pi": np.pi, "e": np.e}
_VARIABLES = ("x", "y", "s")


class ExpressionError(ValueError):
    """Parse or evaluation failure, with the offending position."""


class _Token:
    __slots__ = ("kind", "value", "pos")

    def __init__(self, kind, value, pos):
        self.kind = kind
        self.value = value
        self.pos = pos


def _tokenize(text):
    tokens = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if c.isdigit() or (c == "." and i + 1 < n and text[i + 1].isdigit()):
            j = i
            seen_e = False
            while j < n and (text[j].isdigit() or text[j] == "."
                             or text[j] in "eE"
                             or (seen_e and text[j] in "+-"
                                 and text[j - 1] in "eE")):
                if text[j] in "eE":
                    if seen_e:
                        break
                    seen_e = True
                j += 1
            try:
                value = float(text[i:j])
            except ValueError:
                raise ExpressionError(
                    f"bad number {text[i:j]!r} at position {i}") from None
            tokens.append(_Token("num", value, i))
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(_Token("name", text[i:j], i))
            i = j
            continue
        if c in "+-*/^(),":
            tokens.append(_Token(c, c, i))
            i += 1
            continue
        raise ExpressionError(f"unexpected character {c!r} at position {i}")
    tokens.append(_Token("end", None, n))
    return tokens


class _Parser:
    def __init__(self, text):
        self.text = text
        self.tokens = _tokenize(text)
        self.k = 0

    def peek(self):
        return self.tokens[self.k]

    def take(self, kind=None):
        tok = self.tokens[self.k]
        if kind is not None and tok.kind != kind:
            raise ExpressionError(
                f"expected {kind!r} at position {tok.pos}, got {tok.kind!r}")
        self.k += 1
        return tok

    def parse(self):
        node = self.expr()
        tok = self.peek()
        if tok.kind != "end":
            raise ExpressionError(
                f"trailing input at position {tok.pos}: {tok.value!r}")
        return node

    def expr(self):
        node = self.term()
        while self.peek().kind in ("+", "-"):
            op = self.take().kind
            rhs = self.term()
            node = ("add" if op == "+" else "sub", node, rhs)
        return node

    def term(self):
        node = self.factor()
        while self.peek().kind in ("*", "/"):
            op = self.take().kind
            rhs = self.factor()
            node = ("mul" if op == "*" else "div", node, rhs)
        return node

    def factor(self):
        # unary minus binds looser than '^': -2^2 == -(2^2)
        if self.peek().kind == "-":
            self.take()
            return ("neg", self.factor())
        return self.power()

    def power(self):
        node = self.primary()
        if self.peek().kind == "^":
            self.take()
            return ("pow2", node, self.factor())
        return node

    def primary(self):
        tok = self.peek()
        if tok.kind == "num":
            self.take()
            return ("const", tok.value)
        if tok.kind == "(":
            self.take()
            node = self.expr()
            self.take(")")
            return node
        if tok.kind == "name":
            self.take()
            name = tok.value
            if self.peek().kind == "(":
                if name not in _FUNCTIONS:
                    raise ExpressionError(
                        f"unknown function {name!r} at position {tok.pos}")
                self.take("(")
                args = [self.expr()]
                while self.peek().kind == ",":
                    self.take()
                    args.append(self.expr())
                self.take(")")
                _, arity = _FUNCTIONS[name]
                if len(args) != arity:
                    raise ExpressionError(
                        f"function {name!r} takes {arity} argument(s), got "
                        f"{len(args)} at position {tok.pos}")
                return ("call", name, args)
            if name in _CONSTANTS:
                return ("const", _CONSTANTS[name])
            if name in _VARIABLES:
                return ("var", name)
            raise ExpressionError(
                f"unknown name {name!r} at position {tok.pos}")
        raise ExpressionError(
            f"unexpected token at position {tok.pos}")


def _collect_vars(node, out):
    kind = node[0]
    if kind == "var":
        out.add(node[1])
    elif kind == "call":
        for a in node[2]:
            _collect_vars(a, out)
    elif kind in ("add", "sub", "mul", "div", "pow2"):
        _collect_vars(node[1], out)
        _collect_vars(node[2], out)
    elif kind == "neg":
        _collect_vars(node[1], out)


def _evaluate(node, env):
    kind = node[0]
    if kind == "const":
        return node[1]
    if kind == "var":
        return env[node[1]]
    if kind == "neg":
        return -_evaluate(node[1], env)
    if kind == "add":
        return _evaluate(node[1], env) + _evaluate(node[2], env)
    if kind == "sub":
        return _evaluate(node[1], env) - _evaluate(node[2], env)
    if kind == "mul":
        return _evaluate(node[1], env) * _evaluate(node[2], env)
    if kind == "div":
        return _evaluate(node[1], env) / _evaluate(node[2], env)
    if kind == "pow2":
        return np.power(_evaluate(node[1], env), _evaluate(node[2], env))
    if kind == "call":
        fn, _ = _FUNCTIONS[node[1]]
        return fn(*(_evaluate(a, env) for a in node[2]))
    raise ExpressionError(f"corrupt expression node {kind!r}")


class Expression:
    """A compiled expression over the variables x, y and s."""

    def __init__(self, text):
        self.text = text
        self._ast = _Parser(text).parse()
        vs = set()
        _collect_vars(self._ast, vs)
        self.variables = frozenset(vs)

    def __repr__(self):
        return f"Expression({self.text!r})"

    def __call__(self, x=0.0, y=0.0, s=0.0):
        return _evaluate(self._ast, {"x": x, "y": y, "s": s})

    def as_coefficient(self, dim):
        """Adapter (pts) -> values for spatial coefficients (no s allowed)."""
        if "s" in self.variables:
            raise ExpressionError(
                f"coefficient expression {self.text!r} must not use 's'")
        if dim < 2 and "y" in self.variables:
            raise ExpressionError(
                f"expression {self.text!r} uses 'y' on a 1D domain")

        def fn(pts):
            pts = np.asarray(pts, dtype=float)
            x = pts[:, 0]
            y = pts[:, 1] if pts.shape[1] > 1 else np.zeros_like(x)
            out = self(x=x, y=y)
            return np.broadcast_to(np.asarray(out, dtype=float),
                                   (pts.shape[0],)).copy()
        return fn

    def as_profile(self, dim):
        """Adapter (pts, s) -> values for state-dependent terms."""
        if dim < 2 and "y" in self.variables:
            raise ExpressionError(
                f"expression {self.text!r} uses 'y' on a 1D domain")

        def fn(pts, s):
            pts = np.asarray(pts, dtype=float)
            x = pts[:, 0]
            y = pts[:, 1] if pts.shape[1] > 1 else np.zeros_like(x)
            s = np.asarray(s, dtype=float)
            return self(x=x, y=y, s=s)
        return fn


def parse_expression(text):
    if not isinstance(text, str) or not text.strip():
        raise ExpressionError("expression must be a nonempty string")
    return Expression(text)
