"""Electromagnetic field configurations as exact rational polynomials.

A, V and gauge functions are trivariate polynomials with Fraction
coefficients, so the magnetic field, the electric field and every partial
derivative a residual check needs evaluate exactly.  Floating point enters
only when a polynomial is sampled on a grid.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

_VARS = ("x", "y", "z")


class FieldExprError(ValueError):
    """Parse error in the plain-text field-expression syntax."""

    def __init__(self, message, line=1, col=1):
        super().__init__(f"line {line}, col {col}: {message}")
        self.line = line
        self.col = col


def rational(value):
    """Coerce to Fraction; floats are rejected to keep coefficients exact."""
    if isinstance(value, float):
        raise TypeError(
            f"field coefficients must be exact rationals, got float {value!r}; "
            "pass a Fraction, int or string like '1/2'")
    return Fraction(value)


class Poly3:
    """Polynomial in (x, y, z) with rational coefficients.

    Immutable by convention; all operations return new instances and are
    exact.  Terms map an exponent triple to a nonzero Fraction.
    """

    __slots__ = ("_terms",)

    def __init__(self, terms=None):
        cleaned = {}
        if terms:
            items = terms.items() if isinstance(terms, dict) else terms
            for expo, coef in items:
                expo = tuple(expo)
                if len(expo) != 3 or any((not isinstance(e, int)) or e < 0 for e in expo):
                    raise ValueError(f"bad exponent triple {expo!r}")
                coef = rational(coef) + cleaned.get(expo, 0)
                if coef:
                    cleaned[expo] = coef
                elif expo in cleaned:
                    del cleaned[expo]
        self._terms = cleaned

    @classmethod
    def const(cls, value):
        value = rational(value)
        return cls({(0, 0, 0): value} if value else {})

    @classmethod
    def variable(cls, axis):
        expo = [0, 0, 0]
        expo[axis - 1] = 1
        return cls({tuple(expo): 1})

    @property
    def terms(self):
        return tuple(sorted(self._terms.items()))

    @property
    def is_zero(self):
        return not self._terms

    @property
    def degree(self):
        return max((sum(e) for e in self._terms), default=0)

    def __add__(self, other):
        if not isinstance(other, Poly3):
            other = Poly3.const(other)
        out = dict(self._terms)
        for expo, coef in other._terms.items():
            coef = out.get(expo, 0) + coef
            if coef:
                out[expo] = coef
            else:
                out.pop(expo, None)
        p = Poly3.__new__(Poly3)
        p._terms = out
        return p

    __radd__ = __add__

    def __neg__(self):
        p = Poly3.__new__(Poly3)
        p._terms = {e: -c for e, c in self._terms.items()}
        return p

    def __sub__(self, other):
        if not isinstance(other, Poly3):
            other = Poly3.const(other)
        return self + (-other)

    def __rsub__(self, other):
        return Poly3.const(other) - self

    def __mul__(self, other):
        if not isinstance(other, Poly3):
            c = rational(other)
            p = Poly3.__new__(Poly3)
            p._terms = {} if not c else {e: c * v for e, v in self._terms.items()}
            return p
        out = {}
        for e1, c1 in self._terms.items():
            for e2, c2 in other._terms.items():
                expo = (e1[0] + e2[0], e1[1] + e2[1], e1[2] + e2[2])
                coef = out.get(expo, 0) + c1 * c2
                if coef:
                    out[expo] = coef
                else:
                    out.pop(expo, None)
        p = Poly3.__new__(Poly3)
        p._terms = out
        return p

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Poly3):
            if other.degree > 0:
                raise ZeroDivisionError("division by a non-constant polynomial")
            other = other._terms.get((0, 0, 0), Fraction(0))
        return self * (1 / rational(other))

    def __pow__(self, n):
        if not isinstance(n, int) or n < 0:
            raise ValueError("polynomial powers must be nonnegative integers")
        out = Poly3.const(1)
        for _ in range(n):
            out = out * self
        return out

    def diff(self, axis):
        """Exact partial derivative along axis 1, 2 or 3."""
        a = axis - 1
        out = {}
        for expo, coef in self._terms.items():
            if expo[a] == 0:
                continue
            new = list(expo)
            new[a] -= 1
            out[tuple(new)] = coef * expo[a]
        p = Poly3.__new__(Poly3)
        p._terms = out
        return p

    def __call__(self, x, y, z):
        """Exact evaluation at rational coordinates."""
        total = Fraction(0)
        for (ex, ey, ez), coef in self._terms.items():
            total += coef * x**ex * y**ey * z**ez
        return total

    def on_grid(self, X, Y, Z):
        """Float evaluation on (broadcastable) numpy coordinate arrays."""
        total = np.zeros(np.broadcast(X, Y, Z).shape)
        for (ex, ey, ez), coef in self._terms.items():
            term = float(coef) * np.ones_like(total)
            if ex:
                term = term * X**ex
            if ey:
                term = term * Y**ey
            if ez:
                term = term * Z**ez
            total += term
        return total

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Poly3.const(other)
        if not isinstance(other, Poly3):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        return hash(self.terms)

    def __str__(self):
        if not self._terms:
            return "0"
        parts = []
        for (ex, ey, ez), coef in self.terms:
            mono = "*".join(
                [f"{v}^{e}" if e > 1 else v
                 for v, e in zip(_VARS, (ex, ey, ez)) if e])
            if mono:
                head = "" if coef == 1 else ("-" if coef == -1 else f"{coef}*")
                parts.append(f"{head}{mono}")
            else:
                parts.append(str(coef))
        out = " + ".join(parts).replace("+ -", "- ")
        return out

    def __repr__(self):
        return f"Poly3({str(self)!r})"


X, Y, Z = Poly3.variable(1), Poly3.variable(2), Poly3.variable(3)
ZERO = Poly3()
ZERO_VEC = (ZERO, ZERO, ZERO)


def grad(p):
    return (p.diff(1), p.diff(2), p.diff(3))


def curl(A):
    a1, a2, a3 = A
    return (a3.diff(2) - a2.diff(3),
            a1.diff(3) - a3.diff(1),
            a2.diff(1) - a1.diff(2))


def vec_is_zero(A):
    return all(c.is_zero for c in A)


@dataclass(frozen=True)
class FieldConfig:
    """Static electromagnetic field data with exact derived quantities.

    `Hmag` (the magnetic field, named to avoid colliding with the
    Hamiltonian) and `E` are computed symbolically from A and V.  The time
    derivative of A is carried as a placeholder but must be identically
    zero: only static configurations are supported.
    """

    A: tuple = ZERO_VEC
    V: Poly3 = ZERO
    q: Fraction = Fraction(1)
    hbar: Fraction = Fraction(1)
    m: Fraction = Fraction(1)
    c: Fraction = Fraction(1)
    dAdt: tuple = ZERO_VEC
    Hmag: tuple = field(init=False)
    E: tuple = field(init=False)

    def __post_init__(self):
        A = tuple(self.A)
        if len(A) != 3 or not all(isinstance(p, Poly3) for p in A):
            raise ValueError("A must be three Poly3 components")
        if not isinstance(self.V, Poly3):
            raise ValueError("V must be a Poly3")
        if not vec_is_zero(tuple(self.dAdt)):
            raise ValueError("only static fields are supported: dA/dt must be 0")
        for name in ("q", "hbar", "m", "c"):
            object.__setattr__(self, name, rational(getattr(self, name)))
        if self.m <= 0 or self.c <= 0 or self.hbar <= 0:
            raise ValueError("hbar, m and c must be positive")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "dAdt", tuple(self.dAdt))
        object.__setattr__(self, "Hmag", curl(A))
        object.__setattr__(self, "E", tuple(-g for g in grad(self.V)))
        self._spot_check()

    def _spot_check(self, points=20, seed=1846):
        # exact consistency of the stored evaluators with fresh derivatives
        rng = random.Random(seed)
        a1, a2, a3 = self.A
        fresh_H = (a3.diff(2) - a2.diff(3),
                   a1.diff(3) - a3.diff(1),
                   a2.diff(1) - a1.diff(2))
        fresh_E = tuple(-self.V.diff(i) for i in (1, 2, 3))
        for _ in range(points):
            pt = tuple(Fraction(rng.randint(-9, 9), rng.randint(1, 9))
                       for _ in range(3))
            for stored, again in zip(self.Hmag + self.E, fresh_H + fresh_E):
                if stored(*pt) != again(*pt):
                    raise ValueError("derived field evaluators are inconsistent")

    @property
    def uniform_H(self):
        """True when the magnetic field is constant in space."""
        return all(h.degree == 0 for h in self.Hmag)

    def constants(self):
        return {"q": self.q, "hbar": self.hbar, "m": self.m, "c": self.c}

    def describe(self):
        return {
            "A": [str(p) for p in self.A],
            "V": str(self.V),
            "Hmag": [str(p) for p in self.Hmag],
            "E": [str(p) for p in self.E],
            "q": str(self.q), "hbar": str(self.hbar),
            "m": str(self.m), "c": str(self.c),
        }


def make_zero_field(**constants):
    """Field-free configuration: A = 0, V = 0."""
    return FieldConfig(**constants)


def make_uniform_B(B, gauge="symmetric", **constants):
    """Uniform magnetic field B in one of two standard gauges.

    symmetric: A = (1/2) B x r for any direction of B.
    landau:    A = (-Bz*y, 0, 0); requires B along the z axis.
    """
    b1, b2, b3 = (rational(b) for b in B)
    if gauge == "symmetric":
        A = ((b2 * Z - b3 * Y) / 2, (b3 * X - b1 * Z) / 2, (b1 * Y - b2 * X) / 2)
    elif gauge == "landau":
        if b1 or b2:
            raise ValueError(
                f"landau gauge needs B along z, got B = ({b1}, {b2}, {b3}); "
                "use the symmetric gauge for tilted fields")
        A = (-b3 * Y, ZERO, ZERO)
    else:
        raise ValueError(f"unknown gauge {gauge!r}; expected symmetric or landau")
    return FieldConfig(A=A, **constants)


def make_coulomb_quadratic(k, **constants):
    """Central quadratic potential V = k (x^2 + y^2 + z^2), A = 0."""
    k = rational(k)
    return FieldConfig(V=k * (X**2 + Y**2 + Z**2), **constants)


def gauge_transform(cfg, chi):
    """New configuration with A -> A + grad(chi); V and constants unchanged."""
    if not isinstance(chi, Poly3):
        raise ValueError("gauge function must be a Poly3")
    A = tuple(a + g for a, g in zip(cfg.A, grad(chi)))
    return FieldConfig(A=A, V=cfg.V, q=cfg.q, hbar=cfg.hbar, m=cfg.m, c=cfg.c)


# ---------------------------------------------------------------------------
# plain-text field-expression syntax
#
#   expr   := term (('+'|'-') term)*
#   term   := factor (('*'|'/') factor)*
#   factor := ('+'|'-') factor | atom (('**'|'^') integer)?
#   atom   := number | name | '(' expr ')'
#
# Numbers are integers or decimal literals (parsed exactly); x, y, z are the
# coordinates; any other name must appear in the constants mapping.
# ---------------------------------------------------------------------------

_TOKEN_OPS = ("**", "^", "+", "-", "*", "/", "(", ")", ",")


class _Tokens:
    def __init__(self, text, line=1):
        self.text = text
        self.line = line
        self.items = []     # (kind, value, col)
        self._scan()
        self.pos = 0

    def _scan(self):
        i, n = 0, len(self.text)
        while i < n:
            ch = self.text[i]
            if ch.isspace():
                i += 1
                continue
            col = i + 1
            if ch.isdigit() or (ch == "." and i + 1 < n and self.text[i + 1].isdigit()):
                j = i
                seen_dot = False
                while j < n and (self.text[j].isdigit() or (self.text[j] == "." and not seen_dot)):
                    seen_dot = seen_dot or self.text[j] == "."
                    j += 1
                self.items.append(("number", self.text[i:j], col))
                i = j
            elif ch.isalpha() or ch == "_":
                j = i
                while j < n and (self.text[j].isalnum() or self.text[j] == "_"):
                    j += 1
                self.items.append(("name", self.text[i:j], col))
                i = j
            elif self.text.startswith("**", i):
                self.items.append(("op", "**", col))
                i += 2
            elif ch in "^+-*/(),":
                self.items.append(("op", ch, col))
                i += 1
            else:
                raise FieldExprError(f"unexpected character {ch!r}", self.line, col)
        self.items.append(("end", "", n + 1))

    def peek(self):
        return self.items[self.pos]

    def next(self):
        tok = self.items[self.pos]
        self.pos += 1
        return tok

    def expect(self, value):
        kind, val, col = self.next()
        if val != value:
            raise FieldExprError(f"expected {value!r}, got {val or 'end of input'!r}",
                                 self.line, col)


class _ExprParser:
    def __init__(self, tokens, constants):
        self.toks = tokens
        self.constants = constants or {}

    def parse_expr(self):
        value = self.parse_term()
        while self.toks.peek()[1] in ("+", "-"):
            _, op, _ = self.toks.next()
            rhs = self.parse_term()
            value = value + rhs if op == "+" else value - rhs
        return value

    def parse_term(self):
        value = self.parse_factor()
        while self.toks.peek()[1] in ("*", "/"):
            _, op, col = self.toks.next()
            rhs = self.parse_factor()
            if op == "*":
                value = value * rhs
            else:
                try:
                    value = value / rhs
                except ZeroDivisionError as exc:
                    raise FieldExprError(str(exc), self.toks.line, col) from None
        return value

    def parse_factor(self):
        kind, val, col = self.toks.peek()
        if val in ("+", "-"):
            self.toks.next()
            inner = self.parse_factor()
            return inner if val == "+" else -inner
        base = self.parse_atom()
        kind, val, col = self.toks.peek()
        if val in ("**", "^"):
            self.toks.next()
            kind, val, col = self.toks.next()
            if kind != "number" or "." in val:
                raise FieldExprError("exponent must be a literal integer",
                                     self.toks.line, col)
            return base ** int(val)
        return base

    def parse_atom(self):
        kind, val, col = self.toks.next()
        if kind == "number":
            return Poly3.const(Fraction(val))
        if kind == "name":
            if val == "x":
                return X
            if val == "y":
                return Y
            if val == "z":
                return Z
            if val in self.constants:
                return Poly3.const(self.constants[val])
            raise FieldExprError(f"unknown name {val!r}", self.toks.line, col)
        if val == "(":
            inner = self.parse_expr()
            self.toks.expect(")")
            return inner
        raise FieldExprError(f"unexpected {val or 'end of input'!r}",
                             self.toks.line, col)


def parse_scalar_field(text, constants=None, line=1):
    """Parse one scalar polynomial expression, e.g. ``x*y/2 - z^2``."""
    toks = _Tokens(text, line)
    parser = _ExprParser(toks, constants)
    value = parser.parse_expr()
    kind, val, col = toks.peek()
    if kind != "end":
        raise FieldExprError(f"trailing input starting at {val!r}", line, col)
    return value


def parse_vector_field(text, constants=None, line=1):
    """Parse a 3-vector of expressions, e.g. ``(-B*y/2, B*x/2, 0)``."""
    toks = _Tokens(text, line)
    toks.expect("(")
    parser = _ExprParser(toks, constants)
    comps = [parser.parse_expr()]
    for _ in range(2):
        toks.expect(",")
        comps.append(parser.parse_expr())
    toks.expect(")")
    kind, val, col = toks.peek()
    if kind != "end":
        raise FieldExprError(f"trailing input starting at {val!r}", line, col)
    return tuple(comps)
