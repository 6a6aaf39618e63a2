"""Polynomials with exact differentiation and certified gradient Lipschitz bounds.

Expressions over variables ``x1 .. xn`` are parsed into a canonical sparse
monomial form, differentiated formally, and bounded on boxes via Gershgorin
row sums of coefficient-bounded Hessian entries.  The resulting constants
feed the quadratic upper models used by every solver in this package.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

# Floor for Lipschitz constants of affine functions: the quadratic models
# require a strictly positive modulus.
LIPSCHITZ_FLOOR = 1e-8


class PolynomialParseError(ValueError):
    """Raised on malformed expressions; carries the byte offset of the fault."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at offset {position})")
        self.position = position


@dataclass(frozen=True)
class Monomial:
    """A single term: ``coefficient * prod(x_i ** degree_i)``.

    ``exponents`` maps 0-based variable indices to strictly positive degrees;
    the constant term has an empty map.
    """

    coefficient: float
    exponents: tuple[tuple[int, int], ...]  # sorted (index, degree), degree > 0

    def degree(self) -> int:
        return sum(d for _, d in self.exponents)

    def evaluate(self, x: np.ndarray) -> float:
        v = self.coefficient
        for i, d in self.exponents:
            v *= x[i] ** d
        return v


def _dense_exponents(mono: Monomial, dimension: int) -> tuple[int, ...]:
    dense = [0] * dimension
    for i, d in mono.exponents:
        dense[i] = d
    return tuple(dense)


class Polynomial:
    """Canonical multivariate polynomial.

    Terms are kept in descending graded lexicographic order with no duplicate
    exponent maps and no exactly-zero coefficients, so equality is structural
    and evaluation order is reproducible.
    """

    __slots__ = ("dimension", "terms")

    def __init__(self, dimension: int, terms: Sequence[Monomial]):
        if dimension < 1:
            raise ValueError("dimension must be positive")
        merged: dict[tuple[tuple[int, int], ...], float] = {}
        for t in terms:
            for i, d in t.exponents:
                if not (0 <= i < dimension):
                    raise ValueError(f"variable index {i} out of range for dimension {dimension}")
                if d <= 0:
                    raise ValueError("exponent entries must be strictly positive")
            merged[t.exponents] = merged.get(t.exponents, 0.0) + t.coefficient
        canon = [Monomial(c, e) for e, c in merged.items() if c != 0.0]
        canon.sort(key=lambda m: (m.degree(), _dense_exponents(m, dimension)), reverse=True)
        self.dimension = dimension
        self.terms = tuple(canon)

    # -- algebra ---------------------------------------------------------

    def __add__(self, other: "Polynomial") -> "Polynomial":
        self._check_dim(other)
        return Polynomial(self.dimension, self.terms + other.terms)

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        return self + (-other)

    def __neg__(self) -> "Polynomial":
        return Polynomial(self.dimension, [Monomial(-t.coefficient, t.exponents) for t in self.terms])

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return Polynomial(
                self.dimension,
                [Monomial(t.coefficient * float(other), t.exponents) for t in self.terms],
            )
        self._check_dim(other)
        prods = []
        for a in self.terms:
            for b in other.terms:
                exps = dict(a.exponents)
                for i, d in b.exponents:
                    exps[i] = exps.get(i, 0) + d
                prods.append(Monomial(a.coefficient * b.coefficient, tuple(sorted(exps.items()))))
        return Polynomial(self.dimension, prods)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "Polynomial":
        if k < 0:
            raise ValueError("negative powers are not polynomials")
        out = Polynomial.constant(1.0, self.dimension)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Polynomial)
            and self.dimension == other.dimension
            and self.terms == other.terms
        )

    def __hash__(self):
        return hash((self.dimension, self.terms))

    def _check_dim(self, other: "Polynomial") -> None:
        if self.dimension != other.dimension:
            raise ValueError("dimension mismatch between polynomials")

    @staticmethod
    def constant(c: float, dimension: int) -> "Polynomial":
        return Polynomial(dimension, [Monomial(float(c), ())] if c != 0.0 else [])

    @staticmethod
    def variable(index: int, dimension: int) -> "Polynomial":
        return Polynomial(dimension, [Monomial(1.0, ((index, 1),))])

    # -- printing --------------------------------------------------------

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for j, t in enumerate(self.terms):
            factors = []
            coeff = abs(t.coefficient)
            if coeff != 1.0 or not t.exponents:
                factors.append(np.format_float_positional(coeff, unique=True, trim="-"))
            for i, d in t.exponents:
                factors.append(f"x{i + 1}" if d == 1 else f"x{i + 1}^{d}")
            term = "*".join(factors)
            if j == 0:
                parts.append(term if t.coefficient >= 0 else f"-{term}")
            else:
                parts.append(f"+ {term}" if t.coefficient >= 0 else f"- {term}")
        return " ".join(parts)

    __repr__ = __str__


# ---------------------------------------------------------------------------
# Parser: expr := term (('+'|'-') term)*, term := unary ('*' unary)*,
# unary := ('+'|'-')* factor, factor := primary ('^' INT)?,
# primary := NUMBER | VAR | '(' expr ')'
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+\.\d*|\.\d+|\d+)|(?P<var>x\d+)|(?P<op>[-+*^()]))"
)


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            stripped = text[pos:].lstrip()
            at = len(text) - len(stripped)
            if not stripped:
                break
            raise PolynomialParseError(f"unexpected character {stripped[0]!r}", at)
        if m.group("num") is not None:
            tokens.append(("num", m.group("num"), m.start("num")))
        elif m.group("var") is not None:
            tokens.append(("var", m.group("var"), m.start("var")))
        else:
            tokens.append(("op", m.group("op"), m.start("op")))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, tokens, dimension: int):
        self.tokens = tokens
        self.k = 0
        self.dimension = dimension

    def peek(self):
        return self.tokens[self.k]

    def advance(self):
        tok = self.tokens[self.k]
        self.k += 1
        return tok

    def expect_op(self, op: str):
        kind, val, pos = self.peek()
        if kind != "op" or val != op:
            raise PolynomialParseError(f"expected {op!r}", pos)
        return self.advance()

    def parse(self) -> Polynomial:
        p = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise PolynomialParseError(f"unexpected token {val!r}", pos)
        return p

    def expr(self) -> Polynomial:
        p = self.term()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "+-":
                self.advance()
                q = self.term()
                p = p + q if val == "+" else p - q
            else:
                return p

    def term(self) -> Polynomial:
        p = self.unary()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val == "*":
                self.advance()
                p = p * self.unary()
            else:
                return p

    def unary(self) -> Polynomial:
        sign = 1.0
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "+-":
                self.advance()
                if val == "-":
                    sign = -sign
            else:
                break
        p = self.factor()
        return p if sign > 0 else -p

    def factor(self) -> Polynomial:
        p = self.primary()
        kind, val, _ = self.peek()
        if kind == "op" and val == "^":
            self.advance()
            kind, val, pos = self.peek()
            if kind == "op" and val == "-":
                raise PolynomialParseError("negative exponent", pos)
            if kind != "num":
                raise PolynomialParseError("expected integer exponent", pos)
            if "." in val:
                raise PolynomialParseError("fractional exponent", pos)
            self.advance()
            p = p ** int(val)
        return p

    def primary(self) -> Polynomial:
        kind, val, pos = self.advance()
        if kind == "num":
            return Polynomial.constant(float(val), self.dimension)
        if kind == "var":
            index = int(val[1:]) - 1
            if not (0 <= index < self.dimension):
                raise PolynomialParseError(
                    f"variable {val} out of range for dimension {self.dimension}", pos
                )
            return Polynomial.variable(index, self.dimension)
        if kind == "op" and val == "(":
            p = self.expr()
            self.expect_op(")")
            return p
        raise PolynomialParseError(f"unexpected token {val!r}" if val else "unexpected end of input", pos)


def parse_polynomial(text: str, dimension: int) -> Polynomial:
    """Parse an expression over ``x1 .. x<dimension>`` into canonical form.

    Grammar: decimal/integer literals, ``+ - * ^`` with nonnegative integer
    powers, parentheses, whitespace ignored.  Anything else raises
    :class:`PolynomialParseError` with the byte offset of the fault.
    """
    return _Parser(_tokenize(text), dimension).parse()


def eval_poly(p: Polynomial, x) -> float:
    """Evaluate ``p`` at ``x``, accumulating terms in canonical order."""
    x = np.asarray(x, dtype=float)
    if x.shape != (p.dimension,):
        raise ValueError(f"point has shape {x.shape}, expected ({p.dimension},)")
    total = 0.0
    for t in p.terms:
        total += t.evaluate(x)
    return total


def eval_poly_many(p: Polynomial, points: np.ndarray) -> np.ndarray:
    """Vectorized evaluation on an ``(N, n)`` array of points."""
    points = np.asarray(points, dtype=float)
    out = np.zeros(points.shape[0])
    for t in p.terms:
        v = np.full(points.shape[0], t.coefficient)
        for i, d in t.exponents:
            v *= points[:, i] ** d
        out += v
    return out


def grad_poly(p: Polynomial) -> list[Polynomial]:
    """Exact formal gradient, one canonical polynomial per coordinate."""
    grads = []
    for j in range(p.dimension):
        terms = []
        for t in p.terms:
            exps = dict(t.exponents)
            d = exps.get(j, 0)
            if d == 0:
                continue
            if d == 1:
                del exps[j]
            else:
                exps[j] = d - 1
            terms.append(Monomial(t.coefficient * d, tuple(sorted(exps.items()))))
        grads.append(Polynomial(p.dimension, terms))
    return grads


def _monomial_box_bound(mono: Monomial, absmax: np.ndarray) -> float:
    """Bound on |mono| over the box whose coordinatewise |x_i| max is absmax."""
    v = abs(mono.coefficient)
    for i, d in mono.exponents:
        v *= absmax[i] ** d
    return v


def lipschitz_grad_bound(p: Polynomial, lower, upper) -> float:
    """Certified gradient Lipschitz constant of ``p`` on the box [lower, upper].

    Bounds the Hessian spectral norm by the maximum Gershgorin row sum of
    entrywise bounds, each entry bounded by sum(|coeff| * max |monomial|).
    Affine inputs are floored at ``LIPSCHITZ_FLOOR`` so the constant stays
    strictly positive.
    """
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if lower.shape != (p.dimension,) or upper.shape != (p.dimension,):
        raise ValueError("box bounds must match the polynomial dimension")
    if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
        raise ValueError("unbounded box")
    if np.any(lower > upper):
        raise ValueError("box lower bounds exceed upper bounds")
    absmax = np.maximum(np.abs(lower), np.abs(upper))
    grads = grad_poly(p)
    n = p.dimension
    row_sums = np.zeros(n)
    for i in range(n):
        hess_row = grad_poly(grads[i])
        for j in range(n):
            row_sums[i] += sum(_monomial_box_bound(t, absmax) for t in hess_row[j].terms)
    bound = float(np.max(row_sums)) if n else 0.0
    return max(bound, LIPSCHITZ_FLOOR)


@dataclass(frozen=True)
class SmoothFunction:
    """A C^2 function handle with a certified gradient Lipschitz constant."""

    fn: Callable[[np.ndarray], float]
    grad_fn: Callable[[np.ndarray], np.ndarray]
    lipschitz_grad: float
    provenance: str = "builtin"
    poly: Optional[Polynomial] = field(default=None, compare=False)

    def __post_init__(self):
        if self.lipschitz_grad <= 0:
            raise ValueError("lipschitz_grad must be strictly positive")

    def __call__(self, x) -> float:
        return self.fn(np.asarray(x, dtype=float))

    def grad(self, x) -> np.ndarray:
        return self.grad_fn(np.asarray(x, dtype=float))


def smooth_from_polynomial(p: Polynomial, lower, upper, lipschitz_override: float | None = None) -> SmoothFunction:
    """Wrap a polynomial with its exact gradient and a box-certified constant."""
    grads = grad_poly(p)

    def fn(x: np.ndarray) -> float:
        return eval_poly(p, x)

    def grad_fn(x: np.ndarray) -> np.ndarray:
        return np.array([eval_poly(g, x) for g in grads])

    lip = float(lipschitz_override) if lipschitz_override is not None else lipschitz_grad_bound(p, lower, upper)
    return SmoothFunction(fn=fn, grad_fn=grad_fn, lipschitz_grad=lip, provenance="parsed-polynomial", poly=p)


@dataclass
class NlpProblem:
    """An inequality-constrained program over a simple convex set.

    minimize objective(x) subject to constraints[i](x) <= 0 and x in simple_set.
    """

    dimension: int
    objective: SmoothFunction
    constraints: list[SmoothFunction]
    simple_set: "object"  # mmsqp.sets.SimpleSet; kept loose to avoid an import cycle

    @property
    def num_constraints(self) -> int:
        return len(self.constraints)

    def constraint_values(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.array([c(x) for c in self.constraints])

    def max_violation(self, x) -> float:
        if not self.constraints:
            return 0.0
        return float(max(0.0, np.max(self.constraint_values(x))))


def finite_diff_check(f: SmoothFunction, x, h: float = 1e-6) -> float:
    """Max relative mismatch between f.grad and central differences at x.

    Relative error uses a unit floor in the denominator so near-zero gradient
    components do not blow up the ratio.
    """
    if h <= 0:
        raise ValueError("step h must be positive")
    x = np.asarray(x, dtype=float)
    g = f.grad(x)
    worst = 0.0
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        fd = (f(x + e) - f(x - e)) / (2.0 * h)
        worst = max(worst, abs(fd - g[i]) / max(1.0, abs(g[i])))
    return worst
