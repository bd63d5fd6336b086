"""Sparse multivariate polynomials, truncated univariate power series,
Newton diagrams, and Lojasiewicz exponents of convenient polynomials.

Coefficients stay exact ``fractions.Fraction`` values wherever the inputs are
rational; only operations that force an irrational scale factor (normalising
a direction of irrational length, square roots of non-square leading
coefficients) degrade the affected coefficients to floats.
"""

from __future__ import annotations

import math
import re
from fractions import Fraction
from math import isqrt

import numpy as np
from scipy.optimize import linprog

from .errors import NotConvenientError, ParseError, ZeroSeriesError


def _coerce(c):
    """Normalise a coefficient: ints become Fractions, floats stay floats."""
    if isinstance(c, Fraction):
        return c
    if isinstance(c, int):
        return Fraction(c)
    if isinstance(c, float):
        return c
    if isinstance(c, np.integer):
        return Fraction(int(c))
    if isinstance(c, np.floating):
        return float(c)
    raise TypeError(f"unsupported coefficient type: {type(c).__name__}")


def _exact_sqrt(q):
    """Square root of a nonnegative Fraction if it is rational, else None."""
    n, d = q.numerator, q.denominator
    if n < 0:
        return None
    rn, rd = isqrt(n), isqrt(d)
    if rn * rn == n and rd * rd == d:
        return Fraction(rn, rd)
    return None


class MultiPoly:
    """Sparse multivariate polynomial: exponent tuple -> nonzero coefficient."""

    __slots__ = ("nvars", "terms")

    def __init__(self, nvars, terms=()):
        nvars = int(nvars)
        if nvars < 1:
            raise ValueError("nvars must be positive")
        items = terms.items() if isinstance(terms, dict) else terms
        tidy = {}
        for exp, c in items:
            exp = tuple(int(e) for e in exp)
            if len(exp) != nvars:
                raise ValueError(f"exponent {exp} has length {len(exp)}, expected {nvars}")
            if any(e < 0 for e in exp):
                raise ValueError(f"negative exponent in {exp}")
            c = _coerce(c)
            prev = tidy.get(exp)
            c = c if prev is None else prev + c
            if c == 0:
                tidy.pop(exp, None)
            else:
                tidy[exp] = c
        self.nvars = nvars
        self.terms = tidy

    @classmethod
    def zero(cls, nvars):
        return cls(nvars, ())

    @classmethod
    def constant(cls, c, nvars):
        return cls(nvars, {(0,) * nvars: c})

    @classmethod
    def variable(cls, i, nvars):
        exp = [0] * nvars
        exp[i] = 1
        return cls(nvars, {tuple(exp): 1})

    def is_zero(self):
        return not self.terms

    def degree(self):
        """Total degree; 0 for the zero polynomial."""
        return max((sum(e) for e in self.terms), default=0)

    def support(self):
        return set(self.terms)

    def _wrap(self, other):
        if isinstance(other, MultiPoly):
            if other.nvars != self.nvars:
                raise ValueError("nvars mismatch")
            return other
        return MultiPoly.constant(other, self.nvars)

    def __add__(self, other):
        other = self._wrap(other)
        out = dict(self.terms)
        for exp, c in other.terms.items():
            out[exp] = out.get(exp, Fraction(0)) + c
        return MultiPoly(self.nvars, out)

    __radd__ = __add__

    def __neg__(self):
        return MultiPoly(self.nvars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._wrap(other))

    def __rsub__(self, other):
        return self._wrap(other) - self

    def __mul__(self, other):
        if not isinstance(other, MultiPoly):
            c = _coerce(other)
            return MultiPoly(self.nvars, {e: c * v for e, v in self.terms.items()})
        if other.nvars != self.nvars:
            raise ValueError("nvars mismatch")
        out = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                exp = tuple(a + b for a, b in zip(e1, e2))
                out[exp] = out.get(exp, Fraction(0)) + c1 * c2
        return MultiPoly(self.nvars, out)

    __rmul__ = __mul__

    def __pow__(self, k):
        if k < 0:
            raise ValueError("negative power")
        out = MultiPoly.constant(1, self.nvars)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base if k > 1 else base
            k >>= 1
        return out

    def eval(self, x):
        """Evaluate at a point; exact when point and coefficients are rational."""
        if len(x) != self.nvars:
            raise ValueError(f"point has dimension {len(x)}, expected {self.nvars}")
        pt = [float(xi) if isinstance(xi, (np.floating, np.integer)) else xi for xi in x]
        total = Fraction(0)
        for exp, c in self.terms.items():
            v = c
            for xi, e in zip(pt, exp):
                if e:
                    v = v * xi ** e
            total = total + v
        return total

    def deriv(self, i):
        out = {}
        for exp, c in self.terms.items():
            e = exp[i]
            if e:
                nexp = list(exp)
                nexp[i] = e - 1
                out[tuple(nexp)] = c * e
        return MultiPoly(self.nvars, out)

    def gradient(self):
        return [self.deriv(i) for i in range(self.nvars)]

    def restrict_to(self, keep):
        """Set all variables outside ``keep`` to zero; reindex onto ``keep``."""
        keep = list(keep)
        out = {}
        for exp, c in self.terms.items():
            if any(e and i not in keep for i, e in enumerate(exp)):
                continue
            nexp = tuple(exp[i] for i in keep)
            out[nexp] = out.get(nexp, Fraction(0)) + c
        return MultiPoly(len(keep), out)

    def truncate(self, order):
        """Drop all terms of total degree above ``order``."""
        return MultiPoly(self.nvars, {e: c for e, c in self.terms.items() if sum(e) <= order})

    def __eq__(self, other):
        if not isinstance(other, MultiPoly):
            return NotImplemented
        return self.nvars == other.nvars and self.terms == other.terms

    __hash__ = None

    def __repr__(self):
        return f"MultiPoly({emit_poly(self)!r}, nvars={self.nvars})"


def gradient(p):
    """Vector of partial derivatives of ``p``."""
    return p.gradient()


def compose_poly(p, args, order=None):
    """Substitute polynomials ``args`` for the variables of ``p``.

    Intermediate and final results are truncated at total degree ``order``
    when given (the substitution used by the implicit-series solver).
    """
    if len(args) != p.nvars:
        raise ValueError("argument count mismatch")
    nv = args[0].nvars
    one = MultiPoly.constant(1, nv)

    cache = {}

    def power(i, e):
        if e == 0:
            return one
        key = (i, e)
        got = cache.get(key)
        if got is None:
            got = power(i, e - 1) * args[i]
            if order is not None:
                got = got.truncate(order)
            cache[key] = got
        return got

    total = MultiPoly.zero(nv)
    for exp, c in p.terms.items():
        term = one * c
        for i, e in enumerate(exp):
            if e:
                term = term * power(i, e)
                if order is not None:
                    term = term.truncate(order)
        total = total + term
    return total.truncate(order) if order is not None else total


# ---------------------------------------------------------------------------
# polynomial text format: sum of terms  c * x1^e1 * ... * xn^en

_NUM_RE = re.compile(r"^[+-]?(\d+(\.\d+)?|\.\d+)(/\d+)?$")
_VAR_RE = re.compile(r"^x(\d+)(\^(\d+))?$")


def parse_poly(text, nvars=None):
    """Parse the text polynomial format (rational coefficients allowed)."""
    s = "".join(text.split())
    if not s:
        raise ParseError("empty polynomial text")
    # split into signed chunks at top level
    chunks = []
    start = 0
    for i, ch in enumerate(s):
        if ch in "+-" and i > start and s[i - 1] not in "+-*/^":
            chunks.append(s[start:i])
            start = i
    chunks.append(s[start:])

    terms = []
    max_idx = 0
    for chunk in chunks:
        sign = 1
        while chunk and chunk[0] in "+-":
            if chunk[0] == "-":
                sign = -sign
            chunk = chunk[1:]
        if not chunk:
            raise ParseError(f"dangling sign in {text!r}")
        coef = Fraction(sign)
        exps = {}
        for factor in chunk.split("*"):
            if not factor:
                raise ParseError(f"empty factor in {text!r}")
            m = _VAR_RE.match(factor)
            if m:
                idx = int(m.group(1))
                if idx < 1:
                    raise ParseError(f"variable index must be >= 1 in {factor!r}")
                e = int(m.group(3)) if m.group(3) else 1
                exps[idx] = exps.get(idx, 0) + e
                max_idx = max(max_idx, idx)
            elif _NUM_RE.match(factor):
                coef *= Fraction(factor)
            else:
                raise ParseError(f"cannot parse factor {factor!r} in {text!r}")
        terms.append((coef, exps))

    if nvars is None:
        nvars = max(max_idx, 1)
    elif max_idx > nvars:
        raise ParseError(f"variable x{max_idx} exceeds nvars={nvars}")

    out = {}
    for coef, exps in terms:
        exp = tuple(exps.get(i + 1, 0) for i in range(nvars))
        out[exp] = out.get(exp, Fraction(0)) + coef
    return MultiPoly(nvars, out)


def _fmt_coef(c):
    if isinstance(c, Fraction):
        return str(c)
    return repr(c)


def emit_poly(p):
    """Canonical text form; ``parse_poly(emit_poly(p)) == p``."""
    if not p.terms:
        return "0"
    order = sorted(p.terms, key=lambda e: (-sum(e), tuple(-x for x in e)))
    parts = []
    for exp in order:
        c = p.terms[exp]
        neg = c < 0
        body = _fmt_coef(-c if neg else c)
        for i, e in enumerate(exp):
            if e == 1:
                body += f"*x{i+1}"
            elif e > 1:
                body += f"*x{i+1}^{e}"
        if not parts:
            parts.append(("-" if neg else "") + body)
        else:
            parts.append(("- " if neg else "+ ") + body)
    return " ".join(parts)


# ---------------------------------------------------------------------------
# truncated univariate power series


class UniSeries:
    """Univariate power series known exactly through degree ``trunc_order``."""

    __slots__ = ("coeffs", "trunc_order")

    def __init__(self, coeffs, trunc_order=None):
        coeffs = [_coerce(c) for c in coeffs]
        if trunc_order is None:
            trunc_order = len(coeffs) - 1
        trunc_order = int(trunc_order)
        if trunc_order < 0:
            raise ValueError("trunc_order must be >= 0")
        if len(coeffs) < trunc_order + 1:
            coeffs = coeffs + [Fraction(0)] * (trunc_order + 1 - len(coeffs))
        else:
            coeffs = coeffs[: trunc_order + 1]
        self.coeffs = coeffs
        self.trunc_order = trunc_order

    @classmethod
    def zero(cls, trunc_order):
        return cls([], trunc_order)

    @classmethod
    def monomial(cls, c, d, trunc_order):
        if d > trunc_order:
            raise ValueError("monomial degree exceeds truncation order")
        coeffs = [Fraction(0)] * (trunc_order + 1)
        coeffs[d] = _coerce(c)
        return cls(coeffs, trunc_order)

    def order(self):
        """Lowest degree with nonzero coefficient, or None if zero through T."""
        for d, c in enumerate(self.coeffs):
            if c != 0:
                return d
        return None

    def __getitem__(self, d):
        if d > self.trunc_order:
            raise IndexError(f"coefficient {d} beyond truncation order {self.trunc_order}")
        return self.coeffs[d]

    def __add__(self, other):
        if not isinstance(other, UniSeries):
            other = UniSeries([other], self.trunc_order)
        T = min(self.trunc_order, other.trunc_order)
        return UniSeries([self.coeffs[i] + other.coeffs[i] for i in range(T + 1)], T)

    __radd__ = __add__

    def __neg__(self):
        return UniSeries([-c for c in self.coeffs], self.trunc_order)

    def __sub__(self, other):
        if not isinstance(other, UniSeries):
            other = UniSeries([other], self.trunc_order)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, UniSeries):
            c = _coerce(other)
            return UniSeries([c * v for v in self.coeffs], self.trunc_order)
        T = min(self.trunc_order, other.trunc_order)
        return _mul_trunc(self, other, T)

    __rmul__ = __mul__

    def compose(self, inner):
        """Series for self(inner(t)); inner must have zero constant term."""
        if not isinstance(inner, UniSeries):
            raise TypeError("inner must be a UniSeries")
        if inner.coeffs[0] != 0:
            raise ValueError("composition requires inner series with zero constant term")
        oi = inner.order()
        if oi is None:
            return UniSeries([self.coeffs[0]], inner.trunc_order)
        T = min(inner.trunc_order, (self.trunc_order + 1) * oi - 1)
        out = UniSeries.zero(T)
        top = min(self.trunc_order, T)
        for c in reversed(self.coeffs[: top + 1]):
            out = _mul_trunc(out, inner, T) + UniSeries([c], T)
        return out

    def sqrt(self):
        """Square root of a series with even lowest degree and positive lead."""
        d = self.order()
        if d is None:
            raise ZeroSeriesError("sqrt of a series that is zero through its truncation order")
        c = self.coeffs[d]
        if d % 2:
            raise ValueError(f"sqrt requires even lowest degree, got {d}")
        if c < 0:
            raise ValueError("sqrt requires a positive leading coefficient")
        m = d // 2
        Tu = self.trunc_order - d
        u = UniSeries([self.coeffs[d + j] / c for j in range(Tu + 1)], Tu) - 1
        # binomial series (1+u)^(1/2)
        w = UniSeries([1], Tu)
        upow = UniSeries([1], Tu)
        b = Fraction(1)
        for j in range(1, Tu + 1):
            b = b * (Fraction(1, 2) - (j - 1)) / j
            upow = _mul_trunc(upow, u, Tu)
            w = w + upow * b
        rc = _exact_sqrt(c) if isinstance(c, Fraction) else None
        if rc is None:
            rc = math.sqrt(float(c))
        coeffs = [Fraction(0)] * m + [rc * v for v in w.coeffs]
        return UniSeries(coeffs, Tu + m)

    def deriv(self):
        if self.trunc_order == 0:
            return UniSeries([], 0)
        return UniSeries([k * self.coeffs[k] for k in range(1, self.trunc_order + 1)],
                         self.trunc_order - 1)

    def eval(self, t):
        total = 0
        for c in reversed(self.coeffs):
            total = total * t + c
        return total

    def __eq__(self, other):
        if not isinstance(other, UniSeries):
            return NotImplemented
        return self.trunc_order == other.trunc_order and self.coeffs == other.coeffs

    __hash__ = None

    def __repr__(self):
        body = ", ".join(_fmt_coef(c) for c in self.coeffs)
        return f"UniSeries([{body}], T={self.trunc_order})"


def _mul_trunc(a, b, T):
    out = [Fraction(0)] * (T + 1)
    for i, ca in enumerate(a.coeffs):
        if ca == 0 or i > T:
            continue
        top = min(T - i, b.trunc_order)
        for j in range(top + 1):
            cb = b.coeffs[j]
            if cb != 0:
                out[i + j] = out[i + j] + ca * cb
    return UniSeries(out, T)


def lowest_term(s):
    """(d, c0) of the lowest nonzero term; ZeroSeriesError on the zero series."""
    d = s.order()
    if d is None:
        raise ZeroSeriesError("series is zero through its truncation order")
    return d, s.coeffs[d]


def restrict_line(p, a):
    """Series of t -> p(t * a/||a||), exact through degree deg(p).

    Even-degree coefficients stay rational for rational ``a`` even when
    ||a|| is irrational; odd-degree coefficients degrade to floats then.
    """
    a = list(a)
    if len(a) != p.nvars:
        raise ValueError("direction dimension mismatch")
    a = [_coerce(x) for x in a]
    if all(x == 0 for x in a):
        raise ValueError("zero direction vector")
    deg = p.degree()
    sums = [Fraction(0)] * (deg + 1)
    for exp, c in p.terms.items():
        v = c
        for ai, e in zip(a, exp):
            if e:
                v = v * ai ** e
        sums[sum(exp)] += v
    n2 = sum(x * x for x in a)
    if isinstance(n2, Fraction):
        root = _exact_sqrt(n2)
    else:
        root = float(math.sqrt(n2))
    coeffs = []
    for k, sk in enumerate(sums):
        if root is not None:
            coeffs.append(sk / root ** k)
        else:
            ck = sk / n2 ** (k // 2)
            if k % 2:
                ck = float(ck) / math.sqrt(float(n2))
            coeffs.append(ck)
    return UniSeries(coeffs, deg)


def substitute_series(p, series):
    """Series of t -> p(s1(t), ..., sn(t)) through the common truncation order."""
    if len(series) != p.nvars:
        raise ValueError("series count mismatch")
    T = min(s.trunc_order for s in series)
    cache = {}

    def power(i, e):
        if e == 0:
            return UniSeries([1], T)
        key = (i, e)
        got = cache.get(key)
        if got is None:
            got = _mul_trunc(power(i, e - 1), series[i], T)
            cache[key] = got
        return got

    total = UniSeries.zero(T)
    for exp, c in p.terms.items():
        term = UniSeries([c], T)
        for i, e in enumerate(exp):
            if e:
                term = _mul_trunc(term, power(i, e), T)
        total = total + term
    return total


# ---------------------------------------------------------------------------
# Newton diagrams


class NewtonDiagram:
    """Vertices and axis data of the unbounded Newton polyhedron of a polynomial."""

    __slots__ = ("support_points", "boundary_vertices", "axis_exponents", "convenient")

    def __init__(self, support_points, boundary_vertices, axis_exponents, convenient):
        self.support_points = support_points
        self.boundary_vertices = boundary_vertices
        self.axis_exponents = axis_exponents
        self.convenient = convenient

    def __repr__(self):
        return (f"NewtonDiagram(vertices={self.boundary_vertices}, "
                f"axis_exponents={self.axis_exponents}, convenient={self.convenient})")


def _is_vertex(v, others, n):
    """True if v is not in conv(others) + R_{>=0}^n (LP membership test)."""
    if not others:
        return True
    m = len(others)
    # lambda >= 0, sum lambda = 1, sum lambda_u * u <= v componentwise
    A_ub = np.array([[u[j] for u in others] for j in range(n)], dtype=float)
    b_ub = np.array(v, dtype=float)
    A_eq = np.ones((1, m))
    b_eq = np.array([1.0])
    res = linprog(np.zeros(m), A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                  bounds=[(0, None)] * m, method="highs")
    return res.status != 0  # infeasible -> vertex


def newton_diagram(p):
    """Newton diagram data of a nonzero polynomial."""
    if p.is_zero():
        raise ValueError("Newton diagram of the zero polynomial")
    n = p.nvars
    support = sorted(p.terms)
    axis_exponents = []
    for i in range(n):
        pures = [e[i] for e in support if all(x == 0 for j, x in enumerate(e) if j != i) and e[i] > 0]
        axis_exponents.append(min(pures) if pures else None)
    convenient = all(d is not None for d in axis_exponents)
    vertices = tuple(v for v in support
                     if _is_vertex(v, [u for u in support if u != v], n))
    return NewtonDiagram(set(support), vertices, tuple(axis_exponents), convenient)


def loja_exponent_convenient(p):
    """Lojasiewicz exponent of a convenient (caller-asserted nondegenerate)
    polynomial: the farthest axis intersection of the Newton boundary."""
    diag = newton_diagram(p)
    if not diag.convenient:
        raise NotConvenientError("Newton boundary does not meet every axis")
    return max(diag.axis_exponents)
