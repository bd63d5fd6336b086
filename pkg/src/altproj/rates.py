"""Theoretical convergence-rate predictions.

Exact rates come from multiplicities: the restriction of the floor polynomial
to the line (single surface), or the distance series of the intersection
curve (two surfaces). Subspaces of dimension more than one only admit upper
bounds, via Lojasiewicz exponents. All rational inputs are processed in exact
arithmetic so the example regressions are bit-stable.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import DegenerateInputError, NotConvenientError, ZeroSeriesError
from .polyalg import (
    MultiPoly,
    UniSeries,
    _coerce,
    _exact_sqrt,
    compose_poly,
    loja_exponent_convenient,
    lowest_term,
    newton_diagram,
    restrict_line,
    substitute_series,
)
from .proj import LinearSubspace


class RateKind(enum.Enum):
    EXACT = "exact"
    UPPER_BOUND = "upper-bound"
    LINEAR = "linear"


class Cond(enum.Enum):
    PROJECTS_TO_CURVE = "projects-to-curve"
    LEAVES_CURVE = "leaves-curve"
    INCONCLUSIVE = "inconclusive"


SOURCE_HYPERSURFACE_LINE = "HypersurfaceLine"
SOURCE_CURVE_RATE = "CurveRate"
SOURCE_HSHP_BOUND = "HshpBound"
SOURCE_LOJA_SUBSPACE = "LojaSubspaceBound"


@dataclass
class RatePrediction:
    """Predicted convergence descriptor.

    For EXACT kinds, limit_constant * k^lam * ||u_k|| -> 1; for UPPER_BOUND
    kinds only the exponent (and possibly a sampled constant) is claimed;
    LINEAR marks a transversal intersection (geometric decay, no power law).
    """

    kind: RateKind
    lam: Fraction | None
    limit_constant: float | None
    d: int
    c0: object
    source: str
    constant_estimated: bool = False

    def as_kv(self):
        lines = [
            f"kind = {self.kind.value}",
            f"lambda = {self.lam if self.lam is not None else 'none'}",
            f"limit_constant = "
            + (f"{self.limit_constant:.17g}" if self.limit_constant is not None else "none"),
            f"d = {self.d}",
            f"c0 = " + (f"{float(self.c0):.17g}" if self.c0 is not None else "none"),
            f"source = {self.source}",
        ]
        if self.constant_estimated:
            lines.append("constant_estimated = true")
        return "\n".join(lines) + "\n"


def _limit_constant(d, c0_sq):
    """((2d-2) d c0^2)^(1/(2d-2)) with the base formed exactly if possible."""
    base = (2 * d - 2) * d * c0_sq
    return float(base) ** (1.0 / (2 * d - 2))


def predict_hypersurface_rate(g, a):
    """Exact rate of alternating projections between {z >= g(x)} and the
    line through (a, 0), from the multiplicity of g along a.

    When grad g(0) != 0 the surface is a graph over its tangent plane, not
    over the z = 0 plane; rewriting it over the tangent plane scales the
    leading restriction coefficient by cos(theta) = 1/sqrt(1 + |grad g(0)|^2)
    (the rate exponent is unchanged). The line must then lie in the tangent
    plane, which holds exactly when the multiplicity is >= 2.
    """
    s = restrict_line(g, a)
    d, c0 = lowest_term(s)  # ZeroSeriesError: line inside the zero set
    if d == 0:
        raise DegenerateInputError("restriction does not vanish at the origin")
    if d == 1:
        return RatePrediction(RateKind.LINEAR, None, None, 1, c0,
                              SOURCE_HYPERSURFACE_LINE)
    grad0 = [gi.eval((0,) * g.nvars) for gi in g.gradient()]
    cos_sq = 1 / (1 + sum(x * x for x in grad0))
    c0_sq = c0 * c0 * cos_sq
    return RatePrediction(RateKind.EXACT, Fraction(1, 2 * d - 2),
                          _limit_constant(d, c0_sq), d, c0,
                          SOURCE_HYPERSURFACE_LINE)


@dataclass
class CurveSeries:
    """Series parametrization of the ridge curve {z = f1 = f2} through 0.

    phi = (phi_1, phi_2, phi_3) with phi_param the identity; alpha is the
    tangent phi'(0) (third component zero), beta the second-order vector.
    """

    phi: tuple
    alpha: tuple
    beta: tuple
    param_axis: int


def solve_curve_series(f1, f2, order=None):
    """Solve z = f1 = f2 for a curve series through the origin.

    The plane curve {f1 = f2} is solved degree by degree (a triangular linear
    system per degree since the implicit derivative is nonzero); the vertical
    component is the floor along it.
    """
    if f1.nvars != 2 or f2.nvars != 2:
        raise ValueError("curve series requires two polynomials over 2 variables")
    if f1.eval((0, 0)) != 0 or f2.eval((0, 0)) != 0:
        raise DegenerateInputError("both surfaces must pass through the origin")
    D = f1 - f2
    if D.is_zero():
        raise DegenerateInputError("identical surfaces: tangent kernel is 2-dimensional")
    Dx0 = D.deriv(0).eval((0, 0))
    Dy0 = D.deriv(1).eval((0, 0))
    if Dx0 == 0 and Dy0 == 0:
        raise DegenerateInputError("surface normals coincide at the origin")
    f1x0 = f1.deriv(0).eval((0, 0))
    f1y0 = f1.deriv(1).eval((0, 0))
    # kernel direction of the two-normal matrix: (Dy, -Dx, f1x Dy - f1y Dx)
    if f1x0 * Dy0 - f1y0 * Dx0 != 0:
        raise DegenerateInputError("curve is not tangent to the xy-plane at the origin")
    if order is None:
        order = 2 * max(f1.degree(), f2.degree()) + 4
    T = int(order)
    ident = UniSeries.monomial(1, 1, T)
    if Dx0 != 0:
        # parametrize by y, solve x = xi(y) from D(xi(y), y) = 0
        xi = UniSeries.zero(T)
        for m in range(1, T + 1):
            E = substitute_series(D, [xi, ident])
            cm = E[m]
            if cm != 0:
                xi = xi + UniSeries.monomial(-cm / Dx0, m, T)
        zeta = substitute_series(f1, [xi, ident])
        phi = (xi, ident, zeta)
        alpha = (xi[1], Fraction(1), Fraction(0))
        param_axis = 1
    else:
        # vertical tangent: parametrize by x, solve y = eta(x)
        eta = UniSeries.zero(T)
        for m in range(1, T + 1):
            E = substitute_series(D, [ident, eta])
            cm = E[m]
            if cm != 0:
                eta = eta + UniSeries.monomial(-cm / Dy0, m, T)
        zeta = substitute_series(f1, [ident, eta])
        phi = (ident, eta, zeta)
        alpha = (Fraction(1), eta[1], Fraction(0))
        param_axis = 0
    beta = (phi[0][2], phi[1][2], phi[2][2])
    return CurveSeries(phi=phi, alpha=alpha, beta=beta, param_axis=param_axis)


@dataclass
class CondCheck:
    """Outcome of the tangent-direction multiplier test."""

    verdict: Cond
    multipliers: tuple | None


def _det3(M):
    return (M[0][0] * (M[1][1] * M[2][2] - M[1][2] * M[2][1])
            - M[0][1] * (M[1][0] * M[2][2] - M[1][2] * M[2][0])
            + M[0][2] * (M[1][0] * M[2][1] - M[1][1] * M[2][0]))


def cond2poly_check(f1, f2, a_dir, curve=None, band=1e-10):
    """Decide whether points of the line through (a_dir, 0) project to the
    ridge curve: solve beta = l1 n1 + l2 n2 + mu (a, b, 0) and test signs."""
    if curve is None:
        curve = solve_curve_series(f1, f2)
    a, b = (_coerce(v) for v in a_dir)
    if a == 0 and b == 0:
        raise ValueError("zero direction")
    al1, al2 = curve.alpha[0], curve.alpha[1]
    cross = a * al2 - b * al1
    scale = max(abs(float(a)), abs(float(b)), 1e-300)
    parallel = cross == 0 if isinstance(cross, Fraction) else abs(float(cross)) <= 1e-10 * scale
    if not parallel:
        return CondCheck(Cond.LEAVES_CURVE, None)
    n1 = (-f1.deriv(0).eval((0, 0)), -f1.deriv(1).eval((0, 0)), Fraction(1))
    n2 = (-f2.deriv(0).eval((0, 0)), -f2.deriv(1).eval((0, 0)), Fraction(1))
    dvec = (a, b, Fraction(0))
    cols = (n1, n2, dvec)
    M = [[cols[j][i] for j in range(3)] for i in range(3)]
    det = _det3(M)
    if det == 0:
        raise DegenerateInputError(
            "direction and the two surface normals are linearly dependent")
    beta = curve.beta
    sol = []
    for j in range(3):
        Mj = [row[:] for row in M]
        for i in range(3):
            Mj[i][j] = beta[i]
        sol.append(_det3(Mj) / det)
    l1, l2, mu = sol
    exact = isinstance(l1, Fraction) and isinstance(l2, Fraction)
    z1 = (l1 == 0) if exact else abs(float(l1)) <= band
    z2 = (l2 == 0) if exact else abs(float(l2)) <= band
    if z1 or z2:
        verdict = Cond.INCONCLUSIVE
    elif l1 > 0 and l2 > 0:
        verdict = Cond.PROJECTS_TO_CURVE
    else:
        verdict = Cond.LEAVES_CURVE
    return CondCheck(verdict, (l1, l2, mu))


def predict_curve_rate(f1, f2, curve=None):
    """Exact rate when the iterates project to the ridge curve: multiplicity
    and constant of the distance series from the curve to its tangent line."""
    if curve is None:
        curve = solve_curve_series(f1, f2)
    al1, al2 = curve.alpha[0], curve.alpha[1]
    p1, p2, p3 = curve.phi
    s2 = al1 * al1 + al2 * al2
    num = (p1 * al2 - p2 * al1)
    num = num * num + (p3 * p3) * s2
    d2, cc = lowest_term(num)  # ZeroSeriesError: tangent line contains the curve
    if d2 % 2:
        raise DegenerateInputError("squared distance series has odd lowest degree")
    d = d2 // 2
    c0_sq = cc / s2
    rc = _exact_sqrt(c0_sq) if isinstance(c0_sq, Fraction) else None
    c0 = rc if rc is not None else math.sqrt(float(c0_sq))
    base = (2 * d - 2) * d * c0_sq / s2 ** d
    constant = float(base) ** (1.0 / (2 * d - 2))
    return RatePrediction(RateKind.EXACT, Fraction(1, 2 * d - 2), constant, d,
                          c0, SOURCE_CURVE_RATE)


def distance_series(f1, f2, curve=None):
    """The normalized distance series of the curve to its tangent line."""
    if curve is None:
        curve = solve_curve_series(f1, f2)
    al1, al2 = curve.alpha[0], curve.alpha[1]
    p1, p2, p3 = curve.phi
    s2 = al1 * al1 + al2 * al2
    num = (p1 * al2 - p2 * al1)
    num = num * num + (p3 * p3) * s2
    return num.sqrt() * (1.0 / math.sqrt(float(s2)))


def solve_implicit_series(g, nsolved, order=None):
    """Solve x_i + g_{x_i}(x, y) g(x, y) = 0 for x = phi(y), phi(0) = 0.

    x is the first ``nsolved`` variables of g, y the rest. Solved degree by
    degree (the x-Jacobian is the identity at 0). Returns UniSeries when the
    free block is one variable, truncated MultiPoly series otherwise.
    """
    n = g.nvars
    m = int(nsolved)
    if not 1 <= m <= n - 1:
        raise ValueError("nsolved must satisfy 1 <= nsolved <= nvars-1")
    origin = (0,) * n
    if g.eval(origin) != 0:
        raise DegenerateInputError("g(0) != 0")
    grads = g.gradient()
    for i in range(m):
        if grads[i].eval(origin) != 0:
            raise DegenerateInputError(f"g_x{i+1}(0) != 0")
    g0 = g.restrict_to(range(m, n))
    if g0.is_zero() or not newton_diagram(g0).convenient:
        raise NotConvenientError(
            "the restriction g(0, .) must have a Newton boundary meeting all axes")
    T = int(order) if order is not None else 2 * g.degree() + 4
    r = n - m
    Fs = [MultiPoly.variable(i, n) + grads[i] * g for i in range(m)]
    phis = [MultiPoly.zero(r) for _ in range(m)]
    yvars = [MultiPoly.variable(j, r) for j in range(r)]
    for deg in range(1, T + 1):
        args = phis + yvars
        new = []
        for i in range(m):
            E = compose_poly(Fs[i], args, order=deg)
            corr = {e: -c for e, c in E.terms.items() if sum(e) == deg}
            new.append(phis[i] + MultiPoly(r, corr) if corr else phis[i])
        phis = new
    if r == 1:
        out = []
        for p in phis:
            coeffs = [Fraction(0)] * (T + 1)
            for exp, c in p.terms.items():
                coeffs[exp[0]] = c
            out.append(UniSeries(coeffs, T))
        return out
    return phis


def predict_upper_bound_hyperplane(g, assert_nondegenerate=False,
                                   n_samples=10000, seed=0):
    """Rate upper bound for the hyperplane case from the Lojasiewicz
    exponent of g; the bound constant is sampled, not certified."""
    if not assert_nondegenerate:
        raise ValueError("nondegeneracy must be asserted by the caller")
    d = loja_exponent_convenient(g)
    if d < 2:
        raise DegenerateInputError("exponent below 2: transversal intersection")
    rng = np.random.default_rng(seed)
    n = g.nvars
    C = math.inf
    per = max(1, n_samples // 3)
    for radius in (1e-1, 1e-2, 1e-3):
        dirs = rng.standard_normal((per, n))
        dirs /= np.linalg.norm(dirs, axis=1)[:, None]
        for u in dirs:
            x = radius * u
            val = float(g.eval(x)) ** 2 / radius ** (2 * d)
            if val < C:
                C = val
    constant = ((d - 1) * C) ** (1.0 / (2 * d - 2))
    return RatePrediction(RateKind.UPPER_BOUND, Fraction(1, 2 * d - 2), constant,
                          d, None, SOURCE_HSHP_BOUND, constant_estimated=True)


def _axis_indices(g, B0):
    """Free-coordinate indices of an axis-aligned subspace of the x-space."""
    if isinstance(B0, LinearSubspace):
        if B0.ambient != g.nvars:
            raise ValueError("B0 must live in the x-space of g")
        axes = []
        for j in range(B0.dim):
            col = B0.basis[:, j]
            hits = np.flatnonzero(np.abs(np.abs(col) - 1.0) < 1e-12)
            if len(hits) != 1 or np.linalg.norm(col) ** 2 - 1.0 > 1e-12 or \
                    np.any(np.abs(np.delete(col, hits[0])) > 1e-12):
                raise ValueError("B0 must be axis-aligned (apply the rotation first)")
            axes.append(int(hits[0]))
        return sorted(axes)
    axes = sorted(int(i) for i in B0)
    if any(i < 0 or i >= g.nvars for i in axes) or len(set(axes)) != len(axes):
        raise ValueError("invalid axis indices")
    return axes


def predict_upper_bound_subspace(g, B0, assert_nondegenerate=False):
    """Rate upper bound for an axis-aligned subspace of dimension >= 1 from
    the Lojasiewicz exponent of the restriction of g to the subspace."""
    if not assert_nondegenerate:
        raise ValueError("nondegeneracy must be asserted by the caller")
    axes = _axis_indices(g, B0)
    if not axes:
        raise ValueError("B0 must have dimension >= 1")
    g0 = g.restrict_to(axes)
    if g0.is_zero():
        raise DegenerateInputError("g vanishes identically on the subspace")
    d = loja_exponent_convenient(g0)
    if d < 2:
        raise DegenerateInputError("exponent below 2: transversal intersection")
    return RatePrediction(RateKind.UPPER_BOUND, Fraction(1, 2 * d - 2), None,
                          d, None, SOURCE_LOJA_SUBSPACE)
