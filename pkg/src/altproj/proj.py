"""Euclidean projections onto hypograph-style semialgebraic sets and linear
subspaces, and the plane maps whose images decide where a point projects.

The Newton solves run on packed float64 polynomial families (see _kernels);
the KKT systems are near-identity perturbations close to the origin, so
damped Newton from the input point converges fast along projection traces.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as _k
from .errors import SolverFailure
from .polyalg import MultiPoly


@dataclass(frozen=True)
class SolveOpts:
    """Newton solver options shared by the projection operations."""

    tol: float = 1e-12
    max_iter: int = 100
    valid_tol: float = 1e-9


DEFAULT_OPTS = SolveOpts()


def _pack_family(polys, nvars):
    coeffs = []
    rows = []
    starts = [0]
    for p in polys:
        for exp, c in sorted(p.terms.items()):
            coeffs.append(float(c))
            rows.append(exp)
        starts.append(len(coeffs))
    exps = np.array(rows, dtype=np.int64).reshape(len(coeffs), nvars)
    return (np.array(coeffs, dtype=np.float64), exps, np.array(starts, dtype=np.int64))


def _hypograph_family(g):
    grads = g.gradient()
    hess = [gi.deriv(j) for gi in grads for j in range(g.nvars)]
    return _pack_family([g] + grads + hess, g.nvars)


class LinearSubspace:
    """Linear subspace given by an orthonormal basis (columns)."""

    def __init__(self, basis):
        basis = np.asarray(basis, dtype=np.float64)
        if basis.ndim != 2 or basis.shape[1] < 1:
            raise ValueError("basis must be a nonempty 2-d array of columns")
        gram = basis.T @ basis
        if np.max(np.abs(gram - np.eye(basis.shape[1]))) > 1e-12:
            raise ValueError("basis is not orthonormal to 1e-12")
        self.basis = basis

    @classmethod
    def from_spanning(cls, vectors):
        """Orthonormalize spanning vectors (modified Gram-Schmidt)."""
        vecs = [np.asarray(v, dtype=np.float64) for v in vectors]
        if not vecs:
            raise ValueError("no spanning vectors")
        cols = []
        for v in vecs:
            w = v.copy()
            for b in cols:
                w -= (b @ w) * b
            nw = np.linalg.norm(w)
            if nw <= 1e-10 * max(1.0, np.linalg.norm(v)):
                raise ValueError("spanning vectors are linearly dependent")
            cols.append(w / nw)
        return cls(np.column_stack(cols))

    @property
    def ambient(self):
        return self.basis.shape[0]

    @property
    def dim(self):
        return self.basis.shape[1]


class HypographSet:
    """A = {(x, z) : z >= g(x)} for a polynomial g with g(0) = 0, g > 0 off 0."""

    def __init__(self, g):
        if not isinstance(g, MultiPoly):
            raise TypeError("g must be a MultiPoly")
        self.g = g
        self.n = g.nvars
        self.ambient = g.nvars + 1
        self._pack = None

    def pack(self):
        if self._pack is None:
            self._pack = _hypograph_family(self.g)
        return self._pack


class TwoPolySet:
    """A = {(x, y, z) : z >= f1(x, y), z >= f2(x, y)} in R^3."""

    def __init__(self, f1, f2):
        if f1.nvars != 2 or f2.nvars != 2:
            raise ValueError("two-polynomial sets live over 2 variables")
        self.f1 = f1
        self.f2 = f2
        self.ambient = 3
        self._packs = None

    def packs(self):
        if self._packs is None:
            self._packs = (_hypograph_family(self.f1), _hypograph_family(self.f2))
        return self._packs


@dataclass
class KKTResult:
    """Projection output: the point, constraint multipliers, active set,
    max-norm KKT residual, and an ambiguity flag for near-boundary ties."""

    point: np.ndarray
    multipliers: tuple
    active: frozenset
    residual: float
    ambiguous: bool = False


def project_subspace(B, p):
    """Orthogonal projection of p onto the subspace B."""
    p = np.asarray(p, dtype=np.float64)
    if p.shape[0] != B.ambient:
        raise ValueError("dimension mismatch")
    return B.basis @ (B.basis.T @ p)


def project_hypograph(A, p, opts=None):
    """Project p = (X, Z) onto {z >= g(x)} (identity on interior points)."""
    opts = opts or DEFAULT_OPTS
    p = np.asarray(p, dtype=np.float64)
    if p.shape[0] != A.ambient:
        raise ValueError("dimension mismatch")
    coeffs, exps, starts = A.pack()
    u, mult, active, resid, ok = _k._project_hypograph_kernel(
        coeffs, exps, starts, A.n, p, opts.tol, opts.max_iter)
    if not ok:
        raise SolverFailure(
            f"hypograph projection did not converge (residual {resid:.3e})",
            residual=float(resid))
    if active == 0:
        return KKTResult(u, (0.0,), frozenset(), float(resid))
    return KKTResult(u, (float(mult),), frozenset({1}), float(resid))


_ACTIVE_CODE = {0: frozenset(), 1: frozenset({1}), 2: frozenset({2}), 3: frozenset({1, 2})}


def project_twopoly(A, p, opts=None):
    """Project p onto {z >= f1, z >= f2} by enumerating the active sets
    {1}, {2}, {1,2} and keeping the KKT-consistent candidate."""
    opts = opts or DEFAULT_OPTS
    p = np.asarray(p, dtype=np.float64)
    if p.shape[0] != 3:
        raise ValueError("dimension mismatch")
    (c1, e1, s1), (c2, e2, s2) = A.packs()
    u, m1, m2, code, resid, nvalid, ok = _k._project_twopoly_kernel(
        c1, e1, s1, c2, e2, s2, p, opts.tol, opts.max_iter, opts.valid_tol)
    if not ok:
        raise SolverFailure(
            f"no active-set candidate passed the KKT check (best residual {resid:.3e})",
            residual=float(resid))
    return KKTResult(u, (float(m1), float(m2)), _ACTIVE_CODE[int(code)],
                     float(resid), ambiguous=int(nvalid) > 1)


def psi_map(f, q):
    """(x, y) -> (x + f_x f, y + f_y f); exact on rational input."""
    x, y = q
    fx = f.deriv(0).eval((x, y))
    fy = f.deriv(1).eval((x, y))
    fv = f.eval((x, y))
    return (x + fx * fv, y + fy * fv)


def psi_inverse(f, P, opts=None):
    """Invert psi_map by damped Newton started at P."""
    opts = opts or DEFAULT_OPTS
    X, Y = float(P[0]), float(P[1])
    fx_p, fy_p = f.gradient()
    fxx, fxy = fx_p.deriv(0), fx_p.deriv(1)
    fyy = fy_p.deriv(1)

    def residual(x, y):
        fv = float(f.eval((x, y)))
        gx = float(fx_p.eval((x, y)))
        gy = float(fy_p.eval((x, y)))
        r = (x + gx * fv - X, y + gy * fv - Y)
        return fv, gx, gy, r, max(abs(r[0]), abs(r[1]))

    x, y = X, Y
    fv, gx, gy, F, rn = residual(x, y)
    for _ in range(opts.max_iter):
        if rn <= opts.tol:
            return (x, y)
        hxx = float(fxx.eval((x, y)))
        hxy = float(fxy.eval((x, y)))
        hyy = float(fyy.eval((x, y)))
        j00 = 1.0 + hxx * fv + gx * gx
        j01 = hxy * fv + gx * gy
        j10 = hxy * fv + gy * gx
        j11 = 1.0 + hyy * fv + gy * gy
        det = j00 * j11 - j01 * j10
        if det == 0.0:
            break
        dx = (-F[0] * j11 + F[1] * j01) / det
        dy = (-j00 * F[1] + j10 * F[0]) / det
        s = 1.0
        for _ in range(31):
            xn, yn = x + s * dx, y + s * dy
            fvn, gxn, gyn, Fn, rnn = residual(xn, yn)
            if rnn < rn * (1.0 - 1e-4 * s) or rnn <= opts.tol:
                break
            s *= 0.5
        x, y, fv, gx, gy, F, rn = xn, yn, fvn, gxn, gyn, Fn, rnn
    if rn <= opts.tol:
        return (x, y)
    raise SolverFailure(f"psi inversion did not converge (residual {rn:.3e})",
                        residual=rn)
