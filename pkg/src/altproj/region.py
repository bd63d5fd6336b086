"""Classification of plane points by the boundary stratum receiving their
projection, and numerical tracing of the partition boundaries.

The boundary of the partition is the image of the plane curve {f1 = f2}
under the corresponding surface map; it is traced by root-finding along the
curve parameter instead of computing elimination ideals.
"""

from __future__ import annotations

import enum

import numpy as np

from .errors import SolverFailure
from .proj import DEFAULT_OPTS, psi_inverse, psi_map
from .rates import solve_curve_series

SIGN_BAND = 1e-12


class RegionLabel(enum.Enum):
    UNDETERMINED = 0
    SURFACE1 = 1
    SURFACE2 = 2
    CURVE = 3


def classify_point(f1, f2, P, opts=None, band=SIGN_BAND):
    """Label the plane point P by which stratum of the set boundary receives
    its projection: invert both surface maps and test the sign of f1 - f2."""
    opts = opts or DEFAULT_OPTS
    s1 = s2 = None
    try:
        q1 = psi_inverse(f1, P, opts)
        s1 = float(f1.eval(q1)) - float(f2.eval(q1))
    except SolverFailure:
        pass
    if s1 is not None and s1 > band:
        return RegionLabel.SURFACE1
    try:
        q2 = psi_inverse(f2, P, opts)
        s2 = float(f2.eval(q2)) - float(f1.eval(q2))
    except SolverFailure:
        pass
    if s2 is not None and s2 > band:
        return RegionLabel.SURFACE2
    if s1 is None or s2 is None:
        return RegionLabel.UNDETERMINED
    return RegionLabel.CURVE


def trace_partition_boundary(f1, f2, which, window=(-0.2, 0.2), n_samples=81,
                             opts=None):
    """Forward-trace the partition boundary Psi_which({f1 - f2 = 0}).

    The zero set is parametrized by the same coordinate as the curve series;
    each sample is polished by scalar Newton, warm-started from the previous
    sample (series value near the origin). Returns (points, skipped) with
    points ordered by the parameter.
    """
    if which not in (1, 2):
        raise ValueError("which must be 1 or 2")
    opts = opts or DEFAULT_OPTS
    curve = solve_curve_series(f1, f2)  # raises on identical inputs
    D = f1 - f2
    paxis = curve.param_axis
    oaxis = 1 - paxis
    dD = D.deriv(oaxis)
    series = curve.phi[oaxis]
    f = f1 if which == 1 else f2

    svals = np.linspace(window[0], window[1], n_samples)
    order = np.argsort(np.abs(svals), kind="stable")
    sol = {}
    skipped = []
    last = {1: None, -1: None}  # continuation per sign of the parameter

    def point_at(s, w):
        q = [0.0, 0.0]
        q[paxis] = s
        q[oaxis] = w
        return q

    for idx in order:
        s = float(svals[idx])
        side = 1 if s >= 0 else -1
        w = last[side] if last[side] is not None else float(series.eval(s))
        ok = False
        for _ in range(60):
            q = point_at(s, w)
            val = float(D.eval(q))
            if abs(val) <= 1e-12:
                ok = True
                break
            dv = float(dD.eval(q))
            if dv == 0.0:
                break
            w -= val / dv
        if not ok:
            skipped.append(idx)
            continue
        sol[idx] = w
        last[side] = w

    pts = []
    for idx in range(n_samples):
        if idx not in sol:
            continue
        s = float(svals[idx])
        X, Y = psi_map(f, point_at(s, sol[idx]))
        pts.append((float(X), float(Y)))
    return np.array(pts, dtype=float).reshape(len(pts), 2), skipped


def classify_scan(f1, f2, xs, ys, opts=None, band=SIGN_BAND):
    """Label a grid of plane points; per-node failures become UNDETERMINED."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    out = np.empty((len(ys), len(xs)), dtype=np.int8)
    for i, y in enumerate(ys):
        for j, x in enumerate(xs):
            out[i, j] = classify_point(f1, f2, (float(x), float(y)), opts, band).value
    return out
