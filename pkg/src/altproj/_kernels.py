"""Jitted numerical kernels: packed polynomial evaluation, projection Newton
solves, alternating-projection inner loops, and the scalar recursion oracle.

A polynomial family is packed as (coeffs, exps, starts): the terms of all
member polynomials concatenated, member j owning rows starts[j]:starts[j+1].
Hypograph families are laid out [g, g_1..g_n, H_11..H_nn]; each surface of a
two-polynomial set uses the same layout with n = 2.
"""

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only when numba is absent
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def deco(f):
            return f

        return deco


@njit(cache=True)
def _eval_family(coeffs, exps, starts, x, out):
    for p in range(out.shape[0]):
        acc = 0.0
        for t in range(starts[p], starts[p + 1]):
            v = coeffs[t]
            for i in range(x.shape[0]):
                e = exps[t, i]
                xi = x[i]
                for _ in range(e):
                    v *= xi
            acc += v
        out[p] = acc


@njit(cache=True)
def _eval_single(coeffs, exps, starts, idx, x):
    acc = 0.0
    for t in range(starts[idx], starts[idx + 1]):
        v = coeffs[t]
        for i in range(x.shape[0]):
            e = exps[t, i]
            xi = x[i]
            for _ in range(e):
                v *= xi
        acc += v
    return acc


@njit(cache=True)
def _vecnorm(v):
    s = 0.0
    for i in range(v.shape[0]):
        s += v[i] * v[i]
    return np.sqrt(s)


@njit(cache=True)
def _project_span(Q, v, out):
    """out = Q Q^T v for an orthonormal basis Q (columns)."""
    amb = Q.shape[0]
    r = Q.shape[1]
    for i in range(amb):
        out[i] = 0.0
    for j in range(r):
        dot = 0.0
        for i in range(amb):
            dot += Q[i, j] * v[i]
        for i in range(amb):
            out[i] += dot * Q[i, j]


@njit(cache=True)
def _dist_to_span(Q, v, tmp):
    _project_span(Q, v, tmp)
    s = 0.0
    for i in range(v.shape[0]):
        d = v[i] - tmp[i]
        s += d * d
    return np.sqrt(s)


@njit(cache=True)
def _hypo_residual(vals, n, x, X, Z, F):
    c = vals[0] - Z
    r = 0.0
    for i in range(n):
        F[i] = x[i] + c * vals[1 + i] - X[i]
        a = abs(F[i])
        if a > r:
            r = a
    return r


@njit(cache=True)
def _hypo_newton(coeffs, exps, starts, n, X, Z, tol, max_iter):
    """Damped Newton for x + (g(x) - Z) grad g(x) = X, started at X."""
    x = X.copy()
    vals = np.empty(1 + n + n * n)
    F = np.empty(n)
    Fn = np.empty(n)
    J = np.empty((n, n))
    _eval_family(coeffs, exps, starts, x, vals)
    r = _hypo_residual(vals, n, x, X, Z, F)
    for _ in range(max_iter):
        if r <= tol:
            return x, r, True
        c = vals[0] - Z
        for i in range(n):
            for j in range(n):
                J[i, j] = vals[1 + i] * vals[1 + j] + c * vals[1 + n + i * n + j]
            J[i, i] += 1.0
        d = np.linalg.solve(J, -F)
        s = 1.0
        xn = x + d
        rn = r
        for _ in range(31):
            xn = x + s * d
            _eval_family(coeffs, exps, starts, xn, vals)
            rn = _hypo_residual(vals, n, xn, X, Z, Fn)
            if rn < r * (1.0 - 1e-4 * s) or rn <= tol:
                break
            s *= 0.5
        x = xn
        r = rn
        for i in range(n):
            F[i] = Fn[i]
    return x, r, r <= tol


@njit(cache=True)
def _project_hypograph_kernel(coeffs, exps, starts, n, p, tol, max_iter):
    """Project p = (X, Z) onto {z >= g(x)}.

    Returns (u, multiplier, active, residual, converged)."""
    X = p[:n].copy()
    Z = p[n]
    vals = np.empty(1 + n + n * n)
    _eval_family(coeffs, exps, starts, X, vals)
    u = np.empty(n + 1)
    if Z >= vals[0]:
        for i in range(n):
            u[i] = X[i]
        u[n] = Z
        return u, 0.0, 0, 0.0, True
    x, r, ok = _hypo_newton(coeffs, exps, starts, n, X, Z, tol, max_iter)
    _eval_family(coeffs, exps, starts, x, vals)
    for i in range(n):
        u[i] = x[i]
    u[n] = vals[0]
    return u, vals[0] - Z, 1, r, ok


@njit(cache=True)
def _two_both_residual(v1, v2, w, X, Y, Z, F):
    x, y, z, a, b = w[0], w[1], w[2], w[3], w[4]
    F[0] = x - X + a * v1[1] + b * v2[1]
    F[1] = y - Y + a * v1[2] + b * v2[2]
    F[2] = z - Z - a - b
    F[3] = z - v1[0]
    F[4] = z - v2[0]
    r = 0.0
    for i in range(5):
        ai = abs(F[i])
        if ai > r:
            r = ai
    return r


@njit(cache=True)
def _two_both_newton(cf1, ef1, sf1, cf2, ef2, sf2, X, Y, Z, tol, max_iter):
    """Damped Newton for the both-surfaces-active KKT system.

    Unknowns (x, y, z, c1, c2); started at (X, Y, max(f1,f2), split multiplier)."""
    xy = np.empty(2)
    xy[0] = X
    xy[1] = Y
    v1 = np.empty(7)
    v2 = np.empty(7)
    _eval_family(cf1, ef1, sf1, xy, v1)
    _eval_family(cf2, ef2, sf2, xy, v2)
    z0 = v1[0] if v1[0] > v2[0] else v2[0]
    w = np.empty(5)
    w[0] = X
    w[1] = Y
    w[2] = z0
    w[3] = 0.5 * (z0 - Z)
    w[4] = 0.5 * (z0 - Z)
    F = np.empty(5)
    Fn = np.empty(5)
    J = np.empty((5, 5))
    r = _two_both_residual(v1, v2, w, X, Y, Z, F)
    for _ in range(max_iter):
        if r <= tol:
            return w, r, True
        a, b = w[3], w[4]
        J[0, 0] = 1.0 + a * v1[3] + b * v2[3]
        J[0, 1] = a * v1[4] + b * v2[4]
        J[0, 2] = 0.0
        J[0, 3] = v1[1]
        J[0, 4] = v2[1]
        J[1, 0] = a * v1[5] + b * v2[5]
        J[1, 1] = 1.0 + a * v1[6] + b * v2[6]
        J[1, 2] = 0.0
        J[1, 3] = v1[2]
        J[1, 4] = v2[2]
        J[2, 0] = 0.0
        J[2, 1] = 0.0
        J[2, 2] = 1.0
        J[2, 3] = -1.0
        J[2, 4] = -1.0
        J[3, 0] = -v1[1]
        J[3, 1] = -v1[2]
        J[3, 2] = 1.0
        J[3, 3] = 0.0
        J[3, 4] = 0.0
        J[4, 0] = -v2[1]
        J[4, 1] = -v2[2]
        J[4, 2] = 1.0
        J[4, 3] = 0.0
        J[4, 4] = 0.0
        d = np.linalg.solve(J, -F)
        s = 1.0
        wn = w + d
        rn = r
        for _ in range(31):
            wn = w + s * d
            xy[0] = wn[0]
            xy[1] = wn[1]
            _eval_family(cf1, ef1, sf1, xy, v1)
            _eval_family(cf2, ef2, sf2, xy, v2)
            rn = _two_both_residual(v1, v2, wn, X, Y, Z, Fn)
            if rn < r * (1.0 - 1e-4 * s) or rn <= tol:
                break
            s *= 0.5
        w = wn
        r = rn
        for i in range(5):
            F[i] = Fn[i]
    return w, r, r <= tol


@njit(cache=True)
def _project_twopoly_kernel(cf1, ef1, sf1, cf2, ef2, sf2, p, tol, max_iter, valid_tol):
    """Project p onto {z >= f1, z >= f2} by enumerating active sets.

    Returns (u, m1, m2, active_code, residual, nvalid, ok); active codes are
    0 none, 1 {1}, 2 {2}, 3 {1,2}."""
    X, Y, Z = p[0], p[1], p[2]
    xy = np.empty(2)
    xy[0] = X
    xy[1] = Y
    v = np.empty(7)
    _eval_family(cf1, ef1, sf1, xy, v)
    f1v = v[0]
    _eval_family(cf2, ef2, sf2, xy, v)
    f2v = v[0]
    u = np.zeros(3)
    if Z >= f1v and Z >= f2v:
        u[0] = X
        u[1] = Y
        u[2] = Z
        return u, 0.0, 0.0, 0, 0.0, 1, True
    best_code = -1
    best_r = 1e300
    attempt_r = 1e300
    bm1 = 0.0
    bm2 = 0.0
    nvalid = 0
    # active {1}
    x1, r1, ok1 = _hypo_newton(cf1, ef1, sf1, 2, xy, Z, tol, max_iter)
    if r1 < attempt_r:
        attempt_r = r1
    if ok1:
        _eval_family(cf1, ef1, sf1, x1, v)
        z = v[0]
        _eval_family(cf2, ef2, sf2, x1, v)
        other = v[0]
        c = z - Z
        if c >= -valid_tol and z >= other - valid_tol:
            nvalid += 1
            if r1 < best_r:
                best_r = r1
                best_code = 1
                u[0] = x1[0]
                u[1] = x1[1]
                u[2] = z
                bm1 = c
                bm2 = 0.0
    # active {2}
    x2, r2, ok2 = _hypo_newton(cf2, ef2, sf2, 2, xy, Z, tol, max_iter)
    if r2 < attempt_r:
        attempt_r = r2
    if ok2:
        _eval_family(cf2, ef2, sf2, x2, v)
        z = v[0]
        _eval_family(cf1, ef1, sf1, x2, v)
        other = v[0]
        c = z - Z
        if c >= -valid_tol and z >= other - valid_tol:
            nvalid += 1
            if r2 < best_r:
                best_r = r2
                best_code = 2
                u[0] = x2[0]
                u[1] = x2[1]
                u[2] = z
                bm1 = 0.0
                bm2 = c
    # active {1,2}
    w, r3, ok3 = _two_both_newton(cf1, ef1, sf1, cf2, ef2, sf2, X, Y, Z, tol, max_iter)
    if r3 < attempt_r:
        attempt_r = r3
    if ok3 and w[3] >= -valid_tol and w[4] >= -valid_tol:
        nvalid += 1
        if r3 < best_r:
            best_r = r3
            best_code = 3
            u[0] = w[0]
            u[1] = w[1]
            u[2] = w[2]
            bm1 = w[3]
            bm2 = w[4]
    if best_code < 0:
        return u, 0.0, 0.0, -1, attempt_r, 0, False
    return u, bm1, bm2, best_code, best_r, nvalid, True


@njit(cache=True)
def _apm_hypograph(coeffs, exps, starts, n, Q, u0, K, tol, max_iter, rec_ks,
                   tiny, norms, rec_k, rec_u, rec_a, rec_active, rec_dist):
    """Alternating projections u <- P_B(P_A(u)) for a hypograph set.

    Returns (status, steps_done, nrec, fail_resid); status 0 ran to K,
    1 stopped on a tiny norm, 2 projection failure at steps_done."""
    amb = n + 1
    u = u0.copy()
    un = np.empty(amb)
    a = np.empty(amb)
    tmp = np.empty(amb)
    status = 0
    Keff = K
    k = 0
    si = 0
    ri = 0
    while True:
        norms[k] = _vecnorm(u)
        if tiny > 0.0 and norms[k] < tiny and k < Keff:
            status = 1
            Keff = k
        scheduled = si < rec_ks.shape[0] and rec_ks[si] == k
        if scheduled:
            si += 1
        final = k == Keff
        act = 0
        if scheduled or not final:
            up, mult, act, resid, ok = _project_hypograph_kernel(
                coeffs, exps, starts, n, u, tol, max_iter)
            if not ok:
                return 2, k, ri, resid
            for i in range(amb):
                a[i] = up[i]
        if scheduled or final:
            rec_k[ri] = k
            for i in range(amb):
                rec_u[ri, i] = u[i]
                rec_a[ri, i] = a[i]
            rec_active[ri] = act
            rec_dist[ri] = _dist_to_span(Q, a, tmp)
            ri += 1
        if final:
            return status, k, ri, 0.0
        _project_span(Q, a, un)
        same = True
        for i in range(amb):
            if un[i] != u[i]:
                same = False
                break
        for i in range(amb):
            u[i] = un[i]
        k += 1
        if same and k < Keff:
            # bitwise fixed point: the dynamics stalled at numerical scale
            status = 3
            Keff = k


@njit(cache=True)
def _apm_twopoly(cf1, ef1, sf1, cf2, ef2, sf2, Q, u0, K, tol, max_iter, valid_tol,
                 rec_ks, tiny, norms, rec_k, rec_u, rec_a, rec_active, rec_dist):
    """Alternating projections for a two-polynomial set; see _apm_hypograph."""
    amb = 3
    u = u0.copy()
    un = np.empty(amb)
    a = np.empty(amb)
    tmp = np.empty(amb)
    status = 0
    Keff = K
    k = 0
    si = 0
    ri = 0
    while True:
        norms[k] = _vecnorm(u)
        if tiny > 0.0 and norms[k] < tiny and k < Keff:
            status = 1
            Keff = k
        scheduled = si < rec_ks.shape[0] and rec_ks[si] == k
        if scheduled:
            si += 1
        final = k == Keff
        act = 0
        if scheduled or not final:
            up, m1, m2, act, resid, nvalid, ok = _project_twopoly_kernel(
                cf1, ef1, sf1, cf2, ef2, sf2, u, tol, max_iter, valid_tol)
            if not ok:
                return 2, k, ri, resid
            for i in range(amb):
                a[i] = up[i]
        if scheduled or final:
            rec_k[ri] = k
            for i in range(amb):
                rec_u[ri, i] = u[i]
                rec_a[ri, i] = a[i]
            rec_active[ri] = act
            rec_dist[ri] = _dist_to_span(Q, a, tmp)
            ri += 1
        if final:
            return status, k, ri, 0.0
        _project_span(Q, a, un)
        same = True
        for i in range(amb):
            if un[i] != u[i]:
                same = False
                break
        for i in range(amb):
            u[i] = un[i]
        k += 1
        if same and k < Keff:
            # bitwise fixed point: the dynamics stalled at numerical scale
            status = 3
            Keff = k


@njit(cache=True)
def _forward_map(C, q, h, y):
    yq = 1.0
    for _ in range(q):
        yq *= y
    hv = 0.0
    for i in range(h.shape[0] - 1, -1, -1):
        hv = hv * y + h[i]
    return y * (1.0 + C * yq + yq * y * hv)


@njit(cache=True)
def _oracle_kernel(C, q, h, hp, x0, K, xs):
    """Iterate the implicit recursion y(1 + C y^q + y^(q+1) h(y)) = x.

    Fills xs[0..K]; returns 0 on success, 1 on a monotonicity violation."""
    x = x0
    xs[0] = x
    for k in range(K):
        if x <= 0.0:
            for j in range(k + 1, K + 1):
                xs[j] = 0.0
            return 0
        lo = 0.0
        hi = x
        Mhi = _forward_map(C, q, h, hi)
        expand = 0
        while Mhi < x and expand < 200:
            hi *= 1.01
            Mhi = _forward_map(C, q, h, hi)
            expand += 1
        y = x if x < hi else hi
        for _ in range(200):
            yq = 1.0
            for _ in range(q):
                yq *= y
            hv = 0.0
            for i in range(h.shape[0] - 1, -1, -1):
                hv = hv * y + h[i]
            hpv = 0.0
            for i in range(hp.shape[0] - 1, -1, -1):
                hpv = hpv * y + hp[i]
            My = y * (1.0 + C * yq + yq * y * hv)
            dM = 1.0 + C * (q + 1) * yq + (q + 2) * yq * y * hv + yq * y * y * hpv
            if dM <= 0.0:
                return 1
            fy = My - x
            if abs(fy) <= 1e-15 * x:
                break
            if fy > 0.0:
                hi = y
            else:
                lo = y
            yn = y - fy / dM
            if yn <= lo or yn >= hi:
                yn = 0.5 * (lo + hi)
            if yn == y:
                break
            y = yn
        xs[k + 1] = y
        x = y
    return 0
