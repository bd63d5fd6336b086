"""Alternating-projection driver producing traces, the independent scalar
recursion oracle, and per-step inequality monitors.

Traces keep the norm of every iterate but store full vectors only at
geometrically strided steps: rate fitting needs log-spaced samples, while the
step-level monitors (step residual, linear-ratio detection) only need norms.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as _k
from .errors import ScenarioError, SolverFailure
from .polyalg import UniSeries
from .proj import HypographSet, LinearSubspace, SolveOpts, TwoPolySet

TINY_NORM = 1e-14

_ACTIVE_STR = {0: "-", 1: "1", 2: "2", 3: "1+2"}
_ACTIVE_SET = {0: frozenset(), 1: frozenset({1}), 2: frozenset({2}), 3: frozenset({1, 2})}


def _spot_check_set(conset):
    """Sample-based sanity check of the caller's convexity/positivity claims."""
    rng = np.random.default_rng(0)
    if isinstance(conset, HypographSet):
        polys = [conset.g]
        nv = conset.n

        def floor(x):
            return float(conset.g.eval(x))
    else:
        polys = [conset.f1, conset.f2]
        nv = 2

        def floor(x):
            return max(float(conset.f1.eval(x)), float(conset.f2.eval(x)))

    pts = rng.standard_normal((1000, nv))
    pts *= (rng.uniform(0, 1, 1000) ** (1.0 / nv) / np.linalg.norm(pts, axis=1))[:, None]
    for x in pts:
        r = np.linalg.norm(x)
        if r > 1e-6 and floor(x) <= 0.0:
            raise ScenarioError(
                f"set does not isolate the origin: boundary floor {floor(x):.3e} <= 0 at |x|={r:.3e}")
    for p in polys:
        for i in range(0, 998, 2):
            u, v = pts[i], pts[i + 1]
            mid = float(p.eval((u + v) / 2.0))
            avg = 0.5 * (float(p.eval(u)) + float(p.eval(v)))
            if mid > avg + 1e-10:
                raise ScenarioError(f"midpoint convexity violated by {mid - avg:.3e}")


def record_schedule(K, stride=None, per_decade=48):
    """Recording steps: all of 0..10 then geometrically spaced, always K."""
    if stride is not None:
        if stride < 1:
            raise ValueError("record_stride must be >= 1")
        ks = set(range(0, K + 1, stride))
    else:
        ks = set(range(0, min(10, K) + 1))
        j = 0
        while True:
            k = round(10.0 ** (j / per_decade))
            if k > K:
                break
            ks.add(k)
            j += 1
    ks.add(K)
    return np.array(sorted(ks), dtype=np.int64)


@dataclass
class Scenario:
    """One alternating-projection run: the set, the subspace, and the start."""

    conset: object
    subspace: LinearSubspace
    u0: np.ndarray
    max_iter: int
    record_stride: int | None = None
    record_per_decade: int = 48
    opts: SolveOpts = field(default_factory=SolveOpts)
    assert_convexity: bool = True
    assert_nondegeneracy: bool = True

    def __post_init__(self):
        if not isinstance(self.conset, (HypographSet, TwoPolySet)):
            raise ScenarioError("conset must be a HypographSet or TwoPolySet")
        if self.max_iter < 1:
            raise ScenarioError("iteration budget must be >= 1")
        if not self.assert_convexity:
            raise ScenarioError("scenario requires the caller to assert convexity")
        self.u0 = np.asarray(self.u0, dtype=np.float64)
        amb = self.conset.ambient
        if self.u0.shape != (amb,):
            raise ScenarioError(f"u0 must have dimension {amb}")
        if self.subspace.ambient != amb:
            raise ScenarioError("subspace ambient dimension mismatch")
        pb = self.subspace.basis @ (self.subspace.basis.T @ self.u0)
        if np.linalg.norm(pb - self.u0) > 1e-12 * max(1.0, np.linalg.norm(self.u0)):
            raise ScenarioError("u0 does not lie in the subspace")
        _spot_check_set(self.conset)


@dataclass
class Trace:
    """Recorded alternating-projection run.

    norms[k] is ||u_k|| for every step 0..steps; the remaining arrays hold
    the strided records (iterate, its projection onto the set, active set,
    distance of the projection point to the subspace)."""

    ks: np.ndarray
    us: np.ndarray
    a_pts: np.ndarray
    actives: np.ndarray
    dist_a: np.ndarray
    norms: np.ndarray
    terminated_reason: str
    scenario: Scenario | None = None

    @property
    def rec_norms(self):
        return self.norms[self.ks]

    @property
    def steps(self):
        return len(self.norms) - 1

    def active_sets(self):
        return [_ACTIVE_SET[int(a)] for a in self.actives]

    @classmethod
    def from_norms(cls, norms, ks=None):
        """Synthetic trace carrying only norms (estimator tests/benchmarks)."""
        norms = np.asarray(norms, dtype=np.float64)
        if ks is None:
            ks = np.arange(len(norms), dtype=np.int64)
        else:
            ks = np.asarray(ks, dtype=np.int64)
        nrec = len(ks)
        return cls(ks=ks, us=np.zeros((nrec, 1)), a_pts=np.zeros((nrec, 1)),
                   actives=np.zeros(nrec, dtype=np.int8), dist_a=np.zeros(nrec),
                   norms=norms, terminated_reason="synthetic")


def run_apm(scenario):
    """Iterate u <- P_B(P_A(u)) from scenario.u0; returns the Trace."""
    s = scenario
    K = s.max_iter
    rec_ks = record_schedule(K, s.record_stride, s.record_per_decade)
    amb = s.conset.ambient
    nmax = len(rec_ks) + 1
    norms = np.empty(K + 1)
    rec_k = np.empty(nmax, dtype=np.int64)
    rec_u = np.empty((nmax, amb))
    rec_a = np.empty((nmax, amb))
    rec_active = np.empty(nmax, dtype=np.int8)
    rec_dist = np.empty(nmax)
    Q = s.subspace.basis
    if isinstance(s.conset, HypographSet):
        coeffs, exps, starts = s.conset.pack()
        status, steps, nrec, fail_resid = _k._apm_hypograph(
            coeffs, exps, starts, s.conset.n, Q, s.u0, K, s.opts.tol,
            s.opts.max_iter, rec_ks, TINY_NORM, norms, rec_k, rec_u, rec_a,
            rec_active, rec_dist)
    else:
        (c1, e1, s1), (c2, e2, s2) = s.conset.packs()
        status, steps, nrec, fail_resid = _k._apm_twopoly(
            c1, e1, s1, c2, e2, s2, Q, s.u0, K, s.opts.tol, s.opts.max_iter,
            s.opts.valid_tol, rec_ks, TINY_NORM, norms, rec_k, rec_u, rec_a,
            rec_active, rec_dist)
    if status == 2:
        raise SolverFailure(
            f"projection failed at step {steps} (residual {fail_resid:.3e})",
            residual=float(fail_resid), step=int(steps))
    reason = {0: "max_iter", 1: "tiny_norm", 3: "fixed_point"}[int(status)]
    return Trace(ks=rec_k[:nrec].copy(), us=rec_u[:nrec].copy(),
                 a_pts=rec_a[:nrec].copy(), actives=rec_active[:nrec].copy(),
                 dist_a=rec_dist[:nrec].copy(), norms=norms[:steps + 1].copy(),
                 terminated_reason=reason, scenario=s)


@dataclass
class RecursionSpec:
    """Implicit recursion x_{k+1}(1 + C x_{k+1}^q + x_{k+1}^(q+1) h(x_{k+1})) = x_k."""

    C: float
    q: int
    h: UniSeries | None
    x0: float
    K: int

    def __post_init__(self):
        if self.C <= 0:
            raise ValueError("C must be positive")
        if self.q < 1:
            raise ValueError("q must be a positive integer")
        if self.x0 < 0:
            raise ValueError("x0 must be nonnegative")
        if self.K < 1:
            raise ValueError("K must be >= 1")


def run_recursion_oracle(spec):
    """Solve the recursion step-by-step by safeguarded Newton root-finding."""
    if spec.h is None:
        h = np.zeros(0)
    else:
        h = np.array([float(c) for c in spec.h.coeffs], dtype=np.float64)
    hp = h[1:] * np.arange(1, len(h)) if len(h) > 1 else np.zeros(0)
    xs = np.empty(spec.K + 1)
    status = _k._oracle_kernel(float(spec.C), int(spec.q), h, hp,
                               float(spec.x0), int(spec.K), xs)
    if status != 0:
        raise SolverFailure("recursion forward map is not increasing on the bracket")
    return xs


def fejer_check(trace, tol=1e-10):
    """Steps k whose recorded successor violates
    ||a_next||^2 + d(a_k, B)^2 <= ||a_k||^2 + tol (expected: none)."""
    bad = []
    a_norm = np.linalg.norm(trace.a_pts, axis=1)
    for i in range(len(trace.ks) - 1):
        if a_norm[i + 1] ** 2 + trace.dist_a[i] ** 2 > a_norm[i] ** 2 + tol:
            bad.append(int(trace.ks[i]))
    return bad


@dataclass
class StepResidualReport:
    """Tail behaviour of ||u_k|| - ||u_{k+1}|| - d c0^2 ||u_{k+1}||^(2d-1)."""

    max_ratio: float
    n_checked: int
    k_range: tuple


def step_residual_check(trace, pred, tail_from=None):
    """Max of |residual| / ||u_{k+1}||^(2d) over the tail of the norm array;
    bounded for the correct multiplicity data (d, c0)."""
    d = int(pred.d)
    c0 = abs(float(pred.c0))
    norms = trace.norms
    steps = len(norms) - 1
    lo = steps // 2 if tail_from is None else tail_from
    worst = 0.0
    n = 0
    for k in range(lo, steps):
        un, un1 = norms[k], norms[k + 1]
        if un1 <= 1e-12:
            break
        rho = un - un1 - d * c0 * c0 * un1 ** (2 * d - 1)
        ratio = abs(rho) / un1 ** (2 * d)
        if ratio > worst:
            worst = ratio
        n += 1
    return StepResidualReport(max_ratio=worst, n_checked=n, k_range=(lo, steps))


def write_trace_csv(trace, path):
    """CSV export: k,norm_u,u_1..u_m,active,dist_a_to_B at recorded steps."""
    amb = trace.us.shape[1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "norm_u"] + [f"u_{i+1}" for i in range(amb)]
                   + ["active", "dist_a_to_B"])
        for i, k in enumerate(trace.ks):
            row = [str(int(k)), f"{trace.norms[k]:.17g}"]
            row += [f"{v:.17g}" for v in trace.us[i]]
            row.append(_ACTIVE_STR[int(trace.actives[i])])
            row.append(f"{trace.dist_a[i]:.17g}")
            w.writerow(row)


def read_trace_csv(path):
    """Read back a trace CSV: (ks, norms, us, active_strings, dists)."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    amb = len(header) - 4
    ks = np.array([int(r[0]) for r in body], dtype=np.int64)
    norms = np.array([float(r[1]) for r in body])
    us = np.array([[float(v) for v in r[2:2 + amb]] for r in body]).reshape(len(body), amb)
    actives = [r[2 + amb] for r in body]
    dists = np.array([float(r[3 + amb]) for r in body])
    return ks, norms, us, actives, dists
