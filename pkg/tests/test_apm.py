import numpy as np
import pytest

from altproj.apm import (
    RecursionSpec,
    Scenario,
    Trace,
    fejer_check,
    read_trace_csv,
    record_schedule,
    run_apm,
    run_recursion_oracle,
    step_residual_check,
    write_trace_csv,
)
from altproj.errors import ScenarioError
from altproj.polyalg import UniSeries, parse_poly
from altproj.proj import HypographSet, LinearSubspace, TwoPolySet

G = parse_poly("x1^2 + x2^4")


class _Pred:
    def __init__(self, d, c0):
        self.d = d
        self.c0 = c0


def _line(v):
    return LinearSubspace.from_spanning([np.asarray(v, dtype=float)])


@pytest.fixture(scope="module")
def basic_a34_trace():
    sc = Scenario(conset=HypographSet(G), subspace=_line([3.0, 4.0, 0.0]),
                  u0=np.array([0.06, 0.08, 0.0]), max_iter=10 ** 5)
    return run_apm(sc)


def test_scenario_validation():
    A = HypographSet(G)
    B = _line([3.0, 4.0, 0.0])
    with pytest.raises(ScenarioError):
        Scenario(conset=A, subspace=B, u0=np.array([1.0, 0.0, 0.0]), max_iter=10)
    with pytest.raises(ScenarioError):
        Scenario(conset=A, subspace=B, u0=np.array([0.06, 0.08, 0.0]), max_iter=0)
    with pytest.raises(ScenarioError):
        Scenario(conset=A, subspace=B, u0=np.array([0.06, 0.08, 0.0]), max_iter=10,
                 assert_convexity=False)
    # a non-convex "floor" polynomial is caught by the spot check
    bad = HypographSet(parse_poly("x1^2 - x2^2"))
    with pytest.raises(ScenarioError):
        Scenario(conset=bad, subspace=B, u0=np.array([0.06, 0.08, 0.0]), max_iter=10)


def test_record_schedule_shape():
    ks = record_schedule(10 ** 5, per_decade=24)
    assert ks[0] == 0 and ks[-1] == 10 ** 5
    assert np.all(np.diff(ks) > 0)
    assert len(ks) < 200
    assert 10 ** 4 in ks  # powers of ten stay on the grid
    ks = record_schedule(7, stride=1)
    assert list(ks) == [0, 1, 2, 3, 4, 5, 6, 7]


def test_run_apm_norm_monotone_and_limit(basic_a34_trace):
    tr = basic_a34_trace
    assert np.all(np.diff(tr.norms) <= 1e-15)
    k = int(tr.ks[-1])
    assert k == 10 ** 5
    prod = (18 / 25) * np.sqrt(k) * tr.norms[k]
    assert 0.95 <= prod <= 1.05
    assert tr.terminated_reason == "max_iter"


def test_run_apm_zero_start():
    sc = Scenario(conset=HypographSet(G), subspace=_line([3.0, 4.0, 0.0]),
                  u0=np.zeros(3), max_iter=100)
    tr = run_apm(sc)
    assert tr.terminated_reason == "tiny_norm"
    assert len(tr.norms) <= 2
    assert np.all(tr.norms == 0.0)


def test_run_apm_y_axis_rate():
    sc = Scenario(conset=HypographSet(G), subspace=_line([0.0, 1.0, 0.0]),
                  u0=np.array([0.0, 0.3, 0.0]), max_iter=10 ** 4)
    tr = run_apm(sc)
    k = int(tr.ks[-1])
    prod = 24.0 ** (1 / 6) * k ** (1 / 6) * tr.norms[k]
    assert 0.8 <= prod <= 1.2  # slow limit; the acceptance run uses K=1e6


def test_oracle_examples():
    xs = run_recursion_oracle(RecursionSpec(C=1.0, q=1, h=None, x0=0.5, K=10 ** 6))
    assert abs(10 ** 6 * xs[-1] - 1.0) < 0.01
    xs = run_recursion_oracle(RecursionSpec(C=2.0, q=2, h=None, x0=0.3, K=10 ** 6))
    assert abs((4 * 10 ** 6) ** 0.5 * xs[-1] - 1.0) < 0.01
    xs = run_recursion_oracle(RecursionSpec(C=1.0, q=1, h=None, x0=0.0, K=100))
    assert np.all(xs == 0.0)


def test_oracle_limit_band(rng):
    for _ in range(6):
        q = int(rng.integers(1, 5))
        C = float(rng.uniform(0.1, 10.0))
        xs = run_recursion_oracle(RecursionSpec(C=C, q=q, h=None, x0=0.2, K=10 ** 6))
        prod = (q * C) ** (1 / q) * (10 ** 6) ** (1 / q) * xs[-1]
        assert 0.97 <= prod <= 1.03


def test_oracle_respects_h_series():
    # h = constant 1: x(1 + Cx + x^2) = target
    xs = run_recursion_oracle(RecursionSpec(C=1.0, q=1, h=UniSeries([1.0], 0),
                                            x0=0.25, K=2000))
    x = xs[-2]
    forward = x * (1 + 1.0 * x + x ** 2 * 1.0)
    assert abs(forward - xs[-3]) <= 1e-14 * xs[-3]


def test_fejer_check_on_real_trace(basic_a34_trace):
    assert fejer_check(basic_a34_trace) == []


def test_fejer_check_negative_control(basic_a34_trace):
    tr = basic_a34_trace
    fake = Trace(ks=tr.ks.copy(), us=tr.us.copy(), a_pts=tr.a_pts.copy(),
                 actives=tr.actives.copy(), dist_a=tr.dist_a.copy(),
                 norms=tr.norms.copy(), terminated_reason="hand-built")
    fake.a_pts[5] = fake.a_pts[5] * 40.0  # inflate a recorded projection point
    assert fejer_check(fake) != []


def test_fejer_check_zero_trace():
    sc = Scenario(conset=HypographSet(G), subspace=_line([3.0, 4.0, 0.0]),
                  u0=np.zeros(3), max_iter=10)
    assert fejer_check(run_apm(sc)) == []


def test_step_residual_bounded(basic_a34_trace):
    rep = step_residual_check(basic_a34_trace, _Pred(d=2, c0=9 / 25))
    assert rep.n_checked > 1000
    assert rep.max_ratio < 10.0


def test_step_residual_wrong_multiplicity_blows_up(basic_a34_trace):
    good = step_residual_check(basic_a34_trace, _Pred(d=2, c0=9 / 25))
    bad = step_residual_check(basic_a34_trace, _Pred(d=3, c0=9 / 25))
    assert bad.max_ratio > 100 * max(good.max_ratio, 1.0)


def test_step_residual_zero_trace():
    sc = Scenario(conset=HypographSet(G), subspace=_line([3.0, 4.0, 0.0]),
                  u0=np.zeros(3), max_iter=10)
    rep = step_residual_check(run_apm(sc), _Pred(d=2, c0=9 / 25), tail_from=0)
    assert rep.max_ratio == 0.0


def test_oracle_reproduces_trace_norms(basic_a34_trace):
    # seed the recursion with (C, q) from the multiplicity data and an h
    # constant fitted from the measured next-order residual
    tr = basic_a34_trace
    d, c0 = 2, 9 / 25
    C, q = d * c0 ** 2, 2 * d - 2
    n = tr.norms
    lo = len(n) // 2
    resid = (n[lo:-1] - n[lo + 1:] - C * n[lo + 1:] ** (q + 1)) / n[lo + 1:] ** (q + 2)
    h0 = float(np.median(resid))
    xs = run_recursion_oracle(RecursionSpec(C=C, q=q, h=UniSeries([h0], 0),
                                            x0=float(n[0]), K=10 ** 5))
    ks = np.arange(100, 10 ** 5 + 1)
    rel = np.abs(xs[ks] - n[ks]) / n[ks]
    assert rel.max() <= 0.01


def test_x2y4_region_invariant():
    # once 0 < x < y^2 <= eps holds, it persists to the next step
    B = LinearSubspace.from_spanning([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    sc = Scenario(conset=HypographSet(G), subspace=B,
                  u0=np.array([0.01, 0.2, 0.0]), max_iter=2000, record_stride=1)
    tr = run_apm(sc)
    eps = 0.05
    seen = 0
    for i in range(len(tr.ks) - 1):
        x, y = tr.us[i, 0], tr.us[i, 1]
        if 0.0 < x < y * y <= eps:
            xn, yn = tr.us[i + 1, 0], tr.us[i + 1, 1]
            assert 0.0 < xn < yn * yn
            seen += 1
    assert seen > 100


def test_twopoly_trace_runs():
    f1 = parse_poly("x1^2 + x2^4")
    f2 = parse_poly("x1^2 - 2*x1 + x2^4 - 4*x2^3 + 6*x2^2 - 4*x2")
    sc = Scenario(conset=TwoPolySet(f1, f2), subspace=_line([-2.0, 1.0, 0.0]),
                  u0=np.array([-0.04, 0.02, 0.0]), max_iter=2000)
    tr = run_apm(sc)
    assert np.all(np.diff(tr.norms) <= 1e-15)
    assert fejer_check(tr) == []
    assert tr.active_sets()[1] == frozenset({1, 2})


def test_trace_csv_roundtrip(tmp_path, basic_a34_trace):
    path = tmp_path / "t.csv"
    write_trace_csv(basic_a34_trace, path)
    ks, norms, us, actives, dists = read_trace_csv(path)
    assert np.array_equal(ks, basic_a34_trace.ks)
    assert np.array_equal(norms, basic_a34_trace.rec_norms)
    assert np.array_equal(us, basic_a34_trace.us)
    assert actives[1] == "1"
    # byte determinism
    path2 = tmp_path / "t2.csv"
    write_trace_csv(basic_a34_trace, path2)
    assert path.read_bytes() == path2.read_bytes()
