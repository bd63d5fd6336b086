import math

import numpy as np
import pytest

from altproj.errors import DegenerateInputError
from altproj.polyalg import parse_poly
from altproj.proj import TwoPolySet, project_twopoly, psi_map
from altproj.region import (
    RegionLabel,
    classify_point,
    classify_scan,
    trace_partition_boundary,
)

F1 = parse_poly("x1^2 + x2^4")
F2_412 = parse_poly("x1^2 - 2*x1 + x2^4 - 4*x2^3 + 6*x2^2 - 4*x2")
F_SHIFT = parse_poly("x1^2 + x1 + x2^4 + 2*x2^3 + 3/2*x2^2 + 1/2*x2")


def test_classify_point_paper_cases():
    t = 0.05
    p = np.array([-2.0, 1.0]) / math.sqrt(5.0) * t
    assert classify_point(F1, F2_412, p) is RegionLabel.CURVE
    assert classify_point(F1, F2_412, (0.0, 0.05)) is RegionLabel.SURFACE1
    assert classify_point(F1, F2_412, (0.0, -0.05)) is RegionLabel.SURFACE2
    p = np.array([1.0, -2.0]) / math.sqrt(5.0) * t
    assert classify_point(F_SHIFT, F1, p) is RegionLabel.SURFACE1


def test_classify_forward_mapped_points(rng):
    count = 0
    while count < 100:
        q = rng.uniform(-0.1, 0.1, 2)
        if np.linalg.norm(q) > 0.1:
            continue
        if float(F1.eval(q)) <= float(F2_412.eval(q)) + 1e-9:
            continue
        P = psi_map(F1, (float(q[0]), float(q[1])))
        assert classify_point(F1, F2_412, P) is RegionLabel.SURFACE1
        count += 1


def _min_dist_to_polyline(p, pts):
    best = math.inf
    for i in range(len(pts) - 1):
        a, b = pts[i], pts[i + 1]
        ab = b - a
        denom = float(ab @ ab)
        t = 0.0 if denom == 0 else float(np.clip((p - a) @ ab / denom, 0.0, 1.0))
        best = min(best, float(np.linalg.norm(p - (a + t * ab))))
    return best


def test_labels_match_projection_active_sets(rng):
    A = TwoPolySet(F1, F2_412)
    b1, _ = trace_partition_boundary(F1, F2_412, 1, (-0.25, 0.25), 201)
    b2, _ = trace_partition_boundary(F1, F2_412, 2, (-0.25, 0.25), 201)
    want = {RegionLabel.SURFACE1: frozenset({1}), RegionLabel.SURFACE2: frozenset({2}),
            RegionLabel.CURVE: frozenset({1, 2})}
    checked = 0
    tried = 0
    while checked < 200 and tried < 4000:
        tried += 1
        P = rng.uniform(-0.1, 0.1, 2)
        if np.linalg.norm(P) > 0.1:
            continue
        if min(_min_dist_to_polyline(P, b1), _min_dist_to_polyline(P, b2)) < 1e-6:
            continue
        label = classify_point(F1, F2_412, P)
        if label is RegionLabel.UNDETERMINED:
            continue
        r = project_twopoly(A, (float(P[0]), float(P[1]), 0.0))
        assert r.active == want[label], (P, label, r.active)
        checked += 1
    assert checked == 200


def test_boundary_polylines_pass_through_origin_tangent_to_alpha():
    alpha = np.array([-2.0, 1.0]) / math.sqrt(5.0)
    for which in (1, 2):
        # the deviation angle decays linearly in the parameter (the Psi_2
        # displacement is O(s^2) against |q| = O(s)); sample near the origin
        pts, skipped = trace_partition_boundary(F1, F2_412, which, (-0.002, 0.002), 81)
        assert skipped == []
        d0 = np.linalg.norm(pts, axis=1).min()
        assert d0 <= 1e-12  # passes through the origin
        i0 = int(np.argmin(np.linalg.norm(pts, axis=1)))
        for j in (i0 - 1, i0 + 1):
            v = pts[j]
            v = v / np.linalg.norm(v)
            angle = math.acos(min(1.0, abs(float(v @ alpha))))
            assert angle <= 1e-3


def test_boundary_identical_inputs_rejected():
    with pytest.raises(DegenerateInputError):
        trace_partition_boundary(F1, F1, 1)


def test_classify_scan_grid_and_empty():
    xs = np.linspace(-0.1, 0.1, 7)
    ys = np.linspace(-0.1, 0.1, 7)
    grid = classify_scan(F1, F2_412, xs, ys)
    assert grid.shape == (7, 7)
    assert set(np.unique(grid)) <= {1, 2, 3}
    # all three strata appear on this window
    assert {1, 2, 3} <= set(np.unique(grid))
    empty = classify_scan(F1, F2_412, [], [])
    assert empty.shape == (0, 0)
    single = classify_scan(F1, F2_412, [0.0], [0.05])
    assert single.shape == (1, 1) and single[0, 0] == RegionLabel.SURFACE1.value


def test_scan_consistent_with_directional_test_near_origin():
    # tiny-radius ring agrees with the tangent-line classification
    t = 1e-9
    p = np.array([-2.0, 1.0]) / math.sqrt(5.0) * t
    assert classify_point(F1, F2_412, p) is RegionLabel.CURVE
    assert classify_point(F1, F2_412, (0.0, t)) is RegionLabel.SURFACE1
    assert classify_point(F1, F2_412, (0.0, -t)) is RegionLabel.SURFACE2


def test_boundary_polylines_are_distinct():
    b1, _ = trace_partition_boundary(F1, F2_412, 1, (-0.2, 0.2), 41)
    b2, _ = trace_partition_boundary(F1, F2_412, 2, (-0.2, 0.2), 41)
    assert b1.shape == b2.shape
    # the two images agree only at the origin
    gap = np.linalg.norm(b1 - b2, axis=1)
    assert gap.max() > 1e-3
    assert (gap > 1e-9).sum() == len(gap) - 1
