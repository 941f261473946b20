import math
import re

import numpy as np
import pytest

from spiralfire import InvalidParameterError, StepTooCoarseError, derive_params
from spiralfire import geometry as g
from spiralfire.series import coefficients_by_convolution, containment_round


@pytest.fixture(scope="module")
def v3():
    return g.build_curve(derive_params(3.0), 1e-3, 5)


@pytest.fixture(scope="module")
def v5():
    return g.build_curve(derive_params(5.0), 1e-3, 5)


# bootstrap marks

@pytest.mark.parametrize("v", [2.7, 3.0, 4.0, 10.0])
def test_l1_l2_marks(v):
    p = derive_params(v)
    ds = 1e-3
    c = g.build_curve(p, ds, 3)
    assert abs(c.arc_length[c.p1_index] - p.l1) <= 2 * ds
    assert abs(c.arc_length[c.p2_index] - p.l2) <= 2 * ds
    m0, n0 = c.marks[0], c.marks[1]
    assert (m0.kind, n0.kind) == ("M", "N")
    assert m0.arc == p.l1 and n0.arc == p.l2
    assert c.p1_index in c.round_marks and c.p2_index in c.round_marks


def test_bootstrap_is_exact_spiral(v3):
    p = v3.params
    first = slice(0, v3.p1_index + 1)
    pts = v3.points[first]
    rad = np.hypot(pts[:, 0], pts[:, 1])
    theta = np.unwrap(np.arctan2(pts[:, 1], pts[:, 0]))
    assert np.allclose(rad, p.A * np.exp(theta * p.cot_alpha), rtol=1e-12)
    assert theta[-1] == pytest.approx(2 * math.pi, abs=1e-3)
    second = v3.points[v3.p1_index + 1 : v3.p2_index + 1] - np.array([p.A, 0.0])
    d = np.hypot(second[:, 0], second[:, 1])
    assert np.allclose(d, v3.free_string[v3.p1_index + 1 : v3.p2_index + 1], rtol=1e-12)
    # phase 2 starts at distance A(e^{2 pi cot a} - 1) from p0 and ends after angle alpha
    ang = np.unwrap(np.arctan2(second[:, 1], second[:, 0]))
    assert d[-1] / p.A == pytest.approx(p.r * math.expm1(2 * math.pi * p.cot_alpha), rel=1e-12)
    assert ang[-1] == pytest.approx(p.alpha, abs=1e-12)


def test_round_zero_value(v3):
    F = g.measure_free_string_at_rounds(v3)
    p = v3.params
    assert F[0] == pytest.approx(p.A * math.exp(2 * math.pi * p.cot_alpha), abs=v3.step)


@pytest.mark.parametrize("v", [2.7, 3.0, 5.0, 10.0])
def test_closes_at_series_round(v):
    p = derive_params(v)
    # near the critical speed the coils grow by e^{2 pi cot a} per round; scale the step
    c = g.build_curve(p, 5e-4 if v == 10.0 else 1e-3, 12, relative=v < 3.0)
    assert c.closed and c.stop_reason == "closed"
    assert c.containment_round == containment_round(p, 50)


def test_below_critical_does_not_close():
    c = g.build_curve(derive_params(2.5), 1e-3, 10, relative=True)
    assert not c.closed
    assert c.stop_reason == "max_rounds"
    assert c.containment_round is None
    assert np.all(c.free_string[c.p2_index :] > 0.0)


def test_round_values_converge_first_order():
    # rounds 1 and 2 exist at v = 3 (closure at round 3)
    p = derive_params(3.0)
    ref = coefficients_by_convolution(p, 3)
    errs = []
    for ds in (1 / 500, 1 / 1000, 1 / 2000):
        vals = g.measure_free_string_at_rounds(g.build_curve(p, ds, 5))
        errs.append([
            abs(vals.F[1] - ref.Fj[1]) / ref.Fj[1],
            abs(vals.F[2] - ref.Fj[2]) / ref.Fj[2],
            abs(vals.phi[1] - ref.phi(1)) / ref.phi(1),
        ])
    errs = np.array(errs)
    assert np.all(errs[-1] < 0.01)
    order = np.log2(errs[:-1] / errs[1:])
    assert np.all(order >= 0.9), order


# polyline invariants

def test_uniform_increments(v5):
    d = np.diff(v5.arc_length)
    assert np.all(d > 0.0)
    # the only short step is the one the bootstrap ends with or the closing step
    off = np.abs(d - v5.step) > 1e-9 * v5.step
    assert off.sum() <= 2
    assert np.allclose(np.hypot(*np.diff(v5.points, axis=0).T)[~off], v5.step, rtol=1e-9)


def test_relative_step_grows():
    p = derive_params(2.5)
    c = g.build_curve(p, 1e-3, 3, relative=True)
    d = np.diff(c.arc_length[c.p2_index :])
    r = np.hypot(*c.points[c.p2_index : -1].T)
    assert np.allclose(d, 1e-3 * np.maximum(1.0, r / p.A), rtol=1e-2)


def test_tangents_turn_counterclockwise(v3):
    T = v3.tangents
    assert np.allclose(np.hypot(T[:, 0], T[:, 1]), 1.0)
    cross = T[:-1, 0] * T[1:, 1] - T[:-1, 1] * T[1:, 0]
    assert cross.min() >= -1e-12


@pytest.mark.parametrize("angle", np.linspace(0.0, 2 * math.pi, 9)[:-1])
def test_ray_radii_increase(v3, angle):
    radii = g.spiral_ray_radii(v3, angle)
    assert radii.size >= 2
    assert np.all(np.diff(radii) > 0.0)


def _segments_cross(a, b, c, d):
    def orient(p, q, r):
        return (q[..., 0] - p[..., 0]) * (r[..., 1] - p[..., 1]) - (q[..., 1] - p[..., 1]) * (r[..., 0] - p[..., 0])

    return (orient(a, b, c) * orient(a, b, d) < 0) & (orient(c, d, a) * orient(c, d, b) < 0)


def test_not_self_intersecting(v5):
    # leave out the final approach, where the curve meets itself by construction
    keep = np.nonzero(v5.free_string >= 0.5 * v5.params.A)[0]
    pts = v5.points[: keep[-1] : 20]
    a, b = pts[:-1], pts[1:]
    for k in range(a.shape[0]):
        later = slice(k + 2, a.shape[0])
        hit = _segments_cross(a[k], b[k], a[later], b[later])
        assert not hit.any(), k


def test_step_validation():
    p = derive_params(3.0)
    with pytest.raises(InvalidParameterError, match="ds must lie"):
        g.build_curve(p, 0.0, 3)
    with pytest.raises(InvalidParameterError, match="ds must lie"):
        g.build_curve(p, 0.02, 3)
    with pytest.raises(InvalidParameterError):
        g.build_curve(p, 1e-3, 0)
    with pytest.raises(InvalidParameterError, match="increase ds"):
        g.build_curve(derive_params(1.05), 1e-2, 3)


def test_point_budget():
    c = g.build_curve(derive_params(2.5), 1e-3, 10, max_points=200_000)
    assert c.stop_reason == "budget" and not c.closed
    assert len(c) <= 200_000


def test_step_too_coarse():
    with pytest.raises(StepTooCoarseError, match="reduce ds"):
        g.build_curve(derive_params(3.0), 1e-2, 3, max_turn=1e-3)


def test_csv_rows(v5):
    rows = list(v5.to_csv_rows())
    assert len(rows) == len(v5)
    assert rows[0][:3] == (0, v5.params.A, 0.0)


# linkages

def test_linkage_after_p2(v3):
    link = g.build_linkage(v3, v3.p2_index + 1)
    assert len(link) == 2
    assert link.linkage_type == "F"
    assert link.edges[0][0] == (0.0, 0.0)


def test_linkage_edges_turn_by_alpha(v3):
    p = v3.params
    rng = np.random.default_rng(7)
    for i in rng.integers(v3.p2_index + 1, len(v3) - 1, 60):
        link = g.build_linkage(v3, int(i))
        d = np.diff(link.directions())
        dev = np.abs((d - p.alpha + math.pi) % (2 * math.pi) - math.pi)
        assert dev.max() < 5 * v3.step / p.A
        # edges are chained end to start and the outer end is the sample
        for (a0, a1), (b0, b1) in zip(link.edges, link.edges[1:]):
            assert a1 == b0
        assert np.allclose(link.edges[-1][1], v3.points[i])


def test_linkage_types_alternate_in_intervals(v3):
    idx = np.linspace(v3.p2_index + 1, len(v3) - 2, 300).astype(int)
    types = [g.linkage_type_at(v3, int(i)) for i in idx]
    assert set(types) == {"F", "phi"}
    changes = sum(1 for a, b in zip(types, types[1:]) if a != b)
    # one change per half round, far fewer than samples
    assert 2 <= changes <= 2 * v3.containment_round
    assert types[0] == "F"


def test_linkage_rejects_bootstrap_samples(v3):
    with pytest.raises(InvalidParameterError):
        g.build_linkage(v3, v3.p2_index)


# structure checks

def test_circumradius_circle():
    R = 3.7
    t = np.array([0.4, 0.401, 0.402])
    pts = np.column_stack([R * np.cos(t), R * np.sin(t)])
    assert g.circumradius(*pts) == pytest.approx(R, abs=1e-6)
    assert g.circumradius((0, 0), (1, 1), (2, 2)) == math.inf


@pytest.mark.parametrize("alpha", [0.3, 1.0, 1.4])
def test_turned_normals_on_circle(alpha):
    R = 2.0
    t, s = 0.7, 0.7 + 1e-6

    def at(u):
        return (R * math.cos(u), R * math.sin(u)), (-math.sin(u), math.cos(u))

    d = g.turned_normal_intersection(*at(t), *at(s), alpha)
    assert d == pytest.approx(math.sin(alpha) * R, rel=1e-5)


def test_grow_residual_v4():
    c = g.build_curve(derive_params(4.0), 1 / 2000, 5)
    rep = g.validate_structure(c)
    assert rep.grow < 1e-3
    assert all(rep.passed.values())
    assert set(rep.as_dict()) >= {"grow", "links", "wrap", "passed"}


def test_structure_residuals_shrink():
    p = derive_params(4.0)
    reps = [g.validate_structure(g.build_curve(p, ds, 5)) for ds in (1 / 500, 1 / 1000, 1 / 2000)]
    for name in ("grow", "links", "wrap"):
        vals = [getattr(r, name) for r in reps]
        assert vals[0] / vals[1] >= 1.8 and vals[1] / vals[2] >= 1.8, (name, vals)


# svg

def test_svg_minimal(v5):
    doc = g.export_svg(v5)
    assert doc.count("<path") == 1
    assert doc.count("<circle") == 1
    assert "<rect" not in doc and "<line" not in doc
    assert re.search(r'viewBox="[-0-9. ]+"', doc)


def test_svg_deterministic(v5):
    opts = {"marks": True, "linkage": v5.p2_index + 500}
    assert g.export_svg(v5, opts) == g.export_svg(v5, dict(opts))


def test_svg_linkage_overlay(v3):
    i = len(v3) - 1000
    doc = g.export_svg(v3, {"linkage": i})
    assert doc.count("<line") == len(g.build_linkage(v3, i))


def test_svg_marks(v3):
    doc = g.export_svg(v3, {"marks": True})
    assert doc.count("<rect") == len(v3.marks)
