import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from calfib import volume as V


# -- comparison solution ------------------------------------------------------------

def test_flat_solution_linear():
    th = np.linspace(0, 0.7, 8)
    assert np.allclose(V.comparison_F(0, 0.7, th), th / 0.7)
    assert V.comparison_F(0, 0.7, 0.7) == pytest.approx(1.0)


def test_spherical_solution():
    assert V.comparison_F(1, math.pi / 2, math.pi / 4) == pytest.approx(math.sqrt(2) / 2, abs=1e-15)


@pytest.mark.parametrize("K", [1.0, -1.0, 0.0])
def test_boundary_values(K):
    assert V.comparison_F(K, 1.2, 0.0) == 0.0
    assert V.comparison_F(K, 1.2, 1.2) == pytest.approx(1.0)


@pytest.mark.parametrize("K", [1.0, -2.0])
def test_ode_residual_order(K):
    t = 1.3
    errs = []
    for n in (50, 100, 200, 400):
        th = np.linspace(0, t, n + 1)
        h = th[1] - th[0]
        Fv = V.comparison_F(K, t, th)
        res = (Fv[2:] - 2 * Fv[1:-1] + Fv[:-2]) / h**2 + K * Fv[1:-1]
        errs.append(np.max(np.abs(res)))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders >= 1.9)


@pytest.mark.parametrize("t", [math.pi, 4.0])
def test_inadmissible_t(t):
    with pytest.raises(ValueError):
        V.comparison_F(1, t, 0.5)


def test_theta_out_of_range():
    with pytest.raises(ValueError):
        V.comparison_F(0, 1.0, 1.5)


# -- alpha ------------------------------------------------------------------------

def test_alpha_flat_exact():
    assert V.alpha(0, 3, 0.6) == pytest.approx(0.2, abs=1e-15)


@pytest.mark.parametrize("t", [0.3, 1.0, math.pi / 2, 2.5])
def test_alpha_k2_antiderivative(t):
    # int_0^t sin / sin t = (1 - cos t) / sin t
    assert V.alpha(1, 2, t) == pytest.approx((1 - math.cos(t)) / math.sin(t), rel=1e-12)


def test_alpha_quarter_circle():
    assert V.alpha(1, 2, math.pi / 2) == pytest.approx(1.0, abs=1e-12)


def test_alpha_increasing():
    ts = np.linspace(0.05, math.pi - 0.05, 50)
    vals = [V.alpha(1, 3, float(t)) for t in ts]
    assert np.all(np.diff(vals) > 0)


@given(st.floats(0.05, 2.0), st.integers(1, 6))
def test_alpha_continuous_at_zero_curvature(t, k):
    for K in (1e-6, -1e-6):
        assert abs(V.alpha(K, k, t) - t / k) < 1e-6


def test_alpha_rejects_k0():
    with pytest.raises(ValueError):
        V.alpha(0, 0, 1.0)


# -- space-form balls -------------------------------------------------------------

@given(st.floats(0.01, 5))
def test_flat_disc_and_ball(r):
    assert V.space_form_ball_volume(0, 2, r) == pytest.approx(math.pi * r * r)
    assert V.space_form_ball_volume(0, 3, r) == pytest.approx(4 / 3 * math.pi * r**3)


@pytest.mark.parametrize("r", [0.5, 1.0, math.pi / 2, 3.0])
def test_spherical_cap(r):
    assert V.space_form_ball_volume(1, 2, r) == pytest.approx(2 * math.pi * (1 - math.cos(r)), rel=1e-12)


def test_hyperbolic_disc():
    r = 0.8
    assert V.space_form_ball_volume(-1, 2, r) == pytest.approx(2 * math.pi * (math.cosh(r) - 1), rel=1e-12)


def test_whole_sphere_admissible():
    assert V.space_form_ball_volume(1, 2, math.pi) == pytest.approx(4 * math.pi)
    with pytest.raises(ValueError):
        V.space_form_ball_volume(1, 2, 3.2)


# -- meshes ----------------------------------------------------------------------

def test_square_ball_close_to_disc():
    Q = V.square_mesh(100)
    p = Q.nearest_vertex([0, 0])
    exact = math.pi * 0.09
    assert V.extrinsic_ball_volume(Q, p, 0.3) == pytest.approx(exact, rel=0.01)
    intr = V.intrinsic_ball_volume(Q, p, 0.3, rings=3)
    # graph distances overestimate, so the intrinsic ball is not larger
    assert exact * 0.97 < intr <= exact


def test_sphere_hemisphere():
    S = V.sphere_mesh(4000)
    p = S.nearest_vertex([0, 0, 1])
    assert V.intrinsic_ball_volume(S, p, math.pi / 2, rings=3) == pytest.approx(2 * math.pi, rel=0.01)
    assert S.total_area == pytest.approx(4 * math.pi, rel=1e-3)


def test_large_radius_gives_total_area():
    Q = V.square_mesh(10)
    assert V.intrinsic_ball_volume(Q, 0, 100.0) == pytest.approx(Q.total_area)
    assert Q.total_area == pytest.approx(4.0)


def test_disconnected_mesh_rejected():
    verts = np.array([[0, 0], [1, 0], [0, 1], [5, 5], [6, 5], [5, 6]], dtype=float)
    with pytest.raises(ValueError, match="disconnected"):
        V.MeshedSubmanifold(verts, np.array([[0, 1, 2], [3, 4, 5]]))


def test_degenerate_face_rejected():
    verts = np.array([[0, 0], [1, 0], [2, 0]], dtype=float)
    with pytest.raises(ValueError):
        V.MeshedSubmanifold(verts, np.array([[0, 1, 2]]))


def test_flat_torus_mesh_volume():
    T = V.flat_torus_mesh(6, (1, 3, 5), 6)
    assert T.dim == 3 and T.total_area == pytest.approx(1.0)


def test_mesh_round_trip():
    T = V.flat_torus_mesh(3, (0, 1), 3)
    back = V.MeshedSubmanifold.loads(T.dumps())
    assert np.array_equal(back.vertices, T.vertices) and np.array_equal(back.faces, T.faces)
    assert back.period == T.period


def test_mesh_parse_error_line():
    with pytest.raises(ValueError, match="line 2"):
        V.MeshedSubmanifold.loads("v 0 0\nv 1 x\n")


# -- comparison margins -------------------------------------------------------------

def test_holomorphic_graph_exact_area_small_r():
    assert V.holomorphic_graph_exact(1e-4) == pytest.approx(math.pi * 1e-8, rel=1e-6)


@pytest.mark.parametrize("r", [0.1, 0.2, 0.3, 0.4])
def test_holomorphic_graph_exact_dominates_disc(r):
    assert V.holomorphic_graph_exact(r) >= math.pi * r * r


def test_holomorphic_graph_margin():
    L = V.holomorphic_graph_mesh(128)
    p = L.nearest_vertex(np.zeros(4))
    m = V.verify_ball_comparison(L, p, 0.3, 0.0, "extrinsic")
    assert m.passed and m.margin >= 0
    assert abs(m.measured - V.holomorphic_graph_exact(0.3)) <= m.straddle_area


def test_flat_fiber_near_equality():
    T = V.flat_torus_mesh(24, (1, 3, 5), 6)
    m = V.verify_ball_comparison(T, 0, 0.2, 0.0, "extrinsic")
    assert abs(m.margin) <= m.straddle_area


def test_quartic_torus_negative_margin_flagged():
    # a non-calibrated surface: positive curvature at the outer equator shrinks geodesic balls
    T = V.quartic_torus_mesh(128, 64)
    p = T.nearest_vertex([1.5, 0, 0])
    m = V.verify_ball_comparison(T, p, 0.9, 0.0, "intrinsic", rings=3)
    assert m.margin < 0 and not m.passed


def test_margin_report_json():
    m = V.verify_ball_comparison(V.square_mesh(8), 40, 0.2, 0.0)
    assert '"mode": "extrinsic"' in m.to_json()


def test_unknown_mode():
    with pytest.raises(ValueError):
        V.verify_ball_comparison(V.square_mesh(4), 0, 0.2, 0.0, "geodesic")


# -- diameter bound -------------------------------------------------------------------

def test_diameter_bound_arithmetic():
    assert V.diameter_bound(10, 2, 0.5) == 10
    assert V.diameter_bound(20, 2, 0.5) == 2 * V.diameter_bound(10, 2, 0.5)


def test_diameter_bound_rejects_nonpositive():
    with pytest.raises(ValueError):
        V.diameter_bound(1, 0, 1)


@pytest.mark.parametrize("mesh", [lambda: V.flat_torus_mesh(12, (1, 3, 5), 6),
                                  lambda: V.holomorphic_graph_mesh(32)])
def test_mesh_diameter_within_bound(mesh):
    L = mesh()
    r = 0.2
    bound = V.diameter_bound(L.total_area, V.space_form_ball_volume(0, L.dim, r), r)
    assert V.graph_diameter(L) <= bound
