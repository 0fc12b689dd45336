import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from weylgroupoid.expmaps import (
    ArcLength,
    OutOfWindowError,
    connection_for,
    exp_left,
    exp_weyl,
    exp_weyl_array,
    geodesic_flow,
    haar_jacobian,
    log_weyl_array,
    rk4_adaptive,
)
from weylgroupoid.geometry import (
    EXAMPLE_NAMES,
    TWO_PI,
    AlgebroidVector,
    GroupoidPoint,
    Resolution,
    build_haar_system,
    circle_metric,
    make_example,
)


def vec(q, *x):
    return AlgebroidVector(q, tuple(x))


@pytest.fixture(scope="module")
def metric_circle():
    return make_example("pair-circle-metric", Resolution(points=64))


def test_flat_geodesic_example():
    m = make_example("pair-flat-line")
    st_ = geodesic_flow(m, connection_for(m), vec(0.0, 1.0), 1.0)
    assert st_.point == GroupoidPoint((0.0, 1.0))
    assert st_.velocity == (1.0,)
    assert connection_for(m).christoffel is None


@pytest.mark.parametrize("name", EXAMPLE_NAMES)
def test_zero_vector_is_fixed(name):
    m = make_example(name)
    conn = connection_for(m)
    q = 0.0 if m.base.kind == "point" else float(m.base.samples[3])
    X = vec(q, *([0.0] * m.fiber_dim))
    for t in (0.5, 1.0, 3.0):
        p = geodesic_flow(m, conn, X, t).point.array()
        assert m.same_point(p, m.unit(np.float64(q)), tol=0.0)


def test_flat_geodesic_leaving_window():
    m = make_example("pair-flat-line", Resolution(window=2.0))
    with pytest.raises(OutOfWindowError):
        geodesic_flow(m, connection_for(m), vec(1.5, 1.0), 1.0)


def test_metric_geodesic_half_step_reference(metric_circle):
    m = metric_circle
    conn = connection_for(m)
    X = vec(0.4, 1.1)
    a = geodesic_flow(m, conn, X, 1.0)
    b = geodesic_flow(m, conn, X, 1.0, tol=1e-14, max_step=0.05)
    assert abs(a.point.coords[1] - b.point.coords[1]) < 1e-10
    assert abs(a.velocity[0] - b.velocity[0]) < 1e-10


def test_metric_geodesic_constant_speed_arclength(metric_circle):
    # in one dimension a geodesic travels arc length sqrt(g(q0)) |v0| t at constant speed
    m = metric_circle
    S = ArcLength(circle_metric, modes=256)
    q0, v0 = 0.4, 1.1
    end = geodesic_flow(m, connection_for(m), vec(q0, v0), 1.0)
    q1, v1 = end.point.coords[1], end.velocity[0]
    travelled = np.mod(S(q1) - S(q0), S.length)
    assert abs(travelled - np.sqrt(circle_metric(q0)) * v0) < 1e-10
    assert abs(np.sqrt(circle_metric(q1)) * v1 - np.sqrt(circle_metric(q0)) * v0) < 1e-10


def test_rk4_adaptive_exponential():
    y = rk4_adaptive(lambda y: y, [1.0], 2.0)
    assert abs(y[0] - np.exp(2.0)) < 1e-10
    y = rk4_adaptive(lambda y: y, [1.0], -1.0)
    assert abs(y[0] - np.exp(-1.0)) < 1e-11


def test_connection_christoffel(metric_circle):
    gamma = connection_for(metric_circle).christoffel
    q = np.linspace(0, TWO_PI, 7)
    exact = -0.3 * np.sin(q) / (2 * circle_metric(q))
    assert np.max(np.abs(gamma(q) - exact)) < 1e-10


@pytest.mark.parametrize("name", EXAMPLE_NAMES)
def test_exp_left_target_is_base_point(name):
    m = make_example(name)
    conn = connection_for(m)
    rng = np.random.default_rng(7)
    for _ in range(10):
        q = 0.0 if m.base.kind == "point" else float(rng.uniform(0, 2))
        X = vec(q, *rng.uniform(-1, 1, m.fiber_dim))
        p = exp_left(m, conn, X).array()
        if m.base.kind != "point":
            assert abs(m.base.difference(m.target(p), q)) < 1e-10


def test_exp_left_closed_forms():
    m = make_example("pair-flat-line")
    assert exp_left(m, connection_for(m), vec(0.5, 2.0)) == GroupoidPoint((0.5, 2.5))
    g = make_example("group-affine")
    X = np.array([0.3, -0.7])
    np.testing.assert_allclose(exp_left(g, connection_for(g), vec(0.0, *X)).array(), g.group.exp(X), atol=0)
    t = make_example("transf-line-translation")
    assert exp_left(t, connection_for(t), vec(1.0, 0.4)) == GroupoidPoint((0.4, 1.0))


def test_exp_weyl_examples():
    m = make_example("pair-flat-line")
    assert exp_weyl(m, connection_for(m), vec(0.0, 2.0)) == GroupoidPoint((-1.0, 1.0))
    t = make_example("transf-line-translation")
    assert exp_weyl(t, connection_for(t), vec(0.0, 2.0)) == GroupoidPoint((2.0, 1.0))
    g = make_example("group-affine")
    X = np.array([0.5, 0.25])
    np.testing.assert_allclose(exp_weyl(g, connection_for(g), vec(0.0, *X)).array(), g.group.exp(X), atol=1e-15)


@settings(max_examples=50, deadline=None)
@given(st.floats(-5, 5), st.floats(-3, 3))
def test_flat_weyl_exact_formula(q, v):
    m = make_example("pair-flat-line")
    p = exp_weyl(m, connection_for(m), vec(q, v)).array()
    assert p[0] == q - 0.5 * v and p[1] == q + 0.5 * v


@pytest.mark.parametrize("name", EXAMPLE_NAMES)
def test_exp_weyl_of_zero_is_unit(name):
    m = make_example(name)
    conn = connection_for(m)
    q = 0.0 if m.base.kind == "point" else 1.25
    p = exp_weyl(m, conn, vec(q, *([0.0] * m.fiber_dim))).array()
    assert np.array_equal(p, m.unit(np.float64(q)))
    assert np.array_equal(exp_weyl_array(m, np.zeros((1, m.fiber_dim)), np.array([q]))[0], m.unit(np.float64(q)))


@pytest.mark.parametrize("name", EXAMPLE_NAMES)
def test_exp_weyl_inverse_symmetry(name):
    m = make_example(name)
    rng = np.random.default_rng(11)
    X = rng.uniform(-0.9, 0.9, (40, m.fiber_dim))
    q = rng.uniform(0, 2, 40) if m.base.kind != "point" else np.zeros(40)
    plus = exp_weyl_array(m, X, q)
    minus = exp_weyl_array(m, -X, q)
    assert m.same_point(minus, m.inverse(plus), tol=1e-12)


def test_metric_weyl_closed_form_matches_integrator(metric_circle):
    m = metric_circle
    conn = connection_for(m)
    for q, v in ((0.3, 1.0), (2.0, -2.2), (5.5, 0.7)):
        integrated = exp_weyl(m, conn, vec(q, v)).array()
        closed = exp_weyl_array(m, np.array([[v]]), np.array([q]))[0]
        assert np.max(np.abs(m.base.difference(integrated, closed))) < 1e-10


@pytest.mark.parametrize("name", EXAMPLE_NAMES)
def test_log_weyl_inverts_exp_weyl(name):
    m = make_example(name)
    rng = np.random.default_rng(5)
    r = min(1.5, 0.9 * m.injectivity_radius)
    X = rng.uniform(-r, r, (60, m.fiber_dim))
    q = rng.uniform(0, 3, 60) if m.base.kind != "point" else np.zeros(60)
    Y, q1 = log_weyl_array(m, exp_weyl_array(m, X, q))
    assert np.max(np.abs(Y - X)) < 1e-10
    if m.base.kind != "point":
        assert np.max(np.abs(m.base.difference(q1, q))) < 1e-10


@pytest.mark.parametrize("name", ["pair-circle-metric", "group-u1", "transf-circle-rotation"])
def test_local_injectivity(name):
    m = make_example(name)
    r = m.injectivity_radius
    X = np.linspace(-r, r, 201)[1:-1, None]
    pts = exp_weyl_array(m, X, np.full(len(X), 0.8))
    spacing = X[1, 0] - X[0, 0]
    d = pts[:, None, :] - pts[None, :, :]
    d = np.mod(d + np.pi, TWO_PI) - np.pi
    sep = np.max(np.abs(d), axis=-1) + np.eye(len(X)) * 1e9
    # |d Exp^W / dX| >= min sqrt(g) / max sqrt(g) > 0.5 in these charts
    assert sep.min() >= 0.5 * spacing


def test_outside_injectivity_window():
    m = make_example("group-u1")
    conn = connection_for(m)
    with pytest.raises(OutOfWindowError):
        exp_left(m, conn, vec(0.0, 3.5))
    with pytest.raises(OutOfWindowError):
        exp_weyl(m, conn, vec(0.0, 6.4))
    with pytest.raises(OutOfWindowError):
        haar_jacobian(m, build_haar_system(m), 0.0, np.array([[3.2]]))


@pytest.mark.parametrize("name", EXAMPLE_NAMES)
def test_jacobian_is_one_at_zero_and_positive(name):
    m = make_example(name)
    haar = build_haar_system(m)
    q = np.linspace(0, 2, 5)
    assert np.all(haar_jacobian(m, haar, q, np.zeros((5, m.fiber_dim))) == 1.0)
    X = np.full((5, m.fiber_dim), 0.3)
    assert np.all(haar_jacobian(m, haar, q, X) > 0)


def test_affine_jacobian_matches_volume_ratio():
    # push a small simplex through Exp and compare Haar volume with its Lebesgue volume
    m = make_example("group-affine")
    haar = build_haar_system(m)
    rng = np.random.default_rng(2)
    eps = 1e-5
    for X in rng.uniform(-1.2, 1.2, (8, 2)):
        corners = np.array([X, X + [eps, 0], X + [0, eps]])
        img = m.group.exp(corners)
        area = 0.5 * abs(np.linalg.det(np.stack([img[1] - img[0], img[2] - img[0]])))
        Xc = corners.mean(axis=0)
        oracle = area * m.group.haar_density(m.group.exp(Xc)) / (0.5 * eps * eps)
        J = haar_jacobian(m, haar, 0.0, Xc[None, :])[0]
        assert abs(J / oracle - 1) < 1e-6


def test_metric_jacobian_near_one_for_small_x(metric_circle):
    haar = build_haar_system(metric_circle)
    J = haar_jacobian(metric_circle, haar, np.full(3, 1.0), np.array([[1e-3], [-1e-3], [2e-3]]))
    assert np.max(np.abs(J - 1)) < 1e-4
