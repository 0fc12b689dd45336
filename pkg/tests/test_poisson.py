from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from weylgroupoid.fourier import (
    ClosedForm,
    FiberGrid,
    FourierError,
    Product,
    bump_observable,
    gaussian_observable,
    make_pw_observable,
)
from weylgroupoid.geometry import Resolution, affine_group, line_window, make_example
from weylgroupoid.poisson import Bracket, BracketDescriptor, bracket_on_lattice, descriptor_for, poisson_bracket

SIG = 0.3


def gauss_dual(theta, p, sigma=SIG):
    """Closed-form transform of exp(-X^2/(2 sigma^2)) exp(-i p X) in one dimension, and its theta-derivative."""
    c = np.sqrt(2 * np.pi) * sigma
    val = c * np.exp(-0.5 * sigma**2 * (theta + p) ** 2)
    return val, -sigma**2 * (theta + p) * val


@pytest.fixture(scope="module")
def flat():
    return make_example("pair-flat-line", Resolution(points=17, window=2.0))


@pytest.fixture(scope="module")
def affine():
    return make_example("group-affine")


def test_descriptor_validation(flat):
    assert descriptor_for(flat).family == "canonical"
    with pytest.raises(ValueError):
        BracketDescriptor("symplectic")
    with pytest.raises(ValueError):
        BracketDescriptor("canonical", 0)
    grid = FiberGrid((0.05,), (64,))
    with pytest.raises(FourierError):
        bracket_on_lattice(flat, BracketDescriptor("lie-poisson"), gaussian_observable(SIG), gaussian_observable(SIG), grid, [0.0])


def test_base_functions_commute(flat):
    # ft concentrated at X = 0 is a function of q alone
    grid = FiberGrid((0.05,), (64,))
    f = ClosedForm(lambda X, q: np.cos(q) * (np.abs(X[..., 0]) < 1e-9), 0.01)
    g = ClosedForm(lambda X, q: np.exp(q) * (np.abs(X[..., 0]) < 1e-9), 0.01)
    out = bracket_on_lattice(flat, descriptor_for(flat), f, g, grid, [-0.4, 0.7])
    assert np.max(np.abs(out)) == 0


def test_canonical_bracket_matches_closed_form(flat):
    # sign +: {f, g} = -(d_theta f d_q g - d_q f d_theta g), so {theta, g(q)} = -g'(q)
    a = lambda q: np.exp(-0.5 * q**2)  # noqa: E731
    da = lambda q: -q * np.exp(-0.5 * q**2)  # noqa: E731
    b = lambda q: np.cos(q)  # noqa: E731
    db = lambda q: -np.sin(q)  # noqa: E731
    f = gaussian_observable(SIG, momentum=0.4, q_width=1.0, q_shape="gauss")
    g = ClosedForm(lambda X, q: np.exp(-0.5 * (X[..., 0] / SIG) ** 2) * np.exp(0.7j * X[..., 0]) * b(q), 3.0)
    grid = FiberGrid((0.02,), (512,))
    q = np.array([-0.6, 0.1, 0.9])
    out = bracket_on_lattice(flat, descriptor_for(flat, +1), f, g, grid, q)
    th = grid.dual_axis(0)[None, :]
    F, Ft = gauss_dual(th, 0.4)
    G, Gt = gauss_dual(th, -0.7)
    Q = q[:, None]
    exact = -(Ft * a(Q) * G * db(Q) - F * da(Q) * Gt * b(Q))
    assert np.max(np.abs(out - exact)) < 1e-9


def test_affine_bracket_matches_closed_form(affine):
    # sign +: {f, g} = -theta_2 (d_1 f d_2 g - d_2 f d_1 g); on coordinates {theta_1, theta_2} = -theta_2
    s = 0.2
    f = gaussian_observable(s, momentum=(0.5, -0.3), n=2)
    g = gaussian_observable(s, momentum=(-0.2, 0.6), n=2)
    grid = FiberGrid((0.04, 0.04), (96, 96))
    out = bracket_on_lattice(affine, descriptor_for(affine, +1), f, g, grid, [0.0])[0]
    T = grid.dual_points()
    fv = 2 * np.pi * s * s * np.exp(-0.5 * s * s * np.sum((T + [0.5, -0.3]) ** 2, axis=-1))
    gv = 2 * np.pi * s * s * np.exp(-0.5 * s * s * np.sum((T + [-0.2, 0.6]) ** 2, axis=-1))
    df = [-s * s * (T[..., i] + [0.5, -0.3][i]) * fv for i in range(2)]
    dg = [-s * s * (T[..., i] + [-0.2, 0.6][i]) * gv for i in range(2)]
    exact = -T[..., 1] * (df[0] * dg[1] - df[1] * dg[0])
    assert np.max(np.abs(out - exact)) < 1e-10


OBS = {
    "flat": [bump_observable(1.0, momentum=0.7, q_width=0.8, q_shape="gauss"),
             bump_observable(0.8, momentum=-0.3, q_center=0.3, q_width=0.8, q_shape="gauss"),
             gaussian_observable(0.25, momentum=0.2, q_width=1.2, q_shape="gauss")],
    "affine": [gaussian_observable(0.15, momentum=(0.7, 0.4), n=2),
               gaussian_observable(0.13, momentum=(-0.3, 0.5), n=2),
               gaussian_observable(0.2, momentum=(0.1, -0.4), n=2)],
}


def _setup(kind):
    if kind == "flat":
        return make_example("pair-flat-line"), FiberGrid((0.05,), (128,)), np.array([-0.3, 0.4])
    return make_example("group-affine"), FiberGrid((0.04, 0.04), (96, 96)), np.array([0.0])


@pytest.mark.parametrize("kind", ["flat", "affine"])
def test_antisymmetry_and_sign_flip(kind):
    m, grid, q = _setup(kind)
    f, g, _ = OBS[kind]
    fg = bracket_on_lattice(m, descriptor_for(m, +1), f, g, grid, q)
    gf = bracket_on_lattice(m, descriptor_for(m, +1), g, f, grid, q)
    assert np.max(np.abs(fg + gf)) < 1e-12
    minus = bracket_on_lattice(m, descriptor_for(m, -1), f, g, grid, q)
    assert np.array_equal(minus, -fg)


@pytest.mark.parametrize("kind", ["flat", "affine"])
def test_leibniz(kind):
    m, grid, q = _setup(kind)
    f, g, h = OBS[kind]
    d = descriptor_for(m)
    lhs = bracket_on_lattice(m, d, f, Product(g, h), grid, q)
    gv, hv = g.dual_lattice(grid, q, m.fiber_scale(q)), h.dual_lattice(grid, q, m.fiber_scale(q))
    rhs = bracket_on_lattice(m, d, f, g, grid, q) * hv + gv * bracket_on_lattice(m, d, f, h, grid, q)
    assert np.max(np.abs(lhs - rhs)) < 1e-9


@pytest.mark.parametrize("kind", ["flat", "affine"])
def test_jacobi(kind):
    m, grid, q = _setup(kind)
    f, g, h = OBS[kind]
    d = descriptor_for(m)

    def br(a, b):
        return Bracket(m, a, b, d.sign)

    total = sum(bracket_on_lattice(m, d, a, br(b, c), grid, q)
                for a, b, c in ((f, g, h), (g, h, f), (h, f, g)))
    assert np.max(np.abs(total)) < 1e-8


def test_trivial_action_reduces_to_lie_poisson(affine):
    g = affine_group()
    trivial = replace(
        make_example("transf-line-translation"),
        name="affine-trivial", base=line_window(2.0, 9), fiber_dim=2, group=g,
        action=lambda x, q: np.asarray(q, float) + 0 * np.asarray(x, float)[..., 0],
        generators=lambda q: np.zeros(np.shape(q) + (2,)),
    )
    f, h, _ = OBS["affine"]
    grid = FiberGrid((0.04, 0.04), (64, 64))
    q = np.array([-1.0, 0.0, 1.5])
    out = bracket_on_lattice(trivial, descriptor_for(trivial), f, h, grid, q)
    ref = bracket_on_lattice(affine, descriptor_for(affine), f, h, grid, [0.0])
    assert np.max(np.abs(out - ref)) < 1e-14


def test_poisson_bracket_on_pw_samples(flat):
    f, g, _ = OBS["flat"]
    grid = FiberGrid((0.05,), (128,))
    pf, pg = make_pw_observable(flat, f, grid=grid), make_pw_observable(flat, g, grid=grid)
    out = poisson_bracket(flat, descriptor_for(flat), pf, pg)
    assert out.shape == pf.dual_samples.shape
    other = make_pw_observable(flat, g, step=0.1)
    with pytest.raises(FourierError):
        poisson_bracket(flat, descriptor_for(flat), pf, other)


@settings(max_examples=20, deadline=None)
@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(0.15, 0.4))
def test_bracket_bilinear_property(p1, p2, width):
    m, grid, q = _setup("flat")
    f = gaussian_observable(width, momentum=p1, q_width=1.0, q_shape="gauss")
    g = bump_observable(0.9, momentum=p2, q_center=0.2, q_width=0.8, q_shape="gauss")
    h = OBS["flat"][2]
    d = descriptor_for(m)
    lhs = bracket_on_lattice(m, d, 2.0 * f + h, g, grid, q)
    rhs = 2.0 * bracket_on_lattice(m, d, f, g, grid, q) + bracket_on_lattice(m, d, h, g, grid, q)
    assert np.max(np.abs(lhs - rhs)) < 1e-12
