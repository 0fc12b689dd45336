"""Connections, geodesic flow, the left and Weyl exponential maps, Haar Jacobians."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .geometry import (
    TWO_PI,
    AlgebroidVector,
    GeometryError,
    GroupoidModel,
    GroupoidPoint,
    wrap_angle,
)

GEODESIC_TOL = 1e-12
FD_STEP = 1e-4


class OutOfWindowError(GeometryError):
    pass


@dataclass(frozen=True)
class ConnectionDescriptor:
    kind: str  # flat, levi-civita-1d, group-trivial, action-trivial
    christoffel: Optional[Callable] = None

    def __post_init__(self):
        if self.kind == "levi-civita-1d" and self.christoffel is None:
            raise ValueError("levi-civita-1d needs a Christoffel symbol")


def connection_for(model: GroupoidModel) -> ConnectionDescriptor:
    if model.connection == "levi-civita-1d":
        g = model.base.metric
        h = 1e-5

        def gamma(q):
            # Gamma = g'/(2g), derivative by 4th-order differences
            dg = (-g(q + 2 * h) + 8 * g(q + h) - 8 * g(q - h) + g(q - 2 * h)) / (12 * h)
            return dg / (2.0 * g(q))

        return ConnectionDescriptor("levi-civita-1d", gamma)
    return ConnectionDescriptor(model.connection)


@dataclass(frozen=True)
class GeodesicState:
    """Endpoint of a geodesic: groupoid point reached and velocity there.

    For pair groupoids the velocity is in base chart coordinates; for group and
    action families it is the (constant) left-trivialised velocity.
    """

    point: GroupoidPoint
    velocity: tuple


# ---------------------------------------------------------------------------
# adaptive RK4


def _rk4_step(f, y, h):
    k1 = f(y)
    k2 = f(y + 0.5 * h * k1)
    k3 = f(y + 0.5 * h * k2)
    k4 = f(y + h * k3)
    return y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def rk4_adaptive(f, y0, t_end, tol=GEODESIC_TOL, max_step=0.1):
    """Integrate the autonomous system y' = f(y) from 0 to ``t_end``.

    Each step is accepted once a full step and two half steps agree to
    ``tol``; otherwise the step is halved. Returns the endpoint.
    """
    y = np.asarray(y0, dtype=float)
    if t_end == 0:
        return y.copy()
    direction = np.sign(t_end)
    remaining = abs(t_end)
    h = min(max_step, remaining)
    while remaining > 0:
        h = min(h, remaining)
        while True:
            full = _rk4_step(f, y, direction * h)
            half = _rk4_step(f, y, direction * h / 2)
            half = _rk4_step(f, half, direction * h / 2)
            err = np.max(np.abs(full - half))
            if err <= tol or h < 1e-10:
                break
            h *= 0.5
        y = half
        remaining -= h
        if remaining < 1e-15:
            break
        if err < tol / 64:
            h = min(2 * h, max_step)
    return y


# ---------------------------------------------------------------------------
# geodesic flow and exponential maps


def _check_window(model: GroupoidModel, q):
    if not model.base.periodic and model.base.kind == "line-window":
        L = model.resolution.window
        if np.any(np.abs(q) > L + 1e-12):
            raise OutOfWindowError(f"geodesic leaves the chart window [-{L}, {L}]")


def geodesic_flow(model: GroupoidModel, conn: ConnectionDescriptor, X0: AlgebroidVector,
                  t: float, tol: float = GEODESIC_TOL, max_step: float = 0.1) -> GeodesicState:
    q0 = float(X0.base)
    v = X0.array()
    if v.shape != (model.fiber_dim,):
        raise GeometryError("fiber dimension mismatch")
    if conn.kind == "flat":
        q1 = q0 + t * v[0]
        _check_window(model, np.array([q0, q1]))
        return GeodesicState(GroupoidPoint((q0, float(q1))), (float(v[0]),))
    if conn.kind == "levi-civita-1d":
        gamma = conn.christoffel

        def rhs(y):
            return np.array([y[1], -gamma(y[0]) * y[1] ** 2])

        qt, vt = rk4_adaptive(rhs, [q0, v[0]], t, tol=tol, max_step=max_step)
        if model.base.periodic:
            qt = float(wrap_angle(qt))
        else:
            _check_window(model, np.array([qt]))
        return GeodesicState(GroupoidPoint((q0, float(qt))), (float(vt),))
    g = model.group.exp(t * v)
    if conn.kind == "group-trivial":
        return GeodesicState(GroupoidPoint(tuple(np.atleast_1d(g).tolist())), tuple(v.tolist()))
    if conn.kind == "action-trivial":
        return GeodesicState(GroupoidPoint(tuple(np.atleast_1d(g).tolist()) + (q0,)), tuple(v.tolist()))
    raise GeometryError(f"unknown connection kind {conn.kind!r}")


def _within_injectivity(model, X):
    r = np.max(np.abs(np.asarray(X, float)))
    if r >= model.injectivity_radius:
        raise OutOfWindowError(f"|X| = {r:g} outside the injectivity window {model.injectivity_radius:g}")


def exp_left(model: GroupoidModel, conn: ConnectionDescriptor, X: AlgebroidVector) -> GroupoidPoint:
    """Left exponential: endpoint at time one of the geodesic through the unit."""
    _within_injectivity(model, X.array())
    return geodesic_flow(model, conn, X, 1.0).point


def exp_weyl(model: GroupoidModel, conn: ConnectionDescriptor, X: AlgebroidVector) -> GroupoidPoint:
    """Weyl exponential Exp^L(-X/2)^{-1} Exp^L(X/2)."""
    _within_injectivity(model, 0.5 * X.array())
    half = X.array() * 0.5
    plus = exp_left(model, conn, AlgebroidVector(X.base, tuple(half.tolist())))
    minus = exp_left(model, conn, AlgebroidVector(X.base, tuple((-half).tolist())))
    out = model.compose(model.inverse(minus.array()), plus.array())
    if out is None:  # pragma: no cover - guaranteed by target(Exp^L X) = base(X)
        raise GeometryError("Weyl exponential factors not composable")
    return GroupoidPoint(tuple(np.atleast_1d(out).tolist()))


# ---------------------------------------------------------------------------
# closed forms (vectorised) used by the quantizer


class ArcLength:
    """Arc length S(q) = int_0^q sqrt(g) on the circle, via its Fourier series."""

    def __init__(self, metric: Callable, modes: int = 128):
        q = TWO_PI * np.arange(modes) / modes
        c = np.fft.rfft(np.sqrt(metric(q))) / modes
        self.mean = float(c[0].real)
        self.k = np.arange(1, len(c))
        self.a = 2 * c[1:].real
        self.b = -2 * c[1:].imag
        self.metric = metric
        self.length = TWO_PI * self.mean

    def __call__(self, q):
        q = np.asarray(q, float)
        kq = np.multiply.outer(q, self.k)
        return self.mean * q + (np.sin(kq) @ (self.a / self.k)) - ((np.cos(kq) - 1) @ (self.b / self.k))

    def inverse(self, s):
        s = np.asarray(s, float)
        q = s / self.mean
        for _ in range(60):
            step = (self(q) - s) / np.sqrt(self.metric(q))
            q = q - step
            if np.max(np.abs(step), initial=0.0) < 1e-15:
                break
        return q


@lru_cache(maxsize=8)
def _arclength(metric) -> ArcLength:
    return ArcLength(metric)


def arclength_for(model: GroupoidModel) -> ArcLength:
    return _arclength(model.base.metric)


def exp_weyl_array(model: GroupoidModel, X, q0):
    """Closed-form Exp^W on arrays: X has trailing axis n, q0 the base points."""
    X = np.asarray(X, float)
    q0 = np.asarray(q0, float)
    if model.family == "pair":
        v = X[..., 0]
        if model.base.metric is None:
            return np.stack([q0 - 0.5 * v, q0 + 0.5 * v], axis=-1)
        S = arclength_for(model)
        s0 = S(q0)
        c = np.sqrt(model.base.metric(q0))
        x = S.inverse(s0 - 0.5 * v * c)
        y = S.inverse(s0 + 0.5 * v * c)
        return np.stack([wrap_angle(x), wrap_angle(y)], axis=-1)
    if model.family == "lie-group":
        return model.group.exp(X)
    g = model.group.exp(X)
    q = model.action(model.group.exp(0.5 * X), q0)
    return np.concatenate([g, q[..., None]], axis=-1)


def log_weyl_array(model: GroupoidModel, p):
    """Inverse of Exp^W near the units: returns (X, q0) for groupoid points p.

    On circles the shortest representative is used, which is the inverse
    within the injectivity window.
    """
    p = np.asarray(p, float)
    if model.family == "pair":
        x, y = p[..., 0], p[..., 1]
        if model.base.metric is None:
            return (y - x)[..., None], 0.5 * (x + y)
        S = arclength_for(model)
        sx, sy = S(x), S(y)
        ell = S.length
        ds = np.mod(sy - sx + 0.5 * ell, ell) - 0.5 * ell
        q0 = S.inverse(sx + 0.5 * ds)
        v = ds / np.sqrt(model.base.metric(q0))
        return v[..., None], wrap_angle(q0)
    if model.family == "lie-group":
        return model.group.log(p), np.zeros(p.shape[:-1])
    X = model.group.log(p[..., :-1])
    q0 = model.action(model.group.exp(-0.5 * X), p[..., -1])
    return X, q0


# ---------------------------------------------------------------------------
# Haar Jacobian


def haar_jacobian_raw(model: GroupoidModel, fiber_density, lebesgue_scale, q, X):
    """J_q(X) = d mu^t(Exp^W X) / d mu^L_q(X), normalised to 1 at X = 0.

    Both sides are compared as measures on the groupoid near the units (fiber
    measure times base measure); groups use the analytic Jacobian of Exp,
    other families 4th-order finite differences of the closed-form Exp^W.
    """
    X = np.atleast_2d(np.asarray(X, float).reshape(-1, model.fiber_dim)) if np.ndim(X) else np.array([[float(X)]])
    q = np.broadcast_to(np.asarray(q, float), X.shape[:-1]).copy()
    if np.any(np.max(np.abs(X), axis=-1) >= model.injectivity_radius):
        raise OutOfWindowError("Jacobian requested outside the injectivity window")
    zero = np.all(X == 0, axis=-1)

    if model.family == "lie-group":
        J = model.group.exp_jacobian(X) * np.ones(len(X))
        return np.where(zero, 1.0, J)

    n = model.fiber_dim
    h = FD_STEP
    coords = np.concatenate([X, q[:, None]], axis=-1)

    def phi(z):
        return exp_weyl_array(model, z[:, :n], z[:, n])

    base_pt = phi(coords)
    cols = []
    for k in range(n + 1):
        e = np.zeros(n + 1)
        e[k] = h
        d = [phi(coords + m * e) - base_pt for m in (2, 1, -1, -2)]
        if model.base.periodic or (model.group is not None and model.group.periodic):
            d = [np.mod(t + np.pi, TWO_PI) - np.pi for t in d]
        cols.append((-d[0] + 8 * d[1] - 8 * d[2] + d[3]) / (12 * h))
    jac = np.stack(cols, axis=-1)
    det = np.abs(np.linalg.det(jac))
    num = fiber_density(base_pt) * lebesgue_scale(model.target(base_pt)) * det
    den = lebesgue_scale(q) * lebesgue_scale(q)
    return np.where(zero, 1.0, num / den)


def haar_jacobian(model: GroupoidModel, haar, q, X):
    return haar.jacobian(q, X)
