"""Concrete Lie groupoid families, their algebroids, grids and Haar systems.

Three families are shipped:

* pair groupoids ``Q x Q`` over a line window or a circle,
* Lie groups (``U(1)`` and the affine group of the line),
* transformation groupoids ``G x Q`` for translations of the line and
  rotations of the circle.

Groupoid points are stored as coordinate tuples (or arrays whose last axis
holds those coordinates):

=============== ==========================
family           coordinates
=============== ==========================
pair             ``(x, y)`` with target x, source y
lie-group        group chart coordinates
transformation   ``(*x, q)`` with x in G, target q
=============== ==========================
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np

TWO_PI = 2.0 * np.pi
CHART_TOL = 1e-9

EXAMPLE_NAMES = (
    "pair-flat-line",
    "pair-circle-metric",
    "group-u1",
    "group-affine",
    "transf-line-translation",
    "transf-circle-rotation",
)


class GeometryError(ValueError):
    pass


def wrap_angle(phi):
    """Reduce angles to [0, 2pi)."""
    out = np.mod(phi, TWO_PI)
    # mod can return exactly 2pi for tiny negative inputs
    return np.where(out >= TWO_PI, out - TWO_PI, out)


def wrap_signed(phi):
    """Reduce angles to [-pi, pi)."""
    return wrap_angle(np.asarray(phi) + np.pi) - np.pi


def trapezoid_weights(n: int, h: float) -> np.ndarray:
    w = np.full(n, h)
    w[0] = w[-1] = 0.5 * h
    return w


# ---------------------------------------------------------------------------
# base manifolds


@dataclass(frozen=True)
class ChartedBase:
    dim: int
    kind: str  # "line-window", "circle" or "point"
    samples: np.ndarray
    weights: np.ndarray
    metric: Optional[Callable] = None

    def __post_init__(self):
        if np.any(self.weights <= 0):
            raise GeometryError("quadrature weights must be strictly positive")
        if self.samples.size > 1 and np.any(np.diff(self.samples) <= 0):
            raise GeometryError("base samples must be strictly increasing")
        if self.kind == "circle" and (self.samples[0] < 0 or self.samples[-1] >= TWO_PI):
            raise GeometryError("circle samples must lie in [0, 2pi)")

    @property
    def periodic(self) -> bool:
        return self.kind == "circle"

    def reduce(self, q):
        return wrap_angle(q) if self.periodic else np.asarray(q, dtype=float)

    def difference(self, q1, q0):
        """Chart displacement q1 - q0 (shortest representative on circles)."""
        d = np.asarray(q1, dtype=float) - np.asarray(q0, dtype=float)
        return wrap_signed(d) if self.periodic else d


def line_window(half_width: float, n: int) -> ChartedBase:
    samples = np.linspace(-half_width, half_width, n)
    return ChartedBase(1, "line-window", samples, trapezoid_weights(n, samples[1] - samples[0]))


def circle(n: int, metric: Optional[Callable] = None) -> ChartedBase:
    samples = TWO_PI * np.arange(n) / n
    return ChartedBase(1, "circle", samples, np.full(n, TWO_PI / n), metric)


def point_base() -> ChartedBase:
    return ChartedBase(0, "point", np.zeros(1), np.ones(1))


# ---------------------------------------------------------------------------
# groups


@dataclass(frozen=True)
class GroupData:
    """A Lie group in a global (or injectivity-restricted) chart.

    All maps act on arrays whose last axis carries ``dim`` coordinates.
    ``structure_constants[k, i, j]`` are the c^k_ij of ``[e_i, e_j] = c^k_ij e_k``.
    """

    name: str
    dim: int
    structure_constants: np.ndarray
    exp: Callable
    log: Callable
    product: Callable
    inverse: Callable
    identity: np.ndarray
    periodic: bool = False
    # density of left Haar measure w.r.t. chart Lebesgue measure
    haar_density: Callable = field(default=lambda g: np.ones(np.shape(g)[:-1]))
    # analytic Jacobian of Exp against left Haar, normalised to 1 at 0
    exp_jacobian: Callable = field(default=lambda X: np.ones(np.shape(X)[:-1]))

    def equal(self, g, h, tol=CHART_TOL) -> bool:
        d = np.asarray(g, float) - np.asarray(h, float)
        if self.periodic:
            d = wrap_signed(d)
        return bool(np.all(np.abs(d) <= tol))


def translation_group() -> GroupData:
    return GroupData(
        name="R",
        dim=1,
        structure_constants=np.zeros((1, 1, 1)),
        exp=lambda X: np.asarray(X, float),
        log=lambda g: np.asarray(g, float),
        product=lambda g, h: np.asarray(g, float) + np.asarray(h, float),
        inverse=lambda g: -np.asarray(g, float),
        identity=np.zeros(1),
    )


def u1_group() -> GroupData:
    return GroupData(
        name="U(1)",
        dim=1,
        structure_constants=np.zeros((1, 1, 1)),
        exp=lambda X: wrap_angle(np.asarray(X, float)),
        log=lambda g: wrap_signed(np.asarray(g, float)),
        product=lambda g, h: wrap_angle(np.asarray(g, float) + np.asarray(h, float)),
        inverse=lambda g: wrap_angle(-np.asarray(g, float)),
        identity=np.zeros(1),
        periodic=True,
    )


def expm1_ratio(u):
    """(e^u - 1)/u, smooth through u = 0."""
    u = np.asarray(u, float)
    small = np.abs(u) < 1e-5
    safe = np.where(small, 1.0, u)
    series = 1.0 + u / 2.0 + u * u / 6.0 + u**3 / 24.0
    return np.where(small, series, np.expm1(safe) / safe)


def _affine_exp(X):
    X = np.asarray(X, float)
    x1, x2 = X[..., 0], X[..., 1]
    return np.stack([np.exp(x1), x2 * expm1_ratio(x1)], axis=-1)


def _affine_log(g):
    g = np.asarray(g, float)
    s = np.log(g[..., 0])
    return np.stack([s, g[..., 1] / expm1_ratio(s)], axis=-1)


def _affine_product(g, h):
    g, h = np.asarray(g, float), np.asarray(h, float)
    a, b = g[..., 0], g[..., 1]
    return np.stack([a * h[..., 0], a * h[..., 1] + b], axis=-1)


def _affine_inverse(g):
    g = np.asarray(g, float)
    a, b = g[..., 0], g[..., 1]
    return np.stack([1.0 / a, -b / a], axis=-1)


def _affine_exp_jacobian(X):
    # left Haar da db / a^2 pulled back through Exp, over dX
    x1 = np.asarray(X, float)[..., 0]
    return expm1_ratio(-x1)


def affine_group() -> GroupData:
    c = np.zeros((2, 2, 2))
    c[1, 0, 1] = 1.0  # [e1, e2] = e2
    c[1, 1, 0] = -1.0
    return GroupData(
        name="Aff(1)",
        dim=2,
        structure_constants=c,
        exp=_affine_exp,
        log=_affine_log,
        product=_affine_product,
        inverse=_affine_inverse,
        identity=np.array([1.0, 0.0]),
        haar_density=lambda g: 1.0 / np.asarray(g, float)[..., 0] ** 2,
        exp_jacobian=_affine_exp_jacobian,
    )


def jacobi_residual(c: np.ndarray) -> float:
    """Max |Jacobi identity| residual of structure constants, by brute-force loops."""
    n = c.shape[0]
    worst = 0.0
    for i in range(n):
        for j in range(n):
            for k in range(n):
                for m in range(n):
                    s = 0.0
                    for l in range(n):
                        s += c[l, i, j] * c[m, l, k] + c[l, j, k] * c[m, l, i] + c[l, k, i] * c[m, l, j]
                    worst = max(worst, abs(s))
    return worst


def antisymmetry_residual(c: np.ndarray) -> float:
    return float(np.max(np.abs(c + np.swapaxes(c, 1, 2)))) if c.size else 0.0


# ---------------------------------------------------------------------------
# groupoids


@dataclass(frozen=True)
class GroupoidPoint:
    coords: tuple

    def array(self) -> np.ndarray:
        return np.asarray(self.coords, dtype=float)


@dataclass(frozen=True)
class AlgebroidVector:
    base: float
    fiber: tuple

    def array(self) -> np.ndarray:
        return np.asarray(self.fiber, dtype=float)


@dataclass(frozen=True)
class DualVector:
    base: float
    fiber: tuple


@dataclass(frozen=True)
class Resolution:
    """Grid parameters.

    ``points`` and ``window`` fix a grid outright. When ``fiber_step`` is set,
    grids are rebuilt at each hbar so that groupoid spacing equals
    ``hbar * fiber_step``; rescaled fiber samples X/hbar then sit on a lattice
    of spacing ``fiber_step``.
    """

    points: int = 256
    window: float = 8.0
    fiber_step: Optional[float] = None

    def __post_init__(self):
        if self.points <= 0 or self.window <= 0:
            raise GeometryError("resolution must be positive")
        if self.fiber_step is not None and self.fiber_step <= 0:
            raise GeometryError("fiber_step must be positive")


@dataclass(frozen=True)
class GroupoidModel:
    name: str
    family: str  # "pair", "lie-group" or "transformation"
    base: ChartedBase
    fiber_dim: int
    resolution: Resolution
    group: Optional[GroupData] = None
    # transformation family: action x . q, and the fundamental vector fields
    # xi_{e_i}(q) = d/dt exp(t e_i) . q, returned with a trailing axis of size n
    action: Optional[Callable] = None
    generators: Optional[Callable] = None
    connection: str = "flat"
    injectivity_radius: float = np.inf

    # --- structure maps (vectorised over leading axes) -------------------

    def target(self, p):
        p = np.asarray(p, float)
        if self.family == "pair":
            return p[..., 0]
        if self.family == "lie-group":
            return np.zeros(p.shape[:-1])
        return p[..., -1]

    def source(self, p):
        p = np.asarray(p, float)
        if self.family == "pair":
            return p[..., 1]
        if self.family == "lie-group":
            return np.zeros(p.shape[:-1])
        x, q = p[..., :-1], p[..., -1]
        return self.action(self.group.inverse(x), q)

    def unit(self, q):
        q = np.asarray(q, float)
        if self.family == "pair":
            return np.stack([q, q], axis=-1)
        if self.family == "lie-group":
            return np.broadcast_to(self.group.identity, q.shape + (self.group.dim,)).copy()
        e = np.broadcast_to(self.group.identity, q.shape + (self.group.dim,))
        return np.concatenate([e, q[..., None]], axis=-1)

    def inverse(self, p):
        p = np.asarray(p, float)
        if self.family == "pair":
            return p[..., ::-1].copy()
        if self.family == "lie-group":
            return self.group.inverse(p)
        x, q = p[..., :-1], p[..., -1]
        xinv = self.group.inverse(x)
        return np.concatenate([xinv, self.action(xinv, q)[..., None]], axis=-1)

    def composable(self, a, b):
        d = self.base.difference(self.source(a), self.target(b))
        return np.abs(d) <= CHART_TOL

    def multiply(self, a, b):
        """Product without a composability check (vectorised)."""
        a, b = np.asarray(a, float), np.asarray(b, float)
        if self.family == "pair":
            return np.stack(np.broadcast_arrays(a[..., 0], b[..., 1]), axis=-1)
        if self.family == "lie-group":
            return self.group.product(a, b)
        xy = self.group.product(a[..., :-1], b[..., :-1])
        return np.concatenate([xy, np.broadcast_to(a[..., -1:], xy.shape[:-1] + (1,))], axis=-1)

    def compose(self, a, b):
        """Product of composable points, or ``None`` when undefined."""
        if not bool(np.all(self.composable(a, b))):
            return None
        return self.multiply(a, b)

    def same_point(self, a, b, tol=CHART_TOL) -> bool:
        a, b = np.asarray(a, float), np.asarray(b, float)
        if self.family == "pair":
            return bool(np.all(np.abs(self.base.difference(a, b)) <= tol))
        if self.family == "lie-group":
            return self.group.equal(a, b, tol)
        return self.group.equal(a[..., :-1], b[..., :-1], tol) and bool(
            np.all(np.abs(self.base.difference(a[..., -1], b[..., -1])) <= tol)
        )

    @property
    def dual_family(self) -> str:
        return {"pair": "canonical", "lie-group": "lie-poisson", "transformation": "semidirect"}[self.family]

    @property
    def structure_constants(self) -> np.ndarray:
        if self.group is None:
            return np.zeros((self.fiber_dim,) * 3)
        return self.group.structure_constants

    @property
    def default_sign(self) -> int:
        return -1 if self.family == "pair" else +1

    def fiber_scale(self, q):
        """Scale c(q) of the fiber Lebesgue measure mu^L_q = c(q) d^n X.

        Fixed so that the Haar Jacobian tends to one at the zero section.
        """
        q = np.asarray(q, float)
        if self.base.metric is not None and self.family == "pair":
            return np.sqrt(self.base.metric(q))
        return np.ones_like(q)

    def anchor_fields(self, q):
        """Vector fields A_i = -anchor(e_i) evaluated at q, shape (..., n).

        These act on functions of q in the bracket {theta_i, g} = A_i g.
        """
        q = np.asarray(q, float)
        if self.family == "pair":
            return -np.ones(q.shape + (1,))
        if self.family == "lie-group":
            return np.zeros(q.shape + (self.fiber_dim,))
        return self.generators(q)


class GroupoidOps(NamedTuple):
    compose: Optional[GroupoidPoint]
    invert: GroupoidPoint
    source: float
    target: float
    unit: GroupoidPoint


def groupoid_ops(model: GroupoidModel, a: GroupoidPoint, b: GroupoidPoint) -> GroupoidOps:
    """Structure maps of ``model`` evaluated on ``a`` (and ``a . b``)."""
    pa, pb = a.array(), b.array()
    prod = model.compose(pa, pb)
    src = float(model.source(pa))
    return GroupoidOps(
        compose=None if prod is None else GroupoidPoint(tuple(np.atleast_1d(prod).tolist())),
        invert=GroupoidPoint(tuple(model.inverse(pa).tolist())),
        source=src,
        target=float(model.target(pa)),
        unit=GroupoidPoint(tuple(model.unit(np.float64(model.target(pa))).tolist())),
    )


# ---------------------------------------------------------------------------
# Haar systems


@dataclass(frozen=True)
class HaarSystem:
    """Left Haar system obtained from a positive density on the algebroid.

    ``fiber_density(p)`` is the density of mu^t_{target(p)} at groupoid
    point(s) p relative to chart Lebesgue measure on the t-fiber.
    ``lebesgue_scale(q)`` is c(q) in mu^L_q = c(q) d^n X and ``jacobian(q, X)``
    the Radon-Nikodym derivative d mu^t(Exp^W X) / d mu^L_q(X).
    """

    model: GroupoidModel
    density: Callable
    fiber_density: Callable
    lebesgue_scale: Callable
    jacobian: Callable


def _constant_one(q):
    return np.ones_like(np.asarray(q, float))


def build_haar_system(model: GroupoidModel, density: Optional[Callable] = None) -> HaarSystem:
    """Extend a positive density on the algebroid fibers to a left Haar system.

    ``density`` is a function of the base point q (the density at the unit
    over q relative to the fiber coordinates); it defaults to the natural
    one for the example (Riemannian density on metric circles, one otherwise).
    """
    from . import expmaps  # local import: expmaps depends on this module

    if density is None:
        if model.family == "pair" and model.base.metric is not None:
            metric = model.base.metric
            density = lambda q: np.sqrt(metric(np.asarray(q, float)))  # noqa: E731
        else:
            density = _constant_one
    probe = density(model.base.samples)
    if np.any(~np.isfinite(probe)) or np.any(probe <= 0):
        raise GeometryError("density must be strictly positive")

    if model.family == "pair":
        # mu^t_x = rho(y) dy, independent of the target x
        def fiber_density(p):
            return density(np.asarray(p, float)[..., 1])

        def lebesgue_scale(q):
            return density(q)

    elif model.family == "lie-group":
        rho0 = float(np.atleast_1d(probe)[0])

        def fiber_density(p):
            return rho0 * model.group.haar_density(p)

        def lebesgue_scale(q):
            return rho0 * np.ones_like(np.asarray(q, float))

    else:

        def fiber_density(p):
            p = np.asarray(p, float)
            return density(model.source(p)) * model.group.haar_density(p[..., :-1])

        def lebesgue_scale(q):
            return density(q)

    def jacobian(q, X):
        return expmaps.haar_jacobian_raw(model, fiber_density, lebesgue_scale, q, X)

    return HaarSystem(model, density, fiber_density, lebesgue_scale, jacobian)


def left_invariance_residual(haar: HaarSystem, gamma, test: Callable, nodes: int = 4000) -> float:
    """|int f(gamma g') dmu^t_{s(gamma)}(g') - int f dmu^t_{t(gamma)}| by quadrature.

    Works on one-dimensional fibers (every shipped example except the affine
    group, whose left invariance is analytic). ``test`` acts on groupoid
    points and must be supported well inside the window.
    """
    model = haar.model
    gamma = np.asarray(gamma, float)
    if model.fiber_dim != 1:
        raise GeometryError("quadrature residual implemented for one-dimensional fibers")

    def fiber(u):
        # parametrise t-fiber over u by its free coordinate
        if model.base.periodic or (model.group is not None and model.group.periodic):
            z = TWO_PI * np.arange(nodes) / nodes
            w = np.full(nodes, TWO_PI / nodes)
        else:
            L = 3.0 * model.resolution.window
            z = np.linspace(-L, L, nodes)
            w = trapezoid_weights(nodes, z[1] - z[0])
        if model.family == "pair":
            pts = np.stack([np.full_like(z, u), z], axis=-1)
        elif model.family == "lie-group":
            pts = z[:, None]
        else:
            pts = np.stack([z, np.full_like(z, u)], axis=-1)
        return pts, w

    pts_s, w_s = fiber(float(model.source(gamma)))
    lhs = np.sum(w_s * haar.fiber_density(pts_s) * test(model.multiply(gamma, pts_s)))
    pts_t, w_t = fiber(float(model.target(gamma)))
    rhs = np.sum(w_t * haar.fiber_density(pts_t) * test(pts_t))
    return float(abs(lhs - rhs))


# ---------------------------------------------------------------------------
# examples


def circle_metric(q):
    return 1.0 + 0.3 * np.cos(q)


def _metric_circle_radius(modes: int = 4096) -> float:
    # |v| sqrt(g(q0)) must stay below half the circumference
    q = TWO_PI * np.arange(modes) / modes
    root = np.sqrt(circle_metric(q))
    return float(0.5 * TWO_PI * np.mean(root) / np.max(root))


def make_example(name: str, resolution: Optional[Resolution] = None) -> GroupoidModel:
    if resolution is None:
        resolution = Resolution()
    if not isinstance(resolution, Resolution):
        resolution = Resolution(**resolution)
    n, L = resolution.points, resolution.window
    eps = 0.05
    if name == "pair-flat-line":
        return GroupoidModel(name, "pair", line_window(L, n), 1, resolution)
    if name == "pair-circle-metric":
        return GroupoidModel(
            name, "pair", circle(n, circle_metric), 1, resolution,
            connection="levi-civita-1d", injectivity_radius=_metric_circle_radius() - eps,
        )
    if name == "group-u1":
        return GroupoidModel(
            name, "lie-group", point_base(), 1, resolution, group=u1_group(),
            connection="group-trivial", injectivity_radius=np.pi - eps,
        )
    if name == "group-affine":
        return GroupoidModel(
            name, "lie-group", point_base(), 2, resolution, group=affine_group(),
            connection="group-trivial",
        )
    if name == "transf-line-translation":
        return GroupoidModel(
            name, "transformation", line_window(L, n), 1, resolution, group=translation_group(),
            action=lambda x, q: np.asarray(q, float) + np.asarray(x, float)[..., 0],
            generators=lambda q: np.ones(np.shape(q) + (1,)),
            connection="action-trivial",
        )
    if name == "transf-circle-rotation":
        return GroupoidModel(
            name, "transformation", circle(n), 1, resolution, group=u1_group(),
            action=lambda x, q: wrap_angle(np.asarray(q, float) + np.asarray(x, float)[..., 0]),
            generators=lambda q: np.ones(np.shape(q) + (1,)),
            connection="action-trivial", injectivity_radius=np.pi - eps,
        )
    raise GeometryError(f"unknown example {name!r}; choose from {', '.join(EXAMPLE_NAMES)}")


# ---------------------------------------------------------------------------
# discretised t-fibers


@dataclass(frozen=True)
class Discretization:
    """Sampled t-fibers of a model at a given hbar.

    For each sampled unit ``units[u]`` the t-fiber over it is represented by
    groupoid points ``points[u]`` (shape (m, d)) with quadrature weights
    ``weights[u]`` for the Haar measure; ``core[u]`` marks the samples kept
    when norms are estimated (the rest is margin that keeps products exact).
    ``lattice_step`` is the spacing that rescaled fiber samples X/hbar inherit.
    """

    model: GroupoidModel
    hbar: float
    units: np.ndarray
    points: tuple
    weights: tuple
    core: tuple
    spacing: float
    lattice_step: tuple
    index_shape: tuple
    band_scale: float = 1.0

    def candidates(self, u: int, radius: float):
        """Index pairs (i, j) whose relative arrow may lie within ``radius`` of the units."""
        m = len(self.points[u])
        if len(self.index_shape) == 1:
            band = int(np.ceil(radius * self.band_scale / self.spacing)) + 2
            offs = np.arange(-band, band + 1)
            rows = np.repeat(np.arange(m), len(offs))
            cols = rows + np.tile(offs, m)
            periodic = self.model.base.periodic or (self.model.group is not None and self.model.group.periodic)
            if periodic:
                if 2 * band + 1 >= m:
                    rows = np.repeat(np.arange(m), m)
                    cols = np.tile(np.arange(m), m)
                else:
                    cols = np.mod(cols, m)
            else:
                ok = (cols >= 0) & (cols < m)
                rows, cols = rows[ok], cols[ok]
            return rows, cols
        # affine group: (s, b) lattice
        ns, nb = self.index_shape
        bs = int(np.ceil(radius / self.spacing)) + 1
        smax = float(np.max(np.log(self.points[u][:, 0])))
        bb = int(np.ceil(radius * expm1_ratio(radius) * np.exp(smax) / self.spacing)) + 2
        ds = np.arange(-bs, bs + 1)
        db = np.arange(-bb, bb + 1)
        si, bi = np.divmod(np.arange(m), nb)
        rows_s = si[:, None, None] + ds[None, :, None]
        rows_b = bi[:, None, None] + db[None, None, :]
        ok = (rows_s >= 0) & (rows_s < ns) & (rows_b >= 0) & (rows_b < nb)
        rows = np.broadcast_to(np.arange(m)[:, None, None], ok.shape)[ok]
        cols = (rows_s * nb + rows_b)[ok]
        return rows, cols

    def relative(self, u: int, rows, cols):
        """Arrows alpha_i^{-1} beta_j for samples of the t-fiber over unit u."""
        P = self.points[u]
        return self.model.multiply(self.model.inverse(P[rows]), P[cols])


def discretize(model: GroupoidModel, hbar: float, units: int = 1, core_margin: float = 0.0,
               haar: Optional[HaarSystem] = None) -> Discretization:
    """Build t-fiber samples at ``hbar``.

    With ``resolution.fiber_step`` set, spacing is hbar * fiber_step on lines
    and the nearest 2 pi / N on circles; otherwise ``resolution.points``
    samples are used. ``core_margin`` (fiber units, i.e. multiples of hbar) is
    the margin dropped from non-compact group fibers before norms are taken.
    """
    if hbar <= 0:
        raise GeometryError("hbar must be positive")
    res = model.resolution
    if haar is None:
        haar = build_haar_system(model)
    step = res.fiber_step

    def line_samples():
        if step is None:
            return line_window(res.window, res.points).samples
        h = hbar * step
        k = int(np.floor(res.window / h))
        return np.arange(-k, k + 1) * h

    def circle_samples():
        n = res.points if step is None else int(np.ceil(TWO_PI / (hbar * step)))
        n += n % 2
        return TWO_PI * np.arange(n) / n

    periodic = model.base.periodic or (model.group is not None and model.group.periodic)
    band_scale = 1.0
    if model.family == "lie-group" and model.fiber_dim == 2:
        # affine group on an (s = ln a, b) lattice. The core is the square
        # |s|, |b| <= s_core; the b-extent adds the margin that left
        # translation by kernels of radius core_margin*hbar can reach from it
        # (that margin grows like e^s, so the window is wider in b).
        h = hbar * step if step is not None else 2 * res.window / res.points
        s_axis = (np.arange(res.points) - (res.points - 1) / 2) * h
        reach = core_margin * hbar
        s_core = s_axis[-1] - reach
        if s_core <= 0:
            raise GeometryError("affine window leaves no core; raise resolution.points")
        b_half = s_core + np.exp(s_core) * reach * float(expm1_ratio(reach))
        nb = 2 * int(np.ceil(b_half / h)) + 1
        b_axis = (np.arange(nb) - (nb - 1) / 2) * h
        S, B = np.meshgrid(s_axis, b_axis, indexing="ij")
        pts = np.stack([np.exp(S.ravel()), B.ravel()], axis=-1)
        w = haar.fiber_density(pts) * pts[:, 0] * h * h  # da = a ds
        core = (np.abs(S.ravel()) <= s_core + 1e-12) & (np.abs(B.ravel()) <= s_core + 1e-12)
        return Discretization(model, hbar, np.zeros(1), (pts,), (w,), (core,), h, (h / hbar, h / (16 * hbar)),
                              (res.points, nb))

    x = circle_samples() if periodic else line_samples()
    h = x[1] - x[0]
    quad = np.full(len(x), h) if periodic else trapezoid_weights(len(x), h)
    if model.family == "lie-group":
        pts = x[:, None]
        w = quad * haar.fiber_density(pts)
        return Discretization(model, hbar, np.zeros(1), (pts,), (w,), (np.ones(len(x), bool),), h,
                              (h / hbar,), (len(x),))
    if model.family == "pair":
        if model.base.metric is not None:
            g = model.base.metric(x)
            band_scale = float(np.sqrt(np.max(g) / np.min(g)) * np.sqrt(np.max(g)))
        unit_q = x[np.linspace(0, len(x) - 1, units).round().astype(int)] if units > 1 else x[len(x) // 2: len(x) // 2 + 1]
        pts_all, w_all, core_all = [], [], []
        for u in unit_q:
            pts = np.stack([np.full_like(x, u), x], axis=-1)
            pts_all.append(pts)
            w_all.append(quad * haar.fiber_density(pts))
            core_all.append(np.ones(len(x), bool))
        return Discretization(model, hbar, unit_q, tuple(pts_all), tuple(w_all), tuple(core_all), h,
                              (h / hbar,), (len(x),), band_scale)
    # transformation groupoid: fiber over q parametrised by its source samples
    idx = np.linspace(0, len(x) - 1, units).round().astype(int) if units > 1 else np.array([len(x) // 2])
    unit_q = x[idx]
    pts_all, w_all, core_all = [], [], []
    for u in unit_q:
        g = model.base.difference(u, x) if periodic else u - x  # x . source = u
        if periodic:
            g = wrap_angle(g)
        pts = np.stack([g, np.full_like(x, u)], axis=-1)
        pts_all.append(pts)
        w_all.append(quad * haar.fiber_density(pts))
        core_all.append(np.ones(len(x), bool))
    return Discretization(model, hbar, unit_q, tuple(pts_all), tuple(w_all), tuple(core_all), h,
                          (h / hbar,), (len(x),))
