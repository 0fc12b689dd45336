"""Cutoffs, Weyl quantization and the classical section at hbar = 0.

A kernel is stored per sampled unit u as the sparse matrix

    K_u[i, j] = a(alpha_i^{-1} beta_j)

over samples alpha_i, beta_j of the t-fiber above u. With Haar weights W_u,
convolution is K_a W K_b, the involution is the conjugate transpose, and the
left regular representation is W^{1/2} K W^{1/2}.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy import sparse

from . import expmaps
from .fourier import DEFAULT_STEP, FourierError, Observable, PWObservable, make_pw_observable
from .geometry import Discretization, GroupoidModel, discretize


class QuantizationError(ValueError):
    pass


# ---------------------------------------------------------------------------
# cutoff


def _smooth_step(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1."""
    t = np.clip(np.asarray(t, float), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
        b = np.where(t < 1, np.exp(-1.0 / np.where(t < 1, 1.0 - t, 1.0)), 0.0)
    return a / (a + b)


@dataclass(frozen=True)
class Cutoff:
    """Even cutoff kappa(X) = s((r_out - |X|) / (r_out - r_in)).

    Equal to 1 for |X| <= r_in and 0 for |X| >= r_out; ``r_in = r_out = inf``
    gives kappa = 1.
    """

    r_in: float
    r_out: float

    def __call__(self, X):
        X = np.asarray(X, float)
        r = np.sqrt(np.sum(X * X, axis=-1))
        if np.isinf(self.r_in):
            return np.ones_like(r)
        out = _smooth_step((self.r_out - r) / (self.r_out - self.r_in))
        out = np.where(r <= self.r_in, 1.0, out)
        return np.where(r >= self.r_out, 0.0, out)

    @property
    def unbounded(self) -> bool:
        return bool(np.isinf(self.r_out))


def build_cutoff(model: GroupoidModel, r_in: float, r_out: float) -> Cutoff:
    if not (0 < r_in) or not (r_in < r_out or (np.isinf(r_in) and np.isinf(r_out))):
        raise QuantizationError("cutoff radii must satisfy 0 < r_in < r_out")
    if r_out > model.injectivity_radius:
        raise QuantizationError(
            f"cutoff support {r_out:g} exceeds the injectivity radius {model.injectivity_radius:g}")
    return Cutoff(float(r_in), float(r_out))


def default_cutoff(model: GroupoidModel) -> Cutoff:
    """kappa = 1 where Exp^W is global, otherwise a plateau over half the window."""
    R = model.injectivity_radius
    if np.isinf(R):
        return Cutoff(np.inf, np.inf)
    return build_cutoff(model, 0.5 * R, 0.95 * R)


# ---------------------------------------------------------------------------
# kernels


@dataclass(frozen=True)
class KernelElement:
    """An element of the convolution algebra at fixed hbar.

    For hbar > 0, ``matrices[u]`` holds raw kernel values over the t-fiber
    samples of ``disc`` above unit u and ``disc.weights[u]`` the Haar
    quadrature weights. For hbar = 0, ``values`` holds f on the dual grid.
    """

    model: GroupoidModel
    hbar: float
    sign: int
    disc: Optional[Discretization] = None
    matrices: tuple = ()
    values: Optional[np.ndarray] = None
    selfadjoint: bool = False
    trunc_mass: float = 0.0
    label: str = "a"
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def classical(self) -> bool:
        return self.hbar == 0

    def _check(self, other: "KernelElement"):
        if self.model is not other.model and self.model.name != other.model.name:
            raise QuantizationError("kernels live on different models")
        if self.hbar != other.hbar:
            raise QuantizationError("kernels have different hbar")
        if not self.classical and self.disc is not other.disc:
            raise QuantizationError("kernels are sampled on different discretizations")

    def _combine(self, other, alpha, beta, label):
        self._check(other)
        if self.classical:
            return replace(self, values=alpha * self.values + beta * other.values, label=label,
                           trunc_mass=self.trunc_mass + other.trunc_mass, selfadjoint=False)
        mats = tuple((alpha * a + beta * b).tocsr() for a, b in zip(self.matrices, other.matrices))
        return replace(self, matrices=mats, label=label, trunc_mass=self.trunc_mass + other.trunc_mass,
                       selfadjoint=False)

    def __add__(self, other):
        return self._combine(other, 1.0, 1.0, f"{self.label}+{other.label}")

    def __sub__(self, other):
        return self._combine(other, 1.0, -1.0, f"{self.label}-{other.label}")

    def scale(self, alpha: complex) -> "KernelElement":
        if self.classical:
            return replace(self, values=alpha * self.values, selfadjoint=False)
        return replace(self, matrices=tuple((alpha * m).tocsr() for m in self.matrices), selfadjoint=False)

    def dense(self, u: int = 0) -> np.ndarray:
        return self.matrices[u].toarray()


def _lattice_step(disc: Discretization, model: GroupoidModel):
    if model.family == "pair" and model.base.metric is not None:
        # X/hbar is off-lattice here; interpolate on a fine lattice
        return (model.resolution.fiber_step or DEFAULT_STEP,)
    return disc.lattice_step


def weyl_quantize(f, hbar: float, sign: Optional[int] = None, kappa: Optional[Cutoff] = None,
                  disc: Optional[Discretization] = None, model: Optional[GroupoidModel] = None) -> KernelElement:
    """Q_hbar(f): value hbar^{-n} kappa(X) ft(sign X / hbar) at Exp^W(X).

    ``f`` is a :class:`PWObservable` or a bare :class:`Observable` (then
    ``model`` is required). The discretization is built from the model's
    resolution when not supplied.
    """
    if isinstance(f, PWObservable):
        model = f.model if model is None else model
        obs, mass = f.observable, f.trunc_mass
    elif isinstance(f, Observable):
        if model is None:
            raise QuantizationError("a bare observable needs a model")
        obs, mass = f, 0.0
    else:
        raise QuantizationError("f must be an observable")
    if not hbar > 0:
        raise QuantizationError("hbar must be positive")
    if obs.n != model.fiber_dim:
        raise FourierError("observable fiber dimension does not match the model")
    sign = model.default_sign if sign is None else int(sign)
    if sign not in (1, -1):
        raise QuantizationError("sign must be +1 or -1")
    kappa = default_cutoff(model) if kappa is None else kappa
    if disc is None:
        disc = discretize(model, hbar)
    elif disc.hbar != hbar or disc.model.name != model.name:
        raise QuantizationError("discretization does not match (model, hbar)")

    n = model.fiber_dim
    reach = min(hbar * obs.radius, kappa.r_out)
    if model.family == "pair" and not model.base.periodic:
        span = disc.points[0][-1, 1] - disc.points[0][0, 1]
        if reach >= 0.5 * span:
            raise QuantizationError("kernel support overflows the fiber window")
    if reach >= model.injectivity_radius and model.family != "pair":
        raise QuantizationError("kernel support leaves the injectivity window")
    step = _lattice_step(disc, model)
    mats = []
    for u in range(len(disc.units)):
        rows, cols = disc.candidates(u, reach)
        X, q0 = expmaps.log_weyl_array(model, disc.relative(u, rows, cols))
        keep = np.max(np.abs(X), axis=-1) < reach
        rows, cols, X, q0 = rows[keep], cols[keep], X[keep], q0[keep]
        vals = obs.evaluate(sign * X / hbar, q0, step, model.fiber_scale)
        vals = hbar ** (-n) * kappa(X) * vals
        m = len(disc.points[u])
        mat = sparse.csr_matrix((vals, (rows, cols)), shape=(m, m))
        mat.sum_duplicates()
        mats.append(mat)
    real = getattr(f, "selfadjoint", None) if isinstance(f, PWObservable) else getattr(obs, "real", None)
    return KernelElement(model, float(hbar), sign, disc, tuple(mats), selfadjoint=bool(real),
                         trunc_mass=float(mass), label=obs.label)


def transform_groupoid_quantize(f, hbar: float, sign: int = +1, kappa: Optional[Cutoff] = None,
                                disc: Optional[Discretization] = None,
                                model: Optional[GroupoidModel] = None) -> KernelElement:
    """Quantization on an action groupoid: value at (Exp X, Exp(X/2) q) from f(+-theta, q).

    The Weyl exponential of a transformation groupoid is exactly that pair,
    so this is :func:`weyl_quantize` restricted to the transformation family.
    """
    m = f.model if isinstance(f, PWObservable) else model
    if m is None or m.family != "transformation":
        raise QuantizationError("transform_groupoid_quantize needs a transformation groupoid")
    return weyl_quantize(f, hbar, sign, kappa, disc, model)


def classical_section(f: PWObservable) -> KernelElement:
    """Q_0(f) = f on the dual grid."""
    return KernelElement(f.model, 0.0, f.model.default_sign, values=np.array(f.dual_samples),
                         selfadjoint=f.selfadjoint, trunc_mass=f.trunc_mass, label=f.observable.label)


def sample_classical(model: GroupoidModel, obs: Observable, step: float = DEFAULT_STEP) -> PWObservable:
    """Sample ``obs`` on the model's base grid (shorthand for make_pw_observable)."""
    return make_pw_observable(model, obs, step)
