"""Poisson brackets on the dual of a Lie algebroid.

With A_i = -anchor(e_i) acting on functions of the base and c^k_ij the
structure constants of constant sections, the + bracket reads::

    {f, g} = sum_i (d_i f . A_i g - A_i f . d_i g) - c^k_ij theta_k d_i f d_j g

where d_i = d/d theta_i. It reproduces {q-functions} = 0, {s~, f} = -anchor(s) f
and {s~_1, s~_2} = -[s_1, s_2]~ on the generators. The - bracket is its negative.
Theta-derivatives are spectral (ft -> -i X ft); base derivatives are centred
4th-order differences.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fourier import (
    FiberGrid,
    FourierError,
    Observable,
    PWObservable,
    SpectralObservable,
    fiber_fourier,
    q_derivative,
)
from .geometry import GroupoidModel

FAMILIES = ("canonical", "lie-poisson", "semidirect")


@dataclass(frozen=True)
class BracketDescriptor:
    family: str
    sign: int = +1

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown bracket family {self.family!r}")
        if self.sign not in (+1, -1):
            raise ValueError("sign must be +1 or -1")


def descriptor_for(model: GroupoidModel, sign: int = +1) -> BracketDescriptor:
    return BracketDescriptor(model.dual_family, sign)


def _check(model: GroupoidModel, desc: BracketDescriptor):
    if desc.family != model.dual_family:
        raise FourierError(f"{desc.family} bracket does not match a {model.family} model")


def _theta_gradient(obs: Observable, grid: FiberGrid, q, scale):
    ft = obs.ft_lattice(grid, q, scale)
    X = grid.points()
    return [fiber_fourier(-1j * X[..., i] * ft, grid, scale, check=False) for i in range(grid.n)]


def bracket_on_lattice(model: GroupoidModel, desc: BracketDescriptor, f: Observable, g: Observable,
                       grid: FiberGrid, q) -> np.ndarray:
    """{f, g} sampled on the dual lattice of ``grid`` over base points ``q``."""
    _check(model, desc)
    q = np.atleast_1d(np.asarray(q, float))
    scale = model.fiber_scale(q)
    df = _theta_gradient(f, grid, q, scale)
    dg = _theta_gradient(g, grid, q, scale)
    n = grid.n
    out = 0.0
    if model.family != "lie-group":
        anchor = model.anchor_fields(q).reshape(q.shape + (1,) * n + (model.fiber_dim,))
        fq = q_derivative(f, grid, q, model.fiber_scale)
        gq = q_derivative(g, grid, q, model.fiber_scale)
        for i in range(n):
            out = out + anchor[..., i] * (df[i] * gq - fq * dg[i])
    c = model.structure_constants
    if np.any(c):
        theta = grid.dual_points()
        for k in range(n):
            for i in range(n):
                for j in range(n):
                    if c[k, i, j]:
                        out = out - c[k, i, j] * theta[..., k] * df[i] * dg[j]
    out = desc.sign * out
    return np.broadcast_to(out, (len(q),) + grid.shape) if np.isscalar(out) else out


def poisson_bracket(model: GroupoidModel, desc: BracketDescriptor, f: PWObservable, g: PWObservable) -> np.ndarray:
    """{f, g} on the dual grid shared by two sampled observables."""
    if f.grid != g.grid or f.q.shape != g.q.shape or np.any(f.q != g.q):
        raise FourierError("observables are sampled on different grids")
    return bracket_on_lattice(model, desc, f.observable, g.observable, f.grid, f.q)


class Bracket(SpectralObservable):
    """{f, g} as an observable; ft is supported in the sum of the supports."""

    def __init__(self, model: GroupoidModel, f: Observable, g: Observable, sign: int = +1):
        self.model, self.f, self.g = model, f, g
        self.desc = descriptor_for(model, sign)
        self.n = f.n
        self.radius = f.radius + g.radius
        self.label = "{" + f"{f.label},{g.label}" + "}"
        self.effectively_compact = f.effectively_compact or g.effectively_compact

    def _dual_values(self, grid, q, scale):
        return bracket_on_lattice(self.model, self.desc, self.f, self.g, grid, q), 0.0
