"""Experiment configuration (JSON) and the observable catalogue."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np

from ..fourier import Observable, bump_observable, gaussian_observable, zero_observable
from ..geometry import EXAMPLE_NAMES, GroupoidModel, Resolution, make_example
from ..quantize import Cutoff, build_cutoff, default_cutoff


class ConfigError(ValueError):
    pass


def default_ladder(h0: float = 0.4, rungs: int = 5) -> list:
    return [h0 * 2.0 ** (-k) for k in range(rungs)]


@dataclass(frozen=True)
class ObservableSpec:
    """Recipe for a Paley-Wiener observable, adapted to a model when built.

    ``kind`` is ``bump`` (``scale`` = support radius), ``gauss`` (``scale`` =
    width, truncated at the Gaussian tail threshold) or ``zero``. Momenta are
    broadcast to the fiber dimension; the base profile is ignored on groups.
    """

    id: str
    kind: str = "bump"
    scale: float = 1.0
    amplitude: complex = 1.0
    momentum: tuple = (0.0,)
    q_center: float = 0.0
    q_width: Optional[float] = None
    q_shape: str = "gauss"

    def __post_init__(self):
        if self.kind not in ("bump", "gauss", "zero"):
            raise ConfigError(f"observable {self.id!r}: unknown kind {self.kind!r}")
        if self.scale <= 0:
            raise ConfigError(f"observable {self.id!r}: scale must be positive")
        if self.q_width is not None and self.q_width <= 0:
            raise ConfigError(f"observable {self.id!r}: q_width must be positive")

    def build(self, model: GroupoidModel) -> Observable:
        n = model.fiber_dim
        if self.kind == "zero":
            obs = zero_observable(n)
            obs.label = self.id
            return obs
        mom = np.atleast_1d(np.asarray(self.momentum, float))
        if mom.size == 1:
            mom = np.full(n, mom[0])
        elif mom.size != n:
            raise ConfigError(f"observable {self.id!r}: momentum length does not match fiber dimension {n}")
        width = None if model.base.kind == "point" else self.q_width
        common = dict(amplitude=self.amplitude, momentum=mom, n=n, q_center=self.q_center, q_width=width,
                      q_periodic=model.base.periodic, label=self.id, q_shape=self.q_shape)
        if self.kind == "bump":
            return bump_observable(self.scale, **common)
        return gaussian_observable(self.scale, **common)


CATALOGUE = {
    s.id: s
    for s in (
        ObservableSpec("bump-a", "bump", 1.0, 1.0, (0.7,), 0.0, 0.8),
        ObservableSpec("bump-b", "bump", 0.8, 1.0, (-0.3,), 0.3, 0.8),
        ObservableSpec("bump-c", "bump", 1.0, 1.0, (0.0,), 0.0, 1.5, "bump"),
        ObservableSpec("bump-i", "bump", 1.0, 1j, (0.5,), 0.0, 0.8),
        ObservableSpec("gauss-a", "gauss", 0.15, 1.0, (0.7, 0.4), 0.0, 0.8),
        ObservableSpec("gauss-b", "gauss", 0.13, 1.0, (-0.3, 0.5), 0.3, 0.8),
        ObservableSpec("zero", "zero"),
    )
}


def _spec_from(entry) -> ObservableSpec:
    if isinstance(entry, str):
        if entry not in CATALOGUE:
            raise ConfigError(f"unknown observable id {entry!r}; known: {sorted(CATALOGUE)}")
        return CATALOGUE[entry]
    if isinstance(entry, dict):
        allowed = {f.name for f in fields(ObservableSpec)}
        extra = set(entry) - allowed
        if extra:
            raise ConfigError(f"unknown observable keys {sorted(extra)}")
        if "id" not in entry:
            raise ConfigError("inline observables need an id")
        kw = dict(entry)
        if "momentum" in kw:
            kw["momentum"] = tuple(np.atleast_1d(kw["momentum"]).tolist())
        if "amplitude" in kw and isinstance(kw["amplitude"], list):
            kw["amplitude"] = complex(*kw["amplitude"])
        return ObservableSpec(**kw)
    raise ConfigError(f"observable entries must be ids or objects, got {entry!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    example: str
    observables: tuple
    ladder: tuple = tuple(default_ladder())
    pairs: Optional[tuple] = None
    sign: Optional[int] = None
    kappa: Optional[tuple] = None
    resolution: dict = field(default_factory=lambda: {"points": 256, "fiber_step": 0.05})
    window: float = 8.0
    core_margin: Optional[float] = None
    units: int = 1
    output: str = "results"
    seed: int = 0
    timing: bool = False
    norm_method: str = "power"
    svg: bool = True

    def __post_init__(self):
        if self.example not in EXAMPLE_NAMES:
            raise ConfigError(f"unknown example {self.example!r}; known: {list(EXAMPLE_NAMES)}")
        lad = [float(h) for h in self.ladder]
        if not lad or any(h <= 0 for h in lad) or any(b >= a for a, b in zip(lad, lad[1:])):
            raise ConfigError("ladder must be positive and strictly decreasing")
        if self.sign not in (None, 1, -1):
            raise ConfigError("sign must be +1, -1 or null")
        if self.window <= 0 or self.units < 1:
            raise ConfigError("window and units must be positive")
        extra = set(self.resolution) - {"points", "fiber_step"}
        if extra:
            raise ConfigError(f"unknown resolution keys {sorted(extra)}")
        if any(v is not None and v <= 0 for v in self.resolution.values()):
            raise ConfigError("resolutions must be positive")
        if self.norm_method not in ("power", "dense"):
            raise ConfigError("norm_method must be 'power' or 'dense'")
        if self.kappa is not None and len(self.kappa) != 2:
            raise ConfigError("kappa must be [r_in, r_out]")
        ids = [s.id for s in self.specs]
        if len(set(ids)) != len(ids):
            raise ConfigError("observable ids must be unique")
        for p in self.pair_ids:
            if len(p) != 2 or any(i not in ids for i in p):
                raise ConfigError(f"pair {p!r} references unknown observables")
        if not self.pair_ids:
            raise ConfigError("need at least two observables (or an explicit pair)")

    @property
    def specs(self) -> list:
        return [_spec_from(e) for e in self.observables]

    @property
    def pair_ids(self) -> list:
        if self.pairs is not None:
            return [tuple(p) for p in self.pairs]
        ids = [s.id for s in self.specs]
        return [(a, b) for i, a in enumerate(ids) for b in ids[i + 1:]]

    def model(self) -> GroupoidModel:
        res = Resolution(points=int(self.resolution.get("points", 256)), window=float(self.window),
                         fiber_step=self.resolution.get("fiber_step", 0.05))
        return make_example(self.example, res)

    def cutoff(self, model: GroupoidModel) -> Cutoff:
        if self.kappa is None:
            return default_cutoff(model)
        r_in, r_out = (float(x) for x in self.kappa)
        return build_cutoff(model, r_in, r_out)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["observables"] = [e if isinstance(e, str) else dict(e) for e in self.observables]
        d["ladder"] = list(self.ladder)
        d["pairs"] = None if self.pairs is None else [list(p) for p in self.pairs]
        d["kappa"] = None if self.kappa is None else list(self.kappa)
        return d


def config_from_dict(data: dict) -> ExperimentConfig:
    allowed = {f.name for f in fields(ExperimentConfig)}
    extra = set(data) - allowed
    if extra:
        raise ConfigError(f"unknown config keys {sorted(extra)}")
    for key in ("example", "observables"):
        if key not in data:
            raise ConfigError(f"missing config key {key!r}")
    kw = dict(data)
    kw["observables"] = tuple(e if isinstance(e, str) else dict(e) for e in kw["observables"])
    for key in ("ladder", "kappa"):
        if kw.get(key) is not None:
            kw[key] = tuple(kw[key])
    if kw.get("pairs") is not None:
        kw["pairs"] = tuple(tuple(p) for p in kw["pairs"])
    try:
        return ExperimentConfig(**kw)
    except TypeError as exc:  # wrong value types
        raise ConfigError(str(exc)) from exc


def load_config(path) -> ExperimentConfig:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    return config_from_dict(data)
