"""Defects, norm scans, order fits and the experiment runner."""
from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .. import __version__
from ..cstar import commutator, convolve, involute, reduced_norm
from ..fourier import (
    Conjugate,
    Observable,
    PWObservable,
    Product,
    classical_sup_norm,
    fine_grid,
    make_pw_observable,
)
from ..geometry import GroupoidModel, discretize
from ..poisson import Bracket
from ..quantize import Cutoff, QuantizationError, classical_section, weyl_quantize
from .config import ExperimentConfig

RECORD_COLUMNS = (
    "example", "f_id", "g_id", "sign", "hbar", "dirac_defect", "vn_defect", "sa_defect",
    "reduced_norm", "classical_norm", "trunc_mass", "wall_ms",
)
ZERO_FLOOR = 1e-12


class RepresentabilityError(QuantizationError):
    pass


def _observable(f) -> Observable:
    obs = f.observable if isinstance(f, PWObservable) else f
    if not isinstance(obs, Observable):
        raise RepresentabilityError(f"{f!r} is not an observable")
    if not np.isfinite(obs.radius):
        raise RepresentabilityError(f"{obs.label}: fiber transform is not compactly supported")
    return obs


class _Quantizer:
    """Caches Q_hbar of observables on one discretization."""

    def __init__(self, model, hbar, sign, kappa, disc=None, core_margin=None, units=1):
        self.model, self.hbar, self.kappa = model, hbar, kappa
        self.sign = model.default_sign if sign is None else sign
        if disc is None:
            disc = discretize(model, hbar, units=units, core_margin=core_margin or 0.0)
        self.disc = disc
        self._cache = {}

    def __call__(self, obs: Observable):
        key = id(obs)
        if key not in self._cache:
            self._cache[key] = (obs, weyl_quantize(obs, self.hbar, self.sign, self.kappa, self.disc, self.model))
        return self._cache[key][1]


def _margin(*obs) -> float:
    return max(o.radius for o in obs)


def _setup(model, f, g, hbar, sign, kappa, disc):
    obs = [_observable(x) for x in (f, g) if x is not None]
    return obs, _Quantizer(model, hbar, sign, kappa, disc, core_margin=_margin(*obs))


def dirac_defect(model: GroupoidModel, f, g, hbar: float, sign: Optional[int] = None,
                 kappa: Optional[Cutoff] = None, disc=None, seed: int = 0, method: str = "power") -> float:
    """|| (i/hbar)[Q(f), Q(g)] - Q({f, g}) ||, both products formed separately."""
    (fo, go), Q = _setup(model, f, g, hbar, sign, kappa, disc)
    comm = commutator(Q(fo), Q(go)).scale(1j / hbar)
    return reduced_norm(comm - Q(Bracket(model, fo, go, Q.sign)), seed, method)


def vonneumann_defect(model: GroupoidModel, f, g, hbar: float, sign: Optional[int] = None,
                      kappa: Optional[Cutoff] = None, disc=None, seed: int = 0, method: str = "power") -> float:
    """|| Q(f) Q(g) - Q(fg) ||."""
    (fo, go), Q = _setup(model, f, g, hbar, sign, kappa, disc)
    return reduced_norm(convolve(Q(fo), Q(go)) - Q(Product(fo, go)), seed, method)


def selfadjoint_defect(model: GroupoidModel, f, hbar: float, sign: Optional[int] = None,
                       kappa: Optional[Cutoff] = None, disc=None, seed: int = 0, method: str = "power") -> float:
    """|| Q(f)^* - Q(conj f) ||."""
    (fo,), Q = _setup(model, f, None, hbar, sign, kappa, disc)
    return reduced_norm(involute(Q(fo)) - Q(Conjugate(fo)), seed, method)


def norm_continuity_scan(model: GroupoidModel, f, ladder, sign: Optional[int] = None,
                         kappa: Optional[Cutoff] = None, seed: int = 0, method: str = "power") -> list:
    """[(hbar, ||Q_hbar(f)||)] over the ladder, ending with the hbar = 0 section."""
    fo = _observable(f)
    out = []
    for hbar in ladder:
        if hbar == 0:
            continue
        Q = _Quantizer(model, hbar, sign, kappa, core_margin=fo.radius)
        out.append((float(hbar), reduced_norm(Q(fo), seed, method)))
    if not isinstance(f, PWObservable):
        f = make_pw_observable(model, fo, grid=fine_grid(fo, 0.02 if fo.n == 1 else 0.1))
    out.append((0.0, reduced_norm(classical_section(f))))
    return out


@dataclass(frozen=True)
class OrderFit:
    order: float
    residual: float
    intercept: float = 0.0

    @property
    def infinite(self) -> bool:
        return math.isinf(self.order)


def order_fit(ladder, defects, floor: float = 0.0) -> OrderFit:
    """Least-squares slope of log D against log hbar, with the RMS residual.

    Sequences that are identically zero (at most ``floor``) give an infinite
    order and no fit.
    """
    h = np.asarray(ladder, float)
    d = np.asarray(defects, float)
    if len(h) != len(d) or len(h) < 3:
        raise ValueError("order_fit needs at least three (hbar, defect) pairs")
    if np.any(h <= 0):
        raise ValueError("hbar values must be positive")
    if np.all(np.abs(d) <= floor):
        return OrderFit(math.inf, 0.0, 0.0)
    if np.any(d <= 0):
        raise ValueError("defects must be positive for a power-law fit")
    A = np.vstack([np.log(h), np.ones_like(h)]).T
    (slope, icpt), *_ = np.linalg.lstsq(A, np.log(d), rcond=None)
    resid = np.log(d) - A @ np.array([slope, icpt])
    return OrderFit(float(slope), float(np.sqrt(np.mean(resid**2))), float(icpt))


# ---------------------------------------------------------------------------
# runner


@dataclass
class ExperimentRecord:
    config: dict
    rows: list
    fits: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    scans: dict = field(default_factory=dict)
    timings: list = field(default_factory=list)


def _fmt(x) -> str:
    if x is None or x == "":
        return ""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    x = float(x)
    return "inf" if math.isinf(x) else repr(x)


def records_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RECORD_COLUMNS)
    for r in rows:
        w.writerow([r[c] if c in ("example", "f_id", "g_id") or isinstance(r[c], str) else _fmt(r[c])
                    for c in RECORD_COLUMNS])
    return buf.getvalue()


def _ratios(d):
    return [b / a if a > 0 else math.nan for a, b in zip(d, d[1:])]


def run_experiment(config: ExperimentConfig, out_dir=None, write: bool = True) -> ExperimentRecord:
    """Run every (pair, hbar) cell, then write records, manifest and plot data."""
    model = config.model()
    kappa = config.cutoff(model)
    sign = model.default_sign if config.sign is None else config.sign
    specs = {s.id: s for s in config.specs}
    obs = {k: s.build(model) for k, s in specs.items()}
    sup = {k: classical_sup_norm(model, o) for k, o in obs.items()}
    margin = config.core_margin if config.core_margin is not None else _margin(*obs.values())

    rows, timings = [], []
    cells = {}
    for hbar in config.ladder:
        Q = _Quantizer(model, hbar, sign, kappa, core_margin=margin, units=config.units)
        for fid, gid in config.pair_ids:
            t0 = time.perf_counter()
            f, g = obs[fid], obs[gid]
            Qf, Qg = Q(f), Q(g)
            br, pr = Bracket(model, f, g, sign), Product(f, g)
            D = reduced_norm(commutator(Qf, Qg).scale(1j / hbar) - Q(br), config.seed, config.norm_method)
            V = reduced_norm(convolve(Qf, Qg) - Q(pr), config.seed, config.norm_method)
            S = max(reduced_norm(involute(Q(x)) - Q(Conjugate(x)), config.seed, config.norm_method) for x in (f, g))
            mass = make_pw_observable(model, br).trunc_mass + make_pw_observable(model, pr).trunc_mass
            nf = reduced_norm(Qf, config.seed, config.norm_method)
            ms = 1e3 * (time.perf_counter() - t0)
            timings.append({"f_id": fid, "g_id": gid, "hbar": hbar, "wall_ms": ms})
            cells[(fid, gid, hbar)] = (D, V, S, nf)
            rows.append({
                "example": config.example, "f_id": fid, "g_id": gid, "sign": sign, "hbar": hbar,
                "dirac_defect": D, "vn_defect": V, "sa_defect": S, "reduced_norm": nf,
                "classical_norm": sup[fid], "trunc_mass": mass,
                "wall_ms": ms if config.timing else "",
            })

    fits, checks, scans = {}, {}, {}
    summary_rows = []
    lad = list(config.ladder)
    for fid, gid in config.pair_ids:
        Ds = [cells[(fid, gid, h)][0] for h in lad]
        Vs = [cells[(fid, gid, h)][1] for h in lad]
        key = f"{fid}|{gid}"
        fit = {}
        for name, seq in (("dirac", Ds), ("vn", Vs)):
            try:
                fit[name] = order_fit(lad, seq, ZERO_FLOOR) if len(lad) >= 3 else None
            except ValueError:
                fit[name] = None
        fits[key] = {k: None if v is None else {"order": v.order, "residual": v.residual} for k, v in fit.items()}
        checks[key] = {
            "dirac_positive": all(d >= 0 for d in Ds),
            "dirac_strictly_decreasing": all(b < a for a, b in zip(Ds, Ds[1:])),
            "dirac_max_ratio": max(_ratios(Ds), default=math.nan),
            "vn_strictly_decreasing": all(b < a for a, b in zip(Vs, Vs[1:])),
            "vn_max_ratio": max(_ratios(Vs), default=math.nan),
            "sa_max": max(cells[(fid, gid, h)][2] for h in lad),
        }
        for label, attr in (("order", "order"), ("residual", "residual")):
            summary_rows.append({
                "example": config.example, "f_id": fid, "g_id": gid, "sign": sign, "hbar": label,
                "dirac_defect": "" if fit["dirac"] is None else getattr(fit["dirac"], attr),
                "vn_defect": "" if fit["vn"] is None else getattr(fit["vn"], attr),
                "sa_defect": "", "reduced_norm": "", "classical_norm": "", "trunc_mass": "", "wall_ms": "",
            })
    for fid in dict.fromkeys(f for p in config.pair_ids for f in p):
        scans[fid] = [(h, cells[next(k for k in cells if k[0] == fid and k[2] == h)][3])
                      for h in lad if any(k[0] == fid and k[2] == h for k in cells)]
        scans[fid].append((0.0, sup[fid]))

    record = ExperimentRecord(config.to_dict(), rows + summary_rows, fits, checks, scans, timings)
    if write:
        write_outputs(record, config, Path(out_dir if out_dir is not None else config.output))
    return record


def write_outputs(record: ExperimentRecord, config: ExperimentConfig, out: Path):
    from .plotting import write_svg_plot

    out.mkdir(parents=True, exist_ok=True)
    (out / "records.csv").write_text(records_csv(record.rows))
    manifest = {
        "artifact": "weylgroupoid",
        "version": __version__,
        "seed": config.seed,
        "config": record.config,
        "fits": record.fits,
        "checks": record.checks,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True, default=_json_default) + "\n")
    if config.timing:
        (out / "timings.json").write_text(json.dumps(record.timings, indent=2) + "\n")
    for fid, gid in config.pair_ids:
        pts = [(r["hbar"], r["dirac_defect"], r["vn_defect"]) for r in record.rows
               if r["f_id"] == fid and r["g_id"] == gid and not isinstance(r["hbar"], str)]
        name = f"defects_{fid}_{gid}"
        write_plot_data(out / f"{name}.csv", ("hbar", "dirac_defect", "vn_defect"), pts)
        if config.svg:
            write_svg_plot(out / f"{name}.svg", [p[0] for p in pts],
                           {"dirac": [p[1] for p in pts], "von Neumann": [p[2] for p in pts]},
                           title=f"{config.example}: {fid}, {gid}", ylabel="defect")
    for fid, scan in record.scans.items():
        write_plot_data(out / f"norms_{fid}.csv", ("hbar", "reduced_norm"), scan)


def write_plot_data(path: Path, header, pts):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for p in pts:
        w.writerow([_fmt(x) for x in p])
    Path(path).write_text(buf.getvalue())


def _json_default(x):
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    raise TypeError(f"cannot serialise {type(x).__name__}")


# ---------------------------------------------------------------------------
# cross-pipeline check


def crosscheck(config: ExperimentConfig, seed: Optional[int] = None) -> list:
    """Norms of translation-groupoid (+) vs pair-groupoid (-) quantizations on matched grids."""
    from dataclasses import replace

    seed = config.seed if seed is None else seed
    transf = replace(config, example="transf-line-translation").model()
    pair = replace(config, example="pair-flat-line").model()
    out = []
    for spec in config.specs:
        for hbar in config.ladder:
            ft, fp = spec.build(transf), spec.build(pair)
            nt = reduced_norm(weyl_quantize(ft, hbar, +1, None, discretize(transf, hbar), transf), seed,
                              config.norm_method)
            npair = reduced_norm(weyl_quantize(fp, hbar, -1, None, discretize(pair, hbar), pair), seed,
                                 config.norm_method)
            rel = abs(nt - npair) / max(abs(npair), 1e-300) if npair or nt else 0.0
            out.append({"f_id": spec.id, "hbar": hbar, "transformation_norm": nt, "pair_norm": npair,
                        "relative_difference": rel})
    return out
