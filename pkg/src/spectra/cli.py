"""Command-line driver: builds a model, computes covers and metrics, writes reports.

Every report is deterministic JSON (sorted keys) that echoes its parameters
and the library version.  Exit codes: 0 ok, 2 configuration error,
3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import scipy.linalg as sla

from . import __version__
from .errors import GeometryError, NumericalFailure
from .fractal import (
    ScalingSeriesError,
    cantor_cover,
    fit_box_dimension,
    hausdorff_dimension,
    scaling_series,
    write_scaling,
)
from .intervals import IntervalCover, normalize, read_cover, write_cover
from .metrics import (
    capacity_details,
    decide_finitely_many_components,
    decide_measure_zero,
    gap_histogram,
    size_report,
)
from .penrose import build_graph, graph_laplacian, tiling_at_level, write_graph, write_tiles
from .periodic import amo_cover, fibonacci_d_cover, select_convergent
from .s2 import (
    DispersionOperator,
    DistanceField,
    compspec,
    diagonal_operator,
    drill_cover,
    phi_values,
    read_opmat,
    write_opmat,
)

log = logging.getLogger("spectra")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3

S1_MODELS = {"amo", "fibonacci", "fibonacci2d", "fibonacci3d", "synthetic-cantor", "cover", "diagonal"}
S2_MODELS = {"penrose-t1", "penrose-t2", "penrose-t3", "opmat", "diagonal"}
METRICS = {"measure", "components", "capacity", "boxdim", "hausdorff", "gaps"}

# desk-scale ceilings, lifted by --full-scale
DESK_LIMITS = {"penrose_level": 6, "truncation": 20000, "fibonacci_k": 16, "amo_q": 1000}
COMPARE_GRID_SCALE = 12.0


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    model: str
    route: str = "s1"
    metrics: list = field(default_factory=lambda: ["measure", "components"])
    params: dict = field(default_factory=dict)
    n1: Optional[int] = None
    n2: Optional[int] = None
    out: str = "out"
    seed: int = 0
    threads: int = 1
    fit_window: Optional[tuple] = None
    full_scale: bool = False

    def __post_init__(self):
        if self.route not in ("s1", "s2"):
            raise ConfigError(f"unknown route {self.route!r}")
        if self.route == "s1" and self.model not in S1_MODELS:
            raise ConfigError(f"model {self.model!r} has no certified cover (route s1)")
        if self.route == "s2" and self.model not in S2_MODELS:
            raise ConfigError(f"model {self.model!r} has no dispersion operator (route s2)")
        bad = set(self.metrics) - METRICS
        if bad:
            raise ConfigError(f"unknown metrics {sorted(bad)}")
        if self.threads < 1:
            raise ConfigError("threads must be positive")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config keys {sorted(extra)}")
        d = dict(d)
        if d.get("fit_window") is not None:
            d["fit_window"] = tuple(d["fit_window"])
        return cls(**d)

    def echo(self) -> dict:
        d = asdict(self)
        d["fit_window"] = list(self.fit_window) if self.fit_window else None
        return d


# ------------------------------------------------------------------ helpers


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    return x


def dump_report(payload: dict, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = dict(payload, version=__version__)
    path.write_text(json.dumps(_jsonable(payload), sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return path


def _parse_window(text) -> Optional[tuple]:
    if text is None:
        return None
    if isinstance(text, (list, tuple)):
        return tuple(text)
    parts = str(text).split(":")
    if len(parts) != 2:
        raise ConfigError(f"window {text!r} must look like LO:HI")
    return tuple(float(p) if "." in p or "e" in p.lower() else int(p) for p in parts)


def _parse_alpha(text: str):
    if text in ("golden", "cahen"):
        return text
    try:
        if "/" in text:
            return Fraction(text)
        return float(text)
    except ValueError as exc:
        raise ConfigError(f"bad frequency {text!r}") from exc


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in str(text).split(",") if t.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad number list {text!r}") from exc


def _check_limit(cfg: ExperimentConfig, key: str, value: int):
    if value > DESK_LIMITS[key]:
        if not cfg.full_scale:
            raise ConfigError(f"{key}={value} exceeds the desk-scale limit {DESK_LIMITS[key]}; pass --full-scale")
        log.warning("running %s=%d beyond the desk-scale limit", key, value)


# ------------------------------------------------------------ model builders


def cover_for(cfg: ExperimentConfig, tol: Optional[float] = None) -> IntervalCover:
    """Certified cover of the model spectrum (route s1); ``tol`` overrides the resolution."""
    p = cfg.params
    m = cfg.model
    if m == "amo":
        lam = float(p.get("lambda", 1.0))
        alpha = _parse_alpha(str(p.get("alpha", "golden")))
        t = float(tol if tol is not None else p.get("tol", 1e-3))
        q_max = int(p.get("q_max", 10**6 if cfg.full_scale else 10**5))
        _, q, _ = select_convergent(lam, alpha, t, float(p.get("c", 6.0)), q_max)
        if q > DESK_LIMITS["amo_q"] and not cfg.full_scale:
            log.info("convergent q=%d above the desk default", q)
        return amo_cover(lam, alpha, t, float(p.get("c", 6.0)), q_max)
    if m.startswith("fibonacci"):
        lam = float(p.get("lambda", 1.0))
        dim = {"fibonacci": 1, "fibonacci2d": 2, "fibonacci3d": 3}[m]
        if tol is not None:
            k = 2
            while True:
                c = fibonacci_d_cover(lam, k, dim)
                if c.error <= tol:
                    return c
                k += 1
                _check_limit(cfg, "fibonacci_k", k)
        k = int(p.get("k", 8))
        _check_limit(cfg, "fibonacci_k", k)
        return fibonacci_d_cover(lam, k, dim)
    if m == "synthetic-cantor":
        depth = int(p.get("depth", 10))
        return cantor_cover(depth)
    if m == "cover":
        return read_cover(p["file"])
    if m == "diagonal":
        pts = sorted(set(_float_list(p["entries"])))
        return normalize([(x, x) for x in pts], error=0.0)
    raise ConfigError(f"model {m!r} has no certified cover")


def operator_for(cfg: ExperimentConfig) -> DispersionOperator:
    p = cfg.params
    m = cfg.model
    if m.startswith("penrose-"):
        level = int(p.get("level", 5))
        _check_limit(cfg, "penrose_level", level)
        g = build_graph(tiling_at_level(level), m.split("-")[1])
        return graph_laplacian(g)
    if m == "opmat":
        return read_opmat(p["file"])
    if m == "diagonal":
        entries = _float_list(p["entries"])
        return diagonal_operator(entries, int(p.get("size", max(4 * len(entries), 64))))
    raise ConfigError(f"model {m!r} has no dispersion operator")


def _truncation(cfg: ExperimentConfig, op: DispersionOperator) -> int:
    n = int(cfg.params.get("n", min(op.exact_columns, 500)))
    _check_limit(cfg, "truncation", n)
    return n


def s2_cover(cfg: ExperimentConfig, op: DispersionOperator) -> tuple[IntervalCover, dict]:
    """Drilling cover (n2 given) or compspec cover (grid spacing given)."""
    p = cfg.params
    field_ = DistanceField(op, _truncation(cfg, op), float(p.get("sigma_tol", 1e-8)))
    if cfg.n2 is not None and "spacing" not in p:
        cover = drill_cover(field_, int(cfg.n2), threads=cfg.threads)
        return cover, {"method": "drill", "n": field_.n, "n2": cfg.n2}
    spacing = float(p.get("spacing", 0.05))
    R = op.norm_estimate() + 1.0
    window = _parse_window(p.get("window")) or (-R, R)
    res = compspec(field_, spacing, window, float(p.get("accept_factor", 2.0)), cfg.threads)
    return res.cover, {"method": "compspec", "n": field_.n, "delta_star": res.delta_star, "spacing": spacing}


def _cover_by_route(cfg: ExperimentConfig) -> tuple[IntervalCover, dict]:
    if cfg.route == "s1":
        return cover_for(cfg), {"method": "certified"}
    return s2_cover(cfg, operator_for(cfg))


# ------------------------------------------------------------------ metrics


def box_dimension_report(cfg: ExperimentConfig) -> tuple[dict, object]:
    p = cfg.params
    base = float(p.get("delta_base", 2.0))
    k_lo, k_hi = int(p.get("k_lo", 4)), int(p.get("k_hi", 12))
    deltas = [base**-k for k in range(k_lo, k_hi + 1)]
    trials = int(p.get("trials", 100))
    if cfg.model == "synthetic-cantor" or cfg.model == "cover":
        fixed = cover_for(cfg)
        provider = lambda d: fixed  # noqa: E731
    else:
        cache: dict = {}

        def provider(d):
            c = cover_for(cfg, tol=d)
            key = (len(c), float(c.error))
            cache.setdefault(key, len(cache))
            return cache[key], c

    series = scaling_series(provider, deltas, trials, cfg.seed)
    fit = fit_box_dimension(series, cfg.fit_window)
    report = {
        "slope": fit.slope,
        "lower": fit.lower,
        "upper": fit.upper,
        "residual": fit.residual,
        "window": list(fit.window),
        "trials": trials,
        "seed": cfg.seed,
        "deltas": series.deltas,
        "counts": series.counts,
    }
    return report, series


def hausdorff_report(cfg: ExperimentConfig) -> dict:
    p = cfg.params
    n2 = int(cfg.n2 or p.get("n2", 5))
    n1 = int(cfg.n1 or p.get("n1", 16))
    if cfg.model == "synthetic-cantor":
        window = (0.0, 1.0)

        def provider(k):
            return cantor_cover(math.ceil(k * math.log(2) / math.log(3)))
    else:
        probe = cover_for(cfg, tol=0.25) if cfg.model != "cover" else cover_for(cfg)
        lo, hi = probe.bounds[0, 0] - 0.5, probe.bounds[-1, 1] + 0.5
        window = _parse_window(p.get("window")) or (lo, hi)
        scale = window[1] - window[0]

        def provider(k):
            return cover_for(cfg, tol=scale * 2.0**-k)

    res = hausdorff_dimension(provider, n2, n1, window)
    return {"estimate": res.estimate, "n1": n1, "n2": n2, "window": list(window), "h_values": res.h_values}


def compute_metrics(cfg: ExperimentConfig, out: Path) -> dict:
    report: dict = {"model": cfg.model, "route": cfg.route}
    need_cover = {"measure", "components", "capacity", "gaps"} & set(cfg.metrics)
    if need_cover:
        cover, info = _cover_by_route(cfg)
        report["cover"] = info
        if cover.is_empty:
            raise NumericalFailure("the cover is empty at these parameters")
        path = write_cover(cover, out / f"{cfg.model}.cover")
        report["cover_file"] = path.name
        want_cap = "capacity" in cfg.metrics
        sr = size_report(cover, cfg.params.get("quad_points"), with_capacity=want_cap)
        d = sr.to_dict()
        d.pop("parameters")
        if not want_cap:
            for key in ("capacity", "capacity_panels", "capacity_error_estimate"):
                d.pop(key)
        report.update(d)
        if "gaps" in cfg.metrics:
            th = _float_list(cfg.params.get("thresholds", "0.1,0.05,0.02,0.01"))
            report["gaps"] = gap_histogram(cover, th).to_dict()
    if "boxdim" in cfg.metrics:
        if cfg.route != "s1":
            raise ConfigError("box dimension needs certified covers (route s1)")
        rep, series = box_dimension_report(cfg)
        write_scaling(series, out / f"{cfg.model}.scaling")
        report["boxdim"] = rep
    if "hausdorff" in cfg.metrics:
        if cfg.route != "s1":
            raise ConfigError("Hausdorff dimension needs certified covers (route s1)")
        report["hausdorff"] = hausdorff_report(cfg)
    if cfg.n1 is not None and cfg.n2 is not None and cfg.route == "s1" and need_cover:
        if cfg.model == "synthetic-cantor":
            seq = cantor_cover
        elif cfg.model == "cover":
            seq = lambda n: cover  # noqa: E731
        else:
            seq = lambda n: cover_for(cfg, tol=2.0**-n)  # noqa: E731
        report["towers"] = {
            "measure_zero": decide_measure_zero(seq, cfg.n2, cfg.n1),
            "finitely_many_components": decide_finitely_many_components(seq, cfg.n2, cfg.n1),
        }
    return report


def run(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    report = compute_metrics(cfg, out)
    report["parameters"] = cfg.echo()
    return dump_report(report, out / f"{cfg.model}.json")


# ----------------------------------------------------- truncation comparison


def _tiling_section(op: DispersionOperator, n: int) -> np.ndarray:
    """Operator of the finite patch: the first n sites with the diagonal rebuilt
    from the patch's own degrees (graph Laplacians), i.e. free boundary."""
    A = op.matrix[:n, :n].toarray()
    off = A - np.diag(np.diag(A))
    if op.name.startswith("graph-"):
        return np.diag(-off.sum(axis=1)) + off
    return A


def compare_truncations(
    op: DispersionOperator,
    sizes: Sequence[int],
    window: tuple,
    spacing: Optional[float] = None,
    ref_factor: int = 4,
    threads: int = 1,
    accept_factor: float = 2.0,
) -> list[dict]:
    """Max error of finite-section, finite-tiling and compspec outputs per truncation.

    Each output point z is scored by Phi at the reference truncation
    ref_factor*n (capped at the exact range), an upper bound on dist(z, Sp).
    Without a fixed ``spacing`` the compspec grid uses COMPARE_GRID_SCALE / n,
    which tracks how fast Phi_n sharpens.
    """
    rows = []
    a, b = window
    for n in sizes:
        h = COMPARE_GRID_SCALE / n if spacing is None else spacing
        n_ref = min(ref_factor * n, op.exact_columns)
        ref = DistanceField(op, n_ref)
        ev_fs = sla.eigvalsh(op.matrix[:n, :n].toarray())
        ev_ti = sla.eigvalsh(_tiling_section(op, n))
        cs = compspec(DistanceField(op, n), h, window, accept_factor, threads)
        row = {"n": int(n), "reference_n": int(n_ref), "spacing": h}
        for name, pts in (("finite_section", ev_fs), ("finite_tiling", ev_ti), ("compspec", cs.points)):
            pts = np.asarray(pts)
            pts = pts[(pts >= a) & (pts <= b)]
            err = phi_values(ref, pts, threads) if len(pts) else np.zeros(0)
            row[name] = {"max_error": float(err.max()) if len(err) else 0.0, "points": int(len(pts))}
        row["compspec"]["delta_star"] = cs.delta_star
        rows.append(row)
    return rows


# ---------------------------------------------------------------------- CLI


def _add_globals(p: argparse.ArgumentParser, sub: bool = False):
    # on subcommands the defaults are suppressed so a flag given before the
    # subcommand is not overwritten
    dflt = (lambda v: argparse.SUPPRESS) if sub else (lambda v: v)
    p.add_argument("--out", default=dflt("out"), help="output directory")
    p.add_argument("--seed", type=int, default=dflt(0))
    p.add_argument("--threads", type=int, default=dflt(1))
    p.add_argument("--fit-window", default=dflt(None), help="box-fit index window LO:HI")
    p.add_argument("--full-scale", action="store_true", default=dflt(False), help="allow runs beyond desk-scale limits")
    p.add_argument("-v", "--verbose", action="store_true", default=dflt(False))


def _metric_list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="spectra", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    _add_globals(ap)
    sub = ap.add_subparsers(dest="command", required=True)

    def cmd(name, help_):
        p = sub.add_parser(name, help=help_)
        _add_globals(p, sub=True)
        return p

    p = cmd("amo", "almost Mathieu covers at irrational frequency")
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--alpha", default="golden", help="golden, cahen, a float or p/q")
    p.add_argument("--tol", type=float, default=1e-3)
    p.add_argument("--metrics", type=_metric_list, default=["measure", "components"])
    p.add_argument("--n1", type=int)
    p.add_argument("--n2", type=int)

    p = cmd("fibonacci", "Fibonacci Hamiltonian covers and sumsets")
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--k", type=int, default=8)
    p.add_argument("--dim", type=int, choices=(1, 2, 3), default=1)
    p.add_argument("--metrics", type=_metric_list, default=["measure", "components"])

    p = cmd("penrose", "Penrose tilings, graphs and operators")
    p.add_argument("--model", choices=("t1", "t2", "t3"), default="t1")
    p.add_argument("--level", type=int, default=2)
    p.add_argument("--export-graph", action="store_true")
    p.add_argument("--export-tiles", action="store_true")
    p.add_argument("--export-opmat", action="store_true")

    p = cmd("opmat", "s2 covers of an operator read from an .opmat file")
    p.add_argument("--file", required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--n2", type=int, help="drilling resolution; omit for compspec")
    p.add_argument("--spacing", type=float)
    p.add_argument("--window")
    p.add_argument("--metrics", type=_metric_list, default=["measure", "components"])

    p = cmd("synthetic-cantor", "middle-thirds Cantor covers")
    p.add_argument("--depth", type=int, default=10)
    p.add_argument("--boxdim", action="store_true")
    p.add_argument("--hausdorff", action="store_true")
    p.add_argument("--n1", type=int)
    p.add_argument("--n2", type=int)

    p = cmd("diagonal", "diagonal operator with a finite spectrum")
    p.add_argument("--entries", required=True, help="comma separated eigenvalues")
    p.add_argument("--route", choices=("s1", "s2"), default="s2")
    p.add_argument("--n2", type=int, default=10)
    p.add_argument("--spacing", type=float)
    p.add_argument("--metrics", type=_metric_list, default=["measure", "components"])

    p = cmd("compare-truncations", "finite section vs finite tiling vs compspec")
    p.add_argument("--model", default="penrose-t1", help="penrose-t1/t2/t3, diagonal or opmat")
    p.add_argument("--level", type=int, default=5)
    p.add_argument("--file")
    p.add_argument("--entries")
    p.add_argument("--sizes", default="200,400")
    p.add_argument("--window", default="0:6")
    p.add_argument("--spacing", type=float, help="compspec grid spacing (default 12/n)")
    p.add_argument("--ref-factor", type=int, default=4)

    p = cmd("boxdim", "box-counting dimension from certified covers")
    p.add_argument("--model", default="amo", choices=sorted(S1_MODELS - {"diagonal"}))
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--alpha", default="golden")
    p.add_argument("--depth", type=int, default=10)
    p.add_argument("--file")
    p.add_argument("--delta-base", type=float, default=2.0)
    p.add_argument("--k-lo", type=int, default=4)
    p.add_argument("--k-hi", type=int, default=10)
    p.add_argument("--trials", type=int, default=100)

    p = cmd("hausdorff", "Hausdorff dimension via dyadic covers")
    p.add_argument("--model", default="fibonacci", choices=sorted(S1_MODELS - {"diagonal"}))
    p.add_argument("--lambda", dest="lam", type=float, default=15.0)
    p.add_argument("--alpha", default="golden")
    p.add_argument("--depth", type=int, default=10)
    p.add_argument("--file")
    p.add_argument("--n1", type=int, default=20)
    p.add_argument("--n2", type=int, default=5)
    p.add_argument("--window")

    p = cmd("capacity", "logarithmic capacity of a cover file")
    p.add_argument("--cover", required=True)
    p.add_argument("--quad-points", type=int)

    p = cmd("gaps", "gap histogram of a cover file or a Penrose operator")
    p.add_argument("--cover")
    p.add_argument("--model", choices=("penrose-t1", "penrose-t2", "penrose-t3"))
    p.add_argument("--level", type=int, default=5)
    p.add_argument("--n", type=int)
    p.add_argument("--window", default="0:6")
    p.add_argument("--spacing", type=float, default=0.01)
    p.add_argument("--thresholds", default="0.2,0.1,0.05,0.02")

    p = cmd("run", "run an experiment described by a JSON config")
    p.add_argument("--config", required=True)
    return ap


def _config(args, model: str, route: str = "s1", metrics=None, **params) -> ExperimentConfig:
    params = {k: v for k, v in params.items() if v is not None}
    return ExperimentConfig(
        model=model,
        route=route,
        metrics=list(metrics or []),
        params=params,
        n1=getattr(args, "n1", None),
        n2=getattr(args, "n2", None),
        out=args.out,
        seed=args.seed,
        threads=args.threads,
        fit_window=_parse_window(args.fit_window),
        full_scale=args.full_scale,
    )


def _dispatch(args) -> Path:
    out = Path(args.out)
    c = args.command
    if c == "amo":
        return run(_config(args, "amo", "s1", args.metrics, **{"lambda": args.lam, "alpha": args.alpha, "tol": args.tol}))
    if c == "fibonacci":
        model = {1: "fibonacci", 2: "fibonacci2d", 3: "fibonacci3d"}[args.dim]
        return run(_config(args, model, "s1", args.metrics, **{"lambda": args.lam, "k": args.k}))
    if c == "synthetic-cantor":
        metrics = ["measure", "components"]
        metrics += ["boxdim"] if args.boxdim else []
        metrics += ["hausdorff"] if args.hausdorff else []
        params = {"depth": args.depth}
        if args.boxdim:
            params.update(delta_base=3.0, k_lo=1, k_hi=args.depth)
        return run(_config(args, "synthetic-cantor", "s1", metrics, **params))
    if c == "diagonal":
        return run(_config(args, "diagonal", args.route, args.metrics, entries=args.entries, spacing=args.spacing))
    if c == "opmat":
        return run(
            _config(args, "opmat", "s2", args.metrics, file=args.file, n=args.n, spacing=args.spacing, window=args.window)
        )
    if c == "boxdim":
        params = {"lambda": args.lam, "alpha": args.alpha, "depth": args.depth, "file": args.file}
        params.update(delta_base=args.delta_base, k_lo=args.k_lo, k_hi=args.k_hi, trials=args.trials)
        return run(_config(args, args.model, "s1", ["boxdim"], **params))
    if c == "hausdorff":
        params = {"lambda": args.lam, "alpha": args.alpha, "depth": args.depth, "file": args.file, "window": args.window}
        return run(_config(args, args.model, "s1", ["hausdorff"], **params))
    if c == "penrose":
        cfg = _config(args, f"penrose-{args.model}", "s2", [], level=args.level)
        _check_limit(cfg, "penrose_level", args.level)
        t = tiling_at_level(args.level)
        g = build_graph(t, args.model)
        stem = out / f"penrose-{args.model}-L{args.level}"
        out.mkdir(parents=True, exist_ok=True)
        files = []
        if args.export_graph:
            files += [p.name for p in write_graph(g, stem)]
        if args.export_tiles:
            files.append(write_tiles(t, stem.with_suffix(".tiles")).name)
        op = graph_laplacian(g)
        if args.export_opmat:
            files.append(write_opmat(op, stem.with_suffix(".opmat")).name)
        acute, obtuse = t.counts
        report = {
            "tiles": len(t.kinds),
            "acute": acute,
            "obtuse": obtuse,
            "nodes": g.n_nodes,
            "edges": len(g.edges),
            "boundary_nodes": int(g.boundary.sum()),
            "exact_columns": op.exact_columns,
            "files": files,
            "parameters": cfg.echo(),
        }
        return dump_report(report, stem.with_suffix(".json"))
    if c == "capacity":
        cover = read_cover(args.cover)
        res = capacity_details(cover, args.quad_points)
        cfg = _config(args, "cover", "s1", ["capacity"], file=args.cover, quad_points=args.quad_points)
        report = {"capacity": res.value, "error_estimate": res.error_estimate, "capacity_panels": res.panels_per_interval, "parameters": cfg.echo()}
        return dump_report(report, out / "capacity.json")
    if c == "gaps":
        th = _float_list(args.thresholds)
        if args.cover:
            cfg = _config(args, "cover", "s1", ["gaps"], file=args.cover, thresholds=args.thresholds)
            hist = gap_histogram(read_cover(args.cover), th)
        elif args.model:
            cfg = _config(args, args.model, "s2", ["gaps"], level=args.level, n=args.n, window=args.window, spacing=args.spacing)
            op = operator_for(cfg)
            n = _truncation(cfg, op)
            window = _parse_window(args.window)
            res = compspec(DistanceField(op, n), args.spacing, window, threads=args.threads)
            hist = gap_histogram(DistanceField(op, n), th, window, args.spacing, res.delta_star, args.threads)
        else:
            raise ConfigError("gaps needs --cover or --model")
        return dump_report({"gaps": hist.to_dict(), "parameters": cfg.echo()}, out / "gaps.json")
    if c == "compare-truncations":
        params = {"level": args.level, "file": args.file, "entries": args.entries}
        cfg = _config(args, args.model, "s2", [], **params)
        op = operator_for(cfg)
        sizes = [int(s) for s in args.sizes.split(",")]
        for s in sizes:
            _check_limit(cfg, "truncation", s)
            op.check_truncation(s)
        rows = compare_truncations(op, sizes, _parse_window(args.window), args.spacing, args.ref_factor, args.threads)
        cfg.params.update(sizes=sizes, window=args.window, spacing=args.spacing, ref_factor=args.ref_factor)
        return dump_report({"rows": rows, "parameters": cfg.echo()}, out / "compare.json")
    if c == "run":
        try:
            raw = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        raw.setdefault("out", args.out)
        raw.setdefault("seed", args.seed)
        raw.setdefault("threads", args.threads)
        return run(ExperimentConfig.from_dict(raw))
    raise ConfigError(f"unknown command {c!r}")


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        path = _dispatch(args)
    except (NumericalFailure, GeometryError, ScalingSeriesError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ConfigError, ValueError, KeyError, TypeError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
