"""Size functionals of interval covers: measure, components, capacity, gaps.

Capacity solver
---------------
The equilibrium problem min { -log-energy of mu : mu a probability measure
on the cover } is discretized with piecewise-constant densities on
Chebyshev-graded panels (N per interval).  With K_ij the mean of -log|x-y|
over panel pair (i, j), the minimal energy is 1 / (1^T K^{-1} 1).  Panel
pairs closer than twice the larger width use the exact rectangle integral;
the rest use a 3x3 Gauss rule.  The discretization error is O(N^-2) and
the energies at N and 2N panels are Richardson-extrapolated.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
import scipy.linalg as sla
from scipy.optimize import minimize_scalar

from .errors import NumericalFailure
from .intervals import IntervalCover, component_count, measure
from .s2 import DistanceField, phi_values

__all__ = [
    "SizeReport",
    "GapHistogram",
    "CapacityResult",
    "size_report",
    "capacity",
    "capacity_details",
    "transfinite_diameter",
    "gap_histogram",
    "decide_measure_zero",
    "decide_finitely_many_components",
    "decide_capacity_zero",
    "is_interval",
]

COMPONENT_CEILING = 10**6
PANEL_BUDGET = 2400
# narrower components (relative to the span) lose their width to rounding
MIN_RELATIVE_WIDTH = 1e-13

_GX, _GW = np.polynomial.legendre.leggauss(3)
_GX = (_GX + 1) / 2
_GW = _GW / 2


# ---------------------------------------------------------------- capacity


def _G(t: np.ndarray) -> np.ndarray:
    # second antiderivative of log|t|
    out = np.zeros_like(t)
    m = t != 0
    tm = t[m]
    out[m] = 0.5 * tm * tm * np.log(np.abs(tm)) - 0.75 * tm * tm
    return out


def _panels(bounds: np.ndarray, N: int) -> np.ndarray:
    k = np.arange(N + 1)
    c = -np.cos(np.pi * k / N)
    a, b = bounds[:, 0:1], bounds[:, 1:2]
    x = (a + b) / 2 + (b - a) / 2 * c[None, :]
    x[:, 0], x[:, -1] = bounds[:, 0], bounds[:, 1]
    return np.stack([x[:, :-1].ravel(), x[:, 1:].ravel()], axis=1)


def _kernel_matrix(P: np.ndarray) -> np.ndarray:
    a, b = P[:, 0], P[:, 1]
    h = b - a
    n = len(P)
    xq = a[:, None] + _GX[None, :] * h[:, None]
    K = np.empty((n, n))
    rows = max(1, 4_000_000 // (9 * n))
    for s in range(0, n, rows):
        e = min(n, s + rows)
        d = np.abs(xq[s:e, :, None, None] - xq[None, None, :, :])
        with np.errstate(divide="ignore"):
            lg = np.log(d)
        K[s:e] = -np.einsum("p,ipjq,q->ij", _GW, lg, _GW)
    # exact rectangle integrals for near pairs; panels are sorted so the near
    # set of each panel is a contiguous run
    reach = 2 * max(float(h.max()), 0.0)
    lo_idx = np.searchsorted(b, a - reach, side="left")
    hi_idx = np.searchsorted(a, b + reach, side="right")
    for i in range(n):
        j = np.arange(lo_idx[i], hi_idx[i])
        gap = np.maximum(a[j] - b[i], a[i] - b[j])
        j = j[gap < 2 * np.maximum(h[j], h[i])]
        C, D = a[j] - a[i], b[j] - a[i]
        B = h[i]
        ex = _G(B - C) - _G(-C) - _G(B - D) + _G(-D)
        K[i, j] = -ex / (h[i] * h[j])
    return 0.5 * (K + K.T)


def _energy(P: np.ndarray) -> float:
    K = _kernel_matrix(P)
    one = np.ones(len(P))
    try:
        y = sla.solve(K, one, assume_a="pos")
    except (np.linalg.LinAlgError, sla.LinAlgError):
        try:
            y = sla.solve(K, one, assume_a="sym")
        except (np.linalg.LinAlgError, sla.LinAlgError) as exc:
            raise NumericalFailure(f"capacity system is singular ({exc}); increase the panel count") from exc
    s = float(one @ y)
    if not (s > 0 and math.isfinite(s)):
        raise NumericalFailure("capacity system is ill-conditioned; increase the panel count")
    return 1.0 / s


@dataclass(frozen=True)
class CapacityResult:
    value: float
    error_estimate: float
    panels_per_interval: int
    unknowns: int


def _auto_panels(m: int) -> int:
    return int(max(2, min(100, PANEL_BUDGET // (2 * m))))


def capacity_details(c: IntervalCover, quad_points_per_interval: Optional[int] = None) -> CapacityResult:
    """Logarithmic capacity with an a-posteriori error estimate.

    ``quad_points_per_interval`` is the coarse panel count N per interval;
    the fine solve uses 2N.  Point components are polar and ignored.
    """
    b = c.bounds[c.hi > c.lo] if not c.is_empty else c.bounds
    if len(b) == 0:
        return CapacityResult(0.0, 0.0, 0, 0)
    N = _auto_panels(len(b)) if quad_points_per_interval is None else int(quad_points_per_interval)
    if N < 1:
        raise ValueError("panel count must be positive")
    lo, s = float(b[0, 0]), float(b[-1, 1] - b[0, 0])
    u = (b - lo) / s
    if np.min(u[:, 1] - u[:, 0]) <= MIN_RELATIVE_WIDTH:
        raise NumericalFailure(
            "capacity: an interval is too narrow relative to the cover span to resolve in double precision"
        )
    # map into [0, 1] so that -log|x-y| >= 0 and the kernel is positive definite
    e1 = _energy(_panels(u, N))
    e2 = _energy(_panels(u, 2 * N))
    e = (4 * e2 - e1) / 3
    cap = s * math.exp(-e)
    err = s * abs(math.exp(-e) - math.exp(-e2))
    return CapacityResult(cap, err, N, 2 * N * len(b))


def capacity(c: IntervalCover, quad_points_per_interval: Optional[int] = None) -> float:
    return capacity_details(c, quad_points_per_interval).value


def transfinite_diameter(c: IntervalCover, k: int, sweeps: int = 200, seed_points: int = 4000) -> float:
    """k-point Fekete estimate (prod |x_i - x_j|)^(2/(k(k-1))) over the cover.

    Greedy Leja points on a Chebyshev candidate grid, then coordinate ascent:
    between its two neighbours the log-potential of the others is concave in
    each point, so every coordinate step is a bounded 1D maximization.
    """
    if k < 2:
        raise ValueError("need at least two points")
    b = c.bounds[c.hi > c.lo]
    if len(b) == 0:
        return 0.0
    per = max(8, seed_points // len(b))
    cand = np.unique(_panels(b, per).ravel())
    x = [cand[0]]
    logsum = np.log(np.abs(cand - cand[0]) + 1e-300)
    for _ in range(k - 1):
        i = int(np.argmax(logsum))
        x.append(cand[i])
        with np.errstate(divide="ignore"):
            logsum = logsum + np.log(np.abs(cand - cand[i]))
    x = np.sort(np.array(x))

    def owner(t):
        return int(np.searchsorted(b[:, 0], t, side="right") - 1)

    for _ in range(sweeps):
        moved = 0.0
        for i in range(k):
            others = np.delete(x, i)
            j = owner(x[i])
            lo, hi = b[j, 0], b[j, 1]
            if i > 0:
                lo = max(lo, x[i - 1])
            if i < k - 1:
                hi = min(hi, x[i + 1])
            if hi <= lo:
                continue

            def negpot(t, others=others):
                return -np.sum(np.log(np.abs(t - others) + 1e-300))

            res = minimize_scalar(negpot, bounds=(lo, hi), method="bounded", options={"xatol": 1e-13 * (1 + abs(hi))})
            cands = [(res.fun, res.x), (negpot(b[j, 0]), b[j, 0]), (negpot(b[j, 1]), b[j, 1])]
            best = min((v, t) for v, t in cands if lo <= t <= hi)
            if best[0] < negpot(x[i]):
                moved = max(moved, abs(best[1] - x[i]))
                x[i] = best[1]
        x = np.sort(x)
        if moved < 1e-14:
            break
    d = np.abs(x[:, None] - x[None, :])
    iu = np.triu_indices(k, 1)
    return float(np.exp(2.0 * np.sum(np.log(d[iu])) / (k * (k - 1))))


# ------------------------------------------------------------ size report


@dataclass
class SizeReport:
    measure: float
    components: Union[int, str]
    capacity: float
    cover_error: Optional[float]
    capacity_panels: int = 0
    capacity_error_estimate: float = 0.0
    parameters: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def size_report(
    c: IntervalCover,
    quad_points_per_interval: Optional[int] = None,
    components_ceiling: int = COMPONENT_CEILING,
    with_capacity: bool = True,
    parameters: Optional[dict] = None,
) -> SizeReport:
    if c.is_empty:
        raise ValueError("size report needs a nonempty cover")
    m = component_count(c)
    comps: Union[int, str] = "inf" if m > components_ceiling else m
    if with_capacity:
        cap = capacity_details(c, quad_points_per_interval)
    else:
        cap = CapacityResult(float("nan"), float("nan"), 0, 0)
    return SizeReport(
        measure=measure(c),
        components=comps,
        capacity=cap.value,
        cover_error=c.error,
        capacity_panels=cap.panels_per_interval,
        capacity_error_estimate=cap.error_estimate,
        parameters=dict(parameters or {}),
    )


# ----------------------------------------------------------- gap histogram


@dataclass
class GapHistogram:
    thresholds: list
    counts: list
    delta_star: float
    reliable: list

    def to_dict(self) -> dict:
        return asdict(self)


def _separated(points: np.ndarray, values: np.ndarray, sep: float) -> int:
    kept: list[float] = []
    for i in np.argsort(-values, kind="stable"):
        p = points[i]
        if all(abs(p - q) >= sep for q in kept):
            kept.append(p)
    return len(kept)


def gap_histogram(
    source,
    thresholds: Sequence[float],
    window: Optional[tuple] = None,
    grid_spacing: Optional[float] = None,
    delta_star: float = 0.0,
    threads: int = 1,
) -> GapHistogram:
    """Gap counts per half-width threshold.

    For a cover, gaps of width >= 2*delta are counted.  For a DistanceField,
    local maxima of Phi on a grid over ``window`` with value >= delta and
    pairwise separation >= 2*delta are counted.
    """
    th = sorted((float(t) for t in thresholds), reverse=True)
    if isinstance(source, IntervalCover):
        gaps = source.lo[1:] - source.hi[:-1]
        counts = [int(np.sum(gaps >= 2 * d)) for d in th]
    elif isinstance(source, DistanceField):
        if window is None or grid_spacing is None:
            raise ValueError("a distance field needs a window and a grid spacing")
        a, b = window
        grid = a + grid_spacing * np.arange(int(math.floor((b - a) / grid_spacing + 1e-9)) + 1)
        phi = phi_values(source, grid, threads)
        left = np.r_[-np.inf, phi[:-1]]
        right = np.r_[phi[1:], -np.inf]
        peak = (phi >= left) & (phi > right) | (phi > left) & (phi >= right)
        # the window edges are not maxima of the field, only of its restriction
        peak[0] = peak[-1] = False
        pts, vals = grid[peak], phi[peak]
        counts = [_separated(pts[vals >= d], vals[vals >= d], 2 * d) for d in th]
    else:
        raise TypeError("gap_histogram takes an IntervalCover or a DistanceField")
    return GapHistogram(th, counts, float(delta_star), [d >= delta_star for d in th])


# -------------------------------------------------------- decision towers


def _cover_at(seq, n: int) -> IntervalCover:
    return seq(n) if callable(seq) else seq[n - 1]


def decide_measure_zero(cover_sequence, n2: int, n1: int) -> int:
    """1 iff min over n <= n1 of measure(cover_n) < 1/n2."""
    best = min(measure(_cover_at(cover_sequence, n)) for n in range(1, n1 + 1))
    return int(best < 1.0 / n2)


def decide_finitely_many_components(cover_sequence, n2: int, n1: int) -> int:
    """1 iff the cover at index n1 has fewer than n2 components."""
    return int(component_count(_cover_at(cover_sequence, n1)) < n2)


def decide_capacity_zero(cover_sequence, n2: int, n1: int, quad_points_per_interval: Optional[int] = None) -> int:
    """1 iff min over n <= n1 of capacity(cover_n) < 1/n2."""
    best = math.inf
    for n in range(1, n1 + 1):
        best = min(best, capacity(_cover_at(cover_sequence, n), quad_points_per_interval))
        if best < 1.0 / n2:
            return 1
    return 0


def is_interval(c: IntervalCover) -> int:
    return int(component_count(c) == 1)
