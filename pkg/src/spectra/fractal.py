"""Box-counting and Hausdorff dimension estimates from interval covers."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from .intervals import IntervalCover, mesh_count

__all__ = [
    "ScalingSeries",
    "ScalingSeriesError",
    "BoxFit",
    "DyadicCostTable",
    "HausdorffResult",
    "scaling_series",
    "fit_box_dimension",
    "auto_fit_window",
    "hausdorff_cost",
    "hausdorff_table",
    "hausdorff_dimension",
    "cantor_cover",
    "write_scaling",
]

DEFAULT_TRIALS = 100
MAX_DEPTH = 40


@dataclass
class ScalingSeries:
    deltas: np.ndarray
    counts: np.ndarray
    stds: np.ndarray
    trials: int
    cover_ids: list
    cover_errors: list
    seed: Optional[int] = None
    complete: bool = True

    def __post_init__(self):
        self.deltas = np.asarray(self.deltas, dtype=float)
        self.counts = np.asarray(self.counts, dtype=float)
        self.stds = np.asarray(self.stds, dtype=float)
        if len(self.deltas) > 1 and np.any(np.diff(self.deltas) >= 0):
            raise ValueError("deltas must be strictly decreasing")

    def __len__(self):
        return len(self.deltas)


class ScalingSeriesError(RuntimeError):
    """Provider failure; ``partial`` holds the entries computed before it."""

    def __init__(self, message: str, partial: ScalingSeries):
        super().__init__(message)
        self.partial = partial


def scaling_series(
    cover_provider: Callable,
    deltas: Sequence[float],
    trials: int = DEFAULT_TRIALS,
    seed: int = 0,
) -> ScalingSeries:
    """Mesh counts averaged over random offsets, one provider call per delta.

    The provider maps delta to an IntervalCover whose certificate is at most
    delta, or to a pair (cover_id, cover).  Identical covers are reused.
    """
    rng = np.random.default_rng(seed)
    deltas = [float(d) for d in deltas]
    out_c, out_s, ids, errs = [], [], [], []
    auto_ids: dict[int, int] = {}

    def partial():
        n = len(out_c)
        return ScalingSeries(deltas[:n], out_c, out_s, trials, ids, errs, seed, complete=False)

    for d in deltas:
        try:
            got = cover_provider(d)
        except Exception as exc:
            raise ScalingSeriesError(f"cover provider failed at delta={d}: {exc}", partial()) from exc
        if isinstance(got, tuple):
            cid, cover = got
        else:
            cover = got
            cid = auto_ids.setdefault(id(cover), len(auto_ids))
        if cover.error is None or cover.error > d:
            raise ScalingSeriesError(
                f"cover certificate {cover.error} exceeds delta={d}", partial()
            )
        offsets = rng.uniform(0.0, d, size=trials)
        counts = np.array([mesh_count(cover, d, o) for o in offsets], dtype=float)
        out_c.append(counts.mean())
        out_s.append(counts.std())
        ids.append(cid)
        errs.append(cover.error)
    return ScalingSeries(deltas, out_c, out_s, trials, ids, errs, seed)


@dataclass(frozen=True)
class BoxFit:
    slope: float
    residual: float
    lower: float
    upper: float
    window: tuple


def _fit(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    A = np.c_[x, np.ones_like(x)]
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    r = y - A @ coef
    return float(coef[0]), float(np.sqrt(np.mean(r * r)))


def auto_fit_window(s: ScalingSeries, max_residual: float = 0.005, min_points: int = 3) -> tuple:
    """Longest index window whose linear fit has RMS residual <= max_residual."""
    x, y = np.log(1 / s.deltas), np.log(np.maximum(s.counts, 1e-300))
    n = len(s)
    best = None
    for length in range(n, min_points - 1, -1):
        for lo in range(0, n - length + 1):
            _, res = _fit(x[lo : lo + length], y[lo : lo + length])
            if res <= max_residual and (best is None or res < best[0]):
                best = (res, (lo, lo + length - 1))
        if best is not None:
            return best[1]
    return (0, n - 1)


def fit_box_dimension(s: ScalingSeries, window: Optional[tuple] = None) -> BoxFit:
    """Least-squares slope of log N against log(1/delta) over an inclusive index window.

    ``lower`` and ``upper`` are the min and max of log N / log(1/delta) over
    the window tail, the one-sided estimates converging from below and above.
    """
    if window is None:
        window = auto_fit_window(s)
    lo, hi = int(window[0]), int(window[1])
    if lo < 0 or hi >= len(s) or hi - lo + 1 < 3:
        raise ValueError(f"fit window {window} needs at least 3 points inside the series")
    x = np.log(1 / s.deltas[lo : hi + 1])
    y = np.log(s.counts[lo : hi + 1])
    slope, res = _fit(x, y)
    ratios = y / x
    return BoxFit(slope, res, float(ratios.min()), float(ratios.max()), (lo, hi))


# ------------------------------------------------------------- Hausdorff


@dataclass
class DyadicCostTable:
    """Optimal closed dyadic covers between levels j and k.

    ``cost`` maps (level, index) of every dyadic interval at levels j..k that
    meets the cover to its four state costs (full, no-left, no-right, neither).
    Intervals contained in the cover are stored once at their coarsest level.
    """

    j: int
    k: int
    d: float
    total: float
    cost: dict = field(default_factory=dict, repr=False)


class _Cover01:
    """Query helper for a cover inside [0, 1]."""

    def __init__(self, b: np.ndarray):
        self.lo = b[:, 0]
        self.hi = b[:, 1]

    def hits(self, a: float, b: float, open_left: bool, open_right: bool) -> bool:
        """Does the cover meet the interval with endpoints a < b, open as requested?"""
        i = int(np.searchsorted(self.lo, b, side="right")) - 1
        while i >= 0 and self.hi[i] >= a:
            x_lo = max(self.lo[i], a)
            x_hi = min(self.hi[i], b)
            if x_lo < x_hi:
                return True
            if x_lo == x_hi and (x_lo > a or not open_left) and (x_lo < b or not open_right):
                return True
            i -= 1
        return False

    def covers(self, a: float, b: float) -> bool:
        i = int(np.searchsorted(self.lo, a, side="right")) - 1
        return i >= 0 and self.hi[i] >= b


# state bits: 1 = left endpoint may be left to the neighbour, 2 = right endpoint
_ZERO = (0.0, 0.0, 0.0, 0.0)


class _DyadicDP:
    """Bottom-up costs of all dyadic intervals meeting a cover, down to level k.

    Node costs do not depend on the coarse level j, so one pass serves every j.
    Nodes contained in the cover are never split (for d <= 1 splitting a full
    interval cannot lower the cost); they are recorded as full blocks.
    """

    def __init__(self, b: np.ndarray, k: int, d: float):
        self.cov = _Cover01(b)
        self.k = k
        self.d = d
        self.nodes: dict = {}  # (level, m) -> costs, partially covered nodes
        self.full: list = []  # (level, m) of maximal full nodes
        self._visit(0, 0)

    def _visit(self, level: int, m: int) -> tuple:
        cov = self.cov
        a, b = m / 2**level, (m + 1) / 2**level
        w = 2.0 ** (-level * self.d)
        if cov.covers(a, b):
            self.full.append((level, m))
            return (w, w, w, w)
        if not cov.hits(a, b, False, False):
            return _ZERO
        need = (
            True,
            cov.hits(a, b, True, False),
            cov.hits(a, b, False, True),
            cov.hits(a, b, True, True),
        )
        own = tuple(w if n else 0.0 for n in need)
        if level == self.k:
            res = own
        else:
            L = self._visit(level + 1, 2 * m)
            R = self._visit(level + 1, 2 * m + 1)
            out = []
            for state in range(4):
                el, er = state & 1, state & 2
                # the shared midpoint is covered by L, or by R
                via_left = L[el] + R[1 | er]
                via_right = L[el | 2] + R[er]
                out.append(min(own[state], via_left, via_right))
            res = tuple(out)
        self.nodes[(level, m)] = res
        return res

    def level_entries(self, j: int) -> list:
        """Sorted (start, span, costs) blocks of consecutive level-j intervals."""
        out = [(m, 1, c) for (lv, m), c in self.nodes.items() if lv == j]
        w = 2.0 ** (-j * self.d)
        for lv, m in self.full:
            if lv > j:
                continue
            span = 2 ** (j - lv)
            c = span * w
            out.append((m * span, span, (c, c, c, c)))
        # full nodes at levels > j lie inside some partial level-j node
        out.sort(key=lambda e: e[0])
        return out

    def total(self, j: int) -> float:
        """Chain the level-j blocks, passing shared endpoints between neighbours."""
        done = 0.0
        prev_end = None
        cov_here = left_here = 0.0
        for start, span, c in self.level_entries(j):
            if prev_end is not None and start == prev_end:
                new_cov = min(cov_here + c[1], left_here + c[0])
                new_left = min(cov_here + c[3], left_here + c[2])
            else:
                done = cov_here if prev_end is not None else 0.0
                new_cov = done + c[0]
                new_left = done + c[2]
            cov_here, left_here = new_cov, new_left
            prev_end = start + span
        return cov_here if prev_end is not None else 0.0

    def table(self, j: int) -> dict:
        out = {key: c for key, c in self.nodes.items() if key[0] >= j}
        for lv, m in self.full:
            w = 2.0 ** (-max(lv, j) * self.d)
            if lv >= j:
                out[(lv, m)] = (w, w, w, w)
            else:
                span = 2 ** (j - lv)
                for i in range(m * span, (m + 1) * span):
                    out[(j, i)] = (w, w, w, w)
        return out


def _unit_bounds(c: IntervalCover, window: tuple) -> tuple[np.ndarray, float]:
    w0, w1 = float(window[0]), float(window[1])
    scale = w1 - w0
    if not scale > 0:
        raise ValueError("window must have positive length")
    if c.is_empty:
        return np.empty((0, 2)), scale
    if c.bounds[0, 0] < w0 or c.bounds[-1, 1] > w1:
        raise ValueError("cover must lie inside the dyadic window")
    b = (c.bounds - w0) / scale
    return np.clip(b, 0.0, 1.0), scale


def _check_levels(j: int, k: int, d: float, max_depth: int):
    if not 0 <= j <= k:
        raise ValueError("need 0 <= j <= k")
    if k - j > max_depth:
        raise ValueError(f"k - j = {k - j} exceeds the configured depth {max_depth}")
    if not 0 <= d <= 1:
        raise ValueError("exponent d must lie in [0, 1]")


def hausdorff_cost(
    c: IntervalCover,
    j: int,
    k: int,
    d: float,
    window: tuple = (0.0, 1.0),
    max_depth: int = MAX_DEPTH,
    keep_table: bool = False,
):
    """Minimal sum of |I|^d over covers of c by closed dyadic intervals of levels j..k.

    The cover is mapped affinely from ``window`` onto [0, 1] and the result is
    multiplied by the window length to the power d.  Returns a float, or a
    DyadicCostTable when ``keep_table`` is set.

    Closed dyadic intervals share endpoints, so each node carries four costs
    depending on whether its left and/or right endpoint may be left to the
    neighbour; this keeps the DP exact when the set touches dyadic points.
    """
    _check_levels(j, k, d, max_depth)
    b, scale = _unit_bounds(c, window)
    if len(b) == 0:
        total, table = 0.0, {}
    else:
        dp = _DyadicDP(b, k, d)
        total = dp.total(j)
        table = dp.table(j) if keep_table else {}
    total *= scale**d
    if keep_table:
        return DyadicCostTable(j, k, d, total, table)
    return total


def hausdorff_table(
    covers: Sequence[IntervalCover], n2: int, d: float, window=(0.0, 1.0)
) -> np.ndarray:
    """H[j-1, k-1] = H^d_{j,k}(covers[k-1]) for 1 <= j <= min(n2, k); inf elsewhere."""
    n1 = len(covers)
    H = np.full((n2, n1), np.inf)
    for k in range(1, n1 + 1):
        b, scale = _unit_bounds(covers[k - 1], window)
        if len(b) == 0:
            H[: min(n2, k), k - 1] = 0.0
            continue
        _check_levels(1, k, d, MAX_DEPTH + 1)
        dp = _DyadicDP(b, k, d)
        for jj in range(1, min(n2, k) + 1):
            H[jj - 1, k - 1] = dp.total(jj) * scale**d
    return H


@dataclass(frozen=True)
class HausdorffResult:
    estimate: float
    n2: int
    n1: int
    d_grid: np.ndarray
    h_values: np.ndarray
    window: tuple


def hausdorff_dimension(
    cover_provider: Callable[[int], IntervalCover],
    n2: int,
    n1: int,
    window: tuple = (0.0, 1.0),
    threshold: float = 1.0,
) -> HausdorffResult:
    """Threshold rule on the dyadic exponent grid i / 2^n2.

    h(d) = max over 1 <= j <= n2 of min over j <= k <= n1 of H^d_{j,k}(cover_k);
    the estimate is the largest grid value d_i with h(d_l) >= threshold for
    every l <= i.  ``cover_provider(k)`` must certify error <= 2^-k in the
    units of the window mapped to [0, 1].
    """
    if n2 < 1 or n1 < 1:
        raise ValueError("n1 and n2 must be positive")
    covers = []
    scale = window[1] - window[0]
    for k in range(1, n1 + 1):
        cov = cover_provider(k)
        if cov.error is None or cov.error > 2.0**-k * scale * (1 + 1e-12):
            raise ValueError(f"cover for k={k} has certificate {cov.error} above 2^-k")
        covers.append(cov)
    if all(np.all(cv.hi == cv.lo) for cv in covers):
        grid = np.arange(2**n2 + 1) / 2**n2
        return HausdorffResult(0.0, n2, n1, grid, np.zeros_like(grid), tuple(window))
    grid = np.arange(2**n2 + 1) / 2**n2
    hv = np.empty(len(grid))
    est = 0.0
    ok = True
    for i, dval in enumerate(grid):
        H = hausdorff_table(covers, n2, float(dval), window)
        hv[i] = float(np.max(np.min(H, axis=1)))
        if ok and hv[i] >= threshold:
            est = float(dval)
        else:
            ok = False
            hv[i + 1 :] = np.nan
            break
    return HausdorffResult(est, n2, n1, grid, hv, tuple(window))


# -------------------------------------------------------------- synthetic


def cantor_cover(depth: int, error: Optional[float] = None) -> IntervalCover:
    """Depth-n middle-thirds construction: 2^n closed intervals of length 3^-n.

    Endpoints are exact integers over 3^depth before the final division.
    """
    starts = np.array([0], dtype=np.int64)
    for _ in range(depth):
        starts = np.concatenate([3 * starts, 3 * starts + 2])
    starts.sort()
    den = 3.0**depth
    b = np.c_[starts / den, (starts + 1) / den]
    err = 3.0**-depth if error is None else error
    return IntervalCover(b, err)


def write_scaling(s: ScalingSeries, path) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "delta", "mean_count", "std_count", "cover_id", "cover_error"])
        for i in range(len(s)):
            w.writerow([i, f"{s.deltas[i]:.17g}", f"{s.counts[i]:.17g}", f"{s.stds[i]:.17g}", s.cover_ids[i], f"{s.cover_errors[i]:.17g}"])
    return path
