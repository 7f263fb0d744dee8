"""Finite unions of closed real intervals.

Covers are stored as a sorted ``(m, 2)`` float array of disjoint intervals
with strictly positive gaps, plus an optional Hausdorff error certificate.
All operations return new objects.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

__all__ = [
    "Interval",
    "IntervalCover",
    "normalize",
    "measure",
    "component_count",
    "minkowski_sum",
    "inflate",
    "hausdorff_distance",
    "mesh_count",
    "write_cover",
    "read_cover",
    "format_cover",
    "parse_cover",
]


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise ValueError(f"non-finite interval endpoint in [{self.lo}, {self.hi}]")
        if self.lo > self.hi:
            raise ValueError(f"interval has lo > hi: [{self.lo}, {self.hi}]")

    @property
    def length(self) -> float:
        return self.hi - self.lo


@dataclass(frozen=True, eq=False)
class IntervalCover:
    """Normalized union of closed intervals.

    Build through :func:`normalize` unless the bounds are already sorted and
    separated; the constructor validates but does not merge.
    """

    bounds: np.ndarray
    error: Optional[float] = None

    def __post_init__(self):
        b = np.array(self.bounds, dtype=float).reshape(-1, 2)
        if not np.all(np.isfinite(b)):
            raise ValueError("cover has non-finite endpoints")
        if np.any(b[:, 0] > b[:, 1]):
            raise ValueError("cover has an interval with lo > hi")
        if len(b) > 1 and np.any(b[1:, 0] <= b[:-1, 1]):
            raise ValueError("cover intervals must be sorted with positive gaps; use normalize()")
        if self.error is not None:
            err = float(self.error)
            if not (err >= 0 and math.isfinite(err)):
                raise ValueError(f"error certificate must be finite and nonnegative, got {self.error}")
            object.__setattr__(self, "error", err)
        b.setflags(write=False)
        object.__setattr__(self, "bounds", b)

    @classmethod
    def empty(cls, error: Optional[float] = None) -> "IntervalCover":
        return cls(np.empty((0, 2)), error)

    @property
    def lo(self) -> np.ndarray:
        return self.bounds[:, 0]

    @property
    def hi(self) -> np.ndarray:
        return self.bounds[:, 1]

    @property
    def intervals(self) -> list[Interval]:
        return [Interval(float(a), float(b)) for a, b in self.bounds]

    @property
    def is_empty(self) -> bool:
        return len(self.bounds) == 0

    def __len__(self):
        return len(self.bounds)

    def __iter__(self):
        return iter(self.intervals)

    def __eq__(self, other):
        if not isinstance(other, IntervalCover):
            return NotImplemented
        return self.error == other.error and np.array_equal(self.bounds, other.bounds)

    def __repr__(self):
        if len(self) <= 6:
            body = ", ".join(f"[{a:.6g}, {b:.6g}]" for a, b in self.bounds)
        else:
            body = f"{len(self)} intervals in [{self.bounds[0, 0]:.6g}, {self.bounds[-1, 1]:.6g}]"
        return f"IntervalCover({body}; error={self.error})"

    def with_error(self, error: Optional[float]) -> "IntervalCover":
        return IntervalCover(self.bounds, error)

    def contains(self, x) -> np.ndarray:
        """Elementwise membership test for points."""
        x = np.asarray(x, dtype=float)
        if self.is_empty:
            return np.zeros(x.shape, dtype=bool)
        i = np.searchsorted(self.lo, x, side="right") - 1
        ok = i >= 0
        out = np.zeros(x.shape, dtype=bool)
        out[ok] = x[ok] <= self.hi[i[ok]]
        return out

    def issubset(self, other: "IntervalCover") -> bool:
        """True if every interval of self lies inside one interval of other."""
        if self.is_empty:
            return True
        if other.is_empty:
            return False
        i = np.searchsorted(other.lo, self.lo, side="right") - 1
        if np.any(i < 0):
            return False
        return bool(np.all(self.hi <= other.hi[i]))

    def affine(self, scale: float, shift: float = 0.0) -> "IntervalCover":
        """Image under x -> scale*x + shift; the certificate scales by |scale|."""
        b = self.bounds * scale + shift
        if scale < 0:
            b = b[::-1, ::-1]
        err = None if self.error is None else self.error * abs(scale)
        return normalize(b, error=err)

    def distance_to(self, x) -> np.ndarray:
        """Distance from each point of ``x`` to the cover."""
        if self.is_empty:
            raise ValueError("distance to an empty cover is undefined")
        return _point_distance(self.bounds, np.asarray(x, dtype=float))


def _as_array(raw) -> np.ndarray:
    if isinstance(raw, IntervalCover):
        return np.array(raw.bounds)
    rows = [(iv.lo, iv.hi) if isinstance(iv, Interval) else tuple(iv) for iv in raw]
    b = np.array(rows, dtype=float).reshape(-1, 2)
    if not np.all(np.isfinite(b)):
        raise ValueError("non-finite interval endpoints")
    if np.any(b[:, 0] > b[:, 1]):
        bad = b[b[:, 0] > b[:, 1]][0]
        raise ValueError(f"interval has lo > hi: [{bad[0]}, {bad[1]}]")
    return b


def _merge_sorted(b: np.ndarray, tol: float) -> np.ndarray:
    if len(b) == 0:
        return b
    b = b[np.argsort(b[:, 0], kind="stable")]
    run_hi = np.maximum.accumulate(b[:, 1])
    # a new component starts where the interval begins beyond everything before it
    starts = np.ones(len(b), dtype=bool)
    starts[1:] = b[1:, 0] - run_hi[:-1] > tol
    idx = np.flatnonzero(starts)
    ends = np.r_[idx[1:] - 1, len(b) - 1]
    return np.c_[b[idx, 0], run_hi[ends]]


def normalize(raw, error: Optional[float] = None, merge_tol: float = 0.0) -> IntervalCover:
    """Sort and merge intervals; touching intervals and gaps ``<= merge_tol`` coalesce."""
    if merge_tol < 0:
        raise ValueError("merge_tol must be nonnegative")
    b = _merge_sorted(_as_array(raw), merge_tol)
    return IntervalCover(b, error)


def measure(c: IntervalCover) -> float:
    return float(np.sum(c.hi - c.lo))


def component_count(c: IntervalCover) -> int:
    return len(c)


def _add_errors(*errs):
    if any(e is None for e in errs):
        return None
    return float(sum(errs))


def minkowski_sum(a: IntervalCover, b: IntervalCover) -> IntervalCover:
    """Sumset {x + y}; certificates add when both are present."""
    err = _add_errors(a.error, b.error)
    if a.is_empty or b.is_empty:
        return IntervalCover.empty(err)
    # iterate over the shorter cover to bound peak memory
    if len(a) < len(b):
        a, b = b, a
    parts = []
    chunk = max(1, 2_000_000 // max(len(a), 1))
    for s in range(0, len(b), chunk):
        bb = b.bounds[s : s + chunk]
        lo = (a.lo[None, :] + bb[:, 0:1]).ravel()
        hi = (a.hi[None, :] + bb[:, 1:2]).ravel()
        parts.append(_merge_sorted(np.c_[lo, hi], 0.0))
    return IntervalCover(_merge_sorted(np.vstack(parts), 0.0), err)


def inflate(c: IntervalCover, r: float) -> IntervalCover:
    """Thicken by ``r``; a missing certificate is treated as exact."""
    if not r >= 0:
        raise ValueError(f"inflation radius must be nonnegative, got {r}")
    err = (c.error or 0.0) + r
    if c.is_empty:
        return IntervalCover.empty(err)
    return IntervalCover(_merge_sorted(c.bounds + np.array([-r, r]), 0.0), err)


def _point_distance(b: np.ndarray, x: np.ndarray) -> np.ndarray:
    i = np.searchsorted(b[:, 0], x, side="right") - 1
    d = np.full(x.shape, np.inf)
    left = i >= 0
    il = i[left]
    d[left] = np.maximum(x[left] - b[il, 1], 0.0)
    right = i + 1 < len(b)
    ir = i[right] + 1
    d[right] = np.minimum(d[right], b[ir, 0] - x[right])
    return d


def _directed(a: np.ndarray, b: np.ndarray) -> float:
    # dist(., b) is piecewise linear on each interval of a, so the sup sits at an
    # endpoint of a or at the midpoint of a gap of b lying inside a
    pts = [a.ravel()]
    if len(b) > 1:
        mids = 0.5 * (b[:-1, 1] + b[1:, 0])
        pts.append(mids[_point_distance(a, mids) == 0])
    x = np.concatenate(pts)
    return float(np.max(_point_distance(b, x)))


def hausdorff_distance(a: IntervalCover, b: IntervalCover) -> float:
    if a.is_empty or b.is_empty:
        raise ValueError("Hausdorff distance needs two nonempty covers")
    return max(_directed(a.bounds, b.bounds), _directed(b.bounds, a.bounds))


def mesh_count(c: IntervalCover, delta: float, offset: float = 0.0) -> int:
    """Number of closed meshes [m*delta+offset, (m+1)*delta+offset] meeting the cover."""
    if not delta > 0:
        raise ValueError(f"mesh size must be positive, got {delta}")
    if c.is_empty:
        return 0
    # the quotient can round across a mesh boundary; settle each index against
    # the mesh endpoints m*delta + offset as they are actually computed
    first = np.ceil((c.lo - offset) / delta).astype(np.int64) - 2
    for _ in range(3):
        first += (first + 1) * delta + offset < c.lo
    last = np.floor((c.hi - offset) / delta).astype(np.int64) + 1
    for _ in range(3):
        last -= last * delta + offset > c.hi
    # union of the integer ranges [first_i, last_i]; ranges are sorted by first
    run_last = np.maximum.accumulate(last)
    new = np.ones(len(c), dtype=bool)
    new[1:] = first[1:] > run_last[:-1]
    idx = np.flatnonzero(new)
    ends = np.r_[idx[1:] - 1, len(c) - 1]
    return int(np.sum(run_last[ends] - first[idx] + 1))


def format_cover(c: IntervalCover) -> str:
    lines = []
    if c.error is not None:
        lines.append(f"# error={c.error:.17g}")
    lines += [f"{a:.17g},{b:.17g}" for a, b in c.bounds]
    return "\n".join(lines) + "\n"


def parse_cover(text: str) -> IntervalCover:
    error = None
    rows = []
    for n, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("error="):
                error = float(body[len("error="):])
            continue
        try:
            lo, hi = (float(s) for s in line.split(","))
        except ValueError as exc:
            raise ValueError(f"line {n}: expected 'lo,hi', got {line!r}") from exc
        rows.append((lo, hi))
    return IntervalCover(np.array(rows, dtype=float).reshape(-1, 2), error)


def write_cover(c: IntervalCover, path) -> Path:
    path = Path(path)
    path.write_text(format_cover(c), encoding="utf-8")
    return path


def read_cover(path) -> IntervalCover:
    return parse_cover(Path(path).read_text(encoding="utf-8"))


def union(covers: Iterable[IntervalCover]) -> IntervalCover:
    """Union of several covers; the certificate is the largest one present."""
    covers = list(covers)
    errs = [c.error for c in covers]
    err = None if any(e is None for e in errs) else max(errs, default=None)
    if not covers:
        return IntervalCover.empty()
    return normalize(np.vstack([c.bounds for c in covers]), error=err)
