"""Spectral distance functions from smallest singular values of truncations.

An operator with bounded dispersion is stored as a finite symmetric matrix in
its enumeration order, together with the dispersion table f (column n of A
has support in rows 1..f(n)) and the bound sequence c_n.  Only the first
``exact_columns`` columns of the finite realization agree with the infinite
operator; truncations never go past them.
"""
from __future__ import annotations

import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sps
import scipy.sparse.linalg as spla

from .errors import NumericalFailure
from .intervals import IntervalCover, normalize

__all__ = [
    "DispersionOperator",
    "DistanceField",
    "DrillGrid",
    "CompspecResult",
    "diagonal_operator",
    "free_laplacian_z",
    "sigma_inf_rect",
    "phi_eval",
    "phi_values",
    "drill_cover",
    "compspec",
    "count_eigs_below",
    "read_opmat",
    "write_opmat",
]

DENSE_SVD_MAX = 2000
# shift-invert converges in a handful of steps unless the null space is a large
# degenerate cluster; past this cap the inverse-iteration fallback takes over
ARPACK_MAXITER = 300


@dataclass(frozen=True, eq=False)
class DispersionOperator:
    """Finite realization of a bounded self-adjoint operator with dispersion data.

    ``f_table[n-1]`` is f(n) and ``c_table[n-1]`` is c_n for n = 1..len.
    """

    matrix: sps.csr_matrix
    f_table: np.ndarray
    c_table: np.ndarray
    exact_columns: int
    name: str = ""
    order: Optional[np.ndarray] = None  # node labels in enumeration order, if any

    def __post_init__(self):
        A = sps.csr_matrix(self.matrix, dtype=float)
        if A.shape[0] != A.shape[1]:
            raise ValueError("operator matrix must be square")
        if A.nnz and abs(A - A.T).max() > 0:
            raise ValueError("operator matrix must be symmetric")
        f = np.asarray(self.f_table, dtype=np.int64)
        c = np.asarray(self.c_table, dtype=float)
        if len(f) < self.exact_columns or len(c) < self.exact_columns:
            raise ValueError("f and c tables must cover every exact column")
        if np.any(f < np.arange(2, len(f) + 2)):
            raise ValueError("dispersion table needs f(n) >= n + 1")
        if np.any(np.diff(f) < 0):
            raise ValueError("dispersion table must be non-decreasing")
        if np.any(c < 0):
            raise ValueError("bound sequence must be nonnegative")
        A.sort_indices()
        object.__setattr__(self, "matrix", A)
        object.__setattr__(self, "f_table", f)
        object.__setattr__(self, "c_table", c)

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    @property
    def sparse_exact(self) -> bool:
        return bool(np.all(self.c_table[: self.exact_columns] == 0))

    def f(self, n: int) -> int:
        return int(self.f_table[n - 1])

    def c(self, n: int) -> float:
        return float(self.c_table[n - 1])

    def entry(self, i: int, j: int) -> float:
        """Matrix entry with 1-based indices."""
        return float(self.matrix[i - 1, j - 1])

    def column_support(self, j: int) -> np.ndarray:
        """1-based row indices of the stored entries of column j."""
        A = self.matrix
        return A.indices[A.indptr[j - 1] : A.indptr[j]] + 1

    def norm_estimate(self) -> float:
        """Max absolute row sum, an upper bound on the operator norm."""
        return float(np.max(np.abs(self.matrix).sum(axis=1))) if self.size else 0.0

    def check_truncation(self, n: int):
        if not 1 <= n <= self.exact_columns:
            raise ValueError(f"truncation n={n} outside the exact range 1..{self.exact_columns}")

    def rect(self, n: int) -> sps.csc_matrix:
        """P_{f(n)} A P_n^* clipped to the stored rows (rows beyond are zero)."""
        self.check_truncation(n)
        m = min(self.f(n), self.size)
        return self.matrix[:m, :n].tocsc()

    @classmethod
    def from_matrix(cls, A, exact_columns: Optional[int] = None, c=None, name: str = "") -> "DispersionOperator":
        """Dispersion table read off the sparsity pattern, padded to f(n) >= n + 1."""
        A = sps.csc_matrix(A, dtype=float)
        N = A.shape[0]
        last = np.zeros(N, dtype=np.int64)
        for j in range(N):
            rows = A.indices[A.indptr[j] : A.indptr[j + 1]]
            last[j] = rows.max() + 1 if len(rows) else 0
        f = np.maximum(np.maximum.accumulate(last), np.arange(2, N + 2))
        c = np.zeros(N) if c is None else np.broadcast_to(np.asarray(c, dtype=float), (N,)).copy()
        return cls(A.tocsr(), f, c, N if exact_columns is None else exact_columns, name)


def diagonal_operator(entries, size: Optional[int] = None) -> DispersionOperator:
    """diag(d_1, d_2, ...), continued by repeating the last entry up to ``size``."""
    d = np.asarray(entries, dtype=float)
    size = len(d) if size is None else size
    if size < len(d):
        d = d[:size]
    d = np.r_[d, np.full(size - len(d), d[-1])]
    return DispersionOperator.from_matrix(sps.diags(d), name="diagonal")


def free_laplacian_z(size: int, potential=None) -> DispersionOperator:
    """psi(n+1) + psi(n-1) on Z in the centred order 0, 1, -1, 2, -2, ...

    The finite realization covers sites -M..M with ``size = 2M+1``; the two
    outermost sites have missing neighbours, so they are the only inexact columns.
    """
    M = size // 2
    sites = np.zeros(2 * M + 1, dtype=np.int64)
    sites[1::2] = np.arange(1, M + 1)
    sites[2::2] = -np.arange(1, M + 1)
    pos = {int(s): i for i, s in enumerate(sites)}
    rows, cols = [], []
    for s, i in pos.items():
        if s + 1 in pos:
            rows += [i, pos[s + 1]]
            cols += [pos[s + 1], i]
    A = sps.coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(len(sites),) * 2).tocsr()
    if potential is not None:
        A = A + sps.diags([potential(int(s)) for s in sites])
    return DispersionOperator.from_matrix(A, exact_columns=len(sites) - 2, name="free-laplacian-z")


# ------------------------------------------------------------ sigma kernel


def _rect_shifted(op: DispersionOperator, z: float, n: int) -> sps.csc_matrix:
    R = op.rect(n)
    E = sps.eye(R.shape[0], n, format="csc")
    return (R - z * E).tocsc()


def _sigma_dense(T) -> float:
    T = T.toarray() if sps.issparse(T) else np.asarray(T)
    try:
        return float(sla.svdvals(T)[-1])
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"dense SVD failed: {exc}") from exc


def _sigma_embedding(T) -> float:
    """n-th largest eigenvalue of [[0, T^T], [T, 0]]."""
    T = T.toarray() if sps.issparse(T) else np.asarray(T)
    m, n = T.shape
    B = np.zeros((m + n, m + n))
    B[n:, :n] = T
    B[:n, n:] = T.T
    ev = sla.eigvalsh(B)
    return float(max(ev[::-1][n - 1], 0.0))


def _sigma_inverse_iteration(T, M, shift: float, steps: int = 40) -> float:
    """Inverse iteration on T^T T; the best ||T v||/||v|| seen is an upper bound on sigma_min."""
    n = M.shape[0]
    try:
        lu = spla.splu((M + shift * sps.eye(n, format="csc")).tocsc())
    except RuntimeError as exc:
        raise NumericalFailure(f"factorization failed at n={n}: {exc}") from exc
    v = np.random.default_rng(0).standard_normal(n)
    best = math.inf
    for _ in range(steps):
        v = lu.solve(v)
        nv = np.linalg.norm(v)
        if not np.isfinite(nv) or nv == 0:
            raise NumericalFailure("inverse iteration broke down")
        v /= nv
        r = float(np.linalg.norm(T @ v))
        if r >= best * (1 - 1e-12):
            best = min(best, r)
            break
        best = r
    return best


def _sigma_normal(T: sps.csc_matrix, TtT: Optional[sps.spmatrix] = None) -> float:
    """Smallest eigenpair of T^T T by shift-invert Lanczos, refined as ||T v||."""
    n = T.shape[1]
    if n < 3:
        return _sigma_dense(T)
    M = (T.T @ T).tocsc() if TtT is None else sps.csc_matrix(TtT)
    scale = float(np.max(np.abs(M.diagonal()))) or 1.0
    shift = 1e-7 * scale
    try:
        vals, vecs = spla.eigsh(M, k=1, sigma=-shift, which="LM", v0=np.ones(n), tol=0, maxiter=ARPACK_MAXITER)
        v = vecs[:, 0]
    except spla.ArpackNoConvergence:
        # large near-null clusters (degenerate flat bands) can stall Lanczos
        return _sigma_inverse_iteration(T, M, shift)
    except RuntimeError as exc:
        raise NumericalFailure(f"shift-invert Lanczos failed at n={n}: {exc}") from exc
    nv = np.linalg.norm(v)
    if not np.isfinite(nv) or nv == 0:
        raise NumericalFailure("shift-invert Lanczos returned a degenerate vector")
    # ||T v|| / ||v|| is an upper bound on sigma_min and avoids the squaring loss
    return float(np.linalg.norm(T @ v) / nv)


def sigma_inf_rect(op: DispersionOperator, z: float, n: int, method: str = "auto") -> float:
    """Smallest singular value of P_{f(n)} (A - z) P_n^*.

    ``method``: "sparse" (normal matrix, shift-invert), "dense" (SVD),
    "embedding" (symmetric block matrix) or "auto" (dense for small n).
    """
    T = _rect_shifted(op, z, n)
    if method == "auto":
        method = "dense" if n <= 64 else "sparse"
    if method == "sparse":
        return _sigma_normal(T)
    if method == "dense":
        if n > DENSE_SVD_MAX:
            raise ValueError(f"dense SVD path limited to n <= {DENSE_SVD_MAX}")
        return _sigma_dense(T)
    if method == "embedding":
        return _sigma_embedding(T)
    raise ValueError(f"unknown singular value method {method!r}")


# ---------------------------------------------------------- distance field


@dataclass(eq=False)
class DistanceField:
    """Evaluator of Phi_n(z) = min over a truncation ladder of sigma + c_m + sigma_tol.

    With c = 0 the injection modulus is already non-increasing in the
    truncation size, so the default ladder is just [n]; otherwise it is n
    together with a halving sequence below n.  ``ladder="full"`` uses every
    m <= n.
    """

    op: DispersionOperator
    n: int
    sigma_tol: float = 1e-8
    method: str = "auto"
    ladder: str = "auto"
    _cache: dict = field(default_factory=dict, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def __post_init__(self):
        self.op.check_truncation(self.n)
        if not self.sigma_tol > 0:
            raise ValueError("sigma_tol must be positive")

    def sizes(self) -> list[int]:
        if self.ladder == "full":
            return list(range(1, self.n + 1))
        if self.ladder == "auto" and self.op.sparse_exact:
            return [self.n]
        out, m = [self.n], self.n // 2
        while m >= 1:
            out.append(m)
            m //= 2
        return out

    def _parts(self, m: int):
        with self._lock:
            if m not in self._cache:
                R = self.op.rect(m)
                self._cache[m] = (R, (R.T @ R).tocsc(), R[:m, :m].tocsc(), sps.eye(R.shape[0], m, format="csc"))
            return self._cache[m]

    def sigma(self, z: float, m: int) -> float:
        R, G, S, E = self._parts(m)
        T = (R - z * E).tocsc()
        method = self.method
        if method == "auto":
            method = "dense" if m <= 64 else "sparse"
        if method == "sparse":
            M = G - 2 * z * S + (z * z) * sps.eye(m, format="csc")
            return _sigma_normal(T, M)
        if method == "dense":
            return _sigma_dense(T)
        if method == "embedding":
            return _sigma_embedding(T)
        raise ValueError(f"unknown singular value method {method!r}")

    def __call__(self, z: float) -> float:
        return min(self.sigma(z, m) + self.op.c(m) + self.sigma_tol for m in self.sizes())

    def with_n(self, n: int) -> "DistanceField":
        return DistanceField(self.op, n, self.sigma_tol, self.method, self.ladder)


def phi_eval(field: DistanceField, z: float) -> float:
    if not math.isfinite(z):
        raise ValueError("z must be finite")
    return field(float(z))


def phi_values(field: DistanceField, zs, threads: int = 1) -> np.ndarray:
    zs = np.asarray(zs, dtype=float)
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            return np.fromiter(ex.map(field, zs.tolist()), float, len(zs))
    return np.array([field(z) for z in zs.tolist()])


# ---------------------------------------------------------------- drilling


@dataclass(frozen=True)
class DrillGrid:
    """Grid j/n2 for |j| <= J inside the window [-R, R]."""

    n2: int
    R: float

    @property
    def delta(self) -> float:
        return 1.0 / self.n2

    @property
    def J(self) -> int:
        return int(math.floor(self.R * self.n2 + 1e-9))

    @property
    def indices(self) -> np.ndarray:
        return np.arange(-self.J, self.J + 1)

    @property
    def points(self) -> np.ndarray:
        return self.indices / self.n2


def drill_cover(field: DistanceField, n2: int, R: Optional[float] = None, threads: int = 1) -> IntervalCover:
    """Window [-R, R] minus open balls D(j/n2, floor(n2 Phi)/n2) around grid points.

    Ball endpoints are integers in units of 1/n2, so the set difference is
    exact and only the final division rounds.  The certificate is 2/n2.
    """
    if n2 < 1:
        raise ValueError("n2 must be >= 1")
    if R is None:
        R = math.ceil(field.op.norm_estimate() + 1.0)
    grid = DrillGrid(n2, R)
    j = grid.indices
    phi = phi_values(field, grid.points, threads)
    k = np.floor(n2 * phi).astype(np.int64)
    lo, hi = j - k, j + k
    keep = k > 0
    lo, hi = lo[keep], hi[keep]
    order = np.argsort(lo, kind="stable")
    lo, hi = lo[order], hi[order]
    pieces = []
    cur = -grid.J
    for a, b in zip(lo.tolist(), hi.tolist()):
        # open ball (a, b): everything up to a stays, then resume at b
        if a >= cur:
            pieces.append((cur, min(a, grid.J)))
        cur = max(cur, b)
        if cur > grid.J:
            break
    if cur <= grid.J:
        pieces.append((cur, grid.J))
    pieces = [(a, b) for a, b in pieces if a <= b and a <= grid.J and b >= -grid.J]
    raw = np.array(pieces, dtype=float).reshape(-1, 2) / n2
    return normalize(raw, error=2.0 / n2)


# ---------------------------------------------------------------- compspec


@dataclass(frozen=True, eq=False)
class CompspecResult:
    cover: IntervalCover
    points: np.ndarray
    values: np.ndarray
    delta_star: float
    grid: np.ndarray
    phi: np.ndarray
    accept_factor: float

    @property
    def max_error(self) -> float:
        return self.delta_star


def _descend(phi: np.ndarray, radius_steps: Optional[np.ndarray] = None) -> np.ndarray:
    """Endpoint of the steepest-descent walk from every grid index.

    On a 1D grid a descent walk never turns around, so its path is a run of
    consecutive indices; with ``radius_steps`` the walk stops at the last
    index within that many steps of its start.
    """
    n = len(phi)
    idx = np.arange(n)
    left = np.r_[np.inf, phi[:-1]]
    right = np.r_[phi[1:], np.inf]
    step = np.where((left < phi) & (left <= right), -1, np.where(right < phi, 1, 0))
    nxt = idx + step
    # pointer jumping until every walk has reached a fixed point
    while True:
        new = nxt[nxt]
        if np.array_equal(new, nxt):
            break
        nxt = new
    if radius_steps is None:
        return nxt
    move = nxt - idx
    return idx + np.sign(move) * np.minimum(np.abs(move), radius_steps)


def compspec(
    field: DistanceField,
    grid_spacing: float,
    window: tuple[float, float],
    accept_factor: float = 2.0,
    threads: int = 1,
) -> CompspecResult:
    """Local minimizers of Phi on a grid, kept when Phi <= accept_factor * spacing.

    Each grid point starts a steepest-descent walk over grid neighbours that
    stays inside the ball of radius Phi(start); inside continuous spectrum the
    walks barely move, so the whole band is reported, while walks started in a
    gap run to its edge.
    """
    if not grid_spacing > 0:
        raise ValueError("grid spacing must be positive")
    a, b = float(window[0]), float(window[1])
    if a > b:
        raise ValueError("window must have lo <= hi")
    m = int(math.floor((b - a) / grid_spacing + 1e-9))
    grid = a + grid_spacing * np.arange(m + 1)
    phi = phi_values(field, grid, threads)
    radius = np.floor(phi / grid_spacing + 1e-9).astype(np.int64)
    minima = np.unique(_descend(phi, radius))
    acc = minima[phi[minima] <= accept_factor * grid_spacing]
    pts, vals = grid[acc], phi[acc]
    if len(acc):
        cover = normalize(np.c_[pts - vals, pts + vals], error=float(2 * vals.max()))
        dstar = float(vals.max())
    else:
        cover, dstar = IntervalCover.empty(), 0.0
    return CompspecResult(cover, pts, vals, dstar, grid, phi, accept_factor)


# ------------------------------------------------------------------ inertia


def _negative_count_dense(A: np.ndarray) -> tuple[int, bool]:
    _, D, _ = sla.ldl(A, lower=True)
    neg = 0
    singular = False
    i, n = 0, len(D)
    while i < n:
        if i + 1 < n and D[i + 1, i] != 0:
            ev = np.linalg.eigvalsh(D[i : i + 2, i : i + 2])
            i += 2
        else:
            ev = np.array([D[i, i]])
            i += 1
        neg += int(np.sum(ev < 0))
        singular |= bool(np.any(ev == 0))
    return neg, singular


SPARSE_GROWTH_LIMIT = 1e8
DENSE_INERTIA_LIMIT = 3000


def _negative_count_sparse(A: sps.csc_matrix) -> tuple[int, bool]:
    from scipy.sparse.csgraph import reverse_cuthill_mckee

    perm = reverse_cuthill_mckee(A.tocsr(), symmetric_mode=True)
    B = A[perm][:, perm].tocsc()
    try:
        lu = spla.splu(B, permc_spec="NATURAL", diag_pivot_thresh=0.0, options={"SymmetricMode": True})
    except RuntimeError:
        return 0, True
    if not np.array_equal(lu.perm_r, np.arange(B.shape[0])):
        return 0, True
    # without pivoting a tiny pivot can flip signs downstream; large element
    # growth is the symptom, and is treated like a singular shift
    scale = max(abs(B).max(), 1e-300)
    if abs(lu.U).max() > SPARSE_GROWTH_LIMIT * scale or abs(lu.L).max() > SPARSE_GROWTH_LIMIT:
        return 0, True
    d = lu.U.diagonal()
    return int(np.sum(d < 0)), bool(np.any(d == 0))


def count_eigs_below(matrix, E: float, method: str = "auto", retries: int = 3) -> int:
    """Number of eigenvalues < E from the inertia of a factorization of A - E."""
    A = sps.csc_matrix(matrix, dtype=float) if sps.issparse(matrix) else np.asarray(matrix, dtype=float)
    n = A.shape[0]
    if method == "auto":
        method = "dense" if n <= DENSE_INERTIA_LIMIT else "sparse"
    shift = float(E)
    for _ in range(retries + 1):
        if method == "dense":
            dense = A.toarray() if sps.issparse(A) else A
            neg, singular = _negative_count_dense(dense - shift * np.eye(n))
        elif method == "sparse":
            neg, singular = _negative_count_sparse(sps.csc_matrix(A) - shift * sps.eye(n, format="csc"))
        else:
            raise ValueError(f"unknown inertia method {method!r}")
        if not singular:
            return neg
        shift += 1e-12 * (1 + abs(shift))
    if method == "sparse" and n <= DENSE_INERTIA_LIMIT:
        return count_eigs_below(A, E, "dense", retries)
    raise NumericalFailure(f"factorization stayed singular or unstable near E={E}")


# ------------------------------------------------------------------- files


def write_opmat(op: DispersionOperator, path, n_hint: Optional[int] = None) -> Path:
    """Header 'n_hint f_table c_table' then 1-based 'i j value' upper triplets."""
    n_hint = op.exact_columns if n_hint is None else n_hint
    f = ",".join(str(int(x)) for x in op.f_table[:n_hint])
    c = ",".join(f"{x:.17g}" for x in op.c_table[:n_hint])
    T = sps.triu(op.matrix).tocoo()
    lines = [f"{n_hint} {f} {c}"]
    lines += [f"{i + 1} {j + 1} {v:.17g}" for i, j, v in zip(T.row, T.col, T.data)]
    path = Path(path)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def read_opmat(path) -> DispersionOperator:
    text = Path(path).read_text(encoding="utf-8").split("\n")
    head = text[0].split()
    if len(head) != 3:
        raise ValueError("opmat header must be 'n_hint f_table c_table'")
    n_hint = int(head[0])
    f = np.array([int(x) for x in head[1].split(",")], dtype=np.int64)
    c = np.array([float(x) for x in head[2].split(",")])
    if len(f) != n_hint or len(c) != n_hint:
        raise ValueError("f and c tables must have n_hint entries")
    rows, cols, vals = [], [], []
    for line in text[1:]:
        if not line.strip():
            continue
        i, j, v = line.split()
        i, j = int(i) - 1, int(j) - 1
        rows.append(i)
        cols.append(j)
        vals.append(float(v))
        if i != j:
            rows.append(j)
            cols.append(i)
            vals.append(float(v))
    N = max(max(rows, default=0) + 1, int(f.max()))
    A = sps.coo_matrix((vals, (rows, cols)), shape=(N, N)).tocsr()
    # extend the tables to the full realization with the padded default
    f_full = np.r_[f, np.maximum(np.arange(n_hint + 2, N + 2), f[-1] if n_hint else 0)]
    c_full = np.r_[c, np.zeros(N - n_hint)]
    return DispersionOperator(A, f_full, c_full, n_hint, name=Path(path).stem)
