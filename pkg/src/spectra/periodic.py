"""Band spectra of periodic discrete Schrodinger operators on the integers.

The operator is (H psi)(n) = psi(n+1) + psi(n-1) + V(n) psi(n) with V of
period q.  Its spectrum is the union of q bands whose edges are the
eigenvalues of the q x q Bloch matrices at phase 0 (periodic) and phase pi
(antiperiodic).

For large q the Bloch matrices are reduced with a reflection symmetry of V
when one exists: the even and odd parts are tridiagonal, so all eigenvalues
come from the tridiagonal QR kernel in O(q^2) with no eigenvectors.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Optional, Sequence

import mpmath
import numpy as np
import scipy.linalg as sla
import scipy.sparse as sps

from .errors import NumericalFailure
from .intervals import IntervalCover, inflate, minkowski_sum, normalize

__all__ = [
    "PeriodicPotential",
    "BandSpectrum",
    "AmoParams",
    "FibonacciParams",
    "band_spectrum",
    "bloch_eigenvalues",
    "reflection_center",
    "amo_potential",
    "amo_union_spectrum",
    "amo_cover",
    "amo_error_bound",
    "golden_convergents",
    "cahen_convergents",
    "convergents",
    "fibonacci",
    "fibonacci_potential",
    "fibonacci_band_spectrum",
    "suto_cover",
    "fibonacci_d_cover",
    "DEFAULT_CONTINUITY_CONSTANT",
]

DEFAULT_CONTINUITY_CONSTANT = 6.0
DENSE_MAX_Q = 256


@dataclass(frozen=True, eq=False)
class PeriodicPotential:
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float).ravel()
        if v.size < 1:
            raise ValueError("a periodic potential needs at least one sample")
        if not np.all(np.isfinite(v)):
            raise ValueError("potential values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def q(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True, eq=False)
class BandSpectrum:
    """The q bands plus the sorted periodic (mu) and antiperiodic (nu) eigenvalues."""

    bands: np.ndarray
    mu: np.ndarray
    nu: np.ndarray

    @property
    def q(self) -> int:
        return len(self.bands)

    def cover(self, merge_tol: float = 0.0) -> IntervalCover:
        return normalize(self.bands, merge_tol=merge_tol)

    @property
    def max_band_length(self) -> float:
        return float(np.max(self.bands[:, 1] - self.bands[:, 0]))


@dataclass(frozen=True)
class AmoParams:
    lam: float
    p: int
    q: int
    theta: float = 0.0

    def __post_init__(self):
        if self.q < 1:
            raise ValueError("q must be positive")
        if math.gcd(abs(self.p), self.q) != 1:
            raise ValueError(f"p/q = {self.p}/{self.q} is not in lowest terms")
        if not self.lam >= 0:
            raise ValueError("coupling must be nonnegative")


@dataclass(frozen=True)
class FibonacciParams:
    lam: float
    k: int

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("Fibonacci coupling must be positive")
        if self.k < 1:
            raise ValueError("approximant level must be >= 1")

    @property
    def period(self) -> int:
        return fibonacci(self.k)


# ---------------------------------------------------------------- eigenvalues


def _lift(m: np.ndarray, q: int, sign: int):
    """Representative site and Bloch sign of integer sites m."""
    wraps = np.floor_divide(m, q)
    s = np.where(wraps % 2 == 0, 1, sign) if sign == -1 else np.ones_like(m)
    return np.mod(m, q), s


def _bloch_sparse(v: np.ndarray, sign: int) -> sps.csr_matrix:
    q = len(v)
    n = np.arange(q)
    r, s = _lift(n + 1, q, sign)
    rows = np.r_[n, r]
    cols = np.r_[r, n]
    vals = np.r_[s, s].astype(float)
    H = sps.coo_matrix((vals, (rows, cols)), shape=(q, q)).tocsr()
    return (H + sps.diags(v)).tocsr()


def _bloch_dense(v: np.ndarray, sign: int) -> np.ndarray:
    return _bloch_sparse(v, sign).toarray()


def reflection_center(values, hint: Optional[int] = None) -> Optional[int]:
    """Integer c with V(c - n) = V(n) for all n (indices mod q), or None.

    Candidates come from the circular self-convolution, which reaches its
    Cauchy-Schwarz maximum exactly at symmetry centers; each candidate is then
    checked by exact comparison.
    """
    v = np.asarray(values, dtype=float)
    q = len(v)
    n = np.arange(q)

    def ok(c):
        return np.array_equal(v[np.mod(c - n, q)], v)

    if hint is not None and ok(hint % q):
        return int(hint % q)
    w = v - v.mean()
    norm = float(w @ w)
    if norm == 0.0:
        return 0
    conv = np.fft.irfft(np.fft.rfft(w) ** 2, n=q)
    cand = np.flatnonzero(conv >= norm * (1 - 1e-8))
    for c in cand[np.argsort(-conv[cand])]:
        if ok(int(c)):
            return int(c)
    return None


def _symmetric_blocks(v: np.ndarray, sign: int, c: int):
    """Tridiagonal even/odd blocks of the Bloch matrix under n -> c - n."""
    q = len(v)
    n = np.arange(q)
    r, s = _lift(c - n, q, sign)
    # order orbits by cycle distance from the reflection axis at c/2
    t = np.mod(2 * n - c, 2 * q)
    key = np.minimum(t, 2 * q - t)
    rows_e, cols_e, vals_e = [], [], []
    rows_o, cols_o, vals_o = [], [], []
    ne = no = 0
    h = 1.0 / math.sqrt(2.0)
    for i in np.lexsort((n, key)):
        j, sj = int(r[i]), int(s[i])
        if j == i:
            if sj == 1:
                rows_e.append(i); cols_e.append(ne); vals_e.append(1.0); ne += 1
            else:
                rows_o.append(i); cols_o.append(no); vals_o.append(1.0); no += 1
        elif i < j:
            rows_e += [i, j]; cols_e += [ne, ne]; vals_e += [sj * h, h]; ne += 1
            rows_o += [i, j]; cols_o += [no, no]; vals_o += [sj * h, -h]; no += 1
    H = _bloch_sparse(v, sign)
    out = []
    for rows, cols, vals, m in ((rows_e, cols_e, vals_e, ne), (rows_o, cols_o, vals_o, no)):
        if m == 0:
            continue
        Q = sps.csc_matrix((vals, (rows, cols)), shape=(q, m))
        B = (Q.T @ H @ Q).tocoo()
        off = np.abs(B.row - B.col) > 1
        if np.any(np.abs(B.data[off]) > 1e-12):
            raise NumericalFailure("symmetry-reduced Bloch block is not tridiagonal")
        B = B.tocsr()
        out.append((B.diagonal().copy(), B.diagonal(1).copy()))
    if ne + no != q:
        raise NumericalFailure("reflection orbits do not partition the period")
    return out


def _zigzag_banded(v: np.ndarray, sign: int) -> np.ndarray:
    """Lower banded storage (bandwidth 2) of the Bloch matrix in zigzag order."""
    q = len(v)
    perm = np.empty(q, dtype=int)
    perm[0::2] = np.arange((q + 1) // 2)
    perm[1::2] = q - 1 - np.arange(q // 2)
    pos = np.empty(q, dtype=int)
    pos[perm] = np.arange(q)
    ab = np.zeros((3, q))
    ab[0] = v[perm]
    for a in range(q):
        b = (a + 1) % q
        w = float(sign) if b == 0 else 1.0
        pa, pb = sorted((pos[a], pos[b]))
        ab[pb - pa, pa] += w
    return ab


def bloch_eigenvalues(values, sign: int, method: str = "auto", center: Optional[int] = None) -> np.ndarray:
    """Sorted eigenvalues of the Bloch matrix at phase 0 (sign=+1) or pi (sign=-1).

    ``method`` is one of "dense", "symmetric", "banded" or "auto".
    """
    v = np.asarray(values, dtype=float)
    q = len(v)
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    if method == "auto":
        if q <= DENSE_MAX_Q:
            method = "dense"
        else:
            center = reflection_center(v, hint=center)
            method = "symmetric" if center is not None else "banded"
    try:
        if method == "dense":
            ev = sla.eigvalsh(_bloch_dense(v, sign))
        elif method == "symmetric":
            if center is None:
                center = reflection_center(v)
                if center is None:
                    raise ValueError("potential has no reflection symmetry")
            parts = [
                sla.eigvalsh_tridiagonal(d, e, lapack_driver="sterf") if len(d) > 1 else d
                for d, e in _symmetric_blocks(v, sign, center)
            ]
            ev = np.sort(np.concatenate(parts))
        elif method == "banded" and q < 3:
            ev = sla.eigvalsh(_bloch_dense(v, sign))
        elif method == "banded":
            ev = sla.eig_banded(_zigzag_banded(v, sign), lower=True, eigvals_only=True)
            ev = np.sort(ev)
        else:
            raise ValueError(f"unknown eigensolver method {method!r}")
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"Bloch eigensolver failed at q={q}: {exc}") from exc
    if len(ev) != q or not np.all(np.isfinite(ev)):
        raise NumericalFailure(f"Bloch eigensolver returned {len(ev)} values for q={q}")
    return ev


def band_spectrum(V, method: str = "auto", center: Optional[int] = None) -> BandSpectrum:
    if not isinstance(V, PeriodicPotential):
        V = PeriodicPotential(V)
    v = V.values
    if method == "auto" and V.q > DENSE_MAX_Q and center is None:
        center = reflection_center(v)
    mu = bloch_eigenvalues(v, 1, method, center)
    nu = bloch_eigenvalues(v, -1, method, center)
    bands = np.c_[np.minimum(mu, nu), np.maximum(mu, nu)]
    return BandSpectrum(bands, mu, nu)


# ------------------------------------------------------------ almost Mathieu


def amo_potential(lam: float, p: int, q: int, theta: float | str = 0.0) -> np.ndarray:
    """Samples 2*lam*cos(2*pi*n*p/q + theta), n = 0..q-1.

    ``theta`` may be the strings "0" or "pi/q"; these use exact index
    reduction so the reflection symmetry of the samples holds bit for bit.
    """
    AmoParams(abs(lam), p, q)
    n = np.arange(q, dtype=np.int64)
    if theta == "0" or (not isinstance(theta, str) and theta == 0.0):
        m = np.mod(n * p, q)
        m = np.minimum(m, q - m)
        return 2 * lam * np.cos(2 * np.pi * m / q)
    if theta == "pi/q":
        u = np.mod(2 * n * p + 1, 2 * q)
        u = np.minimum(u, 2 * q - u)
        return 2 * lam * np.cos(np.pi * u / q)
    if isinstance(theta, str):
        raise ValueError(f"unknown symbolic phase {theta!r}")
    return 2 * lam * np.cos(2 * np.pi * np.mod(n * p, q) / q + theta)


def amo_union_spectrum(lam: float, p: int, q: int, method: str = "auto") -> IntervalCover:
    """Union over all phases of the spectra at frequency p/q.

    For 0 < lam <= 1 the phases 0 and pi/q already give the whole union; for
    lam > 1 the set is lam times the union at 1/lam (Aubry duality).  The
    union depends on |lam| only.
    """
    AmoParams(abs(lam), p, q)
    lam = abs(float(lam))
    if lam == 0:
        return normalize([(-2.0, 2.0)])
    if lam > 1:
        return amo_union_spectrum(1.0 / lam, p, q, method).affine(lam)
    covers = []
    for theta, center in (("0", 0), ("pi/q", (-pow(p, -1, q)) % q if q > 1 else 0)):
        V = amo_potential(lam, p, q, theta)
        covers.append(band_spectrum(V, method, center=center if method == "auto" and q > DENSE_MAX_Q else None).cover())
    return normalize(np.vstack([c.bounds for c in covers]))


# ------------------------------------------------------------- convergents


def _cf_convergents(terms: Sequence[int]) -> list[tuple[int, int]]:
    out = []
    p0, q0, p1, q1 = 0, 1, 1, 0
    for a in terms:
        p0, q0, p1, q1 = p1, q1, a * p1 + p0, a * q1 + q0
        out.append((p1, q1))
    return out


def _cf_terms(x: Fraction) -> list[int]:
    terms = []
    while True:
        a = x.numerator // x.denominator
        terms.append(a)
        x = x - a
        if x == 0:
            return terms
        x = 1 / x


def fibonacci(k: int) -> int:
    """F_k with F_0 = F_1 = 1."""
    if k < 0:
        raise ValueError("Fibonacci index must be nonnegative")
    a, b = 1, 1
    for _ in range(k):
        a, b = b, a + b
    return a


def golden_convergents(q_max: int) -> list[tuple[int, int]]:
    """Convergents F_{k-1}/F_k of (sqrt 5 - 1)/2 with F_k <= q_max, k >= 1."""
    out = []
    k = 1
    while fibonacci(k) <= q_max:
        out.append((fibonacci(k - 1), fibonacci(k)))
        k += 1
    return out


@lru_cache(maxsize=None)
def _cahen_partial(terms: int) -> Fraction:
    s, total = 2, Fraction(0)
    for i in range(terms):
        total += Fraction((-1) ** i, s - 1)
        s = s * s - s + 1
    return total


def cahen_convergents(q_max: int) -> list[tuple[int, int]]:
    """Convergents of Cahen's constant, from Sylvester-sequence partial sums.

    Consecutive partial sums bracket the constant, so the common prefix of
    their continued fractions consists of true partial quotients.
    """
    j = 4
    while True:
        a, b = _cf_terms(_cahen_partial(j)), _cf_terms(_cahen_partial(j + 1))
        common = []
        for x, y in zip(a, b):
            if x != y:
                break
            common.append(x)
        # drop the last shared term, which may still be a truncated quotient
        conv = _cf_convergents(common[:-1])
        conv = [(p, q) for p, q in conv if q >= 1]
        if conv and conv[-1][1] > q_max:
            return [(p, q) for p, q in conv if q <= q_max]
        j += 1


def _alpha_mp(alpha, dps: int):
    with mpmath.workdps(dps):
        if alpha == "golden":
            return (mpmath.sqrt(5) - 1) / 2
        if alpha == "cahen":
            j = 4
            while True:
                # the tail after j terms is below 1/(s_j - 1), doubly exponentially small
                s = 2
                for _ in range(j):
                    s = s * s - s + 1
                if mpmath.log10(s) > dps + 5:
                    break
                j += 1
            x = _cahen_partial(j)
            return mpmath.mpf(x.numerator) / x.denominator
    raise ValueError(f"unknown symbolic frequency {alpha!r}")


def convergents(alpha, q_max: int) -> list[tuple[int, int]]:
    """Convergent list for a symbolic alpha ('golden', 'cahen') or an explicit list."""
    if alpha == "golden":
        return golden_convergents(q_max)
    if alpha == "cahen":
        return cahen_convergents(q_max)
    if isinstance(alpha, dict):
        alpha = alpha.get("convergents")
    conv = [(int(p), int(q)) for p, q in alpha]
    for p, q in conv:
        if q < 1 or math.gcd(abs(p), q) != 1:
            raise ValueError(f"invalid convergent {p}/{q}")
    return [(p, q) for p, q in conv if q <= q_max]


def frequency_gap(alpha, p: int, q: int, next_q: Optional[int] = None) -> float:
    """Upper bound on |alpha - p/q| (rounded up to double precision).

    Symbolic alphas are evaluated in high-precision arithmetic; for an explicit
    convergent list the classical bound 1/(q * q_next) is used.
    """
    if alpha in ("golden", "cahen"):
        dps = 40 + 2 * len(str(q))
        with mpmath.workdps(dps):
            gap = abs(_alpha_mp(alpha, dps) - mpmath.mpf(p) / q)
            return math.nextafter(float(gap), math.inf)
    if next_q is None:
        raise ValueError("an explicit convergent list needs a successor to bound |alpha - p/q|")
    return math.nextafter(1.0 / (q * next_q), math.inf)


def amo_error_bound(lam: float, gap: float, c: float = DEFAULT_CONTINUITY_CONSTANT) -> float:
    return c * math.sqrt(abs(lam) * gap)


def amo_cover(
    lam: float,
    alpha="golden",
    tol: float = 1e-3,
    c: float = DEFAULT_CONTINUITY_CONSTANT,
    q_max: int = 10**6,
    method: str = "auto",
) -> IntervalCover:
    """Certified cover of the phase-union spectrum at irrational frequency alpha.

    Uses the first convergent p/q whose continuity bound c*sqrt(lam*|alpha-p/q|)
    is at most ``tol`` and inflates the rational spectrum by that bound.
    """
    if not tol > 0:
        raise ValueError("tolerance must be positive")
    if not lam >= 0:
        raise ValueError("coupling must be nonnegative")
    if lam == 0:
        return normalize([(-2.0, 2.0)], error=0.0)
    p, q, bound = select_convergent(lam, alpha, tol, c, q_max)
    return inflate(amo_union_spectrum(lam, p, q, method), bound)


def select_convergent(lam, alpha, tol, c=DEFAULT_CONTINUITY_CONSTANT, q_max=10**6):
    """(p, q, bound) for the first convergent meeting the tolerance."""
    symbolic = alpha in ("golden", "cahen")
    conv = convergents(alpha, q_max if not symbolic else 10 * q_max + 10)
    for i, (p, q) in enumerate(conv):
        if q > q_max:
            break
        nxt = conv[i + 1][1] if i + 1 < len(conv) else None
        if not symbolic and nxt is None:
            break
        bound = amo_error_bound(lam, frequency_gap(alpha, p, q, nxt), c)
        if bound <= tol:
            return p, q, bound
    raise ValueError(f"tolerance {tol} needs a convergent denominator above q_max={q_max}")


# ---------------------------------------------------------------- Fibonacci


def fibonacci_potential(lam: float, k: int) -> np.ndarray:
    """lam * [ (n F_{k-1} mod F_k) >= F_{k-2} ] for n = 0..F_k - 1, in integers."""
    FibonacciParams(lam, k)
    Fk, Fk1 = fibonacci(k), fibonacci(k - 1)
    thresh = Fk - Fk1
    n = np.arange(Fk, dtype=np.int64)
    return np.where(np.mod(n * Fk1, Fk) >= thresh, float(lam), 0.0)


def fibonacci_band_spectrum(params: FibonacciParams, method: str = "auto") -> BandSpectrum:
    return band_spectrum(fibonacci_potential(params.lam, params.k), method)


@lru_cache(maxsize=64)
def _fib_bands(lam: float, k: int, method: str) -> BandSpectrum:
    return fibonacci_band_spectrum(FibonacciParams(lam, k), method)


def suto_cover(lam: float, k: int, method: str = "auto") -> IntervalCover:
    """sigma_k U sigma_{k+1} with certificate the largest band length of both levels."""
    a, b = _fib_bands(float(lam), k, method), _fib_bands(float(lam), k + 1, method)
    ell = max(a.max_band_length, b.max_band_length)
    return normalize(np.vstack([a.bands, b.bands]), error=ell)


def fibonacci_d_cover(lam: float, k: int, d: int, method: str = "auto") -> IntervalCover:
    """d-fold sumset of the Suto cover; certificate d times the 1D one."""
    if d not in (1, 2, 3):
        raise ValueError("dimension must be 1, 2 or 3")
    base = suto_cover(lam, k, method)
    out = base
    for _ in range(d - 1):
        out = minkowski_sum(out, base)
    return out
