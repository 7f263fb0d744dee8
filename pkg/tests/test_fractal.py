import csv
import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from spectra.fractal import (
    DyadicCostTable,
    ScalingSeries,
    ScalingSeriesError,
    auto_fit_window,
    cantor_cover,
    fit_box_dimension,
    hausdorff_cost,
    hausdorff_dimension,
    hausdorff_table,
    scaling_series,
    write_scaling,
)
from spectra.intervals import inflate, measure, normalize

from conftest import unit_covers
from oracles import brute_dyadic_cost

LOG23 = math.log(2) / math.log(3)


def unit_interval(k):
    return normalize([(0.0, 1.0)], error=0.0)


def test_scaling_series_unit_interval():
    s = scaling_series(unit_interval, 2.0 ** -np.arange(1, 11), trials=20, seed=1)
    k = np.arange(1, 11)
    assert np.all(np.abs(s.counts - 2.0**k) <= 1.0)
    assert s.complete and s.trials == 20 and len(s.cover_ids) == 10
    fit = fit_box_dimension(s)
    assert fit.slope == pytest.approx(1.0, abs=0.01)


def test_scaling_series_cantor_exact_counts():
    deltas = 3.0 ** -np.arange(1, 11)
    s = scaling_series(lambda dl: cantor_cover(10), deltas, trials=1, seed=0)
    fit = fit_box_dimension(s)
    assert fit.slope == pytest.approx(LOG23, abs=0.01)
    # the log-ratio brackets carry an O(1/k) offset from the mesh constant
    assert LOG23 <= fit.lower <= fit.upper
    assert fit.lower - LOG23 < 0.07


def test_scaling_series_point_cover():
    pt = normalize([(0.3, 0.3)], error=0.0)
    s = scaling_series(lambda dl: pt, 2.0 ** -np.arange(1, 9), trials=10, seed=0)
    assert fit_box_dimension(s).slope == pytest.approx(0.0, abs=0.01)


def test_scaling_series_rejects_uncertified_cover():
    def provider(delta):
        if delta < 0.1:
            return normalize([(0, 1)], error=1.0)
        return normalize([(0, 1)], error=0.0)

    with pytest.raises(ScalingSeriesError) as exc:
        scaling_series(provider, 2.0 ** -np.arange(1, 6), trials=3)
    part = exc.value.partial
    assert not part.complete and len(part) == 3


def test_scaling_series_records_provider_ids():
    s = scaling_series(lambda dl: ("q%d" % round(-math.log2(dl)), unit_interval(0)), [0.5, 0.25, 0.125], trials=2)
    assert s.cover_ids == ["q1", "q2", "q3"]


def test_series_validation():
    with pytest.raises(ValueError):
        ScalingSeries([0.1, 0.2], [1, 2], [0, 0], 1, [0, 0], [0, 0])
    s = scaling_series(unit_interval, [0.5, 0.25], trials=2)
    with pytest.raises(ValueError):
        fit_box_dimension(s)


def test_offset_averaging_is_seed_stable():
    deltas = 2.0 ** -np.arange(3, 14)
    slopes = []
    for seed in (0, 1, 2):
        s = scaling_series(lambda dl: cantor_cover(12), deltas, trials=100, seed=seed)
        assert np.all(s.stds >= 0) and np.any(s.stds > 0)
        slopes.append(fit_box_dimension(s, (0, len(deltas) - 1)).slope)
    assert max(slopes) - min(slopes) <= 0.01


def test_auto_window_is_longest_acceptable():
    s = scaling_series(unit_interval, 2.0 ** -np.arange(1, 12), trials=5, seed=3)
    lo, hi = auto_fit_window(s)
    assert hi - lo + 1 >= 3
    fit = fit_box_dimension(s)
    assert fit.window == (lo, hi) and fit.residual <= 0.005


def test_write_scaling(tmp_path):
    s = scaling_series(unit_interval, [0.5, 0.25, 0.125], trials=2, seed=0)
    p = write_scaling(s, tmp_path / "u.scaling")
    rows = list(csv.reader(p.open()))
    assert rows[0] == ["k", "delta", "mean_count", "std_count", "cover_id", "cover_error"]
    assert len(rows) == 4 and float(rows[2][1]) == 0.25


# ------------------------------------------------------------------ DP


def test_hausdorff_cost_examples():
    root = normalize([(0.0, 1.0)])
    for j, k in [(0, 0), (0, 5), (2, 6), (5, 5)]:
        assert hausdorff_cost(root, j, k, 1.0) == pytest.approx(1.0, rel=1e-14)
    for k in (1, 4, 8):
        assert hausdorff_cost(normalize([(0.0, 2.0**-k)]), 0, k, 0.0) == 1.0
    assert hausdorff_cost(normalize([]), 0, 3, 0.5) == 0.0


def test_hausdorff_cost_rejections():
    c = normalize([(0.2, 0.3)])
    with pytest.raises(ValueError):
        hausdorff_cost(c, 3, 2, 0.5)
    with pytest.raises(ValueError):
        hausdorff_cost(c, 0, 41, 0.5)
    with pytest.raises(ValueError):
        hausdorff_cost(c, 0, 3, 1.5)
    with pytest.raises(ValueError):
        hausdorff_cost(normalize([(0.5, 1.5)]), 0, 3, 0.5)


def test_hausdorff_cost_window_scaling():
    c = normalize([(2.0, 2.5), (3.0, 3.25)])
    v = hausdorff_cost(c, 1, 6, 0.5, window=(2.0, 4.0))
    u = hausdorff_cost(c.affine(0.5, -1.0), 1, 6, 0.5)
    assert v == pytest.approx(u * 2**0.5, rel=1e-14)


def test_cost_table_recursion():
    c = normalize([(0.1, 0.2), (0.55, 0.6)])
    t = hausdorff_cost(c, 1, 5, 0.5, keep_table=True)
    assert isinstance(t, DyadicCostTable)
    assert t.total == pytest.approx(hausdorff_cost(c, 1, 5, 0.5))
    for (lv, m), states in t.cost.items():
        own = 2.0 ** (-lv * 0.5)
        assert states[0] <= own + 1e-15
        assert min(states) == states[3] and max(states) == states[0]
        if lv == 5:
            assert states[0] == pytest.approx(own)


@given(unit_covers(max_size=4), st.integers(0, 6), st.integers(0, 6), st.sampled_from([0.25, 0.5, 0.75, 1.0]))
def test_dp_matches_exhaustive_search(c, j, k, d):
    j, k = min(j, k), max(j, k)
    assert hausdorff_cost(c, j, k, d) == pytest.approx(brute_dyadic_cost(c.bounds, j, k, d), rel=1e-13, abs=0)


@given(unit_covers(max_size=4), st.integers(1, 5), st.floats(0.05, 1.0))
def test_cost_monotone_in_levels_and_exponent(c, j, d):
    assume(not c.is_empty)
    k = 8
    vals_k = [hausdorff_cost(c, j, kk, d) for kk in range(j, k + 1)]
    assert all(b <= a * (1 + 1e-12) for a, b in zip(vals_k, vals_k[1:]))
    vals_j = [hausdorff_cost(c, jj, k, d) for jj in range(0, k + 1)]
    assert all(b >= a * (1 - 1e-12) for a, b in zip(vals_j, vals_j[1:]))
    assert hausdorff_cost(c, j, k, d * 0.9) > hausdorff_cost(c, j, k, d)


@given(unit_covers(max_size=4), st.integers(2, 8), st.sampled_from([0.25, 0.5, 0.75, 1.0]))
def test_certified_cover_within_factor_three(target, k, d):
    assume(not target.is_empty)
    r = 2.0**-k
    fat = normalize(np.clip(inflate(target, r).bounds, 0.0, 1.0))
    j = 1
    base = hausdorff_cost(target, j, k, d)
    got = hausdorff_cost(fat, j, k, d)
    assert base * (1 - 1e-12) <= got <= 3 * base * (1 + 1e-12)


def test_cantor_cost_bounded_at_critical_exponent():
    vals = [hausdorff_cost(cantor_cover(m), 0, k, LOG23) for m, k in [(4, 6), (6, 9), (8, 12), (10, 15)]]
    assert min(vals) > 0.2 and max(vals) < 5


def test_hausdorff_table_shape():
    covers = [cantor_cover(max(1, math.ceil(k * math.log(2) / math.log(3)))) for k in range(1, 7)]
    H = hausdorff_table(covers, 3, 0.5)
    assert H.shape == (3, 6)
    assert np.isinf(H[2, 0]) and np.isinf(H[2, 1]) and np.isfinite(H[2, 2])


# ------------------------------------------------------------ dimension


def cantor_provider(k):
    return cantor_cover(math.ceil(k * math.log(2) / math.log(3)))


def test_hausdorff_dimension_unit_interval():
    r = hausdorff_dimension(unit_interval, 4, 8)
    assert r.estimate == 1.0


def test_hausdorff_dimension_points():
    pts = lambda k: normalize([(0.25, 0.25), (0.5, 0.5)], error=0.0)
    assert hausdorff_dimension(pts, 4, 6).estimate == 0.0


def test_hausdorff_dimension_requires_certificates():
    with pytest.raises(ValueError):
        hausdorff_dimension(lambda k: normalize([(0, 1)], error=0.6), 3, 3)
    with pytest.raises(ValueError):
        hausdorff_dimension(lambda k: normalize([(0, 1)]), 3, 3)


def test_hausdorff_dimension_cantor():
    r = hausdorff_dimension(cantor_provider, 6, 12)
    assert abs(r.estimate - LOG23) <= 0.05
    assert r.d_grid[1] == 1 / 64
    # the estimate never exceeds the lower box estimate by more than 0.05
    s = scaling_series(lambda dl: cantor_cover(10), 3.0 ** -np.arange(1, 11), trials=1)
    assert r.estimate <= fit_box_dimension(s).lower + 0.05


def test_hausdorff_dimension_grows_with_n2():
    ests = [hausdorff_dimension(cantor_provider, n2, 10).estimate for n2 in (2, 3, 4)]
    assert ests[0] <= ests[1] + 1e-12 or ests[1] <= ests[2] + 1e-12
    assert all(0 <= e <= 1 for e in ests)


def test_cantor_cover_construction():
    c = cantor_cover(10)
    assert len(c) == 1024 and c.error == 3.0**-10
    assert measure(c) == pytest.approx((2 / 3) ** 10, rel=1e-12)
    assert c.bounds[0, 0] == 0.0 and c.bounds[-1, 1] == 1.0
