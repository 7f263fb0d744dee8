import numpy as np
import pytest
import scipy.linalg as sla
import scipy.sparse as sps
from hypothesis import given, strategies as st

from spectra.intervals import hausdorff_distance, normalize
from spectra.s2 import (
    DispersionOperator,
    DistanceField,
    compspec,
    count_eigs_below,
    diagonal_operator,
    drill_cover,
    free_laplacian_z,
    phi_eval,
    phi_values,
    read_opmat,
    sigma_inf_rect,
    write_opmat,
)


def random_operator(n, seed, density=0.08, bandwidth=None):
    rng = np.random.default_rng(seed)
    A = sps.random(n, n, density=density, random_state=rng, data_rvs=rng.standard_normal)
    if bandwidth is not None:
        A = sps.triu(sps.tril(A, bandwidth), -bandwidth)
    A = (A + A.T).tocsr()
    return DispersionOperator.from_matrix(A, exact_columns=n // 2)


def _dense_sigma(op, z, n):
    R = op.rect(n).toarray()
    R[:n, :n] -= z * np.eye(n)
    return sla.svdvals(R)[-1]


def test_operator_validation():
    with pytest.raises(ValueError):
        DispersionOperator(sps.csr_matrix(np.array([[0.0, 1.0], [0.0, 0.0]])), [2, 3], [0, 0], 2)
    with pytest.raises(ValueError):
        DispersionOperator(sps.eye(3, format="csr"), [1, 3, 4], [0, 0, 0], 3)
    with pytest.raises(ValueError):
        DispersionOperator(sps.eye(3, format="csr"), [2, 3, 4], [0, -1, 0], 3)
    op = diagonal_operator([1.0, 2.0], 4)
    with pytest.raises(ValueError):
        op.rect(5)
    assert op.entry(4, 4) == 2.0 and op.column_support(1).tolist() == [1]


def test_sigma_examples():
    op = DispersionOperator.from_matrix(sps.diags([3.0, 1.0, 4.0, 0.0]), exact_columns=3)
    assert sigma_inf_rect(op, 1.0, 3) == pytest.approx(0.0, abs=1e-12)
    zero = DispersionOperator.from_matrix(sps.csr_matrix((5, 5)))
    for n in (1, 3, 5):
        assert sigma_inf_rect(zero, 2.0, n) == pytest.approx(2.0)


@pytest.mark.parametrize("seed", range(5))
def test_sigma_paths_match_dense_svd(seed):
    op = random_operator(100, seed)
    z = np.random.default_rng(seed).uniform(-3, 3)
    ref = _dense_sigma(op, z, 50)
    for method in ("dense", "sparse", "embedding"):
        assert sigma_inf_rect(op, z, 50, method) == pytest.approx(ref, abs=1e-10)


@given(st.integers(0, 10**6), st.integers(4, 60), st.floats(-3, 3))
def test_embedding_matches_sparse(seed, n, z):
    op = random_operator(2 * n + 4, seed, density=0.1)
    a = sigma_inf_rect(op, z, n, "sparse")
    b = sigma_inf_rect(op, z, n, "embedding")
    assert abs(a - b) <= 1e-9


@given(st.integers(0, 10**6), st.floats(-3, 3))
def test_injection_modulus_decreases_with_domain(seed, z):
    op = random_operator(80, seed, density=0.1)
    s = [sigma_inf_rect(op, z, n, "dense") for n in range(1, 41)]
    assert all(b <= a + 1e-12 for a, b in zip(s, s[1:]))


def test_phi_diagonal_example():
    op = diagonal_operator([0.0, 1.0], 50)
    for n in (2, 10, 40):
        assert phi_eval(DistanceField(op, n), 0.5) == pytest.approx(0.5 + 1e-8, abs=1e-13)


def test_phi_upper_bound_on_diagonal_grid():
    pts = np.array([-1.0, 0.0, 0.3, 1.0])
    op = diagonal_operator(np.r_[pts, 0.3], 40)
    zs = np.linspace(-2, 2, 1000)
    dist = np.min(np.abs(zs[:, None] - pts[None, :]), axis=1)
    prev = None
    for n in (2, 3, 4, 20):
        phi = phi_values(DistanceField(op, n), zs)
        assert np.all(phi >= dist)
        if prev is not None:
            assert np.all(phi <= prev + 1e-15)
        prev = phi
    assert np.max(prev - dist) <= 1e-8 + 1e-12


def test_phi_free_laplacian_far_point():
    op = free_laplacian_z(801)
    vals = []
    for n in (100, 200, 400):
        f = DistanceField(op, n)
        v = phi_eval(f, 5.0)
        assert v >= 3.0
        vals.append(v)
    assert vals[0] > vals[1] > vals[2]
    assert vals[2] - 3.0 < 1e-4
    dense = DistanceField(op, 200, method="dense")
    assert phi_eval(dense, 5.0) == pytest.approx(vals[1], abs=1e-10)


def test_phi_rejects_nonfinite():
    with pytest.raises(ValueError):
        phi_eval(DistanceField(diagonal_operator([0.0], 4), 2), float("nan"))


@pytest.mark.parametrize("n2", [5, 10, 50])
def test_drill_cover_diagonal_sandwich(n2):
    op = diagonal_operator([0.0, 1.0], 64)
    c = drill_cover(DistanceField(op, 32), n2)
    assert c.contains([0.0, 1.0]).all()
    assert c.issubset(normalize([(-2 / n2, 2 / n2), (1 - 2 / n2, 1 + 2 / n2)]))
    assert c.error == pytest.approx(2 / n2)


def test_drill_cover_point_set_property():
    rng = np.random.default_rng(3)
    pts = np.round(rng.uniform(-2, 2, 20), 3)
    op = diagonal_operator(np.r_[pts, pts[-1]], 64)
    for n2 in (5, 10, 50):
        c = drill_cover(DistanceField(op, 30), n2)
        assert c.contains(pts).all()
        grid = np.concatenate([np.linspace(a, b, 50) for a, b in c.bounds])
        d = np.min(np.abs(grid[:, None] - pts[None, :]), axis=1)
        assert d.max() <= 2 / n2 + 1e-12


@given(st.lists(st.integers(-300, 300), min_size=1, max_size=12), st.sampled_from([3, 5, 10, 50]))
def test_drill_sandwich_random_spectra(nums, n2):
    pts = np.unique(np.array(nums) / 100.0)
    op = diagonal_operator(np.r_[pts, pts[-1]], 4 * len(pts) + 8)
    c = drill_cover(DistanceField(op, 2 * len(pts) + 2), n2)
    assert c.contains(pts).all()
    assert hausdorff_distance(c, normalize([(x, x) for x in pts])) <= 2 / n2 + 1e-12


def test_drill_cover_free_laplacian():
    # the window half-width is 8; Phi itself comes from a long truncation
    op = free_laplacian_z(801)
    c = drill_cover(DistanceField(op, 400), 5, R=8)
    assert normalize([(-2, 2)]).issubset(c)
    assert c.issubset(normalize([(-2.4, 2.4)]))


def test_compspec_diagonal_clusters():
    op = diagonal_operator([0.0, 1.0], 40)
    res = compspec(DistanceField(op, 20), 0.01, (-0.5, 1.5))
    assert res.delta_star <= 0.02
    assert np.allclose(res.points, [0.0, 1.0], atol=1e-9)
    assert res.cover.contains([0.0, 1.0]).all()


def test_compspec_free_laplacian():
    op = free_laplacian_z(801)
    res = compspec(DistanceField(op, 400), 0.05, (-3, 3))
    assert hausdorff_distance(res.cover, normalize([(-2, 2)])) <= 0.1
    assert res.cover.error == pytest.approx(2 * res.delta_star)


def test_compspec_empty_window():
    op = diagonal_operator([0.0], 10)
    res = compspec(DistanceField(op, 5), 0.01, (2.0, 3.0))
    assert res.cover.is_empty and len(res.points) == 0


def test_count_eigs_examples():
    assert count_eigs_below(np.diag([1.0, 2.0, 3.0]), 2.5) == 2
    L = np.diag([1.0, 2, 2, 2, 1]) - np.eye(5, k=1) - np.eye(5, k=-1)
    assert count_eigs_below(L, 0.05) == 1
    assert count_eigs_below(L, -1.0) == 0
    # a shift sitting on an eigenvalue is nudged upward, so that eigenvalue counts
    assert count_eigs_below(np.diag([1.0, 2.0, 3.0]), 2.0) == 2


@given(st.integers(0, 10**6), st.integers(2, 200), st.floats(-4, 4))
def test_count_eigs_matches_dense(seed, n, E):
    op = random_operator(n, seed, density=min(1.0, 6 / n), bandwidth=8)
    A = op.matrix
    ev = np.linalg.eigvalsh(A.toarray())
    if np.min(np.abs(ev - E)) < 1e-9:
        return
    expected = int(np.sum(ev < E))
    assert count_eigs_below(A, E, "dense") == expected
    assert count_eigs_below(A, E, "sparse") == expected
    assert count_eigs_below(A, E - 1.0) <= expected


def test_opmat_round_trip(tmp_path):
    op = free_laplacian_z(21, potential=lambda s: 0.5 * (s % 3))
    p = write_opmat(op, tmp_path / "lap.opmat")
    back = read_opmat(p)
    assert (back.matrix != op.matrix).nnz == 0
    assert np.array_equal(back.f_table[: op.exact_columns], op.f_table[: op.exact_columns])
    assert back.exact_columns == op.exact_columns
    assert phi_eval(DistanceField(back, 10), 4.0) == pytest.approx(phi_eval(DistanceField(op, 10), 4.0))
