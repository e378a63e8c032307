import math

import numpy as np
import pytest

from mps_seqmodel.errors import ContractViolation
from mps_seqmodel.linalg import degenerate_pairs, descending_order, fix_signs, svd, sym_eig, two_by_two_eig


def test_sym_eig_worked_matrix():
    res = sym_eig([[2, 2], [2, 4]])
    assert res.eigenvalues == pytest.approx([3 + math.sqrt(5), 3 - math.sqrt(5)], abs=1e-12)
    assert res.eigenvalues[0] == pytest.approx(5.2361, abs=1e-4)


def test_sym_eig_diagonal_reorders_standard_basis():
    res = sym_eig(np.diag([0.3, 0.7]))
    assert res.eigenvalues.tolist() == pytest.approx([0.7, 0.3])
    np.testing.assert_allclose(res.eigenvectors, [[0, 1], [1, 0]], atol=1e-15)


def test_sym_eig_identity_gives_orthonormal_basis():
    res = sym_eig(np.eye(2))
    assert res.eigenvalues.tolist() == [1.0, 1.0]
    np.testing.assert_allclose(res.eigenvectors.T @ res.eigenvectors, np.eye(2), atol=1e-14)


def test_sym_eig_rejects_bad_input():
    with pytest.raises(ContractViolation):
        sym_eig(np.ones((2, 3)))
    with pytest.raises(ContractViolation):
        sym_eig([[1.0, 2.0], [0.0, 1.0]])


def test_sym_eig_sign_convention_largest_entry_positive():
    rng = np.random.default_rng(0)
    a = rng.standard_normal((6, 6))
    vecs = sym_eig(a + a.T).eigenvectors
    for col in vecs.T:
        assert col[np.argmax(np.abs(col))] > 0


def test_sym_eig_random_reconstruction():
    rng = np.random.default_rng(1)
    for _ in range(1000):
        a = rng.standard_normal((4, 4))
        a = a + a.T
        res = sym_eig(a)
        recon = res.eigenvectors @ np.diag(res.eigenvalues) @ res.eigenvectors.T
        assert np.max(np.abs(recon - a)) <= 1e-9
        assert np.all(np.diff(res.eigenvalues) <= 0)


def test_sym_eig_against_numpy():
    rng = np.random.default_rng(2)
    a = rng.standard_normal((12, 12))
    a = a @ a.T
    np.testing.assert_allclose(sym_eig(a).eigenvalues, np.linalg.eigvalsh(a)[::-1], rtol=1e-11)


def test_descending_order_keeps_lower_index_on_ties():
    assert descending_order([1.0, 3.0, 3.0, 2.0]) == [1, 2, 3, 0]
    assert degenerate_pairs([0.5, 0.5, 0.1]) == [(0, 1)]


def test_fix_signs_flips_columns():
    v = np.array([[-0.6, 0.8], [-0.8, 0.6]])
    out = fix_signs(v)
    assert out[1, 0] > 0 and out[0, 1] > 0


@pytest.mark.parametrize("m, sigma", [
    (np.diag([3.0, 4.0]), [4.0, 3.0]),
    (np.zeros((3, 2)), [0.0, 0.0]),
    (np.ones((2, 2)), [2.0, 0.0]),
])
def test_svd_examples(m, sigma):
    left, s, right = svd(m)
    np.testing.assert_allclose(s, sigma, atol=1e-12)
    np.testing.assert_allclose(left @ np.diag(s) @ right.T, m, atol=1e-12)
    np.testing.assert_allclose(left.T @ left, np.eye(s.size), atol=1e-12)
    np.testing.assert_allclose(right.T @ right, np.eye(s.size), atol=1e-12)


@pytest.mark.parametrize("shape", [(5, 3), (3, 5), (8, 8), (1, 4)])
def test_svd_random_shapes_match_eigenvalues_of_gram(shape):
    rng = np.random.default_rng(sum(shape))
    m = rng.standard_normal(shape)
    left, s, right = svd(m)
    assert np.max(np.abs(left @ np.diag(s) @ right.T - m)) <= 1e-10 * np.max(np.abs(m))
    lam = sym_eig(m.T @ m).eigenvalues[: s.size]
    np.testing.assert_allclose(s, np.sqrt(np.clip(lam, 0, None)), atol=1e-9)


def test_two_by_two_worked_example():
    r = two_by_two_eig(2, 4, 2, n_total=6)
    assert r.lam_plus == pytest.approx((6 + math.sqrt(20)) / 12, abs=1e-12)
    assert r.lam_plus == pytest.approx(0.87268, abs=1e-5)
    assert r.lam_minus == pytest.approx(0.12732, abs=1e-5)


def test_two_by_two_rank_one_and_degenerate():
    r = two_by_two_eig(3, 3, 3)
    assert r.lam_plus == pytest.approx(1.0) and r.lam_minus == pytest.approx(0.0, abs=1e-15)
    np.testing.assert_allclose(r.e_plus, [1 / math.sqrt(2)] * 2)
    assert two_by_two_eig(1, 1, 0).degenerate
    assert not two_by_two_eig(1, 1, 1).degenerate


def test_two_by_two_matches_sym_eig_on_integer_triples():
    rng = np.random.default_rng(3)
    for d1, d2, s in rng.integers(0, 101, size=(1000, 3)):
        r = two_by_two_eig(int(d1), int(d2), int(s))
        ref = sym_eig(np.array([[d1, s], [s, d2]], float) / max(d1 + d2, 1))
        assert abs(r.lam_plus - ref.eigenvalues[0]) <= 1e-12
        assert abs(r.lam_minus - ref.eigenvalues[1]) <= 1e-12
        if not r.degenerate:
            for vec, col in ((r.e_plus, 0), (r.e_minus, 1)):
                ref_vec = ref.eigenvectors[:, col]
                assert min(np.max(np.abs(vec - ref_vec)), np.max(np.abs(vec + ref_vec))) <= 1e-10
