import math

import numpy as np
import pytest

from mps_seqmodel import oracle
from mps_seqmodel.data import TrainingSet, group_by_suffix, sample_training_set
from mps_seqmodel.errors import ContractViolation, EmptyModelError, EmptyTrainingSetError
from mps_seqmodel.mps import amplitude, amplitudes, is_left_isometric, overlap, parity_target_mps
from mps_seqmodel.trainer import (
    TruncationPolicy, effective_density, final_tensor, train, train_symbols, truncate_and_extract,
)

from conftest import QUARTER_PI, random_set


def test_step_two_density_at_full_population():
    n = 6
    T = sample_training_set(n, 1.0, seed=0)
    sym = T.symbols()
    rho = effective_density(np.eye(2)[sym[:, 0]], sym[:, 1], group_by_suffix(T, 2))
    q = 2 ** (n - 3) / T.n_t
    expected = q * np.array([[1, 0, 0, 1], [0, 1, 1, 0], [0, 1, 1, 0], [1, 0, 0, 1]])
    np.testing.assert_allclose(rho, expected, atol=1e-15)  # index 2j+x: 00, 01, 10, 11


def test_two_prefix_graph_block(two_prefix_set):
    sym = two_prefix_set.symbols()
    rho = effective_density(np.eye(2)[sym[:, 0]], sym[:, 1], group_by_suffix(two_prefix_set, 2))
    np.testing.assert_allclose(rho[np.ix_([0, 3], [0, 3])], np.array([[2, 2], [2, 4]]) / 6, atol=1e-15)


def test_single_sample_density_is_projector():
    T = TrainingSet.from_strings(["0110"])
    sym = T.symbols()
    rho = effective_density(np.eye(2)[sym[:, 0]], sym[:, 1], group_by_suffix(T, 2))
    assert np.trace(rho) == pytest.approx(1.0)
    np.testing.assert_allclose(rho @ rho, rho, atol=1e-15)


def test_effective_density_rejects_empty():
    with pytest.raises(EmptyTrainingSetError):
        effective_density(np.zeros((0, 2)), np.zeros(0), np.zeros(0))


def test_truncation_f1_step_two():
    T = sample_training_set(6, 1.0, seed=0)
    sym = T.symbols()
    rho = effective_density(np.eye(2)[sym[:, 0]], sym[:, 1], group_by_suffix(T, 2))
    tr = truncate_and_extract(rho, TruncationPolicy(max_bond=2), labels=[0, 1, 1, 0])
    assert tr.kept.tolist() == pytest.approx([0.5, 0.5])
    cols = tr.tensor.reshape(4, 2)
    r = 1 / math.sqrt(2)
    np.testing.assert_allclose(cols[:, 0], [r, 0, 0, r], atol=1e-15)  # |E2>
    np.testing.assert_allclose(cols[:, 1], [0, r, r, 0], atol=1e-15)  # |O2>
    assert tr.labels == [0, 1] and tr.warning is None


def test_truncation_rank_one_and_exact_reconstruction():
    v = np.array([1.0, 2.0, 0.0, 1.0])
    tr = truncate_and_extract(np.outer(v, v), TruncationPolicy(max_bond=2))
    assert tr.tensor.shape == (2, 2, 1)
    rng = np.random.default_rng(0)
    a = rng.standard_normal((4, 4))
    rho = a @ a.T
    tr = truncate_and_extract(rho, TruncationPolicy(max_bond=4, cutoff=0.0))
    u = tr.tensor.reshape(4, -1)
    np.testing.assert_allclose(u @ np.diag(tr.kept) @ u.T, rho, atol=1e-10)
    assert is_left_isometric(tr.tensor)


def test_truncation_errors():
    with pytest.raises(EmptyModelError):
        truncate_and_extract(np.zeros((4, 4)))
    with pytest.raises(ContractViolation):
        TruncationPolicy(max_bond=0)
    with pytest.raises(ContractViolation):
        TruncationPolicy(cutoff=-1)


def test_block_aware_selection_warns_when_one_sector_dominates():
    rho = np.diag([0.5, 0.1, 0.05, 0.35])  # sectors by label: 0 1 1 0
    tr = truncate_and_extract(rho, TruncationPolicy(max_bond=2), labels=[0, 1, 1, 0])
    assert tr.kept.tolist() == pytest.approx([0.5, 0.1])
    assert tr.labels == [0, 1]
    assert tr.warning and "sector 0" in tr.warning
    glob = truncate_and_extract(rho, TruncationPolicy(max_bond=2, block_aware=False), labels=[0, 1, 1, 0])
    assert glob.kept.tolist() == pytest.approx([0.5, 0.35])


def test_final_tensor_examples():
    out = final_tensor(np.array([[1.0]]), np.array([0]), 1)
    assert out[:, :, 0].tolist() == [[1.0, 0.0]]
    out = final_tensor(np.eye(2), np.array([0, 1]), 2)
    assert np.linalg.norm(out[:, 0, 0]) == pytest.approx(1 / math.sqrt(2))
    assert np.linalg.norm(out[:, 1, 0]) == pytest.approx(1 / math.sqrt(2))


@pytest.mark.parametrize("n", [2, 4, 8, 16])
def test_perfect_learning(n):
    m, diag = train(sample_training_set(n, 1.0, seed=0))
    assert overlap(m, parity_target_mps(n)) == pytest.approx(1.0, abs=1e-10)
    assert all(b <= 2 for b in m.bonds)
    ang = diag.angles()
    for a in (*ang.theta, *ang.phi):
        assert a is None or a == pytest.approx(QUARTER_PI, abs=1e-10)


def test_single_sample_gives_product_state():
    T = TrainingSet.from_strings(["011010"])
    m, _ = train(T)
    assert m.bonds == [2] + [1] * 4  # site 1 is always the identity on V_1
    assert amplitude(m, "011010") == pytest.approx(1.0)
    assert m.norm_squared() == pytest.approx(1.0)


def test_lossless_without_truncation():
    rng = np.random.default_rng(4)
    for _ in range(10):
        n = int(rng.integers(2, 13))
        T = random_set(rng, n, int(rng.integers(1, min(64, 2 ** n) + 1)))
        m, _ = train(T, TruncationPolicy(max_bond=None, cutoff=0.0))
        np.testing.assert_allclose(amplitudes(m, T.symbols()), 1 / math.sqrt(T.n_t), atol=1e-9)
        if n <= 12:
            ref = oracle.dense_mps_factorize(oracle.dense_state(T))
            assert overlap(m, ref) == pytest.approx(1.0, abs=1e-9)


def test_summary_norm_preserved_without_truncation():
    T = sample_training_set(10, 0.1, seed=8)
    _, diag = train(T, TruncationPolicy(max_bond=None, cutoff=0.0))
    for step in diag.steps:
        assert step.trace == pytest.approx(1.0, abs=1e-12)


def test_diagnostics_trace_monotone_and_isometries():
    T = sample_training_set(14, 0.05, seed=2)
    m, diag = train(T)
    traces = [s.trace for s in diag.steps]
    assert traces[0] == pytest.approx(1.0, abs=1e-12)
    assert all(b <= a + 1e-12 for a, b in zip(traces, traces[1:]))
    assert all(s.discarded >= 0 for s in diag.steps)
    assert all(is_left_isometric(t) for t in m.tensors[:-1])
    assert m.norm_squared() <= 1 + 1e-9
    d = diag.as_dict()
    assert d["n"] == 14 and len(d["steps"]) == 13


def test_alphabet_agnostic_training():
    rng = np.random.default_rng(0)
    sym = np.unique(rng.integers(0, 3, size=(40, 5)), axis=0)
    m, _ = train_symbols(sym, d=3, policy=TruncationPolicy(max_bond=None, cutoff=0.0))
    assert m.d == 3
    np.testing.assert_allclose(amplitudes(m, sym), 1 / math.sqrt(sym.shape[0]), atol=1e-10)


def test_empty_training_set():
    with pytest.raises(EmptyTrainingSetError):
        train_symbols(np.zeros((0, 4), dtype=int))
