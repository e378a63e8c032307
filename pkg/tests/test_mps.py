import math

import numpy as np
import pytest
from scipy.stats import chisquare

from mps_seqmodel.data import Bitstring, even_strings, popcount_parity, sample_training_set, unpack_bits
from mps_seqmodel.errors import ContractViolation, InfeasibleConstraintError
from mps_seqmodel.mps import (
    MPS, amplitude, amplitudes, born_probability, constrained_mass, enumerate_probabilities,
    is_left_isometric, load_model, overlap, parity_target_mps, product_mps, sample, sample_many,
    save_model,
)
from mps_seqmodel.trainer import TruncationPolicy, train


def _random_mps(rng, n, chi=3, d=2):
    bonds = [1] + [chi] * (n - 1) + [1]
    return MPS([rng.standard_normal((bonds[k], d, bonds[k + 1])) for k in range(n)])


def _pack(rows):
    v = np.zeros(rows.shape[0], dtype=np.int64)
    for col in range(rows.shape[1]):
        v = (v << 1) | rows[:, col]
    return v


def test_parity_target_amplitudes():
    m = parity_target_mps(4)
    assert amplitude(m, "0110") == pytest.approx(1 / math.sqrt(8), abs=1e-15)
    assert amplitude(m, "0001") == 0.0
    m2 = parity_target_mps(2)
    assert [amplitude(m2, s) for s in ("00", "01", "10", "11")] == pytest.approx([2 ** -0.5, 0, 0, 2 ** -0.5])


@pytest.mark.parametrize("n", [2, 3, 5, 8, 12, 16])
def test_parity_target_matches_set_definition(n):
    dense = parity_target_mps(n).to_dense()
    even = np.zeros(2 ** n, dtype=bool)
    even[even_strings(n).astype(np.int64)] = True
    assert np.all(dense[even] == pytest.approx(2 ** (-(n - 1) / 2), rel=1e-14))
    assert np.all(dense[~even] == 0.0)
    assert overlap(parity_target_mps(n), parity_target_mps(n)) == pytest.approx(1.0, abs=1e-12)


def test_born_probability():
    m = parity_target_mps(4)
    assert born_probability(m, Bitstring.from_str("0011")) == pytest.approx(1 / 8)
    assert born_probability(m, "0111") == 0.0
    rng = np.random.default_rng(0)
    r = _random_mps(rng, 8)
    total = sum(born_probability(r, row) for row in unpack_bits(np.arange(256, dtype=np.uint64), 8))
    assert total == pytest.approx(1.0, abs=1e-12)


def test_overlap_examples_and_brute_force():
    assert overlap(product_mps("0000"), parity_target_mps(4)) == pytest.approx(1 / math.sqrt(8))
    rng = np.random.default_rng(1)
    for n in (2, 5, 10):
        a, b = _random_mps(rng, n), _random_mps(rng, n, chi=2)
        assert overlap(a, b) == pytest.approx(float(a.to_dense() @ b.to_dense()), abs=1e-9)
    with pytest.raises(ContractViolation):
        overlap(parity_target_mps(3), parity_target_mps(4))


def test_amplitude_errors_and_batch():
    m = parity_target_mps(4)
    with pytest.raises(ContractViolation):
        amplitude(m, "010")
    rows = unpack_bits(np.arange(16, dtype=np.uint64), 4)
    np.testing.assert_allclose(amplitudes(m, rows), m.to_dense(), atol=1e-15)


def test_mps_validation():
    with pytest.raises(ContractViolation):
        MPS([])
    with pytest.raises(ContractViolation):
        MPS([np.ones((1, 2, 2)), np.ones((3, 2, 1))])
    with pytest.raises(ContractViolation):
        MPS([np.ones((2, 2, 1))])
    m = parity_target_mps(3)
    assert m.bonds == [2, 2] and m.n == 3 and m.d == 2
    with pytest.raises(ValueError):
        m.tensors[0][0, 0, 0] = 5.0


def test_trained_f1_amplitudes(parity8_model):
    for s in even_strings(8).tolist():
        assert amplitude(parity8_model, [int(c) for c in format(s, "08b")]) == pytest.approx(1 / math.sqrt(128), abs=1e-10)
    assert overlap(parity8_model, parity_target_mps(8)) == pytest.approx(1.0, abs=1e-10)


def test_trained_tensors_left_isometric():
    m, _ = train(sample_training_set(12, 0.2, seed=3))
    assert all(is_left_isometric(t) for t in m.tensors[:-1])
    assert m.norm_squared() <= 1 + 1e-9


def test_sampler_support_and_uniformity(parity8_model):
    rows = sample_many(parity8_model, 100_000, seed=11)
    values = _pack(rows)
    assert not popcount_parity(values.astype(np.uint64)).any()
    ev = even_strings(8).astype(np.int64)
    counts = np.bincount(values, minlength=256)[ev]
    assert chisquare(counts).pvalue > 1e-3


def test_sampler_matches_born_distribution_on_random_model():
    rng = np.random.default_rng(5)
    m = _random_mps(rng, 6)
    probs = enumerate_probabilities(m)
    rows = sample_many(m, 100_000, seed=3)
    counts = np.bincount(_pack(rows), minlength=64)
    keep = probs * 100_000 >= 5
    expected = probs[keep] / probs[keep].sum() * counts[keep].sum()
    assert chisquare(counts[keep], expected).pvalue > 1e-3


def test_conditional_sampling_parity_target():
    rows = sample_many(parity_target_mps(8), 5000, seed=1, constraints={1: 0, 2: 1})
    assert np.all(rows[:, 0] == 0) and np.all(rows[:, 1] == 1)
    assert np.all(rows[:, 2:].sum(axis=1) % 2 == 1)


def test_conditional_sampling_matches_enumeration():
    m, _ = train(sample_training_set(8, 0.4, seed=9))
    cond = {3: 1, 6: 0}
    probs = enumerate_probabilities(m)
    every = unpack_bits(np.arange(256, dtype=np.uint64), 8)
    match = (every[:, 2] == 1) & (every[:, 5] == 0)
    assert constrained_mass(m, cond) / m.norm_squared() == pytest.approx(probs[match].sum(), abs=1e-12)
    rows = sample_many(m, 50_000, seed=2, constraints=cond)
    counts = np.bincount(_pack(rows), minlength=256)
    assert counts[~match].sum() == 0
    support = match & (probs * 50_000 / probs[match].sum() >= 5)
    expected = probs[support] / probs[support].sum() * counts[support].sum()
    assert chisquare(counts[support], expected).pvalue > 1e-3


def test_sampling_single_string_and_infeasible():
    m = product_mps("10110")
    assert str(sample(m, seed=0)) == "10110"
    with pytest.raises(InfeasibleConstraintError):
        sample(m, seed=0, constraints={1: 0})
    with pytest.raises(InfeasibleConstraintError):
        sample_many(parity_target_mps(4), 1, seed=0, constraints={1: 0, 2: 0, 3: 0, 4: 1})
    with pytest.raises(ContractViolation):
        sample_many(m, 1, seed=0, constraints={9: 0})


def test_sampling_deterministic():
    m = parity_target_mps(10)
    np.testing.assert_array_equal(sample_many(m, 50, seed=4), sample_many(m, 50, seed=4))
    assert not np.array_equal(sample_many(m, 50, seed=4), sample_many(m, 50, seed=5))


def test_model_roundtrip(tmp_path):
    m, _ = train(sample_training_set(10, 0.3, seed=1))
    p = tmp_path / "m.json"
    save_model(m, p)
    back = load_model(p)
    for a, b in zip(m.tensors, back.tensors):
        np.testing.assert_array_equal(a, b)
    p.write_text(p.read_text().replace('"version": 1', '"version": 9'))
    with pytest.raises(ContractViolation):
        load_model(p)
