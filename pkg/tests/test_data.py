import itertools

import numpy as np
import pytest

from mps_seqmodel import oracle
from mps_seqmodel.data import (
    Bitstring, TrainingSet, even_strings, group_by_suffix, load_dataset, pack_bits, parity,
    popcount_parity, sample_training_set, save_dataset, suffix_group_ids, training_size, unpack_bits,
)
from mps_seqmodel.errors import ContractViolation, EmptyTrainingSetError

from conftest import random_set


@pytest.mark.parametrize("s, p", [("0000", 0), ("0110", 0), ("1000", 1), ("1", 1)])
def test_parity(s, p):
    assert parity(Bitstring.from_str(s)) == p


def test_bitstring_positions_and_roundtrip():
    b = Bitstring.from_str("0110")
    assert str(b) == "0110" and b.bits == 6
    assert [b.bit(i) for i in range(1, 5)] == [0, 1, 1, 0]
    assert b.symbols().tolist() == [0, 1, 1, 0]
    with pytest.raises(ContractViolation):
        Bitstring(3, 8)
    with pytest.raises(ContractViolation):
        Bitstring.from_str("01a")


def test_pack_unpack_inverse():
    vals = np.arange(64, dtype=np.uint64)
    np.testing.assert_array_equal(pack_bits(unpack_bits(vals, 6)), vals)


@pytest.mark.parametrize("n", range(1, 17))
def test_half_the_strings_are_even(n):
    ev = even_strings(n)
    assert ev.size == 2 ** (n - 1)
    assert not popcount_parity(ev).any()
    assert np.all(np.diff(ev.astype(np.int64)) > 0)


def test_full_population_n4():
    T = sample_training_set(4, 1.0, seed=123)
    assert sorted(T.strings()) == ["0000", "0011", "0101", "0110", "1001", "1010", "1100", "1111"]


def test_training_size_rounding():
    assert training_size(16, 0.125) == 4096
    assert sample_training_set(16, 0.125, seed=1).n_t == 4096
    assert training_size(3, 0.125) == 1  # 0.5 rounds up
    assert training_size(4, 0.0625) == 1


def test_sampling_deterministic_and_even():
    a = sample_training_set(4, 0.25, seed=7)
    b = sample_training_set(4, 0.25, seed=7)
    assert a.n_t == 2 and a.strings() == b.strings()
    assert len(set(a.strings())) == 2
    for n, f in [(10, 0.3), (16, 0.05), (20, 0.001)]:
        T = sample_training_set(n, f, seed=3, trial=2)
        assert not popcount_parity(T.samples).any()
        assert np.unique(T.samples).size == T.n_t == training_size(n, f)


def test_trial_streams_differ():
    a = sample_training_set(12, 0.1, seed=5, trial=0)
    b = sample_training_set(12, 0.1, seed=5, trial=1)
    assert a.strings() != b.strings()


def test_sampling_is_roughly_uniform():
    counts = np.zeros(8)
    ev = even_strings(4).tolist()
    for seed in range(4000):
        for s in sample_training_set(4, 0.25, seed=seed).samples.tolist():
            counts[ev.index(s)] += 1
    assert np.all(np.abs(counts / counts.sum() - 1 / 8) < 0.01)


def test_sampling_errors():
    with pytest.raises(EmptyTrainingSetError):
        sample_training_set(4, 0.01, seed=0)
    with pytest.raises(ContractViolation):
        sample_training_set(25, 0.5, seed=0)
    with pytest.raises(ContractViolation):
        sample_training_set(4, 1.5, seed=0)


def test_training_set_rejects_duplicates():
    with pytest.raises(ContractViolation):
        TrainingSet.from_strings(["0011", "0011"])


def test_group_by_suffix_examples(two_prefix_set):
    T = TrainingSet.from_strings(["0000", "1100"])
    g = group_by_suffix(T, 2)
    assert g.sizes.tolist() == [2] and g.keys.tolist() == [0]

    g = group_by_suffix(two_prefix_set, 2)
    assert dict(zip(g.keys.tolist(), g.sizes.tolist())) == {0: 2, 1: 1, 2: 1, 3: 2}
    assert {b for pairs in g.groups.values() for _, b in pairs} == {0, 1}

    g = group_by_suffix(two_prefix_set, 4)
    assert g.sizes.tolist() == [6]


def test_group_indices_cover_all_samples():
    T = sample_training_set(10, 0.3, seed=0)
    for k in range(2, 11):
        g = group_by_suffix(T, k)
        idx = sorted(i for pairs in g.groups.values() for i, _ in pairs)
        assert idx == list(range(T.n_t)) and g.sizes.sum() == T.n_t


def test_paths_of_length_two_match_double_loop():
    rng = np.random.default_rng(0)
    for _ in range(5):
        n = int(rng.integers(3, 11))
        T = random_set(rng, n, int(rng.integers(1, 2 ** (n - 1))), even_only=True)
        for k in range(1, n + 1):
            g = group_by_suffix(T, k)
            ref = oracle.shared_continuations(T, k)
            got = {}
            prefixes = T.samples >> np.uint64(T.n - k)
            for members in np.split(np.argsort(g.group, kind="stable"), np.cumsum(g.sizes)[:-1]):
                for i, j in itertools.product(members, members):
                    key = (int(prefixes[i]), int(prefixes[j]))
                    got[key] = got.get(key, 0) + 1
            assert got == ref


def test_suffix_group_ids_agree_with_group_by_suffix():
    T = sample_training_set(9, 0.4, seed=2)
    ids = suffix_group_ids(T.symbols(), 2)
    for k in range(1, 10):
        g = group_by_suffix(T, k)
        # same partition, possibly different labels
        pairs = set(zip(ids[k].tolist(), g.group.tolist()))
        assert len(pairs) == len(set(ids[k].tolist())) == len(g.keys)


def test_dataset_roundtrip_and_validation(tmp_path):
    T = sample_training_set(8, 0.2, seed=4)
    p = tmp_path / "d.txt"
    save_dataset(T, p)
    assert p.read_text().startswith("N=8\n")
    back = load_dataset(p)
    assert back.strings() == T.strings()

    (tmp_path / "bad.txt").write_text("N=4\n0011\n011\n")
    with pytest.raises(ContractViolation, match="bad.txt:3"):
        load_dataset(tmp_path / "bad.txt")
    (tmp_path / "dup.txt").write_text("N=4\n0011\n0011\n")
    with pytest.raises(ContractViolation, match="duplicate"):
        load_dataset(tmp_path / "dup.txt")
    (tmp_path / "hdr.txt").write_text("0011\n")
    with pytest.raises(ContractViolation):
        load_dataset(tmp_path / "hdr.txt")
