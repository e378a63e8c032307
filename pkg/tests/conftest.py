import logging
import math

import numpy as np
import pytest

from mps_seqmodel.data import TrainingSet, sample_training_set
from mps_seqmodel.trainer import TruncationPolicy, train

# two prefixes a1=00, a2=11 over suffixes b1..b4 = 00, 01, 10, 11
TWO_PREFIX_GRAPH = ["0000", "0011", "1100", "1101", "1110", "1111"]

# E0 = {000, 110}, O1 = {011, 101}, suffixes of length 3
BLOCK_GRAPH = ["000000", "000101", "110000", "110101", "110011", "011000", "101110", "101011"]


@pytest.fixture(autouse=True)
def _quiet_trainer_warnings():
    logging.getLogger("mps_seqmodel").setLevel(logging.ERROR)
    yield


@pytest.fixture
def two_prefix_set():
    return TrainingSet.from_strings(TWO_PREFIX_GRAPH)


@pytest.fixture(scope="session")
def parity8_model():
    m, diag = train(sample_training_set(8, 1.0, seed=0), TruncationPolicy(max_bond=2))
    return m


def random_set(rng, n, n_t, even_only=False):
    from mps_seqmodel.data import even_strings
    pool = even_strings(n) if even_only else np.arange(1 << n, dtype=np.uint64)
    picks = np.sort(rng.choice(pool.size, size=n_t, replace=False))
    return TrainingSet(n, pool[picks].astype(np.uint64))


QUARTER_PI = math.pi / 4
