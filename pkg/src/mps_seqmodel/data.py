"""Bitstrings, the even-parity population and training sets.

A bitstring of length N is packed into an unsigned integer with bit 1 (the
leftmost character) as the most significant bit, so the packed value is
also the index of the string in a dense state vector of size ``2**N``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ContractViolation, EmptyTrainingSetError

MAX_BITS = 64
MAX_ENUM_BITS = 24


@dataclass(frozen=True)
class Bitstring:
    n: int
    bits: int

    def __post_init__(self):
        if not 1 <= self.n <= MAX_BITS:
            raise ContractViolation(f"bitstring length must be in 1..{MAX_BITS}, got {self.n}")
        if self.bits < 0 or self.bits >> self.n:
            raise ContractViolation(f"bits {self.bits:#x} do not fit in length {self.n}")

    @classmethod
    def from_str(cls, text: str) -> "Bitstring":
        text = text.strip()
        if not text or set(text) - {"0", "1"}:
            raise ContractViolation(f"not a bitstring: {text!r}")
        return cls(len(text), int(text, 2))

    def __str__(self) -> str:
        return format(self.bits, f"0{self.n}b")

    def __len__(self) -> int:
        return self.n

    def bit(self, position: int) -> int:
        """Bit at 1-based ``position``."""
        return (self.bits >> (self.n - position)) & 1

    def symbols(self) -> np.ndarray:
        return unpack_bits(np.array([self.bits], dtype=np.uint64), self.n)[0]


def parity(s: Bitstring | int) -> int:
    bits = s.bits if isinstance(s, Bitstring) else int(s)
    return bin(bits).count("1") & 1


def popcount_parity(values: np.ndarray) -> np.ndarray:
    """Vectorised parity of packed unsigned integers."""
    v = np.asarray(values, dtype=np.uint64).copy()
    for shift in (32, 16, 8, 4, 2, 1):
        v ^= v >> np.uint64(shift)
    return (v & np.uint64(1)).astype(np.uint8)


def unpack_bits(values: np.ndarray, n: int) -> np.ndarray:
    """(count,) packed values -> (count, n) array of 0/1 symbols, leftmost first."""
    v = np.asarray(values, dtype=np.uint64)
    shifts = np.arange(n - 1, -1, -1, dtype=np.uint64)
    return ((v[:, None] >> shifts[None, :]) & np.uint64(1)).astype(np.uint8)


def pack_bits(symbols: np.ndarray) -> np.ndarray:
    sym = np.asarray(symbols, dtype=np.uint64)
    n = sym.shape[1]
    weights = np.uint64(1) << np.arange(n - 1, -1, -1, dtype=np.uint64)
    return (sym * weights[None, :]).sum(axis=1, dtype=np.uint64)


def even_strings(n: int) -> np.ndarray:
    """All of E^n in increasing packed order: the j-th even string is 2j + parity(j)."""
    if not 1 <= n <= MAX_ENUM_BITS:
        raise ContractViolation(f"enumeration limited to 1 <= N <= {MAX_ENUM_BITS}")
    j = np.arange(1 << (n - 1), dtype=np.uint64)
    return (j << np.uint64(1)) | popcount_parity(j).astype(np.uint64)


def _even_from_index(j: np.ndarray) -> np.ndarray:
    j = np.asarray(j, dtype=np.uint64)
    return (j << np.uint64(1)) | popcount_parity(j).astype(np.uint64)


@dataclass
class TrainingSet:
    n: int
    samples: np.ndarray  # packed uint64, pairwise distinct
    fraction: float | None = None
    _symbols: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.uint64)
        if self.samples.ndim != 1:
            raise ContractViolation("samples must be a 1-d array of packed bitstrings")
        if not 1 <= self.n <= MAX_BITS:
            raise ContractViolation(f"N must be in 1..{MAX_BITS}")
        if self.n < MAX_BITS and self.samples.size and int(self.samples.max()) >> self.n:
            raise ContractViolation(f"sample does not fit in {self.n} bits")
        if np.unique(self.samples).size != self.samples.size:
            raise ContractViolation("training samples must be distinct")

    @classmethod
    def from_strings(cls, strings, fraction: float | None = None) -> "TrainingSet":
        bs = [Bitstring.from_str(s) for s in strings]
        if not bs:
            raise EmptyTrainingSetError("no samples")
        n = bs[0].n
        if any(b.n != n for b in bs):
            raise ContractViolation("all samples must have the same length")
        return cls(n, np.array([b.bits for b in bs], dtype=np.uint64), fraction)

    @property
    def n_t(self) -> int:
        return int(self.samples.size)

    def symbols(self) -> np.ndarray:
        """(N_T, N) array of bits."""
        if self._symbols is None:
            self._symbols = unpack_bits(self.samples, self.n)
        return self._symbols

    def strings(self) -> list[str]:
        return [format(int(v), f"0{self.n}b") for v in self.samples]

    def __len__(self) -> int:
        return self.n_t


def training_size(n: int, f: float) -> int:
    """N_T = f * 2^(N-1) rounded to nearest, ties up."""
    return int(math.floor(f * 2.0 ** (n - 1) + 0.5))


def trial_rng(seed: int, trial: int = 0) -> np.random.Generator:
    """Counter-based generator keyed by (seed, trial)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(trial)])))


def sample_training_set(n: int, f: float, seed: int, trial: int = 0) -> TrainingSet:
    """Draw round(f * 2^(N-1)) distinct even-parity strings uniformly without replacement.

    A partial Fisher-Yates shuffle over the index range of E^N; only the
    touched positions are stored, so memory is O(N_T).
    """
    if not 2 <= n <= MAX_ENUM_BITS:
        raise ContractViolation(f"sample_training_set needs 2 <= N <= {MAX_ENUM_BITS}, got {n}")
    if not 0.0 < f <= 1.0:
        raise ContractViolation(f"fraction must be in (0, 1], got {f}")
    population = 1 << (n - 1)
    n_t = training_size(n, f)
    if n_t == 0:
        raise EmptyTrainingSetError(f"f={f} selects no strings at N={n}")
    if n_t >= population:
        return TrainingSet(n, even_strings(n), f)
    rng = trial_rng(seed, trial)
    draws = rng.integers(np.arange(n_t), population)
    swapped: dict[int, int] = {}
    chosen = np.empty(n_t, dtype=np.uint64)
    for i, j in enumerate(draws.tolist()):
        vi = swapped.get(i, i)
        vj = swapped.get(j, j)
        swapped[j] = vi
        chosen[i] = vj
    return TrainingSet(n, _even_from_index(chosen), f)


@dataclass
class SuffixGroups:
    """Training samples grouped by the bits after cut position ``k``.

    ``keys[g]`` is the packed suffix of group g, ``group[i]`` the group of
    sample i, and ``bits[i]`` the sample's bit at position k.
    """

    k: int
    keys: np.ndarray
    group: np.ndarray
    bits: np.ndarray

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.group, minlength=self.keys.size)

    @property
    def groups(self) -> dict[int, list[tuple[int, int]]]:
        out: dict[int, list[tuple[int, int]]] = {int(key): [] for key in self.keys}
        for i, (g, b) in enumerate(zip(self.group.tolist(), self.bits.tolist())):
            out[int(self.keys[g])].append((i, b))
        return out


def group_by_suffix(T: TrainingSet, k: int) -> SuffixGroups:
    if not 1 <= k <= T.n:
        raise ContractViolation(f"cut position must be in 1..{T.n}, got {k}")
    width = T.n - k
    mask = np.uint64((1 << width) - 1) if width < 64 else np.uint64(0xFFFFFFFFFFFFFFFF)
    suffix = T.samples & mask
    keys, group = np.unique(suffix, return_inverse=True)
    bits = ((T.samples >> np.uint64(width)) & np.uint64(1)).astype(np.uint8)
    return SuffixGroups(k, keys, group.astype(np.int64), bits)


def suffix_group_ids(symbols: np.ndarray, d: int) -> list[np.ndarray]:
    """Group ids of every suffix, for all cuts at once.

    ``ids[k]`` (0 <= k <= N) labels each sample by its symbols k..N-1 (0-based),
    i.e. the suffix after cut position k.  Built right to left in O(N * N_T).
    """
    sym = np.asarray(symbols, dtype=np.int64)
    n_t, n = sym.shape
    ids: list[np.ndarray] = [np.zeros(0, dtype=np.int64)] * (n + 1)
    ids[n] = np.zeros(n_t, dtype=np.int64)
    for k in range(n - 1, -1, -1):
        _, ids[k] = np.unique(ids[k + 1] * d + sym[:, k], return_inverse=True)
        ids[k] = ids[k].astype(np.int64).ravel()
    return ids


def save_dataset(T: TrainingSet, path) -> None:
    lines = [f"N={T.n}"] + T.strings()
    Path(path).write_text("\n".join(lines) + "\n")


def load_dataset(path) -> TrainingSet:
    text = Path(path).read_text().splitlines()
    if not text or not text[0].startswith("N="):
        raise ContractViolation(f"{path}: first line must be N=<int>")
    try:
        n = int(text[0][2:])
    except ValueError as exc:
        raise ContractViolation(f"{path}: bad header {text[0]!r}") from exc
    values = []
    seen = set()
    for lineno, line in enumerate(text[1:], start=2):
        line = line.strip()
        if not line:
            continue
        if len(line) != n or set(line) - {"0", "1"}:
            raise ContractViolation(f"{path}:{lineno}: expected {n} binary characters, got {line!r}")
        if line in seen:
            raise ContractViolation(f"{path}:{lineno}: duplicate sample {line}")
        seen.add(line)
        values.append(int(line, 2))
    if not values:
        raise EmptyTrainingSetError(f"{path}: no samples")
    return TrainingSet(n, np.array(values, dtype=np.uint64))
