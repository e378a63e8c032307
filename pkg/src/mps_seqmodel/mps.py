"""Open-boundary matrix product states over a finite alphabet.

Site tensors are numpy arrays indexed ``[bond_in, symbol, bond_out]``.
Models are stored with their raw training weights; anything that needs a
probability divides by the squared norm at query time.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Mapping

import numpy as np

from ._backend import kernels
from .data import Bitstring, trial_rng, unpack_bits
from .errors import ContractViolation, InfeasibleConstraintError

FORMAT_VERSION = 1


class MPS:
    def __init__(self, tensors):
        tensors = [np.asarray(t, dtype=np.float64) for t in tensors]
        if not tensors:
            raise ContractViolation("an MPS needs at least one site")
        for k, t in enumerate(tensors):
            if t.ndim != 3:
                raise ContractViolation(f"site {k + 1}: expected a 3-index tensor, got shape {t.shape}")
        if tensors[0].shape[0] != 1 or tensors[-1].shape[2] != 1:
            raise ContractViolation("boundary bond dimensions must be 1")
        for k in range(len(tensors) - 1):
            if tensors[k].shape[2] != tensors[k + 1].shape[0]:
                raise ContractViolation(f"bond mismatch between sites {k + 1} and {k + 2}")
        if len({t.shape[1] for t in tensors}) != 1:
            raise ContractViolation("all sites must share one physical dimension")
        self.tensors = tensors
        for t in self.tensors:
            t.setflags(write=False)

    @property
    def n(self) -> int:
        return len(self.tensors)

    @property
    def d(self) -> int:
        return self.tensors[0].shape[1]

    @property
    def bonds(self) -> list[int]:
        return [t.shape[2] for t in self.tensors[:-1]]

    def __len__(self) -> int:
        return self.n

    def __repr__(self) -> str:
        return f"MPS(n={self.n}, d={self.d}, bonds={self.bonds})"

    def norm_squared(self) -> float:
        return overlap(self, self)

    def to_dense(self) -> np.ndarray:
        """Full amplitude vector of size d**N (small N only)."""
        v = self.tensors[0][0]  # (d, chi)
        for t in self.tensors[1:]:
            v = np.tensordot(v, t, axes=([-1], [0]))
            v = v.reshape(-1, t.shape[2])
        return v[:, 0]


def _symbols_of(m: MPS, s) -> np.ndarray:
    if isinstance(s, Bitstring):
        sym = s.symbols()
    elif isinstance(s, str):
        sym = Bitstring.from_str(s).symbols()
    else:
        sym = np.asarray(s, dtype=np.int64)
    if sym.shape != (m.n,):
        raise ContractViolation(f"string of length {sym.shape[0] if sym.ndim else 0} for an MPS with {m.n} sites")
    return sym


def amplitude(m: MPS, s) -> float:
    """<s|psi> for a Bitstring, a '0'/'1' string or a symbol sequence."""
    sym = _symbols_of(m, s)
    v = np.ones(1)
    for t, x in zip(m.tensors, sym):
        v = v @ t[:, int(x), :]
    return float(v[0])


def amplitudes(m: MPS, symbols: np.ndarray) -> np.ndarray:
    """Vectorised amplitudes for an (S, N) symbol array."""
    sym = np.asarray(symbols, dtype=np.int64)
    v = np.ones((sym.shape[0], 1))
    for k, t in enumerate(m.tensors):
        v = np.einsum("si,sij->sj", v, t[:, sym[:, k], :].transpose(1, 0, 2))
    return v[:, 0]


def overlap(m1: MPS, m2: MPS) -> float:
    """<psi1|psi2> by left-to-right environment contraction."""
    if m1.n != m2.n or m1.d != m2.d:
        raise ContractViolation("overlap needs equal length and physical dimension")
    env = np.ones((1, 1))
    for a, b in zip(m1.tensors, m2.tensors):
        env = np.einsum("ij,ixk,jxl->kl", env, a, b)
    return float(env[0, 0])


def born_probability(m: MPS, s) -> float:
    nrm = m.norm_squared()
    if nrm <= 0.0:
        raise ContractViolation("zero-norm model has no Born distribution")
    return amplitude(m, s) ** 2 / nrm


def parity_target_mps(n: int) -> MPS:
    """Bond-2 MPS of the uniform superposition over even-parity strings.

    Bond index 0 carries "even so far", index 1 "odd so far".  Middle sites
    are the trained summarizer at angles pi/4; the last site closes the
    chain on the even sector.
    """
    if n < 2:
        raise ContractViolation("parity target needs N >= 2")
    r = 1.0 / math.sqrt(2.0)
    first = np.zeros((1, 2, 2))
    first[0, 0, 0] = first[0, 1, 1] = 1.0
    middle = np.zeros((2, 2, 2))
    for j in range(2):
        for x in range(2):
            middle[j, x, (j + x) % 2] = r
    last = np.zeros((2, 2, 1))
    last[0, 0, 0] = last[1, 1, 0] = r
    return MPS([first] + [middle] * (n - 2) + [last])


def product_mps(s, d: int = 2) -> MPS:
    """Single-string MPS, amplitude 1 on ``s``."""
    sym = Bitstring.from_str(s).symbols() if isinstance(s, str) else np.asarray(s, dtype=np.int64)
    tensors = []
    for x in sym:
        t = np.zeros((1, d, 1))
        t[0, int(x), 0] = 1.0
        tensors.append(t)
    return MPS(tensors)


def is_left_isometric(t: np.ndarray, atol: float = 1e-10) -> bool:
    chi_l, d, chi_r = t.shape
    mat = t.reshape(chi_l * d, chi_r)
    return bool(np.max(np.abs(mat.T @ mat - np.eye(chi_r))) <= atol)


def left_isometry_matrix(tensors) -> np.ndarray:
    """Compose the first sites into a (d**k, chi_k) matrix B_k -> V_1 (x) ... (x) V_k."""
    m = np.asarray(tensors[0], dtype=np.float64)[0]
    for t in tensors[1:]:
        m = np.tensordot(m, t, axes=([-1], [0])).reshape(-1, t.shape[2])
    return m


def _constraint_mask(m: MPS, constraints: Mapping[int, int] | None) -> np.ndarray:
    mask = np.ones((m.n, m.d), dtype=np.uint8)
    for pos, sym in (constraints or {}).items():
        if not 1 <= pos <= m.n:
            raise ContractViolation(f"constraint position {pos} outside 1..{m.n}")
        if not 0 <= sym < m.d:
            raise ContractViolation(f"constraint symbol {sym} outside 0..{m.d - 1}")
        mask[pos - 1, :] = 0
        mask[pos - 1, sym] = 1
    return mask


def right_environments(m: MPS, mask: np.ndarray) -> list[np.ndarray]:
    """envs[k] is the (chi_k, chi_k) Gram matrix of everything right of site k+1 (0-based k)."""
    envs = [np.ones((1, 1))] * m.n
    env = np.ones((1, 1))
    for k in range(m.n - 1, -1, -1):
        envs[k] = env
        t = m.tensors[k] * mask[k][None, :, None]
        env = np.einsum("ixk,kl,jxl->ij", t, env, t)
    return envs


def constrained_mass(m: MPS, constraints: Mapping[int, int] | None = None) -> float:
    """Squared norm of the model restricted to strings matching ``constraints``."""
    mask = _constraint_mask(m, constraints)
    env = right_environments(m, mask)
    t = m.tensors[0] * mask[0][None, :, None]
    return float(np.einsum("ixk,kl,jxl->ij", t, env[0], t)[0, 0])


def sample_many(m: MPS, count: int, seed: int, constraints: Mapping[int, int] | None = None,
                trial: int = 0) -> np.ndarray:
    """Draw ``count`` exact samples as an (count, N) symbol array.

    Constraints map 1-based positions to fixed symbols; the draw follows the
    Born distribution renormalised to strings that satisfy them.
    """
    mask = _constraint_mask(m, constraints)
    total = constrained_mass(m, constraints)
    if not total > 1e-300:
        raise InfeasibleConstraintError(f"constraints {dict(constraints or {})} have zero probability")
    envs = right_environments(m, mask)
    uniforms = trial_rng(seed, trial).random((count, m.n))
    return kernels.sample_chain(list(m.tensors), envs, mask, uniforms)


def sample(m: MPS, seed: int, constraints: Mapping[int, int] | None = None) -> Bitstring:
    if m.d != 2:
        raise ContractViolation("sample() returns a Bitstring; use sample_many for d > 2")
    row = sample_many(m, 1, seed, constraints)[0]
    return Bitstring(m.n, int("".join(map(str, row)), 2))


def samples_to_strings(rows: np.ndarray) -> list[str]:
    return ["".join(str(int(x)) for x in row) for row in rows]


def enumerate_probabilities(m: MPS) -> np.ndarray:
    """Born probabilities of all d**N strings, index = packed value (small N)."""
    amp = m.to_dense()
    return amp ** 2 / float(amp @ amp)


def save_model(m: MPS, path) -> None:
    """Write the versioned JSON model file; entries use 17 significant digits."""
    sites = []
    for t in m.tensors:
        if not np.all(np.isfinite(t)):
            raise ContractViolation("cannot serialise non-finite tensor entries")
        entries = ", ".join(format(float(x), ".17g") for x in t.ravel())
        sites.append(f'  {{"shape": {list(t.shape)}, "entries": [{entries}]}}')
    text = (
        f'{{"format": "mps-seqmodel", "version": {FORMAT_VERSION}, "n": {m.n}, "d": {m.d},\n'
        f' "sites": [\n' + ",\n".join(sites) + "\n ]}\n"
    )
    Path(path).write_text(text)


def load_model(path) -> MPS:
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != "mps-seqmodel":
        raise ContractViolation(f"{path}: not an mps-seqmodel file")
    if doc.get("version") != FORMAT_VERSION:
        raise ContractViolation(f"{path}: unsupported version {doc.get('version')}")
    tensors = []
    for k, site in enumerate(doc["sites"]):
        shape = tuple(site["shape"])
        entries = np.asarray(site["entries"], dtype=np.float64)
        if entries.size != math.prod(shape):
            raise ContractViolation(f"{path}: site {k + 1} has {entries.size} entries for shape {shape}")
        tensors.append(entries.reshape(shape))
    m = MPS(tensors)
    if m.n != doc["n"]:
        raise ContractViolation(f"{path}: header says {doc['n']} sites, found {m.n}")
    return m


def unpack_strings(values, n: int) -> np.ndarray:
    return unpack_bits(np.asarray(values, dtype=np.uint64), n)
