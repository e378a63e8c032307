"""Exact and statistical analysis of training on the even-parity population.

With bond dimension two every trained site tensor is a pair of rotations:
the even sector keeps ``cos(theta) |E,0> + sin(theta) |O,1>`` and the odd
sector ``cos(phi) |E,1> + sin(phi) |O,0>``.  The angles follow from the 2x2
blocks of the effective density; they determine every model amplitude and
hence the overlap with the uniform even-parity state.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from .data import TrainingSet, suffix_group_ids, training_size
from .errors import ContractViolation, DegenerateBlockError

log = logging.getLogger(__name__)

LEAKAGE_WARN = 1e-9
DEGENERACY_RTOL = 1e-12
DEFAULT_CALIBRATION = "calibration_N16.txt"


@dataclass
class BlockStats:
    """Entries of the two parity blocks, in weighted sample counts."""

    e0: float
    o1: float
    e1: float
    o0: float
    s_e: float
    s_o: float
    leakage: float = 0.0
    warning: str | None = None

    @property
    def trace(self) -> float:
        return self.e0 + self.o1 + self.e1 + self.o0

    @property
    def gap_even(self) -> float:
        return self.e0 - self.o1

    @property
    def gap_odd(self) -> float:
        return self.e1 - self.o0

    def normalized(self, total: float) -> "BlockStats":
        """Rescale so the four diagonal entries sum to ``total``."""
        c = total / self.trace if self.trace else 0.0
        return BlockStats(self.e0 * c, self.o1 * c, self.e1 * c, self.o0 * c,
                          self.s_e * c, self.s_o * c, self.leakage * c, self.warning)

    def as_dict(self) -> dict:
        return {
            "e0": self.e0, "o1": self.o1, "e1": self.e1, "o0": self.o0,
            "s_e": self.s_e, "s_o": self.s_o, "trace": self.trace,
            "leakage": self.leakage, "warning": self.warning,
        }


@dataclass(frozen=True)
class AngleSchedule:
    """Angles theta_k, phi_k for k = 2..N; ``None`` marks an absent block."""

    n: int
    theta: tuple
    phi: tuple

    def __post_init__(self):
        if len(self.theta) != self.n - 1 or len(self.phi) != self.n - 1:
            raise ContractViolation(f"need {self.n - 1} angles for N={self.n}")
        for a in (*self.theta, *self.phi):
            if a is not None and not -1e-12 <= a <= math.pi / 2 + 1e-12:
                raise ContractViolation(f"angle {a} outside [0, pi/2]")

    @classmethod
    def uniform(cls, n: int, theta: float, phi: float | None = None) -> "AngleSchedule":
        phi = theta if phi is None else phi
        return cls(n, (theta,) * (n - 1), (phi,) * (n - 1))

    def at(self, k: int) -> tuple:
        if not 2 <= k <= self.n:
            raise IndexError(k)
        return self.theta[k - 2], self.phi[k - 2]

    def deviations(self) -> list[tuple]:
        """Per-step (theta - pi/4, phi - pi/4)."""
        q = math.pi / 4
        return [(None if t is None else t - q, None if p is None else p - q)
                for t, p in zip(self.theta, self.phi)]


@dataclass(frozen=True)
class PredictionPoint:
    f: float
    n_t: int
    overlap: float
    distance: float


def parity_block_matrix(rho, bond_labels) -> tuple[np.ndarray, float]:
    """Reorder a density on B (x) V into the parity basis (E0, O1, E1, O0).

    ``bond_labels[j]`` is the parity sector (0 even, 1 odd) of bond index j;
    a sector without a bond contributes zero rows.  Also returns the largest
    entry coupling the two sectors.
    """
    rho = np.asarray(rho, dtype=np.float64)
    chi = len(bond_labels)
    if rho.shape != (2 * chi, 2 * chi):
        raise ContractViolation(f"density of shape {rho.shape} does not match {chi} bond labels")
    where = {lab: j for j, lab in enumerate(bond_labels)}
    wanted = [(0, 0), (1, 1), (0, 1), (1, 0)]  # (bond parity, bit)
    idx = [where[p] * 2 + x if p in where else None for p, x in wanted]
    out = np.zeros((4, 4))
    for a, ia in enumerate(idx):
        for b, ib in enumerate(idx):
            if ia is not None and ib is not None:
                out[a, b] = rho[ia, ib]
    sector = np.array([(bond_labels[i // 2] + i % 2) % 2 for i in range(2 * chi)])
    cross = sector[:, None] != sector[None, :]
    leak = float(np.max(np.abs(rho[cross]))) if cross.any() else 0.0
    return out, leak


def measure_block_stats(rho4, scale: float = 1.0, leakage: float | None = None) -> BlockStats:
    """Read the 2x2 blocks of a 4x4 density ordered (E0, O1, E1, O0)."""
    r = np.asarray(rho4, dtype=np.float64)
    if r.shape != (4, 4):
        raise ContractViolation(f"expected a 4x4 density, got {r.shape}")
    if leakage is None:
        off = r.copy()
        off[:2, :2] = 0.0
        off[2:, 2:] = 0.0
        leakage = float(np.max(np.abs(off))) * scale
    stats = BlockStats(
        e0=r[0, 0] * scale, o1=r[1, 1] * scale, e1=r[2, 2] * scale, o0=r[3, 3] * scale,
        s_e=0.5 * (r[0, 1] + r[1, 0]) * scale, s_o=0.5 * (r[2, 3] + r[3, 2]) * scale,
        leakage=leakage,
    )
    if leakage > LEAKAGE_WARN * max(stats.trace, 1e-300):
        stats.warning = f"density is not block-diagonal (cross-block entry {leakage:.3g})"
    return stats


def block_angle(d1: float, d2: float, s: float) -> float | None:
    """Rotation angle of the top eigenvector of [[d1, s], [s, d2]].

    ``arctan(2s / (sqrt(G^2 + 4s^2) + G))`` with G = d1 - d2, evaluated in the
    cancellation-free form for G < 0.  Returns None for an all-zero block.
    """
    scale = max(abs(d1), abs(d2), abs(s))
    if scale == 0.0:
        return None
    gap = d1 - d2
    if abs(gap) <= DEGENERACY_RTOL * scale and abs(s) <= DEGENERACY_RTOL * scale:
        raise DegenerateBlockError(f"block [[{d1}, {s}], [{s}, {d2}]] has a repeated top eigenvalue")
    root = math.hypot(gap, 2.0 * s)
    if gap >= 0:
        return math.atan2(2.0 * s, root + gap)
    return math.atan2(root - gap, 2.0 * s)


def angles_from_stats(b: BlockStats) -> tuple[float | None, float | None]:
    return block_angle(b.e0, b.o1, b.s_e), block_angle(b.e1, b.o0, b.s_o)


def _factor(angles: AngleSchedule, i: int, prefix_parity: int, bit: int) -> float:
    theta, phi = angles.at(i)
    if prefix_parity == 0:
        a = theta if bit == 0 else phi
        fn = math.cos
    else:
        a = theta if bit == 1 else phi
        fn = math.sin
    return 0.0 if a is None else fn(a)


def _bits(s) -> list[int]:
    if isinstance(s, str):
        return [int(c) for c in s]
    if hasattr(s, "symbols"):
        return [int(x) for x in s.symbols()]
    return [int(x) for x in s]


def string_weight(s, angles: AngleSchedule) -> float:
    """Product of the per-step factors for i = 2..len(s)."""
    bits = _bits(s)
    par = bits[0]
    w = 1.0
    for i in range(2, len(bits) + 1):
        w *= _factor(angles, i, par, bits[i - 1])
        par ^= bits[i - 1]
    return w


def prefix_weight(a, angles: AngleSchedule) -> float:
    """Weight of a length-k prefix: product of k-2 factors for i = 2..k-1."""
    bits = _bits(a)
    if len(bits) <= 2:
        return 1.0
    return string_weight(bits[:-1], angles)


def predict_overlap(angles: AngleSchedule, n: int | None = None) -> float:
    """Overlap of the angle-parametrised model with the uniform even state, O(N).

    Tracks the summed weights of even and odd prefixes through the chain.
    """
    n = angles.n if n is None else n
    even, odd = 1.0, 1.0
    for k in range(2, n + 1):
        theta, phi = angles.at(k)
        ct, st = (0.0, 0.0) if theta is None else (math.cos(theta), math.sin(theta))
        cp, sp = (0.0, 0.0) if phi is None else (math.cos(phi), math.sin(phi))
        even, odd = even * ct + odd * st, even * cp + odd * sp
    return even / math.sqrt(2.0 ** (n - 1))


def bhattacharya_distance(overlap: float, variant: str = "standard", n: int | None = None) -> float:
    """Bhattacharyya distance to the uniform even distribution from the overlap.

    ``standard`` is -ln(overlap).  ``paper-literal`` keeps the 1/sqrt(2^(N-1))
    prefactor outside the logarithm of the summed weights and needs ``n``.
    Non-positive overlap gives +inf.
    """
    if overlap <= 0.0:
        return math.inf
    if variant == "standard":
        return -math.log(overlap)
    if variant == "paper-literal":
        if n is None:
            raise ContractViolation("paper-literal distance needs N")
        root = math.sqrt(2.0 ** (n - 1))
        return -math.log(root * overlap) / root
    raise ContractViolation(f"unknown distance variant {variant!r}")


def expected_se(f: float, n_t: float) -> float:
    return f * n_t / 4.0


def hypergeometric_abs_gap(n: int, r: int) -> float:
    """E|2 d1 - r| for d1 ~ Hypergeometric(2n items, n marked, r drawn), via log-gamma."""
    if not 0 <= r <= 2 * n:
        raise ContractViolation(f"need 0 <= r <= 2n, got r={r}, n={n}")
    log_total = math.lgamma(2 * n + 1) - math.lgamma(r + 1) - math.lgamma(2 * n - r + 1)
    acc = 0.0
    for d1 in range(max(0, r - n), min(n, r) + 1):
        gap = abs(2 * d1 - r)
        if gap == 0:
            continue
        log_p = (
            math.lgamma(n + 1) - math.lgamma(d1 + 1) - math.lgamma(n - d1 + 1)
            + math.lgamma(n + 1) - math.lgamma(r - d1 + 1) - math.lgamma(n - r + d1 + 1)
            - log_total
        )
        acc += gap * math.exp(log_p)
    return acc


def expected_G2(n: int, n_t: int) -> float:
    """Expected step-2 diagonal gap |d1 - d2| for a random training set of size N_T."""
    if n < 3:
        raise ContractViolation("expected_G2 needs N >= 3")
    half = 2 ** (n - 3)
    r = int(math.floor(n_t / 2.0 + 0.5))
    return hypergeometric_abs_gap(half, r)


@dataclass
class CalibrationTable:
    """Gap multiplier c(f), linearly interpolated and clamped at the ends."""

    fractions: np.ndarray
    factors: np.ndarray
    n: int | None = None
    source: str | None = field(default=None, compare=False)

    def __post_init__(self):
        self.fractions = np.asarray(self.fractions, dtype=np.float64)
        self.factors = np.asarray(self.factors, dtype=np.float64)
        order = np.argsort(self.fractions)
        self.fractions, self.factors = self.fractions[order], self.factors[order]

    @classmethod
    def identity(cls) -> "CalibrationTable":
        return cls(np.array([1.0]), np.array([1.0]), None, "identity")

    def factor(self, f: float) -> float:
        return float(np.interp(f, self.fractions, self.factors))

    def save(self, path, header: str | None = None) -> None:
        lines = []
        if header:
            lines += [f"# {line}" for line in header.splitlines()]
        if self.n is not None:
            lines.append(f"# N={self.n}")
        lines.append("f,c")
        lines += [f"{float(f)!r},{float(c)!r}" for f, c in zip(self.fractions, self.factors)]
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def load(cls, path) -> "CalibrationTable":
        return cls._parse(Path(path).read_text(), str(path))

    @classmethod
    def _parse(cls, text: str, source: str) -> "CalibrationTable":
        fs, cs, n = [], [], None
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                if line[1:].strip().startswith("N="):
                    n = int(line[1:].strip()[2:])
                continue
            if line.replace(" ", "") == "f,c":
                continue
            f, c = line.split(",")
            fs.append(float(f))
            cs.append(float(c))
        if not fs:
            raise ContractViolation(f"{source}: calibration table has no rows")
        return cls(np.array(fs), np.array(cs), n, source)


def load_default_calibration() -> CalibrationTable | None:
    try:
        text = resources.files("mps_seqmodel").joinpath("data", DEFAULT_CALIBRATION).read_text()
    except (FileNotFoundError, OSError):
        return None
    return CalibrationTable._parse(text, DEFAULT_CALIBRATION)


def gap_model(f: float, g2: float, k: int, table: CalibrationTable | None = None) -> float:
    """Expected |G_e| at step k: c(f) * E[G2].  The multiplier does not depend on k."""
    if table is None:
        table = load_default_calibration()
        if table is None:
            log.warning("no gap calibration table found; using c(f) = 1")
            table = CalibrationTable.identity()
    return table.factor(f) * g2


def predict_curve(n: int, grid: Sequence[float], table: CalibrationTable | None = None,
                  variant: str = "standard") -> list[PredictionPoint]:
    """Predicted overlap and distance for each training fraction.

    Uses one angle for both sectors and all steps, from the expected
    off-diagonal f*N_T/4 and the calibrated expected gap.
    """
    if table is None:
        table = load_default_calibration()
        if table is None:
            log.warning("no gap calibration table found; using c(f) = 1")
            table = CalibrationTable.identity()
    points = []
    for f in grid:
        n_t = training_size(n, f)
        s = expected_se(f, n_t)
        g2 = expected_G2(n, n_t) if n_t >= 1 else 0.0
        gap = gap_model(f, g2, 2, table)
        # both diagonal entries are positive in expectation; only their difference enters
        theta = block_angle(gap, 0.0, s) if s > 0 else 0.0
        angles = AngleSchedule.uniform(n, theta)
        ov = predict_overlap(angles)
        points.append(PredictionPoint(float(f), n_t, ov, bhattacharya_distance(ov, variant, n)))
    return points


def _class_sums(gid: np.ndarray, n_groups: int, weights: np.ndarray, mask: np.ndarray) -> np.ndarray:
    return np.bincount(gid, weights=np.where(mask, weights, 0.0), minlength=n_groups)


def block_entries(T: TrainingSet, k: int, angles: AngleSchedule) -> BlockStats:
    """Step-k block entries from prefix weights and shared suffixes.

    e0 = sum_b (sum of w(a) over E0 prefixes paired with b)^2, the other
    diagonals alike; s_e pairs E0 with O1 prefixes, s_o pairs E1 with O0.
    """
    sym = T.symbols()
    ids = suffix_group_ids(sym, 2)
    weights = np.array([prefix_weight(row[:k], angles) for row in sym])
    parity = sym[:, : k - 1].sum(axis=1) % 2
    return _entries(sym[:, k - 1], parity, ids[k], weights)


def _entries(bit, parity, gid, weights) -> BlockStats:
    n_groups = int(gid.max()) + 1
    e0 = _class_sums(gid, n_groups, weights, (parity == 0) & (bit == 0))
    o1 = _class_sums(gid, n_groups, weights, (parity == 1) & (bit == 1))
    e1 = _class_sums(gid, n_groups, weights, (parity == 0) & (bit == 1))
    o0 = _class_sums(gid, n_groups, weights, (parity == 1) & (bit == 0))
    return BlockStats(
        e0=float(e0 @ e0), o1=float(o1 @ o1), e1=float(e1 @ e1), o0=float(o0 @ o0),
        s_e=float(e0 @ o1), s_o=float(e1 @ o0),
    )


def exact_replay(T: TrainingSet) -> tuple[AngleSchedule, list[BlockStats]]:
    """Angles and block entries the bond-2 trainer produces on ``T``.

    Computed combinatorially from prefix weights, without any
    eigendecomposition.  Raises DegenerateBlockError when a nonzero block has
    zero gap and zero off-diagonal.
    """
    sym = T.symbols().astype(np.int64)
    n_t, n = sym.shape
    if n < 2:
        raise ContractViolation("exact_replay needs N >= 2")
    ids = suffix_group_ids(sym, 2)
    weights = np.ones(n_t)
    parity = sym[:, 0].copy()
    thetas, phis, stats = [], [], []
    for k in range(2, n + 1):
        bit = sym[:, k - 1]
        st = _entries(bit, parity, ids[k], weights)
        theta, phi = angles_from_stats(st)
        thetas.append(theta)
        phis.append(phi)
        stats.append(st)
        ct, s_t = (0.0, 0.0) if theta is None else (math.cos(theta), math.sin(theta))
        cp, s_p = (0.0, 0.0) if phi is None else (math.cos(phi), math.sin(phi))
        factor = np.where(
            parity == 0,
            np.where(bit == 0, ct, cp),
            np.where(bit == 1, s_t, s_p),
        )
        weights = weights * factor
        parity = parity ^ bit
    return AngleSchedule(n, tuple(thetas), tuple(phis)), stats
