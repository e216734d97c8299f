"""Block algebra for permutation-symmetric qubit ensembles.

A source emitting n identical qubits of Bloch length r produces a state that
is block diagonal over total-angular-momentum subspaces.  This module holds
the spectral data of those blocks (weights a_m, normalization c_j, block
probabilities p_j), operators stored per invariant sector, the averaged
difference operators whose trace norm controls every error probability in
the package, and the large-n limit of the block distribution.

Conventions: every irrep basis is ordered by ascending magnetic number, the
qubit basis is (down, up), and multiplicity spaces are dropped everywhere --
they enter only through the probabilities p_j.  Operators are immutable
after construction (sector arrays are marked read-only).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Literal

import numpy as np

from .su2 import HalfInteger, HalfIntLike, _cg_doubled, as_half, multiplicity

HERMITICITY_TOL = 1e-10

BASIS_AC_COUPLED = "ac-coupled"      # sector index = doubled coupled momentum j
BASIS_ABC_PRODUCT = "abc-product"    # sector index = (2mA, 2mB, 2mC) tuples


class IntegrityError(RuntimeError):
    """A numerical object violated one of its structural invariants."""


@dataclass(frozen=True)
class SpectrumParams:
    """Source configuration: n qubits per training side, Bloch length r."""

    n: int
    r: float

    def __post_init__(self):
        if self.n < 0:
            raise ValueError(f"n must be non-negative, got {self.n}")
        if not 0.0 < self.r <= 1.0:
            raise ValueError(f"purity must lie in (0, 1], got {self.r}")


@dataclass(frozen=True)
class BlockLabel:
    """Pair of total angular momenta (one per training side) naming a block."""

    jA: HalfInteger
    jC: HalfInteger

    def __post_init__(self):
        for j in (self.jA, self.jC):
            if j.twice_value < 0:
                raise ValueError(f"block momenta must be non-negative, got {j}")

    @staticmethod
    def of(jA: HalfIntLike, jC: HalfIntLike) -> "BlockLabel":
        return BlockLabel(as_half(jA), as_half(jC))


@dataclass
class BlockWeights:
    """Spectral data of one block: magnetic weights, normalization, probability."""

    j: HalfInteger
    a: np.ndarray          # weights a_m for m = -j..j (ascending), sum 1
    c: float
    p: float


def block_weights(params: SpectrumParams) -> list[BlockWeights]:
    """Weights a_m^j, normalizations c_j and probabilities p_j^n for all j.

    a_m^j = ((1-r)/2)^(j-m) ((1+r)/2)^(j+m) / c_j,
    c_j   = (((1+r)/2)^(2j+1) - ((1-r)/2)^(2j+1)) / r,
    p_j^n = nu_j^n c_j ((1-r^2)/4)^(n/2-j).
    """
    n, r = params.n, params.r
    lo, hi = (1.0 - r) / 2.0, (1.0 + r) / 2.0
    out = []
    for tj in range(n % 2, n + 1, 2):
        c = (hi ** (tj + 1) - lo ** (tj + 1)) / r
        a = np.array([lo ** ((tj - tm) // 2) * hi ** ((tj + tm) // 2)
                      for tm in range(-tj, tj + 1, 2)]) / c
        p = multiplicity(n, HalfInteger(tj)) * c * ((1.0 - r * r) / 4.0) ** ((n - tj) // 2)
        a.flags.writeable = False
        out.append(BlockWeights(j=HalfInteger(tj), a=a, c=c, p=p))
    return out


def jz_expectation(j: HalfIntLike, r: float) -> float:
    """Mean magnetic number sum_m m a_m^j of a spin-j block at purity r."""
    tj = as_half(j).twice_value
    if tj < 0:
        raise ValueError(f"j must be non-negative, got {tj}/2")
    if not 0.0 < r <= 1.0:
        raise ValueError(f"purity must lie in (0, 1], got {r}")
    if tj == 0:
        return 0.0
    w = block_weights(SpectrumParams(n=tj, r=r))[-1]  # j = n/2 block of 2j qubits
    ms = np.arange(-tj, tj + 1, 2) / 2.0
    return float(ms @ w.a)


@dataclass
class BlockOperator:
    """A Hermitian operator stored per total-magnetic-number sector.

    ``sectors`` maps a doubled total magnetic number to a Hermitian matrix;
    ``index`` gives the basis labels of each sector (doubled coupled momenta
    for two-body operators on the training pair, or (2mA, 2mB, 2mC) product
    labels for three-body difference operators).
    """

    label: BlockLabel
    basis: str
    sectors: dict[int, np.ndarray]
    index: dict[int, tuple]

    def __post_init__(self):
        for tm, mat in self.sectors.items():
            if mat.shape != (len(self.index[tm]),) * 2:
                raise IntegrityError(f"sector {tm}/2 shape {mat.shape} does not match its index")
            if np.abs(mat - mat.conj().T).max() > HERMITICITY_TOL:
                raise IntegrityError(f"sector {tm}/2 is not Hermitian within {HERMITICITY_TOL}")
            mat.flags.writeable = False

    def trace(self) -> float:
        return float(sum(np.trace(m).real for m in self.sectors.values()))

    def iter_sectors(self) -> Iterator[tuple[int, np.ndarray]]:
        return iter(sorted(self.sectors.items()))

    def to_json_dict(self) -> dict:
        return {
            "label": {"jA": str(self.label.jA), "jC": str(self.label.jC)},
            "basis": self.basis,
            "sectors": [
                {
                    "twice_m": tm,
                    "index": [list(x) if isinstance(x, tuple) else x for x in self.index[tm]],
                    "matrix": np.asarray(mat).real.tolist(),
                }
                for tm, mat in self.iter_sectors()
            ],
        }


def combine(ops: list[BlockOperator], coeffs: list[float]) -> BlockOperator:
    """Linear combination of same-shaped block operators."""
    first = ops[0]
    sectors = {}
    for tm in first.sectors:
        acc = np.zeros_like(np.asarray(first.sectors[tm], dtype=float))
        for op, c in zip(ops, coeffs):
            acc = acc + c * op.sectors[tm]
        sectors[tm] = acc
    return BlockOperator(label=first.label, basis=first.basis, sectors=sectors,
                         index=dict(first.index))


def trace_norm(op: BlockOperator) -> float:
    """Sum of absolute eigenvalues over all sectors."""
    total = 0.0
    for tm, mat in op.sectors.items():
        if np.abs(mat - mat.conj().T).max() > HERMITICITY_TOL:
            raise IntegrityError(f"sector {tm}/2 is not Hermitian within {HERMITICITY_TOL}")
        sym = (mat + mat.conj().T) / 2.0
        total += float(np.abs(np.linalg.eigvalsh(sym)).sum())
    return total


# ---------------------------------------------------------------------------
# Coupled-basis machinery on the training pair (A, C)


def coupled_sector_index(label: BlockLabel, tm: int) -> tuple[int, ...]:
    """Doubled coupled momenta j present in the total-m sector of jA x jC."""
    ta, tc = label.jA.twice_value, label.jC.twice_value
    lo = max(abs(ta - tc), abs(tm))
    return tuple(range(lo, ta + tc + 1, 2))


def sector_range(label: BlockLabel) -> range:
    ta, tc = label.jA.twice_value, label.jC.twice_value
    return range(-(ta + tc), ta + tc + 1, 2)


def coupled_jz_sector(label: BlockLabel, which: Literal["A", "C"], tm: int) -> np.ndarray:
    """Matrix of Jz on one training side, in the coupled |j, m> basis of one sector."""
    return _coupled_jz_sector_cached(
        label.jA.twice_value, label.jC.twice_value, which, tm
    )


@lru_cache(maxsize=None)
def _coupled_jz_sector_cached(ta: int, tc: int, which: str, tm: int) -> np.ndarray:
    if which not in ("A", "C"):
        raise ValueError(f"which must be 'A' or 'C', got {which!r}")
    tjs = coupled_sector_index(BlockLabel(HalfInteger(ta), HalfInteger(tc)), tm)
    d = len(tjs)
    mat = np.zeros((d, d))
    tma_lo, tma_hi = max(-ta, tm - tc), min(ta, tm + tc)
    for a, tj in enumerate(tjs):
        for b in range(a, d):
            tjp = tjs[b]
            s = 0.0
            for tma in range(tma_lo, tma_hi + 1, 2):
                w = 0.5 * (tma if which == "A" else tm - tma)
                if w != 0.0:
                    s += w * _cg_doubled(ta, tma, tc, tm - tma, tj, tm) \
                           * _cg_doubled(ta, tma, tc, tm - tma, tjp, tm)
            mat[a, b] = mat[b, a] = s
    mat.flags.writeable = False
    return mat


def coupled_jz(label: BlockLabel, which: Literal["A", "C"]) -> BlockOperator:
    """Jz of one training side as a block operator in the coupled basis."""
    sectors, index = {}, {}
    for tm in sector_range(label):
        sectors[tm] = np.array(coupled_jz_sector(label, which, tm))
        index[tm] = coupled_sector_index(label, tm)
    return BlockOperator(label=label, basis=BASIS_AC_COUPLED, sectors=sectors, index=index)


@lru_cache(maxsize=None)
def coupling_isometry(tj1: int, tj2: int) -> np.ndarray:
    """Orthogonal map from the product basis of j1 x j2 to the coupled basis.

    Rows are coupled states ordered by (ascending j, ascending m); columns are
    product states ordered by (ascending m1, ascending m2).
    """
    d1, d2 = tj1 + 1, tj2 + 1
    V = np.zeros((d1 * d2, d1 * d2))
    row = 0
    for tj in range(abs(tj1 - tj2), tj1 + tj2 + 1, 2):
        for tm in range(-tj, tj + 1, 2):
            for i1, tm1 in enumerate(range(-tj1, tj1 + 1, 2)):
                tm2 = tm - tm1
                if abs(tm2) <= tj2:
                    i2 = (tm2 + tj2) // 2
                    V[row, i1 * d2 + i2] = _cg_doubled(tj1, tm1, tj2, tm2, tj, tm)
            row += 1
    V.flags.writeable = False
    return V


@lru_cache(maxsize=None)
def sym_plus_projector(tj: int) -> np.ndarray:
    """Projector onto total momentum j + 1/2 inside spin-j x qubit (product basis)."""
    d = tj + 1
    P = np.zeros((2 * d, 2 * d))
    for tM in range(-(tj + 1), tj + 2, 2):
        v = np.zeros(2 * d)
        for i, tm in enumerate(range(-tj, tj + 1, 2)):
            for ib, tmb in enumerate((-1, 1)):
                if tm + tmb == tM:
                    v[i * 2 + ib] = _cg_doubled(tj, tm, 1, tmb, tj + 1, tM)
        P += np.outer(v, v)
    P.flags.writeable = False
    return P


# ---------------------------------------------------------------------------
# Averaged difference operators


def _alpha(tj: int, r: float) -> float:
    """Coefficient r <Jz>_j / j splitting a block between its two couplings."""
    if tj == 0:
        return 0.0
    return r * jz_expectation(HalfInteger(tj), r) / (tj / 2.0)


def _sigma_pair_block(label: BlockLabel, params: SpectrumParams) -> tuple[np.ndarray, np.ndarray]:
    """Dense averaged states (sigma0, sigma1) of one block, on spin(jA) x qubit x spin(jC)."""
    ta, tc = label.jA.twice_value, label.jC.twice_value
    dA, dC = ta + 1, tc + 1
    aA, aC = _alpha(ta, params.r), _alpha(tc, params.r)
    iA, iB, iC = np.eye(dA), np.eye(2), np.eye(dC)

    # sigma0: data qubit correlated with side A
    ab = aA * sym_plus_projector(ta) / (ta + 2) + (1.0 - aA) * np.kron(iA, iB) / (2 * dA)
    s0 = np.kron(ab, iC / dC)
    # sigma1: data qubit correlated with side C; qubit sits left of C in (B, C) order
    bc = aC * _plus_projector_qubit_first(tc) / (tc + 2) + (1.0 - aC) * np.kron(iB, iC) / (2 * dC)
    s1 = np.kron(iA / dA, bc)
    return s0, s1


@lru_cache(maxsize=None)
def _plus_projector_qubit_first(tj: int) -> np.ndarray:
    """Projector onto total momentum j + 1/2 inside qubit x spin-j (product basis)."""
    d = tj + 1
    P = np.zeros((2 * d, 2 * d))
    for tM in range(-(tj + 1), tj + 2, 2):
        v = np.zeros(2 * d)
        for ib, tmb in enumerate((-1, 1)):
            for i, tm in enumerate(range(-tj, tj + 1, 2)):
                if tm + tmb == tM:
                    v[ib * d + i] = _cg_doubled(1, tmb, tj, tm, tj + 1, tM)
        P += np.outer(v, v)
    P.flags.writeable = False
    return P


def product_sector_index(label: BlockLabel, tm: int) -> tuple[tuple[int, int, int], ...]:
    """(2mA, 2mB, 2mC) labels, in kron order, of one total-m sector of A x B x C."""
    ta, tc = label.jA.twice_value, label.jC.twice_value
    out = []
    for tma in range(-ta, ta + 1, 2):
        for tmb in (-1, 1):
            tmc = tm - tma - tmb
            if abs(tmc) <= tc:
                out.append((tma, tmb, tmc))
    return tuple(out)


def dense_to_sectors(mat: np.ndarray, label: BlockLabel) -> BlockOperator:
    """Chop a dense operator on spin(jA) x qubit x spin(jC) into total-m sectors."""
    ta, tc = label.jA.twice_value, label.jC.twice_value
    dA, dC = ta + 1, tc + 1
    if mat.shape != (dA * 2 * dC, dA * 2 * dC):
        raise ValueError(f"operator shape {mat.shape} does not match label {label}")

    def flat(lbl):
        tma, tmb, tmc = lbl
        return ((tma + ta) // 2 * 2 + (tmb + 1) // 2) * dC + (tmc + tc) // 2

    sectors, index = {}, {}
    for tm in range(-(ta + tc + 1), ta + tc + 2, 2):
        lbls = product_sector_index(label, tm)
        if not lbls:
            continue
        ix = np.array([flat(l) for l in lbls])
        sectors[tm] = mat[np.ix_(ix, ix)].copy()
        index[tm] = lbls
    return BlockOperator(label=label, basis=BASIS_ABC_PRODUCT, sectors=sectors, index=index)


def average_state_diff_mixed(label: BlockLabel, params: SpectrumParams) -> BlockOperator:
    """sigma0 - sigma1 of one block, per total-m sector in the product basis."""
    ta, tc = label.jA.twice_value, label.jC.twice_value
    if ta > params.n or tc > params.n or (params.n - ta) % 2 or (params.n - tc) % 2:
        raise ValueError(f"label {label} is not admissible for n={params.n}")
    s0, s1 = _sigma_pair_block(label, params)
    return dense_to_sectors(s0 - s1, label)


def average_state_diff_pure(n: int) -> BlockOperator:
    """sigma0 - sigma1 for n pure training qubits per side."""
    if n < 1:
        raise ValueError(f"need at least one training qubit per side, got n={n}")
    label = BlockLabel(HalfInteger(n), HalfInteger(n))
    return average_state_diff_mixed(label, SpectrumParams(n=n, r=1.0))


# ---------------------------------------------------------------------------
# Large-n continuum limit of the block distribution


def asymptotic_block_distribution(n: int, r: float, x: float) -> float:
    """Continuum density p_n(x) of the scaled block momentum x = 2j/n.

    p_n(x) = sqrt(n / (2 pi)) (1 - x^2)^(-1/2) x (1+r) / (r (1+x))
             exp(-n H((1+x)/2 || (1+r)/2))

    with H the binary relative entropy (natural log).  Valid for x, r in (0, 1).
    """
    if not 0.0 < x < 1.0 or not 0.0 < r < 1.0:
        raise ValueError(f"x and r must lie strictly inside (0, 1), got x={x}, r={r}")
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    s, t = (1.0 + x) / 2.0, (1.0 + r) / 2.0
    H = s * math.log(s / t) + (1.0 - s) * math.log((1.0 - s) / (1.0 - t))
    pref = math.sqrt(n / (2.0 * math.pi)) / math.sqrt(1.0 - x * x) * (x * (1.0 + r)) / (r * (1.0 + x))
    return pref * math.exp(-n * H)
