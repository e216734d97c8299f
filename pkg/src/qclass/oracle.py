"""Independent brute-force verification layer.

Everything in this module re-derives quantities from first principles --
explicit matrices, quadrature over the rotation group, Monte Carlo sampling
of measurement chains -- without going through the closed forms or the block
algebra it is meant to check.  Two oracle families with independent failure
modes: deterministic constructions (quadrature twirls, dense eigensolves)
and statistical simulation of the actual measurement protocol.

Basis conventions match the rest of the package: magnetic numbers ascend, so
the qubit basis is (down, up) and a spin coherent state along +z is the last
basis vector.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from . import blocks as blk
from . import machines
from .su2 import _cg_doubled, multiplicity

MAX_FULL_QUBITS = 12  # dense full-product-space construction guard

# Pauli matrices in the (down, up) basis
PAULI = {
    "x": np.array([[0.0, 1.0], [1.0, 0.0]], complex),
    "y": np.array([[0.0, 1.0j], [-1.0j, 0.0]], complex),
    "z": np.array([[-1.0, 0.0], [0.0, 1.0]], complex),
}


@dataclass(frozen=True)
class RandomSource:
    """Pinned pseudo-random stream: identical seed, identical results."""

    seed: int
    algorithm: str = "numpy:PCG64"

    def generator(self) -> np.random.Generator:
        if self.algorithm != "numpy:PCG64":
            raise ValueError(f"unknown rng algorithm {self.algorithm!r}")
        return np.random.Generator(np.random.PCG64(self.seed))


@dataclass
class DenseOperator:
    """Explicit matrix with its tensor-factor layout."""

    matrix: np.ndarray
    dims: tuple[int, ...]
    basis: str
    is_state: bool = False

    def __post_init__(self):
        d = int(np.prod(self.dims))
        if self.matrix.shape != (d, d):
            raise ValueError(f"matrix shape {self.matrix.shape} does not match dims {self.dims}")
        if np.abs(self.matrix - self.matrix.conj().T).max() > 1e-10:
            raise blk.IntegrityError("dense operator is not Hermitian within 1e-10")
        if self.is_state and abs(np.trace(self.matrix).real - 1.0) > 1e-10:
            raise blk.IntegrityError("state does not have unit trace")


# ---------------------------------------------------------------------------
# Sampling


def haar_qubit(rng: RandomSource | np.random.Generator) -> np.ndarray:
    """One uniformly random pure qubit state, as a Bloch unit vector."""
    gen = rng.generator() if isinstance(rng, RandomSource) else rng
    return _haar_bloch(gen, 1)[0]


def _haar_bloch(gen: np.random.Generator, size: int) -> np.ndarray:
    v = gen.standard_normal((size, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def bloch_to_ket(s: np.ndarray) -> np.ndarray:
    """Pure state with Bloch vector s, in the (down, up) basis."""
    sx, sy, sz = np.moveaxis(np.atleast_2d(s), -1, 0)
    ct = np.sqrt(np.clip((1.0 + sz) / 2.0, 0.0, 1.0))  # cos(theta/2)
    st = np.sqrt(np.clip((1.0 - sz) / 2.0, 0.0, 1.0))
    phi = np.arctan2(sy, sx)
    ket = np.stack([st * np.exp(1j * phi), ct.astype(complex)], axis=-1)
    return ket[0] if np.ndim(s) == 1 else ket


def coherent_ket(k: int, qubit: np.ndarray) -> np.ndarray:
    """Amplitudes of (qubit state)^(x k) in the symmetric basis, m ascending."""
    down, up = qubit[..., 0], qubit[..., 1]
    u = np.arange(k + 1)
    w = np.sqrt([math.comb(k, int(i)) for i in u])
    return w * down[..., None] ** (k - u) * up[..., None] ** u


# ---------------------------------------------------------------------------
# Quadrature over rotations


@lru_cache(maxsize=None)
def _sphere_grid(n_azimuth: int, n_polar: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(alpha, beta, weight) grid integrating the sphere exactly for low degree."""
    nodes, wts = np.polynomial.legendre.leggauss(n_polar)
    beta = np.arccos(nodes)
    alpha = 2.0 * np.pi * np.arange(n_azimuth) / n_azimuth
    A, B = np.meshgrid(alpha, beta, indexing="ij")
    W = np.tile(wts / (2.0 * n_azimuth), (n_azimuth, 1))
    return A.ravel(), B.ravel(), W.ravel()


def _su2_elements(alpha: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """Spinor rotations Rz(alpha) Ry(beta), batched, in the (down, up) basis."""
    c, s = np.cos(beta / 2.0), np.sin(beta / 2.0)
    ea = np.exp(0.5j * alpha)
    u = np.empty(alpha.shape + (2, 2), complex)
    # Ry(beta) maps up -> cos|up> + sin|down>; phases from Rz act per basis vector
    u[..., 0, 0] = ea * c
    u[..., 0, 1] = ea * s
    u[..., 1, 0] = -np.conj(ea) * s
    u[..., 1, 1] = np.conj(ea) * c
    return u


def twirl_product(k: int, single_qubit_diag: np.ndarray,
                  n_azimuth: int = 24, n_polar: int = 24) -> np.ndarray:
    """Group average of U^(x k) D U^(x k)+ on the full 2^k space, D diagonal.

    Quadrature over (alpha, beta) only: a z-diagonal D makes the third Euler
    angle drop out.  Exact once the grid covers polynomial degree 2k.
    """
    if k > MAX_FULL_QUBITS:
        raise ValueError(f"refusing dense {2**k}-dimensional twirl (k={k})")
    alpha, beta, w = _sphere_grid(n_azimuth, n_polar)
    us = _su2_elements(alpha, beta)
    out = np.zeros((2 ** k, 2 ** k), complex)
    dvec = np.array([1.0])
    for _ in range(k):
        dvec = np.kron(dvec, single_qubit_diag)
    for q in range(len(w)):
        U = np.array([[1.0]], complex)
        for _ in range(k):
            U = np.kron(U, us[q])
        out += w[q] * (U * dvec) @ U.conj().T
    return out


def _coherent_average(k: int, n_azimuth: int = 24, n_polar: int = 24) -> np.ndarray:
    """Average of [psi^(x k)] over the sphere, on the symmetric subspace."""
    alpha, beta, w = _sphere_grid(n_azimuth, n_polar)
    kets = _su2_elements(alpha, beta)[:, :, 1]  # rotated spin-up column
    amps = coherent_ket(k, kets)
    return np.einsum("q,qi,qj->ij", w, amps, amps.conj())


def _coherent_pair_average(k: int, n_azimuth: int = 24, n_polar: int = 24) -> np.ndarray:
    """Average of [psi^(x k)] (x) [psi] over the sphere, on sym(k) x qubit."""
    alpha, beta, w = _sphere_grid(n_azimuth, n_polar)
    kets = _su2_elements(alpha, beta)[:, :, 1]
    amps = coherent_ket(k, kets)
    joint = np.einsum("qi,qj->qij", amps, kets).reshape(len(w), -1)
    return np.einsum("q,qi,qj->ij", w, joint, joint.conj())


def build_average_states(nA: int, nC: int, r: float = 1.0, nB: int = 1,
                         n_azimuth: int = 24, n_polar: int = 24
                         ) -> tuple[DenseOperator, DenseOperator]:
    """The two averaged hypothesis states, built by explicit group quadrature.

    Pure sources (r = 1) live on sym(nA) x qubit x sym(nC); mixed sources are
    built on the full qubit product space (layout A..A, B, C..C).  Only the
    definition of the averages is used: no block formulas, no coupling
    coefficients.
    """
    if nB != 1:
        raise ValueError("exactly one data qubit is supported")
    if nA < 0 or nC < 0:
        raise ValueError("qubit counts must be non-negative")
    if not 0.0 < r <= 1.0:
        raise ValueError(f"purity must lie in (0, 1], got {r}")
    if r == 1.0:
        F0 = _coherent_pair_average(nA, n_azimuth, n_polar)      # on A x B
        G0 = _coherent_average(nC, n_azimuth, n_polar)           # on C
        F1 = _coherent_average(nA, n_azimuth, n_polar)
        # B left of C: average of [psi] (x) [psi^(x nC)]
        alpha, beta, w = _sphere_grid(n_azimuth, n_polar)
        kets = _su2_elements(alpha, beta)[:, :, 1]
        ampsC = coherent_ket(nC, kets)
        joint = np.einsum("qi,qj->qij", kets, ampsC).reshape(len(w), -1)
        G1 = np.einsum("q,qi,qj->ij", w, joint, joint.conj())
        dims = (nA + 1, 2, nC + 1)
        s0 = DenseOperator(np.kron(F0, G0), dims, "sym:A,B,C", is_state=True)
        s1 = DenseOperator(np.kron(F1, G1), dims, "sym:A,B,C", is_state=True)
        return s0, s1
    total = nA + nB + nC
    if total > MAX_FULL_QUBITS:
        raise ValueError(f"mixed-state construction needs {2**total} dimensions; "
                         f"cap is 2^{MAX_FULL_QUBITS}")
    pz = np.array([(1.0 - r) / 2.0, (1.0 + r) / 2.0])
    TA1 = twirl_product(nA + 1, pz, n_azimuth, n_polar)
    TA0 = twirl_product(nA, pz, n_azimuth, n_polar) if nA else np.array([[1.0]], complex)
    TC1 = twirl_product(nC + 1, pz, n_azimuth, n_polar)
    TC0 = twirl_product(nC, pz, n_azimuth, n_polar) if nC else np.array([[1.0]], complex)
    dims = (2,) * total
    s0 = DenseOperator(np.kron(TA1, TC0), dims, "qubits:A,B,C", is_state=True)
    s1 = DenseOperator(np.kron(TA0, TC1), dims, "qubits:A,B,C", is_state=True)
    return s0, s1


# ---------------------------------------------------------------------------
# Dense discrimination and conditioning


def helstrom(state0: DenseOperator | np.ndarray, state1: DenseOperator | np.ndarray,
             priors: tuple[float, float] = (0.5, 0.5)) -> float:
    """Minimum discrimination error (1 - || p0 s0 - p1 s1 ||_1) / 2."""
    if abs(sum(priors) - 1.0) > 1e-12 or min(priors) < 0:
        raise ValueError(f"priors must be a distribution, got {priors}")
    m0 = state0.matrix if isinstance(state0, DenseOperator) else state0
    m1 = state1.matrix if isinstance(state1, DenseOperator) else state1
    diff = priors[0] * m0 - priors[1] * m1
    diff = (diff + diff.conj().T) / 2.0
    return 0.5 * (1.0 - float(np.abs(np.linalg.eigvalsh(diff)).sum()))


def conditioned_training_operator(diff: np.ndarray, dims: tuple[int, ...],
                                  data_axis: int) -> np.ndarray:
    """<up| . |up> on the data qubit: the conditioned training-set operator."""
    k = len(dims)
    t = diff.reshape(dims + dims)
    t = np.moveaxis(t, (data_axis, k + data_axis), (0, 1))
    g = t[1, 1]  # up, up
    rest = int(np.prod(dims)) // dims[data_axis]
    return g.reshape(rest, rest)


def partial_transpose(matrix: np.ndarray, dims: tuple[int, ...], axis: int) -> np.ndarray:
    """Transpose one tensor factor of an operator."""
    k = len(dims)
    t = matrix.reshape(dims + dims)
    t = np.swapaxes(t, axis, k + axis)
    d = int(np.prod(dims))
    return t.reshape(d, d)


def ppt_check(n: int, kernel_weight: float = 0.5) -> float:
    """Minimum eigenvalue of the data-side partial transpose of the optimal
    joint-measurement element, for n pure training qubits per side.

    The element projects onto the positive part of the state difference; its
    action on the kernel of the difference does not affect the error, and the
    canonical minimum-error measurement splits the kernel evenly between the
    two outcomes (``kernel_weight`` = 1/2).  Positivity under partial
    transposition holds for that canonical element; the bare positive-part
    projector (``kernel_weight`` = 0) is *not* positive under transposition,
    so the kernel completion is what carries the property.
    """
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    s0, s1 = build_average_states(n, n, r=1.0)
    diff = (s0.matrix - s1.matrix)
    diff = (diff + diff.conj().T) / 2.0
    w, V = np.linalg.eigh(diff)
    pos = w > 1e-12
    ker = np.abs(w) <= 1e-12
    E0 = V[:, pos] @ V[:, pos].conj().T + kernel_weight * (V[:, ker] @ V[:, ker].conj().T)
    pt = partial_transpose(E0, s0.dims, axis=1)
    pt = (pt + pt.conj().T) / 2.0
    return float(np.linalg.eigvalsh(pt).min())


# ---------------------------------------------------------------------------
# Schur reduction of the full product space (for mixed-state cross-checks)


@lru_cache(maxsize=None)
def schur_isometries(k: int) -> dict[int, list[np.ndarray]]:
    """Orthonormal bases of every angular momentum copy inside k qubits.

    Maps doubled momentum 2j to a list (one entry per coupling path) of
    (2^k, 2j+1) isometries with columns ordered by ascending m.  Built by
    coupling one qubit at a time with explicit coefficients.
    """
    if k < 1:
        raise ValueError("need at least one qubit")
    states = {(1, ()): np.eye(2)}  # doubled j, path -> (2^1, 2) columns m=-j..j
    for step in range(1, k):
        nxt: dict[tuple, np.ndarray] = {}
        for (tj, path), W in states.items():
            dim_in = W.shape[0]
            for tj2 in (tj + 1, tj - 1):
                if tj2 < 0:
                    continue
                cols = []
                for tm2 in range(-tj2, tj2 + 1, 2):
                    v = np.zeros(dim_in * 2)
                    for i, tm in enumerate(range(-tj, tj + 1, 2)):
                        for ib, tmb in enumerate((-1, 1)):
                            if tm + tmb == tm2:
                                c = _cg_doubled(tj, tm, 1, tmb, tj2, tm2)
                                if c:
                                    v += c * np.kron(W[:, i], np.eye(2)[ib])
                    cols.append(v)
                nxt[(tj2, path + (tj2,))] = np.array(cols).T
        states = nxt
    out: dict[int, list[np.ndarray]] = {}
    for (tj, path), W in sorted(states.items(), key=lambda kv: (kv[0][0], kv[0][1])):
        out.setdefault(tj, []).append(W)
    for tj, paths in out.items():
        assert len(paths) == multiplicity(k, blk.HalfInteger(tj))
    return out


# ---------------------------------------------------------------------------
# Learning-machine simulation


@dataclass(frozen=True)
class SimulationResult:
    error_rate: float
    stderr: float
    trials: int
    mode: str
    seed: int


def simulate_lm(n: int, seed_vector: machines.SeedVector, rng: RandomSource,
                trials: int, discretization: str = "mc",
                pre_rotation: Optional[np.ndarray] = None,
                batch: int = 250_000) -> SimulationResult:
    """Empirical error rate of the two-stage machine over random state pairs.

    Each trial draws hidden states, samples the covariant training
    measurement -- exactly via rejection ("mc") or through a finite grid
    whose resolution of the identity is certified on the fly ("quadrature")
    -- then orients a Stern-Gerlach along the sampled direction and
    classifies.  ``pre_rotation`` applies a fixed rotation to both hidden
    states (covariance probe).
    """
    if seed_vector.n != n:
        raise ValueError(f"seed is for n={seed_vector.n}, not {n}")
    if not machines.verify_seed(seed_vector):
        raise ValueError("seed fails the completeness condition")
    if discretization not in ("mc", "quadrature"):
        raise ValueError(f"unknown discretization {discretization!r}")
    if trials < 1:
        raise ValueError("need at least one trial")
    gen = rng.generator()
    coeffs = seed_vector.coefficients
    # seed overlap in the (mA, mC = -mA) product sector; coupled j runs 0..n
    w_pair = np.array([
        sum(float(coeffs[tj // 2]) * _cg_doubled(n, tma, n, -tma, tj, 0)
            for tj in range(0, 2 * n + 1, 2))
        for tma in range(-n, n + 1, 2)
    ])
    envelope = float((coeffs ** 2).sum())

    if discretization == "quadrature":
        alpha, beta, wq = _sphere_grid(2 * n + 3, n + 2)
        us_grid = _su2_elements(alpha, beta)

    errors = 0
    done = 0
    while done < trials:
        m = min(batch, trials - done)
        s0 = _haar_bloch(gen, m)
        s1 = _haar_bloch(gen, m)
        k0, k1 = bloch_to_ket(s0), bloch_to_ket(s1)
        if pre_rotation is not None:
            k0 = k0 @ pre_rotation.T
            k1 = k1 @ pre_rotation.T
        labels = gen.integers(0, 2, size=m)
        kb = np.where(labels[:, None] == 0, k0, k1)

        if discretization == "mc":
            u_sel = np.empty((m, 2, 2), complex)
            todo = np.arange(m)
            while todo.size:
                q = gen.standard_normal((todo.size, 4))
                q /= np.linalg.norm(q, axis=1, keepdims=True)
                us = np.empty((todo.size, 2, 2), complex)
                us[:, 0, 0] = q[:, 0] + 1j * q[:, 1]
                us[:, 0, 1] = q[:, 2] + 1j * q[:, 3]
                us[:, 1, 0] = -q[:, 2] + 1j * q[:, 3]
                us[:, 1, 1] = q[:, 0] - 1j * q[:, 1]
                rot0 = np.einsum("qji,qj->qi", us[:].conj(), k0[todo])  # u^dagger psi0
                rot1 = np.einsum("qji,qj->qi", us[:].conj(), k1[todo])
                a0 = coherent_ket(n, rot0)
                a1 = coherent_ket(n, rot1)
                ov = np.einsum("i,qi,qi->q", w_pair, a0, a1[:, ::-1])
                p = np.abs(ov) ** 2
                acc = gen.random(todo.size) * envelope < p
                u_sel[todo[acc]] = us[acc]
                todo = todo[~acc]
        else:
            rot0 = np.einsum("qji,tj->tqi", us_grid.conj(), k0)
            rot1 = np.einsum("qji,tj->tqi", us_grid.conj(), k1)
            a0 = coherent_ket(n, rot0)
            a1 = coherent_ket(n, rot1)
            ov = np.einsum("i,tqi,tqi->tq", w_pair, a0, a1[:, :, ::-1])
            p = wq[None, :] * np.abs(ov) ** 2
            psum = p.sum(axis=1)
            # total outcome probability 1 certifies the discretized resolution
            if np.abs(psum - 1.0).max() > 1e-8:
                raise blk.IntegrityError(
                    "quadrature grid does not resolve the identity on the training pair")
            p /= psum[:, None]
            picks = (p.cumsum(axis=1) < gen.random((m, 1))).sum(axis=1)
            u_sel = us_grid[picks]

        up_amp = np.einsum("qji,qj->qi", u_sel.conj(), kb)[:, 1]  # <up| u^dag |data>
        p_up = np.abs(up_amp) ** 2
        guess = np.where(gen.random(m) < p_up, 0, 1)
        errors += int((guess != labels).sum())
        done += m

    rate = errors / trials
    stderr = math.sqrt(max(rate * (1.0 - rate), 1e-30) / trials)
    return SimulationResult(error_rate=rate, stderr=stderr, trials=trials,
                            mode=discretization, seed=rng.seed)


# ---------------------------------------------------------------------------
# Estimate-and-discriminate evaluation


@dataclass(frozen=True)
class EdResult:
    bias: float                 # the discrimination bias of the machine
    error_probability: float
    excess_risk: float
    optimal_estimation: bool    # every element proportional to a coherent projector


def coherent_povm(n: int, directions: np.ndarray,
                  weights: Optional[np.ndarray] = None) -> list[np.ndarray]:
    """Covariant-style elements c [psi_s^(x n)] for unit vectors s."""
    directions = np.atleast_2d(np.asarray(directions, float))
    K = len(directions)
    if weights is None:
        weights = np.full(K, (n + 1) / K)
    amps = coherent_ket(n, bloch_to_ket(directions))
    return [w * np.outer(a, a.conj()) for w, a in zip(weights, amps)]


def continuous_ed_povm(n: int, n_azimuth: int = 100, n_polar: int = 100) -> list[np.ndarray]:
    """Quadrature stand-in for the continuous optimal-estimation measurement."""
    alpha, beta, w = _sphere_grid(n_azimuth, n_polar)
    s = np.stack([np.sin(beta) * np.cos(alpha), np.sin(beta) * np.sin(alpha),
                  np.cos(beta)], axis=1)
    return coherent_povm(n, s, weights=w * (n + 1))


def _conditioned_bloch(povm: Sequence[np.ndarray], n: int) -> tuple[np.ndarray, np.ndarray]:
    """(probabilities, conditional data-qubit Bloch vectors) for one side."""
    d = n + 1
    P = blk.sym_plus_projector(n).reshape(d, 2, d, 2)
    Ms = np.stack([np.asarray(M, complex) for M in povm])
    probs = np.einsum("kaa->k", Ms).real / d
    rhos = np.einsum("aibj,kba->kij", P, Ms) / (d + 1) / probs[:, None, None]
    sigma = np.stack([PAULI[a] for a in "xyz"])
    blochs = np.einsum("kij,xji->kx", rhos, sigma).real
    return probs, blochs


def ed_error_finite(povm_M: Sequence[np.ndarray], povm_Mprime: Sequence[np.ndarray],
                    n: int, completeness_tol: float = 1e-8) -> EdResult:
    """Error of an estimate-and-discriminate machine with the given POVMs.

    Both POVMs act on the n-qubit symmetric subspace of their training side.
    The data qubit conditioned on a pair of outcomes is discriminated
    optimally; the machine bias is the outcome-averaged Bloch separation.
    """
    d = n + 1
    for name, povm in (("M", povm_M), ("M'", povm_Mprime)):
        total = sum(povm)
        if total.shape != (d, d):
            raise ValueError(f"{name}: elements must be {d} x {d}")
        if np.abs(total - np.eye(d)).max() > completeness_tol:
            raise ValueError(f"{name}: does not resolve the identity on the "
                             f"symmetric subspace (residual {np.abs(total - np.eye(d)).max():.2e})")
    p0, r0 = _conditioned_bloch(povm_M, n)
    p1, r1 = _conditioned_bloch(povm_Mprime, n)
    bias = 0.0
    for lo in range(0, len(p0), 512):  # chunk the pairwise separations
        sep = np.linalg.norm(r0[lo:lo + 512, None, :] - r1[None, :, :], axis=2)
        bias += float(p0[lo:lo + 512] @ sep @ p1)
    error = 0.5 * (1.0 - bias / 2.0)

    eta = machines.ed_shrink_factor(n)
    coherent = True
    for povm in (povm_M, povm_Mprime):
        for M in povm:
            c = float(np.trace(M).real)
            rho = M / c
            w = np.linalg.eigvalsh(rho)
            if w[-1] < 1.0 - 1e-8:
                coherent = False
    return EdResult(bias=bias, error_probability=error,
                    excess_risk=error - machines.baseline_error(1.0),
                    optimal_estimation=coherent)
