import math

import numpy as np
import pytest

from qclass import blocks as blk
from qclass import machines, mixed, oracle
from qclass.blocks import BlockLabel, SpectrumParams, coupling_isometry
from qclass.oracle import (
    RandomSource, bloch_to_ket, build_average_states, coherent_ket,
    ed_error_finite, haar_qubit, helstrom, partial_transpose, ppt_check,
    schur_isometries, simulate_lm,
)
from qclass.su2 import HalfInteger


class TestRandomness:
    def test_haar_isotropy(self):
        gen = RandomSource(1).generator()
        s = oracle._haar_bloch(gen, 10 ** 6)
        assert np.linalg.norm(s.mean(axis=0)) < 3 * math.sqrt(3 / 10 ** 6)
        assert np.abs(np.linalg.norm(s, axis=1) - 1).max() < 1e-12

    def test_haar_pair_distance(self):
        gen = RandomSource(2).generator()
        s0 = oracle._haar_bloch(gen, 10 ** 6)
        s1 = oracle._haar_bloch(gen, 10 ** 6)
        mean = float(np.linalg.norm(s0 - s1, axis=1).mean())
        assert mean == pytest.approx(4 / 3, abs=0.01)

    def test_seed_42_reproducible(self):
        a = haar_qubit(RandomSource(42))
        b = haar_qubit(RandomSource(42))
        np.testing.assert_array_equal(a, b)

    def test_unknown_algorithm(self):
        with pytest.raises(ValueError):
            RandomSource(1, algorithm="mystery").generator()


class TestStateMaps:
    def test_bloch_roundtrip(self):
        gen = RandomSource(3).generator()
        s = oracle._haar_bloch(gen, 200)
        kets = bloch_to_ket(s)
        for sx, k in zip(s, kets):
            got = [float(np.real(np.conj(k) @ (oracle.PAULI[a] @ k))) for a in "xyz"]
            np.testing.assert_allclose(got, sx, atol=1e-12)

    def test_coherent_normalized(self):
        gen = RandomSource(4).generator()
        kets = bloch_to_ket(oracle._haar_bloch(gen, 50))
        for k in (1, 3, 6):
            amps = coherent_ket(k, kets)
            np.testing.assert_allclose(np.linalg.norm(amps, axis=1), 1.0, atol=1e-12)

    def test_coherent_up_is_last_basis_vector(self):
        amps = coherent_ket(4, np.array([0.0, 1.0 + 0j]))
        np.testing.assert_allclose(amps, np.eye(5)[-1], atol=1e-15)


class TestAverageStates:
    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_pure_reproduces_closed_form(self, n):
        s0, s1 = build_average_states(n, n)
        assert np.trace(s0.matrix).real == pytest.approx(1.0, abs=1e-12)
        assert helstrom(s0, s1) == pytest.approx(
            machines.programmable_error_pure(n), abs=1e-10)

    def test_unbalanced_port_pattern(self):
        s0, s1 = build_average_states(1, 0)
        assert helstrom(s0, s1) == pytest.approx(
            machines.programmable_error_unbalanced(1, 0), abs=1e-12)

    @pytest.mark.parametrize("r", [0.3, 0.7])
    def test_mixed_reproduces_block_sums(self, r):
        for n in (1, 2):
            s0, s1 = build_average_states(n, n, r=r)
            assert helstrom(s0, s1) == pytest.approx(
                mixed.mixed_programmable_risk(n, r).error_probability, abs=1e-10)

    def test_covariance(self):
        s0, s1 = build_average_states(2, 2)
        ang = RandomSource(5).generator().random(2) * np.pi
        u = oracle._su2_elements(ang[:1], ang[1:])[0]
        W = schur_isometries(2)[2][0]
        full = np.kron(u, u)
        D = W.conj().T @ full @ W
        U = np.kron(np.kron(D, u), D)
        for op in (s0, s1):
            assert np.abs(U @ op.matrix @ U.conj().T - op.matrix).max() < 1e-10

    def test_commutes_with_total_jz(self):
        s0, _ = build_average_states(2, 2)
        jz1 = np.diag([-0.5, 0.5])
        jzA = np.diag([-1.0, 0.0, 1.0])
        Jz = (np.kron(np.kron(jzA, np.eye(2)), np.eye(3))
              + np.kron(np.kron(np.eye(3), jz1), np.eye(3))
              + np.kron(np.kron(np.eye(3), np.eye(2)), jzA))
        assert np.abs(Jz @ s0.matrix - s0.matrix @ Jz).max() < 1e-12

    def test_full_product_space_no_reduction(self):
        # rebuild the n = 3 pure averages on the raw 2^7 space: kron powers of
        # rotated kets only, no symmetric-subspace machinery at all
        alpha, beta, w = oracle._sphere_grid(24, 24)
        kets = oracle._su2_elements(alpha, beta)[:, :, 1]

        def avg_power(k):
            out = np.zeros((2 ** k, 2 ** k), complex)
            for q in range(len(w)):
                v = np.array([1.0], complex)
                for _ in range(k):
                    v = np.kron(v, kets[q])
                out += w[q] * np.outer(v, v.conj())
            return out

        s0 = np.kron(avg_power(4), avg_power(3))
        s1 = np.kron(avg_power(3), avg_power(4))
        assert helstrom(s0, s1) == pytest.approx(
            machines.programmable_error_pure(3), abs=1e-12)

    def test_dimension_guard(self):
        with pytest.raises(ValueError):
            build_average_states(7, 7, r=0.5)

    def test_validation(self):
        with pytest.raises(ValueError):
            build_average_states(1, 1, nB=2)
        with pytest.raises(ValueError):
            build_average_states(1, 1, r=0.0)


class TestHelstrom:
    def test_equal_states(self):
        rho = np.eye(4) / 4
        assert helstrom(rho, rho) == pytest.approx(0.5, abs=1e-14)

    def test_orthogonal_pure(self):
        a = np.diag([1.0, 0.0])
        b = np.diag([0.0, 1.0])
        assert helstrom(a, b) == pytest.approx(0.0, abs=1e-14)

    def test_prior_validation(self):
        with pytest.raises(ValueError):
            helstrom(np.eye(2) / 2, np.eye(2) / 2, priors=(0.7, 0.7))


class TestGammaConditioning:
    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_pure_matches_blocks(self, n):
        s0, s1 = build_average_states(n, n)
        g_dense = oracle.conditioned_training_operator(
            s0.matrix - s1.matrix, s0.dims, data_axis=1)
        V = coupling_isometry(n, n)
        g_coupled = V @ g_dense @ V.T
        g = machines.gamma_up_pure(n)
        order = [(tj, tm) for tj in range(0, 2 * n + 1, 2) for tm in range(-tj, tj + 1, 2)]
        pos = {lab: i for i, lab in enumerate(order)}
        for tm, mat in g.iter_sectors():
            sel = [pos[(tj, tm)] for tj in g.index[tm]]
            np.testing.assert_allclose(g_coupled[np.ix_(sel, sel)], mat, atol=1e-10)

    @pytest.mark.parametrize("r", [0.3, 0.7])
    def test_mixed_matches_blocks_through_schur(self, r):
        # reduce the full 4-qubit training space with explicit Schur isometries
        # and compare every block against the conditioned operator
        n = 2
        s0, s1 = build_average_states(n, n, r=r)
        diff = s0.matrix - s1.matrix
        g_dense = oracle.conditioned_training_operator(diff, s0.dims, data_axis=n)
        schur = schur_isometries(n)
        probs = mixed.block_probabilities(n, r)
        params = SpectrumParams(n, r)
        for ta in (0, 2):
            for tc in (0, 2):
                WA, WC = schur[ta][0], schur[tc][0]
                V = np.kron(WA, WC)
                reduced = V.conj().T @ g_dense @ V
                label = BlockLabel(HalfInteger(ta), HalfInteger(tc))
                g = mixed.gamma_up_mixed(label, params)
                iso = coupling_isometry(ta, tc)
                order = [(tj, tm) for tj in range(abs(ta - tc), ta + tc + 1, 2)
                         for tm in range(-tj, tj + 1, 2)]
                pos = {lab: i for i, lab in enumerate(order)}
                full = np.zeros((len(order), len(order)))
                for tm, mat in g.iter_sectors():
                    sel = [pos[(tj, tm)] for tj in g.index[tm]]
                    full[np.ix_(sel, sel)] = mat
                nu = (probs[(ta, tc)]
                      / (blk.multiplicity(n, HalfInteger(ta))
                         * blk.multiplicity(n, HalfInteger(tc))))
                want = nu * iso.T @ full @ iso
                np.testing.assert_allclose(reduced, want, atol=1e-10)


class TestSchur:
    @pytest.mark.parametrize("k", [1, 2, 3, 4])
    def test_isometries(self, k):
        schur = schur_isometries(k)
        total = 0
        for tj, paths in schur.items():
            assert len(paths) == blk.multiplicity(k, HalfInteger(tj))
            for W in paths:
                np.testing.assert_allclose(W.conj().T @ W, np.eye(tj + 1), atol=1e-12)
                total += tj + 1
        assert total == 2 ** k
        # completeness: the union of all paths spans the space
        stack = np.hstack([W for paths in schur.values() for W in paths])
        np.testing.assert_allclose(stack @ stack.conj().T, np.eye(2 ** k), atol=1e-12)


class TestSimulation:
    def test_n1_hits_closed_form(self):
        sim = simulate_lm(1, machines.lm_seed(1), RandomSource(42), trials=300_000)
        want = machines.programmable_error_pure(1)
        assert abs(sim.error_rate - want) <= 3 * sim.stderr

    def test_n3_hits_closed_form(self):
        sim = simulate_lm(3, machines.lm_seed(3), RandomSource(9), trials=100_000)
        want = machines.programmable_error_pure(3)
        assert abs(sim.error_rate - want) <= 3 * sim.stderr

    def test_quadrature_mode(self):
        sim = simulate_lm(1, machines.lm_seed(1), RandomSource(10), trials=150_000,
                          discretization="quadrature")
        want = machines.programmable_error_pure(1)
        assert abs(sim.error_rate - want) <= 3 * sim.stderr

    def test_deterministic(self):
        a = simulate_lm(1, machines.lm_seed(1), RandomSource(11), trials=20_000)
        b = simulate_lm(1, machines.lm_seed(1), RandomSource(11), trials=20_000)
        assert a.error_rate == b.error_rate

    def test_invalid_seed_rejected(self):
        bad = machines.SeedVector(n=1, coefficients=np.array([2.0, 2.0]))
        with pytest.raises(ValueError):
            simulate_lm(1, bad, RandomSource(1), trials=10)
        with pytest.raises(ValueError):
            simulate_lm(2, machines.lm_seed(1), RandomSource(1), trials=10)

    def test_covariant_under_global_rotation(self):
        ang = np.array([0.9]), np.array([1.7])
        g = oracle._su2_elements(*ang)[0]
        base = simulate_lm(1, machines.lm_seed(1), RandomSource(12), trials=150_000)
        rot = simulate_lm(1, machines.lm_seed(1), RandomSource(12), trials=150_000,
                          pre_rotation=g)
        assert abs(base.error_rate - rot.error_rate) \
            <= 3 * math.hypot(base.stderr, rot.stderr)


class TestEstimateAndDiscriminate:
    def test_four_outcome_optimum(self):
        up = np.array([[0.0, 0.0], [0.0, 1.0]])
        dn = np.array([[1.0, 0.0], [0.0, 0.0]])
        plus = np.full((2, 2), 0.5)
        minus = np.array([[0.5, -0.5], [-0.5, 0.5]])
        res = ed_error_finite([up, dn], [plus, minus], 1)
        assert res.bias == pytest.approx(math.sqrt(2) / 3, abs=1e-13)
        assert res.error_probability == pytest.approx(machines.ed_error_n1_optimal(),
                                                      abs=1e-13)
        assert res.optimal_estimation

    def test_continuous_quadrature_limit(self):
        grid = oracle.continuous_ed_povm(1, n_azimuth=100, n_polar=100)
        res = ed_error_finite(grid, grid, 1, completeness_tol=1e-6)
        assert res.bias == pytest.approx(4 / 9, abs=2e-3)

    @pytest.mark.parametrize("n", [2, 3])
    def test_continuous_closed_form_larger_n(self, n):
        grid = oracle.continuous_ed_povm(n, n_azimuth=60, n_polar=60)
        res = ed_error_finite(grid, grid, n, completeness_tol=1e-6)
        assert res.error_probability == pytest.approx(
            machines.ed_error_continuous(n), abs=2e-3)

    def test_conditioned_bloch_shrinks_by_eta(self):
        for n in (1, 2, 3):
            povm = oracle.coherent_povm(n, np.array([[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]]),
                                        weights=np.array([(n + 1) / 2, (n + 1) / 2]))
            _, blochs = oracle._conditioned_bloch(povm, n)
            np.testing.assert_allclose(np.linalg.norm(blochs, axis=1),
                                       machines.ed_shrink_factor(n), atol=1e-12)

    def test_single_outcome_no_information(self):
        res = ed_error_finite([np.eye(2)], [np.eye(2)], 1)
        assert res.bias == 0.0
        assert res.error_probability == 0.5
        assert not res.optimal_estimation

    def test_incomplete_povm_rejected(self):
        with pytest.raises(ValueError):
            ed_error_finite([np.eye(2) / 2], [np.eye(2)], 1)


class TestPartialTranspose:
    def test_product_operator(self):
        A = np.array([[1.0, 0.3], [0.3, -0.5]])
        B = np.array([[0.2, 0.7j], [-0.7j, 1.0]])
        got = partial_transpose(np.kron(A, B), (2, 2), axis=1)
        np.testing.assert_allclose(got, np.kron(A, B.T), atol=1e-14)

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_optimal_element_is_ppt(self, n):
        assert ppt_check(n) >= -1e-10

    def test_bare_projector_is_not_ppt(self):
        # the kernel completion carries the property: the bare positive-part
        # projector fails transposition positivity by a finite margin
        assert ppt_check(1, kernel_weight=0.0) < -0.4
