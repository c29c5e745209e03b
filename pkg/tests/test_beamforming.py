import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dam_sim.beamforming import (
    InfeasibleZF,
    LinkBudget,
    design,
    mmse_beamformer,
    mmse_covariance,
    mrt_beamformer,
    sinr_of,
    zf_beamformer,
    zf_projections,
)
from dam_sim.channel import channel_from_vectors
from dam_sim.precoding import comp_delays, stack

from conftest import rayleigh_channel, unit_channel
from oracles import brute_sinr, orth_projection_energy, random_unit_beams

P, SIGMA2 = 2.0, 0.5


def _cross_terms(ch, F):
    H = ch.gain_matrix
    out = []
    for l in range(H.shape[1]):
        for lp in range(F.shape[0]):
            if l != lp:
                out.append(abs(np.vdot(H[:, l], F[lp])) / (np.linalg.norm(H[:, l]) * np.linalg.norm(F[lp])))
    return np.array(out)


class TestLinkBudget:
    def test_from_dbm(self):
        b = LinkBudget.from_dbm(30.0, -85.0)
        assert np.isclose(b.power, 1.0)
        assert np.isclose(b.p_bar, 10 ** 11.5)

    def test_rejects_nonpositive_noise(self):
        with pytest.raises(ValueError):
            LinkBudget(1.0, 0.0)


class TestZeroForcing:
    def test_hand_example_m2_l2(self):
        ch = channel_from_vectors([[1, 0], [1 / np.sqrt(2), 1 / np.sqrt(2)]], [0, 3])
        V = zf_projections(ch)
        np.testing.assert_allclose(V[:, 0], [0.5, -0.5], atol=1e-15)
        np.testing.assert_allclose(np.linalg.norm(V, axis=0) ** 2, [0.5, 0.5])
        bf = zf_beamformer(ch, 1.0, 1.0)
        assert np.isclose(bf.analytic_sinr, 1.0, rtol=1e-14)

    def test_single_path_is_mrt(self, rng):
        h = rng.standard_normal(6) + 1j * rng.standard_normal(6)
        ch = channel_from_vectors([h], [4])
        bf = zf_beamformer(ch, P, SIGMA2)
        assert np.isclose(bf.analytic_sinr, P / SIGMA2 * np.linalg.norm(h) ** 2)
        np.testing.assert_allclose(bf.precoder.beamformers[0], np.sqrt(P) * h / np.linalg.norm(h))

    def test_orthogonal_paths(self):
        ch = channel_from_vectors(np.eye(4)[:3] * [[1], [2], [3]], [0, 1, 2])
        assert np.isclose(zf_beamformer(ch, 1.0, 1.0).analytic_sinr, 14.0)

    def test_infeasible_when_m_lt_l(self, rng):
        with pytest.raises(InfeasibleZF):
            zf_beamformer(rayleigh_channel(rng, 2, 3), P, SIGMA2)

    def test_infeasible_when_rank_deficient(self, rng):
        h = rng.standard_normal(4) + 0j
        ch = channel_from_vectors([h, 2 * h, rng.standard_normal(4)], [0, 1, 2])
        with pytest.raises(InfeasibleZF, match="rank"):
            zf_beamformer(ch, P, SIGMA2)

    def test_infeasible_is_value_error(self):
        assert issubclass(InfeasibleZF, ValueError)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 10**6), st.sampled_from([5, 8, 16, 64, 256]), st.integers(1, 5))
    def test_nulling_power_and_value(self, seed, M, L):
        ch = unit_channel(seed, M, L)
        bf = zf_beamformer(ch, P, SIGMA2)
        F = bf.precoder.beamformers
        if L > 1:
            assert _cross_terms(ch, F).max() < 1e-10
        assert np.isclose(np.sum(np.abs(F) ** 2), P, rtol=1e-9)
        want = P / SIGMA2 * sum(orth_projection_energy(ch.gain_matrix, l) for l in range(L))
        assert np.isclose(bf.analytic_sinr, want, rtol=1e-9)
        assert np.isclose(sinr_of(bf.f_bar, ch, P, SIGMA2), bf.analytic_sinr, rtol=1e-12)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10**6))
    def test_optimal_within_zf_class(self, seed):
        rng = np.random.default_rng(seed)
        ch = rayleigh_channel(rng, 6, 4)
        V = zf_projections(ch)
        best = zf_beamformer(ch, P, SIGMA2).analytic_sinr
        Q = []
        for l in range(4):
            Hl = np.delete(ch.gain_matrix, l, axis=1)
            Q.append(np.eye(6) - Hl @ np.linalg.pinv(Hl))
        for _ in range(50):
            B = rng.standard_normal((4, 6)) + 1j * rng.standard_normal((4, 6))
            F = np.array([Q[l] @ B[l] for l in range(4)])
            F *= np.sqrt(P) / np.linalg.norm(F)
            assert sinr_of(stack(F), ch, P, SIGMA2) <= best * (1 + 1e-9)
        assert V.shape == (6, 4)

    def test_effective_gain_is_real_positive(self, rng):
        ch = rayleigh_channel(rng, 8, 3)
        bf = zf_beamformer(ch, P, SIGMA2)
        c = np.vdot(stack(ch.gain_matrix.T), bf.f_bar)
        assert abs(c.imag) < 1e-12 and c.real > 0


class TestMrt:
    def test_single_path(self, rng):
        h = rng.standard_normal(5) + 1j * rng.standard_normal(5)
        bf = mrt_beamformer(channel_from_vectors([h], [0]), P, SIGMA2)
        assert np.isclose(bf.analytic_sinr, P / SIGMA2 * np.linalg.norm(h) ** 2)

    def test_orthogonal_paths_match_zf(self):
        ch = channel_from_vectors(np.eye(4)[:3] * [[1], [2], [3]], [0, 5, 9])
        assert np.isclose(mrt_beamformer(ch, 1, 1).analytic_sinr, zf_beamformer(ch, 1, 1).analytic_sinr)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 10**6), st.integers(1, 6), st.integers(1, 8))
    def test_matches_direct_expansion(self, seed, M, L):
        rng = np.random.default_rng(seed)
        ch = rayleigh_channel(rng, M, L)
        bf = mrt_beamformer(ch, P, SIGMA2)
        want = brute_sinr(ch, bf.precoder.beamformers, comp_delays(ch), SIGMA2, ch.n_max)
        assert np.isclose(bf.analytic_sinr, want, rtol=1e-9)
        assert np.isclose(np.linalg.norm(bf.f_bar) ** 2, P)

    def test_zero_channel(self):
        with pytest.raises(ValueError):
            mrt_beamformer(channel_from_vectors([np.zeros(3)], [0]), P, SIGMA2)


class TestMmse:
    def test_single_path_is_mrt(self, rng):
        ch = rayleigh_channel(rng, 5, 1)
        mm, mr = mmse_beamformer(ch, P, SIGMA2), mrt_beamformer(ch, P, SIGMA2)
        np.testing.assert_allclose(mm.f_bar, mr.f_bar, atol=1e-12)
        assert np.isclose(mm.analytic_sinr, mr.analytic_sinr)

    def test_noise_limit_tends_to_mrt(self, rng):
        ch = rayleigh_channel(rng, 4, 3)
        mm = mmse_beamformer(ch, 1.0, 1e9)
        mr = mrt_beamformer(ch, 1.0, 1e9)
        assert abs(np.vdot(mm.f_bar, mr.f_bar)) > 1 - 1e-8

    @pytest.mark.parametrize("seed", range(5))
    def test_beats_random_search(self, seed):
        rng = np.random.default_rng(seed)
        ch = rayleigh_channel(rng, 2, 3)
        mm = mmse_beamformer(ch, P, SIGMA2)
        best = max(brute_sinr(ch, f.reshape(3, 2), comp_delays(ch), SIGMA2, ch.n_max)
                   for f in random_unit_beams(rng, 20000, 6, P))
        assert mm.analytic_sinr >= best
        # local optimality: nearby unit-power beams never do better
        for d in random_unit_beams(rng, 2000, 6, 1e-6):
            f = mm.f_bar + d
            f *= np.sqrt(P) / np.linalg.norm(f)
            assert brute_sinr(ch, f.reshape(3, 2), comp_delays(ch), SIGMA2, ch.n_max) <= mm.analytic_sinr * (1 + 1e-12)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 10**6), st.integers(1, 6), st.integers(1, 7), st.floats(1e-3, 1e3))
    def test_ordering_and_self_consistency(self, seed, M, L, p_bar):
        rng = np.random.default_rng(seed)
        ch = rayleigh_channel(rng, M, L)
        mm = mmse_beamformer(ch, p_bar, 1.0)
        assert np.isclose(sinr_of(mm.f_bar, ch, p_bar, 1.0), mm.analytic_sinr, rtol=1e-9)
        assert mm.analytic_sinr >= mrt_beamformer(ch, p_bar, 1.0).analytic_sinr * (1 - 1e-10)
        if M >= L:
            assert mm.analytic_sinr >= zf_beamformer(ch, p_bar, 1.0).analytic_sinr * (1 - 1e-10)

    @pytest.mark.parametrize("M,L", [(4, 3), (16, 5), (64, 10), (200, 12)])
    def test_dense_and_lowrank_agree(self, M, L):
        ch = unit_channel(M + L, M, L)
        a = mmse_beamformer(ch, 10.0, 1.0, method="dense")
        b = mmse_beamformer(ch, 10.0, 1.0, method="lowrank")
        assert np.isclose(a.analytic_sinr, b.analytic_sinr, rtol=1e-9)
        np.testing.assert_allclose(a.f_bar, b.f_bar, atol=1e-8 * np.sqrt(10))

    def test_covariance_is_hermitian_pd(self, rng):
        C = mmse_covariance(rayleigh_channel(rng, 3, 4), P, SIGMA2)
        np.testing.assert_allclose(C, C.conj().T)
        assert np.linalg.eigvalsh(C).min() >= SIGMA2 / P * (1 - 1e-12)

    def test_unknown_method(self, rng):
        with pytest.raises(ValueError, match="method"):
            mmse_beamformer(rayleigh_channel(rng, 3, 2), P, SIGMA2, method="cg")


class TestSinrOf:
    def test_single_active_path(self):
        h1, h2 = np.array([1.0, 0.0]), np.array([1.0, 1.0]) / np.sqrt(2)
        ch = channel_from_vectors([h1, h2], [0, 2])
        F = np.zeros((2, 2), dtype=complex)
        F[0] = h1
        # signal |h1^H f1|^2 = 1, leakage |h2^H f1|^2 = 1/2
        assert np.isclose(sinr_of(stack(F), ch, 1.0, 0.5), 1.0)

    def test_power_violation(self, rng):
        ch = rayleigh_channel(rng, 2, 2)
        with pytest.raises(ValueError, match="exceeds"):
            sinr_of(np.ones(4), ch, 3.0, 1.0)

    def test_zero_noise_zero_isi(self):
        ch = channel_from_vectors([[1, 0]], [0])
        assert sinr_of(np.array([1, 0]), ch, 1.0, 0.0) == np.inf


class TestSchemeProperties:
    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10**6), st.floats(1e-3, 1e3))
    def test_scale_covariance(self, seed, c):
        ch = rayleigh_channel(np.random.default_rng(seed), 6, 4)
        for scheme in ("ZF", "MRT", "MMSE"):
            a = design(scheme, ch, P, SIGMA2)
            b = design(scheme, ch, c * P, c * SIGMA2)
            assert np.isclose(a.analytic_sinr, b.analytic_sinr, rtol=1e-8)
            np.testing.assert_allclose(a.f_bar / np.sqrt(P), b.f_bar / np.sqrt(c * P), atol=1e-7)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10**6), st.sampled_from(["ZF", "MRT", "MMSE"]))
    def test_full_power_and_phase(self, seed, scheme):
        ch = rayleigh_channel(np.random.default_rng(seed), 6, 4)
        bf = design(scheme, ch, P, SIGMA2)
        assert np.isclose(np.linalg.norm(bf.f_bar) ** 2, P, rtol=1e-9)
        c = np.vdot(stack(ch.gain_matrix.T), bf.f_bar)
        assert c.real >= 0 and abs(c.imag) <= 1e-12 * abs(c)
        assert bf.scheme == scheme and bf.analytic_sinr >= 0

    def test_unknown_scheme(self, rng):
        with pytest.raises(ValueError):
            design("MF", rayleigh_channel(rng, 2, 1), P, SIGMA2)
