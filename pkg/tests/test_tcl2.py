import numpy as np
import pytest
from scipy import integrate
from scipy.linalg import expm

from oqsolve import bath, core, tcl2

SX = np.array([[0.0, 1.0], [1.0, 0.0]])
SY = np.array([[0.0, -1.0j], [1.0j, 0.0]])
SZ = np.diag([1.0, -1.0])


def thermal():
    return bath.ThermalLorentz(gamma0=0.1, cutoff=5.0, temperature=0.25)


def dephasing_model():
    return tcl2.SystemModel(h=0.5 * SZ, couplings=[SZ], bath=thermal())


def relaxation_model(gamma0=0.1):
    b = bath.ThermalLorentz(gamma0=gamma0, cutoff=5.0, temperature=0.25)
    return tcl2.SystemModel(h=0.5 * SZ, couplings=[SX], bath=b)


def random_model(seed=0, d=3, nch=2):
    rng = np.random.default_rng(seed)
    h = core.herm_part(rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))
    ls = [
        core.herm_part(rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))
        for _ in range(nch)
    ]
    b = bath.ExponentialOU(
        c=0.05 * (np.eye(nch) + 0.3 * np.ones((nch, nch))), lam=1.3
    )
    return tcl2.SystemModel(h=h, couplings=ls, bath=b)


class TestModelValidation:
    def test_non_hermitian_hamiltonian_rejected(self):
        with pytest.raises(ValueError, match="Hamiltonian"):
            tcl2.SystemModel(h=[[0.0, 1.0], [0.0, 0.0]], couplings=[SZ], bath=thermal())

    def test_non_hermitian_coupling_rejected(self):
        with pytest.raises(ValueError, match="coupling 0"):
            tcl2.SystemModel(h=SZ, couplings=[[[0, 1], [0, 0]]], bath=thermal())

    def test_channel_count_mismatch_rejected(self):
        with pytest.raises(ValueError, match="channels"):
            tcl2.SystemModel(h=SZ, couplings=[SZ, SX], bath=thermal())


class TestSecondOrderOperator:
    def test_white_noise_gives_half_c_times_coupling(self):
        m = tcl2.SystemModel(h=0.5 * SZ, couplings=[SX], bath=bath.WhiteNoise(c=[0.6]))
        b = tcl2.second_order_operator(m, 2.0, 0)
        assert np.allclose(b, 0.3 * SX, atol=1e-13)

    def test_hadamard_rule_elementwise(self):
        m = relaxation_model()
        t = 1.3
        b = tcl2.second_order_operator(m, t, 0)
        beb = m.basis.to_energy_basis(b)
        leb = m.couplings_eb[0]
        for i in range(2):
            for j in range(2):
                w = m.basis.gaps[i, j]
                a = m.bath.coefficient_full(t, w)[0, 0]
                assert abs(beb[i, j] - a * leb[i, j]) < 1e-12

    def test_negative_time_rejected(self):
        with pytest.raises(ValueError):
            tcl2.second_order_operator(relaxation_model(), -0.5, 0)


class TestBuildL2:
    def test_generator_preserves_trace_and_hermiticity(self):
        for m in (relaxation_model(), random_model()):
            for t in (None, 0.7):
                s = tcl2.build_L2(m, t)
                assert core.trace_preservation_defect(s, generator=True) < 1e-10
                assert core.hermiticity_preservation_defect(s) < 1e-10

    def test_dephasing_coherence_rate(self):
        # sigma_z coupling: d rho_01/dt = (-i w0 - 4 Re A(t; 0)) rho_01
        m = dephasing_model()
        for t in (0.2, 1.0, 4.0):
            s = tcl2.build_L2(m, t)
            rate = s[1, 1]  # element (0,1),(0,1) in row-major vec
            a = m.bath.coefficient_full(t, 0.0)[0, 0]
            assert abs(rate - (-1j * 1.0 - 4 * a.real)) < 1e-12

    def test_dephasing_trajectory_matches_cumulant(self):
        m = dephasing_model()
        rho0 = np.array([[0.5, 0.5], [0.5, 0.5]], dtype=complex)
        grid = np.linspace(0.0, 6.0, 13)
        traj = tcl2.propagate(m, rho0, grid, mode="full-time", rtol=1e-12, atol=1e-14)
        for t, rho in zip(traj.times, traj.states):
            gam, _ = integrate.quad(
                lambda tau: m.bath.coefficient_full(tau, 0.0)[0, 0].real,
                0.0, t, limit=300,
            )
            want = 0.5 * np.exp(-1j * t - 4 * gam)
            assert abs(rho[0, 1] - want) < 1e-8

    def test_interaction_picture_relation(self):
        m = random_model(seed=4)
        tau = 0.9
        diss = tcl2.build_L2(m, tau) - core.commutator_superop(m.h)
        g0 = core.unitary_superop(expm(-1j * m.h * tau))
        expect = np.conj(g0).T @ diss @ g0
        got = tcl2.interaction_L2(m, tau)
        assert np.allclose(got, expect, atol=1e-11)


class TestPseudoLindblad:
    def test_reassembly_is_exact(self):
        m = random_model(seed=1)
        s = tcl2.build_L2(m, None)
        pl = tcl2.pseudo_lindblad(s, m.h)
        assert np.allclose(pl.reassemble(), s, atol=1e-11)
        assert np.allclose(pl.V, core.dag(pl.V), atol=1e-12)
        assert np.allclose(pl.D, core.dag(pl.D), atol=1e-12)

    def test_coefficient_matrix_traceless_gauge(self):
        m = random_model(seed=2)
        dmat = tcl2.pseudo_lindblad(tcl2.build_L2(m, None), m.h).D
        d = m.dim
        v = core.vec(np.eye(d)) / np.sqrt(d)
        assert np.max(np.abs(dmat @ v)) < 1e-11
        assert np.max(np.abs(v @ dmat)) < 1e-11

    def test_rejects_non_hermiticity_preserving(self):
        m = random_model(seed=3)
        s = tcl2.build_L2(m, None)
        s[0, 1] += 0.05
        with pytest.raises(ValueError, match="Hermiticity"):
            tcl2.pseudo_lindblad(s, m.h)

    def test_microscopic_split_reassembles_energy_basis_generator(self):
        m = random_model(seed=5)
        pl = tcl2.microscopic_pseudo_lindblad(m, t=1.1)
        s_eb = tcl2._dissipative_superop_eb(m, 1.1) + core.commutator_superop(
            np.diag(m.basis.energies)
        )
        assert np.allclose(pl.reassemble(), s_eb, atol=1e-11)

    def test_microscopic_matches_canonical_for_traceless_couplings(self):
        m = random_model(seed=6)
        m.couplings = [l - np.trace(l) / m.dim * np.eye(m.dim) for l in m.couplings]
        pl_micro = tcl2.microscopic_pseudo_lindblad(m, None)
        d_canon = core.herm_part(
            tcl2.canonical_coefficient_matrix(tcl2._dissipative_superop_eb(m, None))
        )
        assert np.allclose(pl_micro.D, d_canon, atol=1e-11)

    def test_kernel_matrix_matches_microscopic_stationary(self):
        m = random_model(seed=7)
        assert np.allclose(
            tcl2.plindblad_kernel_matrix(m),
            tcl2.microscopic_pseudo_lindblad(m, None).D,
            atol=1e-11,
        )


class TestRWA:
    def test_rwa_dissipator_psd_with_expected_spectrum(self):
        m = relaxation_model()
        dmat = tcl2.rwa_dissipator(m)
        evals = np.sort(np.linalg.eigvalsh(dmat))
        assert evals[0] > -1e-12
        # qubit sigma_x coupling: nonzero rates are the one-sided spectra at -+w0
        want = sorted(
            [m.bath.alpha_spectrum(1.0)[0, 0].real, m.bath.alpha_spectrum(-1.0)[0, 0].real]
        )
        assert np.allclose(evals[-2:], want, atol=1e-10)

    def test_rwa_projection_keeps_gibbs_stationary(self):
        m = relaxation_model()
        s = tcl2.rwa_projection(m)
        gibbs = expm(-m.h / 0.25)
        gibbs /= np.trace(gibbs)
        assert np.max(np.abs(core.apply_superop(s, gibbs))) < 1e-10
        assert core.trace_preservation_defect(s, generator=True) < 1e-11

    def test_rwa_agrees_with_full_generator_on_secular_entries(self):
        m = relaxation_model()
        s_full = tcl2._dissipative_superop_eb(m, None)
        s_rwa = tcl2._dissipative_superop_eb(m, None) * tcl2._rwa_mask(m)
        # population block is secular, so it must be untouched
        d = m.dim
        idx = [i * d + i for i in range(d)]
        assert np.allclose(s_full[np.ix_(idx, idx)], s_rwa[np.ix_(idx, idx)], atol=1e-14)


class TestEffectiveHamiltonian:
    def test_hermitian_and_renormalization_shift(self):
        m = relaxation_model()
        h_eff, _ = tcl2.effective_hamiltonian(m)
        assert np.allclose(h_eff, core.dag(h_eff), atol=1e-13)
        g0 = 0.1 * 5.0 / 2
        assert np.allclose(h_eff, 0.5 * SZ - g0 * (SX @ SX), atol=1e-12)

    def test_damping_split_reassembles_dissipation_integral(self):
        b = thermal()
        m = tcl2.SystemModel(h=0.5 * SZ, couplings=[SX], bath=b)
        t = 1.7
        _, split = tcl2.effective_hamiltonian(m, t=t)
        for w, parts in split.items():
            total = (
                parts["damping"] + parts["renormalizable"] + parts["slip"]
            )[0, 0]
            re, _ = integrate.quad(
                lambda tau: (b.alpha_time(tau)[0, 0].imag * np.exp(-1j * w * tau)).real,
                0, t,
            )
            im, _ = integrate.quad(
                lambda tau: (b.alpha_time(tau)[0, 0].imag * np.exp(-1j * w * tau)).imag,
                0, t,
            )
            assert abs(total - (re + 1j * im)) < 1e-8


class TestAdjoint:
    def test_duality(self):
        m = random_model(seed=8)
        rng = np.random.default_rng(9)
        s = tcl2.build_L2(m, 0.8)
        sadj = tcl2.adjoint_L2(m, 0.8)
        for _ in range(4):
            x = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
            rho = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
            lhs = np.trace(core.dag(x) @ core.apply_superop(s, rho))
            rhs = np.trace(core.dag(core.apply_superop(sadj, x)) @ rho)
            assert abs(lhs - rhs) < 1e-11

    def test_adjoint_annihilates_identity(self):
        m = random_model(seed=10)
        out = core.apply_superop(tcl2.adjoint_L2(m, None), np.eye(3))
        assert np.max(np.abs(out)) < 1e-11


class TestPropagate:
    def test_validation_errors(self):
        m = relaxation_model()
        grid = [0.0, 1.0]
        with pytest.raises(ValueError, match="Hermitian"):
            tcl2.propagate(m, np.array([[0.5, 0.5], [0.0, 0.5]]), grid)
        with pytest.raises(ValueError, match="trace"):
            tcl2.propagate(m, np.eye(2, dtype=complex), grid)
        with pytest.raises(ValueError, match="positive"):
            tcl2.propagate(m, np.diag([1.5, -0.5]).astype(complex), grid)
        with pytest.raises(ValueError, match="mode"):
            tcl2.propagate(m, np.diag([1.0, 0.0]).astype(complex), grid, mode="bogus")

    def test_trace_and_hermiticity_along_trajectory(self):
        m = relaxation_model()
        rho0 = np.array([[0.7, 0.2 - 0.1j], [0.2 + 0.1j, 0.3]])
        traj = tcl2.propagate(m, rho0, np.linspace(0, 8, 17), mode="full-time")
        for rho in traj.states:
            assert abs(np.trace(rho) - 1.0) < 1e-9
            assert np.max(np.abs(rho - core.dag(rho))) < 1e-9

    def test_relaxation_approaches_gibbs_at_weak_coupling(self):
        m = relaxation_model(gamma0=0.02)
        rho0 = np.diag([1.0, 0.0]).astype(complex)
        traj = tcl2.propagate(m, rho0, [0.0, 400.0], mode="stationary")
        gibbs = expm(-m.h / 0.25)
        gibbs /= np.trace(gibbs)
        assert np.max(np.abs(traj.states[-1] - gibbs)) < 5e-3

    def test_full_time_converges_to_stationary_generator(self):
        m = relaxation_model()
        assert np.allclose(
            tcl2.build_L2(m, 300.0), tcl2.build_L2(m, None), atol=1e-10
        )
