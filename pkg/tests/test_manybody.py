"""Tests for the exact few-boson simulator on the quasi-1D lattice."""

from math import comb

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bectube import manybody as mb
from bectube import scaling as sc
from bectube import transverse as tv


@pytest.fixture(scope="module")
def modes():
    return tv.dirichlet_modes(tv.rectangle(np.pi, np.pi, n=63), m=2)


@pytest.fixture(scope="module")
def small_system(modes):
    """N = 3 bosons on 6 sites x 2 transverse modes with interactions."""
    spt = sc.scaling_params(3, 0.25, 0.25)
    spb = mb.SingleParticleBasis(G_x=6, dx=0.5, eps=0.25,
                                 transverse_energies=modes.energies)
    w = sc.bump_potential()
    offsets, K = mb.mode_kernel(modes, w, spt, 0.5)
    h = mb.one_body_matrix(spb)
    basis = mb.build_basis(spb.d, 3)
    H = mb.build_hamiltonian(basis, h, offsets, K, G_x=6, m=2)
    evals, evecs = np.linalg.eigh(h)
    phi0 = evecs[:, 0].astype(complex)
    return dict(spb=spb, basis=basis, H=H, h=h, phi0=phi0,
                offsets=offsets, K=K)


class TestBasis:
    def test_dimension(self):
        basis = mb.build_basis(4, 3)
        assert basis.dim == comb(6, 3)
        assert np.all(basis.occupations.sum(axis=1) == 3)

    def test_lookup_roundtrip(self):
        basis = mb.build_basis(4, 3)
        for i in (0, 5, basis.dim - 1):
            assert basis.lookup(basis.occupations[i]) == i

    def test_cap(self):
        with pytest.raises(mb.ManyBodyError, match="cap"):
            mb.build_basis(50, 10, cap=1000)

    def test_single_particle_basis_layout(self):
        spb = mb.SingleParticleBasis(G_x=4, dx=0.5, eps=0.5,
                                     transverse_energies=np.array([2.0, 5.0]))
        assert spb.d == 8 and spb.m == 2
        assert spb.mode(5) == (2, 1)
        assert np.allclose(spb.transverse_offsets(), [0.0, 12.0])


class TestCondensateState:
    def test_pure_mode(self):
        basis = mb.build_basis(3, 2)
        phi = np.array([1.0, 0.0, 0.0])
        psi = mb.condensate_state(basis, phi)
        occ = basis.occupations[np.argmax(np.abs(psi))]
        assert list(occ) == [2, 0, 0]
        assert np.isclose(np.linalg.norm(psi), 1.0)

    @given(seed=st.integers(0, 10**6))
    @settings(max_examples=20, deadline=None)
    def test_normalized(self, seed):
        rng = np.random.default_rng(seed)
        basis = mb.build_basis(4, 3)
        phi = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        psi = mb.condensate_state(basis, phi)
        assert np.isclose(np.linalg.norm(psi), 1.0, atol=1e-12)

    def test_condensate_reduced_density_is_projector(self):
        basis = mb.build_basis(4, 3)
        rng = np.random.default_rng(3)
        phi = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        phi = phi / np.linalg.norm(phi)
        psi = mb.condensate_state(basis, phi)
        g1 = mb.reduced_density(basis, psi, M=1)
        assert np.allclose(g1, np.outer(phi, phi.conj()), atol=1e-12)
        g2 = mb.reduced_density(basis, psi, M=2)
        p2 = np.outer(np.kron(phi, phi), np.kron(phi, phi).conj())
        assert np.allclose(g2, p2, atol=1e-12)


class TestOneBody:
    def test_free_lattice_spectrum(self):
        spb = mb.SingleParticleBasis(G_x=8, dx=0.5, eps=0.5,
                                     transverse_energies=np.array([2.0]))
        h = mb.one_body_matrix(spb)
        evals = np.sort(np.linalg.eigvalsh(h))
        k = 2 * np.pi * np.arange(8) / 8
        exact = np.sort(2.0 / 0.25 * (1 - np.cos(k)))
        assert np.allclose(evals, exact, atol=1e-12)

    def test_transverse_offsets_enter_diagonal(self, modes):
        spb = mb.SingleParticleBasis(G_x=4, dx=0.5, eps=0.5,
                                     transverse_energies=modes.energies)
        h = mb.one_body_matrix(spb)
        gap = (modes.energies[1] - modes.energies[0]) / 0.25
        assert np.isclose(h[1, 1] - h[0, 0], gap)


class TestKernel:
    def test_shapes_and_symmetry(self, small_system):
        offsets, K = small_system["offsets"], small_system["K"]
        assert K.shape[1:] == (2, 2, 2, 2)
        assert len(offsets) == K.shape[0]
        # bosonic exchange symmetry of the matrix elements
        assert np.allclose(K, K.transpose(0, 2, 1, 4, 3), atol=1e-14)

    def test_onsite_collapse_preserves_mass(self, modes):
        w = sc.bump_potential()
        spt = sc.scaling_params(3, 0.25, 0.25)   # mu ~ 0.34 < 2 dx = 1
        dx = 0.5
        offsets, K = mb.mode_kernel(modes, w, spt, dx)
        assert list(offsets) == [0]
        # lattice sum of the kernel equals the integrated fine-grid kernel
        _, _, mass = sc.effective_kernel(modes, w, spt.eps, spt.mu)
        lattice_mass = float(K[0, 0, 0, 0, 0]) * dx
        expected = spt.eps**2 / (spt.N * spt.mu**3) * mass \
            / (spt.eps**2 / spt.mu**3)
        assert np.isclose(lattice_mass, expected, rtol=1e-2)

    def test_resolved_kernel_has_offsets(self, modes):
        # large mu relative to dx: genuine off-site couplings appear
        spt = sc.scaling_params(3, 0.9, 0.3)
        offsets, K = mb.mode_kernel(modes, sc.bump_potential(), spt, 0.1)
        assert len(offsets) > 1
        assert np.allclose(offsets, -offsets[::-1])


class TestHamiltonian:
    def test_hermitian(self, small_system):
        H = small_system["H"]
        assert abs(H - H.getH()).max() < 1e-12

    def test_condensate_energy_identity(self, small_system):
        # <phi^N, H phi^N>/N equals the mean-field energy functional exactly
        s = small_system
        psi = mb.condensate_state(s["basis"], s["phi0"])
        e_many = mb.energy_per_particle(s["basis"], psi, s["H"])
        e_hart = mb.hartree_energy(s["h"], s["offsets"], s["K"], 6, 2, 3,
                                   s["phi0"])
        assert np.isclose(e_many, e_hart, rtol=1e-12, atol=1e-12)

    def test_noninteracting_ground_energy(self, modes):
        spb = mb.SingleParticleBasis(G_x=4, dx=0.5, eps=0.5,
                                     transverse_energies=modes.energies)
        h = mb.one_body_matrix(spb)
        basis = mb.build_basis(spb.d, 2)
        H = mb.build_hamiltonian(basis, h)
        e0_many = np.min(np.linalg.eigvalsh(H.toarray()))
        e0_one = np.min(np.linalg.eigvalsh(h))
        assert np.isclose(e0_many, 2 * e0_one, atol=1e-10)


class TestPropagation:
    def test_krylov_matches_dense(self, small_system):
        s = small_system
        psi0 = mb.condensate_state(s["basis"], s["phi0"])
        frames = mb.evolve_state(s["basis"], s["H"], psi0, T=0.2, dt=0.01)
        ref = mb.evolve_state_dense(s["H"], psi0, [0.2])[0][1]
        ref = ref / np.linalg.norm(ref)
        assert np.linalg.norm(frames[-1][1] - ref) < 1e-9

    def test_norm_and_energy_conserved(self, small_system):
        s = small_system
        psi0 = mb.condensate_state(s["basis"], s["phi0"])
        frames = mb.evolve_state(s["basis"], s["H"], psi0, T=0.3, dt=0.01,
                                 store_every=5)
        e = [mb.energy_per_particle(s["basis"], p, s["H"]) for _, p in frames]
        assert max(abs(v - e[0]) for v in e) < 1e-9
        assert all(np.isclose(np.linalg.norm(p), 1.0) for _, p in frames)

    def test_time_dependent_hamiltonian(self, small_system):
        s = small_system
        psi0 = mb.condensate_state(s["basis"], s["phi0"])
        frames = mb.evolve_state(s["basis"], lambda t: s["H"] * (1.0 + 0 * t),
                                 psi0, T=0.1, dt=0.01)
        static = mb.evolve_state(s["basis"], s["H"], psi0, T=0.1, dt=0.01)
        assert np.linalg.norm(frames[-1][1] - static[-1][1]) < 1e-10


class TestObservables:
    def test_gamma1_unit_trace_psd(self, small_system):
        s = small_system
        psi0 = mb.condensate_state(s["basis"], s["phi0"])
        frames = mb.evolve_state(s["basis"], s["H"], psi0, T=0.2, dt=0.01)
        g1 = mb.reduced_density(s["basis"], frames[-1][1], M=1)
        ev = np.linalg.eigvalsh(g1)
        assert np.isclose(np.trace(g1).real, 1.0, atol=1e-12)
        assert ev.min() > -1e-12

    def test_trace_distance(self):
        p = np.diag([1.0, 0.0])
        q = np.diag([0.0, 1.0])
        assert np.isclose(mb.trace_distance(p, q), 2.0)
        assert mb.trace_distance(p, p) == 0.0
        with pytest.raises(mb.ManyBodyError):
            mb.trace_distance(np.array([[0, 1], [0, 0]]), p)

    def test_mode_occupations_sum(self, small_system):
        s = small_system
        psi0 = mb.condensate_state(s["basis"], s["phi0"])
        occ = mb.mode_occupations(s["basis"], psi0)
        assert np.isclose(occ.sum(), 3.0)

    def test_excitation_probability_ground_condensate(self, small_system):
        s = small_system
        # condensate built purely from transverse ground-mode sites
        phi = np.zeros(s["spb"].d, dtype=complex)
        phi[0::2] = 1.0
        psi = mb.condensate_state(s["basis"], phi)
        assert mb.excitation_probability(s["basis"], psi, s["spb"]) < 1e-14

    def test_g_function(self):
        assert np.isclose(mb.g_function(-3.0, 0.0), 2.0)
        g = mb.g_function(0.0, 2.0, vdot_sup=lambda s: 1.5)
        assert np.isclose(g, 2.0)  # sqrt(1 + 3)


class TestHartree:
    def test_norm_conserved(self, small_system):
        s = small_system
        frames = mb.hartree_evolve(s["h"], s["offsets"], s["K"], 6, 2, 3,
                                   s["phi0"], T=0.5, dt=2e-3)
        norms = [np.linalg.norm(v) for _, v in frames]
        assert max(abs(n - 1.0) for n in norms) < 1e-8

    def test_energy_conserved(self, small_system):
        s = small_system
        frames = mb.hartree_evolve(s["h"], s["offsets"], s["K"], 6, 2, 3,
                                   s["phi0"], T=0.5, dt=2e-3)
        e = [mb.hartree_energy(s["h"], s["offsets"], s["K"], 6, 2, 3, v)
             for _, v in frames[:: len(frames) // 5]]
        assert max(abs(v - e[0]) for v in e) < 1e-8

    def test_matches_manybody_for_large_N_weak_coupling(self, small_system):
        # with the interaction switched off Hartree and one-body dynamics agree
        s = small_system
        K0 = np.zeros_like(s["K"])
        frames = mb.hartree_evolve(s["h"], s["offsets"], K0, 6, 2, 3,
                                   s["phi0"], T=0.2, dt=1e-3)
        evals, evecs = np.linalg.eigh(s["h"])
        c0 = evecs.conj().T @ s["phi0"]
        exact = evecs @ (np.exp(-1j * evals * 0.2) * c0)
        assert np.linalg.norm(frames[-1][1] - exact) < 1e-8
