import numpy as np
import pytest

from conftest import EXCITED, GROUND, amplitude_damping, closed_qubit, driven_dissipative
from qdyn.model import LindbladModel, sigma_z
from qdyn.propagate import (
    TimeGrid,
    evolve_coherence,
    evolve_density,
    heisenberg_evolve,
    survival_amplitudes,
    two_sided_overlap,
)


class TestTimeGrid:
    def test_points_and_spacing(self):
        grid = TimeGrid(2.0, 20)
        assert len(grid) == 21
        np.testing.assert_allclose(np.diff(grid.points), grid.dt)
        assert grid.points[0] == 0.0 and grid.points[-1] == 2.0

    def test_rejects_bad_parameters(self):
        with pytest.raises(ValueError):
            TimeGrid(0.0, 100)
        with pytest.raises(ValueError):
            TimeGrid(1.0, 8)


class TestEvolveDensity:
    def test_free_evolution_is_constant(self):
        m = LindbladModel(np.zeros((2, 2)), (), initial_state=EXCITED)
        rho = evolve_density(m, TimeGrid(3.0, 32)).values
        assert np.abs(rho - rho[0]).max() < 1e-12

    def test_amplitude_damping_population(self):
        rho = evolve_density(amplitude_damping(), TimeGrid(1.0, 128)).values
        assert abs(rho[-1][0, 0].real - np.exp(-1.0)) < 1e-12

    def test_rabi_oscillation(self):
        grid = TimeGrid(2 * np.pi, 256)
        rho = evolve_density(closed_qubit(), grid).values
        sz = np.einsum("kab,ba->k", rho, sigma_z).real
        np.testing.assert_allclose(sz, np.cos(grid.points), atol=1e-12)

    def test_trace_and_hermiticity_preserved(self):
        rho = evolve_density(driven_dissipative(), TimeGrid(5.0, 200)).values
        traces = np.einsum("kaa->k", rho)
        assert np.abs(traces - 1.0).max() < 1e-10
        assert np.abs(rho - rho.conj().transpose(0, 2, 1)).max() < 1e-10

    def test_rk4_matches_exponential(self):
        grid = TimeGrid(2.0, 512)
        a = evolve_density(driven_dissipative(), grid).values
        b = evolve_density(driven_dissipative(), grid, method="rk4").values
        assert np.abs(a - b).max() < 1e-8

    def test_unknown_method_rejected(self):
        with pytest.raises(ValueError, match="unknown propagation method"):
            evolve_density(amplitude_damping(), TimeGrid(1.0, 32), method="euler")


class TestEvolveCoherence:
    def test_free_evolution_is_constant(self):
        m = LindbladModel(np.zeros((2, 2)), (), initial_state=EXCITED, orthogonal_state=GROUND)
        chi = evolve_coherence(m, TimeGrid(2.0, 32)).values
        assert np.abs(chi - np.outer(GROUND, EXCITED)).max() < 1e-12

    def test_amplitude_damping_decay(self):
        grid = TimeGrid(1.0, 128)
        chi = evolve_coherence(amplitude_damping(), grid).values
        expected = np.exp(-grid.points / 2)
        np.testing.assert_allclose(chi[:, 1, 0], expected, atol=1e-12)
        assert np.abs(chi[:, 0, 0]).max() < 1e-14
        assert np.abs(chi[:, 0, 1]).max() < 1e-14

    def test_trace_zero_everywhere(self, random_model_factory):
        for seed in range(6):
            m, _ = random_model_factory(seed)
            chi = evolve_coherence(m, TimeGrid(4.0, 64)).values
            assert np.abs(np.einsum("kaa->k", chi)).max() < 1e-10

    def test_requires_orthogonal_state(self):
        m = LindbladModel(np.zeros((2, 2)), (), initial_state=EXCITED)
        with pytest.raises(ValueError, match="orthogonal_state"):
            evolve_coherence(m, TimeGrid(1.0, 32))


class TestHeisenberg:
    def test_identity_is_fixed_point(self):
        obs = heisenberg_evolve(driven_dissipative(), np.eye(2), TimeGrid(3.0, 32)).values
        assert np.abs(obs - np.eye(2)).max() < 1e-12

    def test_amplitude_damping_projector(self):
        grid = TimeGrid(1.5, 128)
        proj = np.diag([1.0, 0.0])
        obs = heisenberg_evolve(amplitude_damping(), proj, grid).values
        np.testing.assert_allclose(obs[:, 0, 0].real, np.exp(-grid.points), atol=1e-12)

    def test_schrodinger_heisenberg_duality(self, random_model_factory):
        grid = TimeGrid(2.0, 64)
        rng = np.random.default_rng(7)
        for seed in range(20):
            m, c_s = random_model_factory(seed)
            rho = evolve_density(m, grid).values
            obs = heisenberg_evolve(m, c_s, grid).values
            rho0 = m.initial_density()
            lhs = np.einsum("kab,ba->k", obs, rho0)
            rhs = np.einsum("ab,kba->k", c_s, rho)
            assert np.abs(lhs - rhs).max() < 1e-9

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValueError, match="not Hermitian"):
            heisenberg_evolve(amplitude_damping(), np.array([[0, 1], [0, 0]]), TimeGrid(1.0, 32))


class TestSurvivalAmplitudes:
    def test_initial_values(self, random_model_factory):
        from qdyn.model import effective_hamiltonian

        for seed in range(4):
            m, _ = random_model_factory(seed)
            s = survival_amplitudes(m, TimeGrid(1.0, 16))
            assert abs(s.gamma[0] - 1.0) < 1e-12  # pure initial state
            beta0 = np.trace(effective_hamiltonian(m) @ m.initial_density())
            assert abs(s.beta[0] - beta0) < 1e-12

    def test_amplitude_damping_closed_form(self):
        grid = TimeGrid(1.0, 64)
        s = survival_amplitudes(amplitude_damping(), grid)
        np.testing.assert_allclose(s.gamma, np.exp(-grid.points / 2), atol=1e-12)
        assert abs(s.gamma[-1] - 0.6065306597126334) < 1e-12

    def test_closed_qubit_closed_form(self):
        grid = TimeGrid(3.0, 64)
        s = survival_amplitudes(closed_qubit(), grid)
        t = grid.points
        np.testing.assert_allclose(s.gamma, np.cos(t / 2), atol=1e-12)
        np.testing.assert_allclose(s.beta, -0.5j * np.sin(t / 2), atol=1e-12)

    def test_chi_overlap_requires_orthogonal_state(self):
        m = LindbladModel(np.zeros((2, 2)), (), initial_state=EXCITED)
        with pytest.raises(ValueError, match="orthogonal_state"):
            survival_amplitudes(m, TimeGrid(1.0, 16), include_chi=True)

    def test_chi_overlap_requires_pure_state(self):
        m = LindbladModel(np.zeros((2, 2)), (), initial_state=np.eye(2) / 2,
                          orthogonal_state=GROUND)
        with pytest.raises(ValueError, match="mixed"):
            survival_amplitudes(m, TimeGrid(1.0, 16), include_chi=True)


class TestTwoSidedOverlap:
    def test_equal_thetas_give_unity(self, random_model_factory):
        for seed in range(4):
            m, _ = random_model_factory(seed)
            for theta in (0.2, 0.9):
                assert abs(two_sided_overlap(m, 1.7, theta, theta) - 1.0) < 1e-10

    def test_matches_survival_amplitude(self, random_model_factory):
        # setting theta2 = 0 freezes the bra at t = 0
        grid = TimeGrid(2.0, 32)
        for seed in range(6):
            m, _ = random_model_factory(seed)
            s = survival_amplitudes(m, grid)
            for k in (8, 16, 32):
                got = two_sided_overlap(m, grid.points[k], 1.0, 0.0)
                assert abs(got - np.conj(s.gamma[k])) < 1e-9

    def test_closed_qubit_closed_form(self):
        m = closed_qubit()
        for th1, th2 in ((0.9, 0.1), (0.5, 0.5), (1.0, 0.0)):
            got = two_sided_overlap(m, 1.0, th1, th2)
            assert abs(got - np.cos((th1 - th2) / 2)) < 1e-12

    def test_conjugate_symmetry_and_bound(self, random_model_factory):
        for seed in range(6):
            m, _ = random_model_factory(seed)
            a = two_sided_overlap(m, 1.4, 0.8, 0.3)
            b = two_sided_overlap(m, 1.4, 0.3, 0.8)
            assert abs(a - np.conj(b)) < 1e-10
            assert abs(a) <= 1 + 1e-10

    def test_theta_domain(self):
        with pytest.raises(ValueError):
            two_sided_overlap(amplitude_damping(), 1.0, 1.1, 0.0)
