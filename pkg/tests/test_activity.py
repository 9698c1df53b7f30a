import numpy as np
import pytest
import scipy.linalg

from conftest import EXCITED, GROUND, amplitude_damping, closed_qubit, driven_dissipative
from qdyn.activity import (
    classical_activity,
    dynamical_activity,
    exact_activity_inputs,
    qfi_oracle,
    quantum_correction,
)
from qdyn.model import LindbladModel
from qdyn.propagate import TimeGrid


class TestClassicalActivity:
    def test_no_jumps_is_zero(self):
        a = classical_activity(closed_qubit(), TimeGrid(3.0, 64)).values
        assert np.abs(a).max() == 0.0

    def test_amplitude_damping_integral(self):
        # analytic: int_0^t e^{-s} ds = 1 - e^{-t}
        grid = TimeGrid(1.0, 4096)
        a = classical_activity(amplitude_damping(), grid).values
        assert abs(a[-1] - (1 - np.exp(-1.0))) < 1e-8
        assert np.all(np.diff(a) >= 0)

    def test_matches_classical_master_equation(self):
        # embedding L_nm = sqrt(W_nm) |n><m| against a direct rate-matrix oracle
        w01, w10 = 1.0, 0.5  # W[to][from]
        l_a = np.sqrt(w01) * np.outer([1, 0], [0, 1])  # |0><1|
        l_b = np.sqrt(w10) * np.outer([0, 1], [1, 0])  # |1><0|
        m = LindbladModel(np.zeros((2, 2)), (l_a, l_b), initial_state=EXCITED)
        grid = TimeGrid(3.0, 2048)
        a = classical_activity(m, grid).values

        # oracle: dP/dt = Q P with Q = [[-w10, w01], [w10, -w01]]
        q = np.array([[-w10, w01], [w10, -w01]])
        p0 = np.array([1.0, 0.0])
        acl = np.empty(len(grid))
        for k, t in enumerate(grid.points):
            pt = scipy.linalg.expm(q * t) @ p0
            acl[k] = pt[0] * w10 + pt[1] * w01  # instantaneous escape rate
        expected = np.concatenate([[0.0], np.cumsum((acl[1:] + acl[:-1]) / 2 * grid.dt)])
        assert np.abs(a - expected).max() < 1e-10


class TestQuantumCorrection:
    def test_zero_hamiltonian_gives_zero(self):
        grid = TimeGrid(2.0, 64)
        for method in ("aux_ode", "quadrature"):
            bq = quantum_correction(amplitude_damping(), grid, method=method).values
            assert np.abs(bq).max() == 0.0

    def test_closed_qubit_quadratic(self):
        grid = TimeGrid(2.0, 64)
        bq = quantum_correction(closed_qubit(), grid).values
        # variance of sigma_x/2 in |0> is 1/4, so Bq = t^2; B(2) = 4
        np.testing.assert_allclose(bq, grid.points**2, atol=1e-10)
        assert abs(bq[-1] - 4.0) < 1e-10

    def test_methods_agree(self):
        grid = TimeGrid(2.0, 1024)
        aux = quantum_correction(driven_dissipative(), grid, method="aux_ode").values
        quad = quantum_correction(driven_dissipative(), grid, method="quadrature").values
        scale = np.abs(quad).max()
        assert np.abs(aux - quad).max() / scale < 1e-6

    def test_unknown_method_rejected(self):
        with pytest.raises(ValueError, match="unknown quantum_correction method"):
            quantum_correction(amplitude_damping(), TimeGrid(1.0, 32), method="simpson")


class TestDynamicalActivity:
    def test_total_is_sum(self):
        grid = TimeGrid(3.0, 128)
        bundle = dynamical_activity(driven_dissipative(), grid)
        assert np.array_equal(bundle.total, bundle.classical + bundle.quantum)
        assert np.isnan(bundle.fisher[0])
        np.testing.assert_allclose(bundle.fisher[1:],
                                   bundle.total[1:] / grid.points[1:] ** 2, atol=1e-14)

    def test_closed_limit(self):
        grid = TimeGrid(2.0, 128)
        bundle = dynamical_activity(closed_qubit(), grid)
        rel = np.abs(bundle.total[1:] / grid.points[1:] ** 2 - 1.0)
        assert rel.max() < 1e-6

    def test_classical_limit(self):
        grid = TimeGrid(5.0, 256)
        for model in (amplitude_damping(),):
            bundle = dynamical_activity(model, grid)
            assert np.abs(bundle.total - bundle.classical).max() == 0.0

    def test_amplitude_damping_value(self):
        grid = TimeGrid(1.0, 4096)
        bundle = dynamical_activity(amplitude_damping(), grid)
        assert abs(bundle.total[-1] - (1 - np.exp(-1.0))) < 1e-8

    def test_grid_refinement_converged(self):
        coarse = dynamical_activity(driven_dissipative(), TimeGrid(2.0, 4096)).total[-1]
        fine = dynamical_activity(driven_dissipative(), TimeGrid(2.0, 8192)).total[-1]
        assert abs(fine - coarse) / abs(fine) < 1e-6

    def test_exact_inputs_match_refined_bundle(self):
        grid = TimeGrid(2.0, 64)
        a, bq, b, cum_h = exact_activity_inputs(driven_dissipative(), grid)
        fine = dynamical_activity(driven_dissipative(), TimeGrid(2.0, 8192))
        assert abs(b[-1] - fine.total[-1]) < 1e-7
        assert abs(a[-1] - fine.classical[-1]) < 1e-7
        assert np.array_equal(b, a + bq)


class TestQfiOracle:
    def test_closed_qubit_unit_information(self):
        for t in (0.5, 1.0, 2.0):
            assert abs(qfi_oracle(closed_qubit(), t) - 1.0) < 1e-4

    def test_amplitude_damping(self):
        got = qfi_oracle(amplitude_damping(), 1.0)
        assert abs(got - (1 - np.exp(-1.0))) < 1e-4

    def test_matches_activity_bundle(self):
        grid = TimeGrid(4.0, 800)
        bundle = dynamical_activity(driven_dissipative(), grid)
        for t in (0.5, 1.0, 2.0, 4.0):
            k = int(round(t / grid.dt))
            j = qfi_oracle(driven_dissipative(), t, h=1e-3)
            assert abs(j - bundle.fisher[k]) / bundle.fisher[k] < 1e-4

    def test_random_models_cross_check(self, random_model_factory):
        grid = TimeGrid(2.5, 500)
        for seed in range(20):
            m, _ = random_model_factory(seed)
            bundle = dynamical_activity(m, grid)
            for t in (0.5, 1.0, 1.5, 2.0, 2.5):
                k = int(round(t / grid.dt))
                j = qfi_oracle(m, t, h=1e-3)
                assert abs(j - bundle.fisher[k]) / abs(bundle.fisher[k]) < 1e-4

    def test_argument_validation(self):
        with pytest.raises(ValueError):
            qfi_oracle(amplitude_damping(), 0.0)
        with pytest.raises(ValueError):
            qfi_oracle(amplitude_damping(), 1.0, h=0.2)
        with pytest.raises(ValueError):
            qfi_oracle(amplitude_damping(), 1.0, h=0.0)
