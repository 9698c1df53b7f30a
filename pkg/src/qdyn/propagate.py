"""Time evolution: density matrix, coherence operator, Heisenberg observables,
survival amplitudes and the two-sided overlap.

The generator is time independent, so each series is produced by one matrix
exponential e^{L dt} applied repeatedly along the grid.  A fourth-order
Runge-Kutta path exists purely as an internal cross check.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .linalg import HERM_TOL, check_dimension, dagger, herm_defect, mat_exp
from .model import (
    LindbladModel,
    build_superoperator,
    effective_hamiltonian,
    trace_vector,
    unvec,
    vec,
)


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid t_k = k * t_max / steps, k = 0..steps."""

    t_max: float
    steps: int

    def __post_init__(self):
        if not self.t_max > 0:
            raise ValueError(f"t_max must be positive, got {self.t_max}")
        if self.steps < 16:
            raise ValueError(f"steps must be at least 16, got {self.steps}")

    @property
    def dt(self) -> float:
        return self.t_max / self.steps

    @property
    def points(self) -> np.ndarray:
        return np.linspace(0.0, self.t_max, self.steps + 1)

    def __len__(self) -> int:
        return self.steps + 1


@dataclass
class TimeSeries:
    """One payload per grid point; ``values`` has the grid along axis 0."""

    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape[0] != len(self.grid):
            raise ValueError("one value per grid point is required, including t=0")


def propagate_vectors(generator: np.ndarray, v0: np.ndarray, grid: TimeGrid) -> np.ndarray:
    """Apply e^{generator * dt} repeatedly; returns shape (steps+1, len(v0))."""
    step = mat_exp(generator * grid.dt)
    out = np.empty((len(grid), v0.size), dtype=complex)
    out[0] = v0
    for k in range(grid.steps):
        out[k + 1] = step @ out[k]
    return out


def _rk4_vectors(generator: np.ndarray, v0: np.ndarray, grid: TimeGrid) -> np.ndarray:
    dt = grid.dt
    out = np.empty((len(grid), v0.size), dtype=complex)
    out[0] = v0
    v = v0
    for k in range(grid.steps):
        k1 = generator @ v
        k2 = generator @ (v + 0.5 * dt * k1)
        k3 = generator @ (v + 0.5 * dt * k2)
        k4 = generator @ (v + dt * k3)
        v = v + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        out[k + 1] = v
    return out


def matrix_series(generator: np.ndarray, x0: np.ndarray, grid: TimeGrid,
                  method: str = "expm") -> np.ndarray:
    """Evolve a matrix payload under a superoperator; shape (steps+1, d, d)."""
    driver = {"expm": propagate_vectors, "rk4": _rk4_vectors}.get(method)
    if driver is None:
        raise ValueError(f"unknown propagation method {method!r}")
    d = x0.shape[0]
    flat = driver(generator, vec(x0), grid)
    # undo column stacking for every grid point at once
    return flat.reshape(len(grid), d, d).transpose(0, 2, 1).copy()


def evolve_density(m: LindbladModel, grid: TimeGrid, method: str = "expm") -> TimeSeries:
    """rho(t_k) = e^{L t_k} rho(0)."""
    check_dimension(m.dim)
    gen = build_superoperator(m, "lindblad").matrix
    return TimeSeries(grid, matrix_series(gen, m.initial_density(), grid, method))


def evolve_coherence(m: LindbladModel, grid: TimeGrid, method: str = "expm") -> TimeSeries:
    """chi(t_k) = e^{L t_k} |psi_bar><psi|; traceless along the whole grid."""
    if m.orthogonal_state is None:
        raise ValueError("evolve_coherence requires a model with an orthogonal_state")
    gen = build_superoperator(m, "lindblad").matrix
    return TimeSeries(grid, matrix_series(gen, m.coherence_initial(), grid, method))


def heisenberg_evolve(m: LindbladModel, observable: np.ndarray, grid: TimeGrid) -> TimeSeries:
    """O(t_k) = e^{L^dag t_k} O for a Hermitian observable O."""
    obs = np.asarray(observable, dtype=complex)
    defect = herm_defect(obs)
    if defect > HERM_TOL:
        raise ValueError(f"observable is not Hermitian (defect {defect:.3e})")
    gen = build_superoperator(m, "adjoint").matrix
    return TimeSeries(grid, matrix_series(gen, obs, grid))


@dataclass
class SurvivalAmplitudes:
    """gamma(t) = Tr[e^{i H_eff^dag t} rho0], beta(t) = Tr[H_eff e^{-i H_eff t} rho0],
    and, when available, the coherence overlap Tr[e^{-i H_eff t} chi(0)]."""

    grid: TimeGrid
    gamma: np.ndarray
    beta: np.ndarray
    chi_overlap: Optional[np.ndarray] = None


def survival_amplitudes(m: LindbladModel, grid: TimeGrid,
                        include_chi: Optional[bool] = None) -> SurvivalAmplitudes:
    """Non-Hermitian survival amplitudes along the grid.

    Each point uses a direct matrix exponential of -i H_eff t, which stays
    cheap at the supported dimensions.  The chi overlap needs a pure initial
    state and an orthogonal state.
    """
    check_dimension(m.dim)
    heff = effective_hamiltonian(m)
    rho0 = m.initial_density()
    if include_chi is None:
        include_chi = m.orthogonal_state is not None and m.is_pure_initial
    if include_chi:
        if m.orthogonal_state is None:
            raise ValueError("chi overlap requested but the model has no orthogonal_state")
        chi0 = m.coherence_initial()  # raises on a mixed initial state
    n = len(grid)
    gamma = np.empty(n, dtype=complex)
    beta = np.empty(n, dtype=complex)
    chi_ov = np.empty(n, dtype=complex) if include_chi else None
    for k, t in enumerate(grid.points):
        e_minus = mat_exp(-1j * heff * t)
        # Tr[e^{i H_eff^dag t} rho0] = conj(Tr[e^{-i H_eff t} rho0]) for Hermitian rho0
        gamma[k] = np.conj(np.trace(e_minus @ rho0))
        beta[k] = np.trace(heff @ e_minus @ rho0)
        if include_chi:
            chi_ov[k] = np.trace(e_minus @ chi0)
    return SurvivalAmplitudes(grid, gamma, beta, chi_ov)


def two_sided_overlap(m: LindbladModel, tau: float, theta1: float, theta2: float) -> complex:
    """Overlap <Psi(tau * theta2) | Psi(tau * theta1)> of the scaled global states.

    Computed as the trace of the two-sided generator's propagator applied to
    the initial density matrix.
    """
    if tau < 0:
        raise ValueError(f"tau must be nonnegative, got {tau}")
    sop = build_superoperator(m, "two_sided", theta1=theta1, theta2=theta2)
    v = mat_exp(sop.matrix * tau) @ vec(m.initial_density())
    return complex(trace_vector(m.dim) @ v)
