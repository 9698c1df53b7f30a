"""Dynamical activity: classical part, quantum correction, and the
finite-difference quantum-Fisher-information oracle.

The quantum correction is a double time integral

    Bq(t) = 8 int_0^t ds1 int_0^{s1} ds2 Re Tr[H_eff^dag O(s1-s2) rho(s2)]
            - 4 (int_0^t Tr[H rho(s)] ds)^2

with O(u) the Heisenberg-evolved Hamiltonian.  The default evaluation path
rewrites the inner integral as an auxiliary linear ODE

    dN/ds = L N + rho(s) H_eff^dag,   N(0) = 0,

whose exact grid solution comes from one exponential of a block-triangular
augmented generator; the O(steps^2) double trapezoid stays available as the
independent oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .linalg import check_dimension, dagger, mat_exp
from .model import (
    LindbladModel,
    build_superoperator,
    effective_hamiltonian,
    left_mul,
    right_mul,
    vec,
)
from .propagate import TimeGrid, TimeSeries, matrix_series, propagate_vectors, two_sided_overlap


@dataclass
class ActivityBundle:
    """Classical activity A, quantum correction Bq, total B = A + Bq and
    the Fisher information J = B / t^2 (undefined at t = 0, stored as nan)."""

    grid: TimeGrid
    classical: np.ndarray
    quantum: np.ndarray
    total: np.ndarray
    fisher: np.ndarray


def _cumtrapz(y: np.ndarray, dt: float) -> np.ndarray:
    return cumulative_trapezoid(y, dx=dt, initial=0.0)


def jump_rate_series(m: LindbladModel, rho: np.ndarray, weighted: bool = False) -> np.ndarray:
    """sum_m [alpha_m] Tr[L_m rho(t) L_m^dag] along a density series."""
    n = rho.shape[0]
    out = np.zeros(n)
    for l, a in zip(m.jumps, m.weights):
        ldl = dagger(l) @ l
        w = a if weighted else 1.0
        out += w * np.einsum("kab,ba->k", rho, ldl).real
    return out


def classical_activity(m: LindbladModel, grid: TimeGrid, rho: np.ndarray = None) -> TimeSeries:
    """Time-integrated total jump rate (trapezoidal rule on the grid)."""
    check_dimension(m.dim)
    if rho is None:
        from .propagate import evolve_density
        rho = evolve_density(m, grid).values
    return TimeSeries(grid, _cumtrapz(jump_rate_series(m, rho), grid.dt))


def _mean_h_integral(m: LindbladModel, rho: np.ndarray, dt: float) -> np.ndarray:
    mean_h = np.einsum("kab,ba->k", rho, m.hamiltonian).real
    return _cumtrapz(mean_h, dt)


def aux_source_series(m: LindbladModel, grid: TimeGrid, source_block: np.ndarray) -> np.ndarray:
    """Exact grid solution of dN/ds = L N + S rho(s), N(0) = 0.

    ``source_block`` is the d^2 x d^2 matrix of the source map S acting on
    vec(rho).  The pair (rho, N) obeys one block-triangular linear ODE, so a
    single exponential of the augmented generator advances both exactly per
    step.  Returns vec(N) rows of shape (steps+1, d^2).
    """
    d = m.dim
    gen = build_superoperator(m, "lindblad").matrix
    n2 = d * d
    aug = np.zeros((2 * n2, 2 * n2), dtype=complex)
    aug[:n2, :n2] = gen
    aug[n2:, n2:] = gen
    aug[n2:, :n2] = source_block
    y0 = np.concatenate([vec(m.initial_density()), np.zeros(n2, dtype=complex)])
    return propagate_vectors(aug, y0, grid)[:, n2:]


def trace_against(op: np.ndarray, flat_series: np.ndarray) -> np.ndarray:
    """Tr[op @ X_k] for a series of vectorized matrices X_k."""
    return flat_series @ vec(op.T)


def exact_activity_inputs(m: LindbladModel, grid: TimeGrid):
    """A(t), Bq(t), B(t) and int_0^t <H>(s) ds, exact at every grid point.

    Appends the scalar integrals to the (rho, N) auxiliary system as extra
    linear components, so the whole set advances under one exponential of a
    block-triangular generator with no quadrature error.  Used by the bounds
    module, where near-equality points leave no room for composite-rule bias.
    """
    d = m.dim
    n2 = d * d
    gen = build_superoperator(m, "lindblad").matrix
    heff = effective_hamiltonian(m)
    hrow = vec(m.hamiltonian.T)
    gain = np.zeros((n2, n2), dtype=complex)
    for l in m.jumps:
        gain += np.kron(l.conj(), l)

    size = 2 * n2 + 3
    aug = np.zeros((size, size), dtype=complex)
    aug[:n2, :n2] = gen
    aug[n2:2 * n2, n2:2 * n2] = gen
    aug[n2:2 * n2, :n2] = right_mul(dagger(heff))
    aug[2 * n2, n2:2 * n2] = hrow                      # d/dt double integral
    aug[2 * n2 + 1, :n2] = hrow                        # d/dt int <H>
    aug[2 * n2 + 2, :n2] = gain.T @ vec(np.eye(d))     # d/dt classical activity

    y0 = np.zeros(size, dtype=complex)
    y0[:n2] = vec(m.initial_density())
    ys = propagate_vectors(aug, y0, grid)

    dbl = ys[:, 2 * n2].real
    cum_h = ys[:, 2 * n2 + 1].real
    classical = ys[:, 2 * n2 + 2].real
    quantum = 8.0 * dbl - 4.0 * cum_h**2
    return classical, quantum, classical + quantum, cum_h


def exact_coherence_h_integral(m: LindbladModel, grid: TimeGrid) -> np.ndarray:
    """int_0^t Tr[H chi(s)] ds (complex), exact at every grid point."""
    d = m.dim
    n2 = d * d
    gen = build_superoperator(m, "lindblad").matrix
    aug = np.zeros((n2 + 1, n2 + 1), dtype=complex)
    aug[:n2, :n2] = gen
    aug[n2, :n2] = vec(m.hamiltonian.T)
    y0 = np.zeros(n2 + 1, dtype=complex)
    y0[:n2] = vec(m.coherence_initial())
    return propagate_vectors(aug, y0, grid)[:, n2]


def quantum_correction(m: LindbladModel, grid: TimeGrid, method: str = "aux_ode",
                       rho: np.ndarray = None) -> TimeSeries:
    """Quantum contribution Bq(t); zero whenever the Hamiltonian vanishes."""
    check_dimension(m.dim)
    if rho is None:
        from .propagate import evolve_density
        rho = evolve_density(m, grid).values
    h = m.hamiltonian
    heff = effective_hamiltonian(m)
    cum_h = _mean_h_integral(m, rho, grid.dt)

    if method == "aux_ode":
        aux = aux_source_series(m, grid, right_mul(dagger(heff)))
        dbl = _cumtrapz(trace_against(h, aux).real, grid.dt)
    elif method == "quadrature":
        dbl = _double_quadrature(m, grid, rho)
    else:
        raise ValueError(f"unknown quantum_correction method {method!r}")

    return TimeSeries(grid, 8.0 * dbl - 4.0 * cum_h**2)


def _double_quadrature(m: LindbladModel, grid: TimeGrid, rho: np.ndarray) -> np.ndarray:
    """O(steps^2) trapezoid oracle for the Bq double integral."""
    h = m.hamiltonian
    heff = effective_hamiltonian(m)
    hcheck = matrix_series(build_superoperator(m, "adjoint").matrix, h, grid)
    # g(s1, s2) = Re Tr[H_eff^dag Hcheck(s1 - s2) rho(s2)]
    left = np.einsum("ab,kbc->kac", dagger(heff), hcheck)
    lflat = left.reshape(len(grid), -1)
    pflat = rho.transpose(0, 2, 1).reshape(len(grid), -1)
    dt = grid.dt
    inner = np.zeros(len(grid))
    for i in range(1, len(grid)):
        row = np.einsum("ja,ja->j", lflat[i::-1], pflat[: i + 1]).real
        inner[i] = np.trapezoid(row, dx=dt)
    return _cumtrapz(inner, dt)


def dynamical_activity(m: LindbladModel, grid: TimeGrid, method: str = "aux_ode",
                       rho: np.ndarray = None) -> ActivityBundle:
    """Full bundle A, Bq, B = A + Bq and J = B / t^2 (first point omitted)."""
    if rho is None:
        from .propagate import evolve_density
        rho = evolve_density(m, grid).values
    a = classical_activity(m, grid, rho=rho).values
    bq = quantum_correction(m, grid, method=method, rho=rho).values
    b = a + bq
    t = grid.points
    fisher = np.full(len(grid), np.nan)
    fisher[1:] = b[1:] / t[1:] ** 2
    return ActivityBundle(grid, a, bq, b, fisher)


def qfi_oracle(m: LindbladModel, t: float, h: float = 1e-3) -> float:
    """Fisher information J(t) from central differences of the two-sided overlap.

    Independent of the activity formulas: differentiates
    f(theta1, theta2) = <Psi(tau theta2)|Psi(tau theta1)> around the target
    time, J(t) = 4 (d2f/dth1 dth2 - df/dth1 * df/dth2) / tau^2.  The scaled
    time is free, so tau = 2t places the stencil at theta = 1/2, keeping all
    evaluations inside the generator's theta domain [0, 1].
    """
    if t <= 0:
        raise ValueError(f"t must be positive, got {t}")
    if not 0.0 < h <= 0.1:
        raise ValueError(f"finite-difference step h must be in (0, 0.1], got {h}")

    tau = 2.0 * t
    th = 0.5

    def f(th1, th2):
        return two_sided_overlap(m, tau, th1, th2)

    mixed = (f(th + h, th + h) - f(th + h, th - h)
             - f(th - h, th + h) + f(th - h, th - h)) / (4 * h * h)
    d1 = (f(th + h, th) - f(th - h, th)) / (2 * h)
    d2 = (f(th, th + h) - f(th, th - h)) / (2 * h)
    return float(4.0 * (mixed - d1 * d2).real / tau**2)
