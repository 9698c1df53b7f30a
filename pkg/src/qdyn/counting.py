"""Full counting statistics of the weighted jump-number observable.

Moments come from differentiating the tilted generator at zero counting
field, which couples (phi, M1, M2) through one block-triangular linear ODE:

    d phi/dt = L phi
    d M1/dt  = L M1 + sum_m alpha_m   L_m phi L_m^dag
    d M2/dt  = L M2 + 2 sum_m alpha_m L_m M1 L_m^dag + sum_m alpha_m^2 L_m phi L_m^dag

mean = Tr M1, variance = Tr M2 - (Tr M1)^2.  A direct quantum-jump Monte
Carlo ensemble serves as the statistical oracle for the hierarchy.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numba import njit, prange

from .linalg import check_dimension, dagger
from .model import LindbladModel, build_superoperator, effective_hamiltonian, vec
from .propagate import TimeGrid, propagate_vectors

#: Fixed number of first-order unraveling steps per run.
DEFAULT_MC_STEPS = 20000

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)


@dataclass
class CountingMoments:
    """First and second counting moments along the grid.

    For ``target="rho"``: real ``mean``, ``variance`` and jump ``rate``.
    For ``target="chi"``: only the complex coherence mean Tr[C chi_F(t)] is
    meaningful and is stored in ``chi_mean``.
    """

    grid: TimeGrid
    mean: Optional[np.ndarray] = None
    variance: Optional[np.ndarray] = None
    rate: Optional[np.ndarray] = None
    chi_mean: Optional[np.ndarray] = None


def weighted_gain_block(m: LindbladModel, power: int = 1) -> np.ndarray:
    """Superoperator block of X -> sum_m alpha_m^power L_m X L_m^dag."""
    n2 = m.dim * m.dim
    out = np.zeros((n2, n2), dtype=complex)
    for l, a in zip(m.jumps, m.weights):
        out += a**power * np.kron(l.conj(), l)
    return out


def moment_operator_series(m: LindbladModel, grid: TimeGrid, target: str = "rho") -> np.ndarray:
    """Vectorized (phi, M1, M2) rows of shape (steps+1, 3 d^2).

    phi, M1 and M2 obey one block-triangular linear ODE, advanced exactly per
    grid step by a single exponential of the augmented generator.
    """
    check_dimension(m.dim)
    if target not in ("rho", "chi"):
        raise ValueError(f"unknown counting target {target!r}")
    if target == "chi" and m.orthogonal_state is None:
        raise ValueError("counting target 'chi' requires a model with an orthogonal_state")

    n2 = m.dim * m.dim
    gen = build_superoperator(m, "lindblad").matrix
    j1 = weighted_gain_block(m, 1)
    j2 = weighted_gain_block(m, 2)

    aug = np.zeros((3 * n2, 3 * n2), dtype=complex)
    aug[:n2, :n2] = gen
    aug[n2:2 * n2, n2:2 * n2] = gen
    aug[2 * n2:, 2 * n2:] = gen
    aug[n2:2 * n2, :n2] = j1
    aug[2 * n2:, :n2] = j2
    aug[2 * n2:, n2:2 * n2] = 2.0 * j1

    phi0 = m.initial_density() if target == "rho" else m.coherence_initial()
    y0 = np.concatenate([vec(phi0), np.zeros(2 * n2, dtype=complex)])
    return propagate_vectors(aug, y0, grid)


def counting_moments(m: LindbladModel, grid: TimeGrid, target: str = "rho") -> CountingMoments:
    """Solve the coupled moment hierarchy for the weighted jump count."""
    ys = moment_operator_series(m, grid, target)
    n2 = m.dim * m.dim
    tvec = vec(np.eye(m.dim))
    tr_m1 = ys[:, n2:2 * n2] @ tvec
    tr_m2 = ys[:, 2 * n2:] @ tvec

    if target == "chi":
        return CountingMoments(grid, chi_mean=tr_m1)
    rate = ys[:, :n2] @ (weighted_gain_block(m, 1).T @ tvec)
    return CountingMoments(
        grid,
        mean=tr_m1.real,
        variance=(tr_m2 - tr_m1**2).real,
        rate=rate.real,
    )


@dataclass
class TrajectoryEnsemble:
    """Monte Carlo ensemble of weighted jump totals, reproducible by seed."""

    n_traj: int
    seed: int
    totals: np.ndarray
    mean: float
    variance: float
    se_mean: float
    se_variance: float


def splitmix64(x) -> np.ndarray:
    """One splitmix64 step; accepts scalars or uint64 arrays (wrapping math)."""
    with np.errstate(over="ignore"):
        z = np.asarray(x, dtype=np.uint64) + _GOLDEN
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return z ^ (z >> np.uint64(31))


@njit(inline="always")
def _mix(z):
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@njit(parallel=True, cache=True)
def _run_trajectories(keys, psis, v0, ls, alphas, steps, dt):
    n = keys.shape[0]
    d = v0.shape[0]
    nc = ls.shape[0]
    totals = np.zeros(n)
    for i in prange(n):
        psi = psis[i].copy()
        key = keys[i]
        total = 0.0
        work = np.empty((nc, d), np.complex128)
        nxt = np.empty(d, np.complex128)
        for k in range(steps):
            u = _mix(key + _GOLDEN * np.uint64(k + 1))
            r = (u >> np.uint64(11)) * (2.0 ** -53)
            acc = 0.0
            chosen = -1
            for c in range(nc):
                pm = 0.0
                for a in range(d):
                    s = 0.0 + 0.0j
                    for b in range(d):
                        s += ls[c, a, b] * psi[b]
                    work[c, a] = s
                    pm += s.real * s.real + s.imag * s.imag
                pm *= dt
                if chosen < 0 and r < acc + pm:
                    chosen = c
                acc += pm
            if chosen >= 0:
                nrm = 0.0
                for a in range(d):
                    nxt[a] = work[chosen, a]
                    nrm += nxt[a].real ** 2 + nxt[a].imag ** 2
                total += alphas[chosen]
            else:
                nrm = 0.0
                for a in range(d):
                    s = 0.0 + 0.0j
                    for b in range(d):
                        s += v0[a, b] * psi[b]
                    nxt[a] = s
                    nrm += s.real ** 2 + s.imag ** 2
            nrm = np.sqrt(nrm)
            for a in range(d):
                psi[a] = nxt[a] / nrm
        totals[i] = total
    return totals


def _thread_count() -> Optional[int]:
    raw = os.environ.get("QDYN_THREADS")
    if not raw:
        return None
    n = int(raw)
    if n < 1:
        raise ValueError(f"QDYN_THREADS must be a positive integer, got {raw!r}")
    return n


def _initial_vectors(m: LindbladModel, keys: np.ndarray) -> np.ndarray:
    """Per-trajectory initial pure states; mixed states are spectrally sampled."""
    n = keys.shape[0]
    if m.is_pure_initial:
        psi = m.initial_vector() / np.linalg.norm(m.initial_vector())
        return np.broadcast_to(psi, (n, m.dim)).copy()
    w, v = np.linalg.eigh(m.initial_density())
    w = np.clip(w, 0.0, None)
    w = w / w.sum()
    # counter 0 of each trajectory stream selects the eigenstate
    u = (splitmix64(keys) >> np.uint64(11)) * (2.0 ** -53)
    idx = np.searchsorted(np.cumsum(w), u, side="right")
    idx = np.clip(idx, 0, m.dim - 1)
    return v.T[idx].astype(complex)


def simulate_trajectories(m: LindbladModel, t_max: float, n_traj: int, seed: int,
                          n_steps: int = DEFAULT_MC_STEPS) -> TrajectoryEnsemble:
    """First-order quantum-jump unraveling of the weighted jump total.

    Per-trajectory randomness is a counter-based splitmix64 stream keyed by
    splitmix64(seed XOR index), so the ensemble is bitwise reproducible and
    independent of worker-thread count (set QDYN_THREADS to control workers).
    """
    check_dimension(m.dim)
    if n_traj < 1:
        raise ValueError(f"n_traj must be at least 1, got {n_traj}")
    if t_max <= 0:
        raise ValueError(f"t_max must be positive, got {t_max}")

    threads = _thread_count()
    if threads is not None:
        import numba

        numba.set_num_threads(threads)

    dt = t_max / n_steps
    heff = effective_hamiltonian(m)
    v0 = np.eye(m.dim, dtype=complex) - 1j * dt * heff
    ls = (
        np.stack([np.asarray(l, dtype=complex) for l in m.jumps])
        if m.jumps
        else np.zeros((0, m.dim, m.dim), dtype=complex)
    )
    alphas = np.asarray(m.weights, dtype=float)

    index = np.arange(n_traj, dtype=np.uint64)
    keys = splitmix64(np.uint64(seed & 0xFFFFFFFFFFFFFFFF) ^ index)
    psis = _initial_vectors(m, keys)
    totals = _run_trajectories(keys, psis, v0, ls, alphas, n_steps, dt)

    mean = float(totals.mean())
    if n_traj > 1:
        variance = float(totals.var(ddof=1))
        se_mean = float(np.sqrt(variance / n_traj))
        centered = totals - mean
        m4 = float((centered**4).mean())
        var_of_var = (m4 - (n_traj - 3) / (n_traj - 1) * variance**2) / n_traj
        se_variance = float(np.sqrt(max(var_of_var, 0.0)))
    else:
        variance = 0.0
        se_mean = float("inf")
        se_variance = float("inf")

    return TrajectoryEnsemble(n_traj, seed, totals, mean, variance, se_mean, se_variance)
