"""Physical setup (Hamiltonian, jump operators, states) and superoperator families.

Vectorization convention (fixed package-wide): column stacking, so that
``vec(A @ X @ B) == np.kron(B.T, A) @ vec(X)``.  A matrix ``X`` is flattened
with ``order="F"`` and restored the same way.

Qubit basis convention: index 0 is the excited state |e>, index 1 the ground
state |g>, and ``sigma_minus = |g><e|``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .linalg import (
    DIM_CEILING,
    HERM_TOL,
    as_operator,
    check_dimension,
    dagger,
    herm_defect,
)

sigma_x = np.array([[0, 1], [1, 0]], dtype=complex)
sigma_y = np.array([[0, -1j], [1j, 0]], dtype=complex)
sigma_z = np.array([[1, 0], [0, -1]], dtype=complex)
sigma_minus = np.array([[0, 0], [1, 0]], dtype=complex)  # |g><e|
sigma_plus = np.array([[0, 1], [0, 0]], dtype=complex)   # |e><g|

TRACE_TOL = 1e-12
PSD_TOL = 1e-10
ORTH_TOL = 1e-10


def ket(dim: int, k: int) -> np.ndarray:
    """Computational basis vector |k> in dimension ``dim``."""
    v = np.zeros(dim, dtype=complex)
    v[k] = 1.0
    return v


def vec(x: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization of a matrix."""
    return np.asarray(x, dtype=complex).reshape(-1, order="F")


def unvec(v: np.ndarray) -> np.ndarray:
    """Inverse of :func:`vec` for square matrices."""
    v = np.asarray(v)
    d = int(round(np.sqrt(v.size)))
    if d * d != v.size:
        raise ValueError(f"vector of length {v.size} is not a vectorized square matrix")
    return v.reshape((d, d), order="F")


def left_mul(a: np.ndarray) -> np.ndarray:
    """Superoperator matrix of X -> A @ X."""
    a = np.asarray(a, dtype=complex)
    return np.kron(np.eye(a.shape[0]), a)


def right_mul(b: np.ndarray) -> np.ndarray:
    """Superoperator matrix of X -> X @ B."""
    b = np.asarray(b, dtype=complex)
    return np.kron(b.T, np.eye(b.shape[0]))


def trace_vector(dim: int) -> np.ndarray:
    """Row vector t with t @ vec(X) == trace(X)."""
    return vec(np.eye(dim))


@dataclass(frozen=True)
class LindbladModel:
    """Hamiltonian, weighted jump operators and initial state(s) of one setup.

    ``initial_state`` may be a pure state vector of shape (d,) or a density
    matrix of shape (d, d).  ``weights`` are the counting weights alpha_m of
    the jump channels; they default to 1.
    """

    hamiltonian: np.ndarray
    jumps: tuple = ()
    weights: tuple = ()
    initial_state: np.ndarray = None
    orthogonal_state: Optional[np.ndarray] = None

    def __post_init__(self):
        h = as_operator(self.hamiltonian)
        d = h.shape[0]
        jumps = tuple(as_operator(l) for l in self.jumps)
        for l in jumps:
            if l.shape != (d, d):
                raise ValueError(f"jump operator shape {l.shape} != Hamiltonian shape {(d, d)}")
        if self.weights:
            weights = tuple(float(w) for w in self.weights)
            if len(weights) != len(jumps):
                raise ValueError("weights and jump operators differ in length")
        else:
            weights = tuple(1.0 for _ in jumps)
        if self.initial_state is None:
            raise ValueError("initial_state is required")
        psi = np.asarray(self.initial_state, dtype=complex)
        if psi.shape not in ((d,), (d, d)):
            raise ValueError(f"initial_state shape {psi.shape} incompatible with dim {d}")
        orth = self.orthogonal_state
        if orth is not None:
            orth = np.asarray(orth, dtype=complex)
            if orth.shape != (d,):
                raise ValueError(f"orthogonal_state shape {orth.shape} != ({d},)")
        object.__setattr__(self, "hamiltonian", h)
        object.__setattr__(self, "jumps", jumps)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "initial_state", psi)
        object.__setattr__(self, "orthogonal_state", orth)

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]

    @property
    def is_pure_initial(self) -> bool:
        return self.initial_state.ndim == 1

    def initial_density(self) -> np.ndarray:
        if self.is_pure_initial:
            psi = self.initial_state
            return np.outer(psi, psi.conj())
        return self.initial_state

    def initial_vector(self) -> np.ndarray:
        if not self.is_pure_initial:
            raise ValueError("initial state is mixed; a pure state vector is required here")
        return self.initial_state

    def coherence_initial(self) -> np.ndarray:
        """Initial coherence operator |psi_bar><psi|."""
        if self.orthogonal_state is None:
            raise ValueError("model has no orthogonal_state")
        return np.outer(self.orthogonal_state, self.initial_vector().conj())


@dataclass(frozen=True)
class Violation:
    name: str
    deviation: float
    detail: str


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: tuple

    def __str__(self):
        if self.ok:
            return "OK"
        lines = [f"{v.name}: {v.detail} (deviation {v.deviation:.3e})" for v in self.violations]
        return "FAIL\n" + "\n".join(lines)


def validate_model(m: LindbladModel) -> ValidationReport:
    """Check every model invariant; returns a report instead of raising."""
    bad = []

    def flag(name, deviation, detail):
        bad.append(Violation(name, float(deviation), detail))

    d = m.dim
    if d > DIM_CEILING:
        flag("dimension", d, f"dimension {d} exceeds ceiling {DIM_CEILING}")

    dh = herm_defect(m.hamiltonian)
    if dh > HERM_TOL:
        flag("hamiltonian_hermitian", dh, "Hamiltonian is not Hermitian")

    rho = m.initial_density()
    dt = abs(np.trace(rho) - 1.0)
    if dt > TRACE_TOL:
        flag("initial_trace", dt, "initial state trace differs from 1")
    drho = herm_defect(rho)
    if drho > HERM_TOL:
        flag("initial_hermitian", drho, "initial density matrix is not Hermitian")
    else:
        w = np.linalg.eigvalsh(0.5 * (rho + dagger(rho)))
        if w.min() < -PSD_TOL:
            flag("initial_psd", -w.min(), "initial density matrix has a negative eigenvalue")

    if m.orthogonal_state is not None:
        if not m.is_pure_initial:
            flag("orthogonal_requires_pure", 1.0,
                 "orthogonal_state requires a pure initial state")
        else:
            psi, orth = m.initial_state, m.orthogonal_state
            dn1 = abs(np.linalg.norm(psi) - 1.0)
            dn2 = abs(np.linalg.norm(orth) - 1.0)
            if dn1 > ORTH_TOL:
                flag("initial_norm", dn1, "initial state vector is not unit norm")
            if dn2 > ORTH_TOL:
                flag("orthogonal_norm", dn2, "orthogonal state vector is not unit norm")
            ov = abs(np.vdot(psi, orth))
            if ov > ORTH_TOL:
                flag("orthogonality", ov, "initial and orthogonal states are not orthogonal")

    for w in m.weights:
        if not np.isfinite(w):
            flag("weights", np.inf, "non-finite counting weight")
            break

    return ValidationReport(ok=not bad, violations=tuple(bad))


def require_valid(m: LindbladModel) -> None:
    """Raise with the full violation list if the model is invalid."""
    report = validate_model(m)
    if not report.ok:
        raise ValueError(f"invalid model: {report}")
    check_dimension(m.dim)


def effective_hamiltonian(m: LindbladModel) -> np.ndarray:
    """Non-Hermitian generator of the no-jump evolution, H - (i/2) sum L^dag L."""
    g = sum((dagger(l) @ l for l in m.jumps), np.zeros((m.dim, m.dim), dtype=complex))
    return m.hamiltonian - 0.5j * g


@dataclass(frozen=True)
class Superoperator:
    """Matrix representation of a generator acting on vectorized operators."""

    kind: str
    matrix: np.ndarray
    dim: int
    params: tuple = ()

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return unvec(self.matrix @ vec(x))


def _lindblad_terms(m: LindbladModel, gain_factors) -> np.ndarray:
    """Sum of jump-channel superoperator blocks with per-channel gain factors."""
    d = m.dim
    out = np.zeros((d * d, d * d), dtype=complex)
    for l, g in zip(m.jumps, gain_factors):
        ldl = dagger(l) @ l
        out += g * np.kron(l.conj(), l)
        out -= 0.5 * (left_mul(ldl) + right_mul(ldl))
    return out


def build_superoperator(m: LindbladModel, kind: str, **params) -> Superoperator:
    """Build one of the five generator families.

    kind:
        "lindblad"                      d rho/dt generator
        "adjoint"                       Heisenberg-picture generator
        "tilted"            (xi)        jump gains scaled by e^{i xi alpha_m}
        "two_sided"         (theta1, theta2)
        "two_sided_tilted"  (theta1, theta2, xi)
    """
    check_dimension(m.dim)
    d = m.dim
    h = m.hamiltonian
    commutator = left_mul(h) - right_mul(h)
    ones = [1.0] * len(m.jumps)

    if kind == "lindblad":
        mat = -1j * commutator + _lindblad_terms(m, ones)
        return Superoperator("lindblad", mat, d)

    if kind == "adjoint":
        mat = 1j * commutator
        for l in m.jumps:
            ldl = dagger(l) @ l
            mat += np.kron(l.T, dagger(l))
            mat -= 0.5 * (left_mul(ldl) + right_mul(ldl))
        return Superoperator("adjoint", mat, d)

    if kind == "tilted":
        xi = _real_param(params, "xi")
        gains = [np.exp(1j * xi * a) for a in m.weights]
        mat = -1j * commutator + _lindblad_terms(m, gains)
        return Superoperator("tilted", mat, d, params=(xi,))

    if kind in ("two_sided", "two_sided_tilted"):
        th1 = _theta_param(params, "theta1")
        th2 = _theta_param(params, "theta2")
        xi = _real_param(params, "xi") if kind == "two_sided_tilted" else 0.0
        mat = -1j * th1 * left_mul(h) + 1j * th2 * right_mul(h)
        root = np.sqrt(th1 * th2)
        for l, a in zip(m.jumps, m.weights):
            ldl = dagger(l) @ l
            mat += np.exp(1j * xi * a) * root * np.kron(l.conj(), l)
            mat -= 0.5 * (th1 * left_mul(ldl) + th2 * right_mul(ldl))
        ps = (th1, th2) if kind == "two_sided" else (th1, th2, xi)
        return Superoperator(kind, mat, d, params=ps)

    raise ValueError(f"unknown superoperator kind {kind!r}")


def _real_param(params, name):
    if name not in params:
        raise ValueError(f"superoperator parameter {name!r} is required")
    x = float(params[name])
    if not np.isfinite(x):
        raise ValueError(f"superoperator parameter {name!r} must be finite")
    return x


def _theta_param(params, name):
    x = _real_param(params, name)
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"{name} = {x} is outside [0, 1]")
    return x
