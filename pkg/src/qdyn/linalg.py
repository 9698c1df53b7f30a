"""Dense complex matrix kernel: exponential, Hermitian eigensolve, PSD square root.

Every operator in this package is a plain square ``numpy.ndarray`` with dtype
``complex128``.  Dimensions are capped at ``DIM_CEILING`` so that even the
largest superoperators stay comfortably dense.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

#: Largest Hilbert-space dimension accepted anywhere in the package.
DIM_CEILING = 32

#: Default tolerance on the Hermiticity defect max|A - A^dag|.
HERM_TOL = 1e-10

#: Eigenvalues above this floor are treated as nonnegative by psd_sqrt.
PSD_EIG_FLOOR = -1e-10


def as_operator(a) -> np.ndarray:
    """Coerce ``a`` to a square complex matrix with finite entries."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m.real)) or not np.all(np.isfinite(m.imag)):
        raise ValueError("matrix has non-finite entries")
    return m


def check_dimension(dim: int) -> None:
    """Reject Hilbert-space dimensions above the dense-storage ceiling."""
    if dim > DIM_CEILING:
        raise ValueError(
            f"dimension {dim} exceeds the supported ceiling {DIM_CEILING}"
        )


def dagger(a: np.ndarray) -> np.ndarray:
    return a.conj().T


def herm_defect(a: np.ndarray) -> float:
    """Largest elementwise deviation of ``a`` from its own adjoint."""
    return float(np.abs(a - dagger(a)).max()) if a.size else 0.0


def is_hermitian(a, tol: float = HERM_TOL) -> bool:
    return herm_defect(np.asarray(a, dtype=complex)) <= tol


def mat_exp(a) -> np.ndarray:
    """Matrix exponential e^A via scaling-and-squaring (scipy.linalg.expm)."""
    return scipy.linalg.expm(as_operator(a))


def herm_eig(a, tol: float = HERM_TOL):
    """Eigendecomposition of a Hermitian matrix.

    Returns ``(w, v)`` with eigenvalues ``w`` ascending and orthonormal
    eigenvectors in the columns of ``v``.  Raises if the Hermiticity defect
    of ``a`` exceeds ``tol``.
    """
    m = as_operator(a)
    defect = herm_defect(m)
    if defect > tol:
        raise ValueError(f"matrix is not Hermitian (defect {defect:.3e} > {tol:.1e})")
    w, v = np.linalg.eigh(m)
    return w, v


def psd_sqrt(a, eig_floor: float = PSD_EIG_FLOOR) -> np.ndarray:
    """Hermitian square root S of a positive semidefinite matrix, S @ S = A.

    Eigenvalues in ``[eig_floor, 0)`` are clamped to zero; anything below
    ``eig_floor`` raises.
    """
    w, v = herm_eig(a)
    if w.min(initial=0.0) < eig_floor:
        raise ValueError(
            f"matrix is not PSD (eigenvalue {w.min():.3e} < {eig_floor:.1e})"
        )
    s = (v * np.sqrt(np.clip(w, 0.0, None))) @ dagger(v)
    return 0.5 * (s + dagger(s))
