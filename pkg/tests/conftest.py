import numpy as np
import pytest

from qdyn.model import LindbladModel, sigma_minus, sigma_x

EXCITED = np.array([1.0, 0.0], dtype=complex)
GROUND = np.array([0.0, 1.0], dtype=complex)


def amplitude_damping(gamma=1.0):
    """H = 0, one decay channel, starting excited.  Everything closed form."""
    return LindbladModel(
        np.zeros((2, 2)),
        (np.sqrt(gamma) * sigma_minus,),
        initial_state=EXCITED,
        orthogonal_state=GROUND,
    )


def closed_qubit():
    """H = sigma_x / 2, no dissipation: Rabi rotation at unit frequency."""
    return LindbladModel(
        sigma_x / 2,
        (),
        initial_state=EXCITED,
        orthogonal_state=GROUND,
    )


def driven_dissipative():
    """H = sigma_x / 2 with a weak decay channel; no closed form, generic."""
    return LindbladModel(
        sigma_x / 2,
        (np.sqrt(0.5) * sigma_minus,),
        initial_state=EXCITED,
        orthogonal_state=GROUND,
    )


def make_random_model(seed, dims=(2, 3), with_orth=True):
    """Random valid model: ||H|| <= 2, one or two jumps with ||L|| <= 1.5,
    random pure initial and orthogonal states.  Returns (model, hermitian C_S)."""
    rng = np.random.default_rng(seed)
    d = int(rng.choice(dims))
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    h = 0.5 * (a + a.conj().T)
    norm = np.linalg.norm(h, 2)
    if norm > 0:
        h *= rng.uniform(0.2, 2.0) / norm
    jumps = []
    for _ in range(int(rng.integers(1, 3))):
        g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        g *= rng.uniform(0.2, 1.5) / np.linalg.norm(g, 2)
        jumps.append(g)
    psi = rng.normal(size=d) + 1j * rng.normal(size=d)
    psi /= np.linalg.norm(psi)
    orth = None
    if with_orth:
        phi = rng.normal(size=d) + 1j * rng.normal(size=d)
        phi -= (psi.conj() @ phi) * psi
        phi /= np.linalg.norm(phi)
        orth = phi
    ca = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    c_s = 0.5 * (ca + ca.conj().T)
    model = LindbladModel(h, tuple(jumps), initial_state=psi, orthogonal_state=orth)
    return model, c_s


@pytest.fixture
def random_model_factory():
    return make_random_model
