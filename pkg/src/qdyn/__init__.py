"""Finite-dimensional Lindblad dynamics with numerically certified
thermodynamic uncertainty relations and quantum speed limits."""

from .activity import ActivityBundle, classical_activity, dynamical_activity, qfi_oracle, quantum_correction
from .bounds import (
    BoundReport,
    bures_angle,
    compute_inputs,
    fidelity,
    mp_product_tur,
    mp_qsl,
    mp_sum_tur,
    robertson_qsl,
    robertson_tur,
    rs_field_tur,
    rs_qsl,
    rs_system_tur,
    run_suite,
)
from .counting import CountingMoments, TrajectoryEnsemble, counting_moments, simulate_trajectories
from .linalg import DIM_CEILING, herm_eig, mat_exp, psd_sqrt
from .model import (
    LindbladModel,
    Superoperator,
    ValidationReport,
    build_superoperator,
    effective_hamiltonian,
    validate_model,
)
from .propagate import (
    SurvivalAmplitudes,
    TimeGrid,
    TimeSeries,
    evolve_coherence,
    evolve_density,
    heisenberg_evolve,
    survival_amplitudes,
    two_sided_overlap,
)

__version__ = "0.1.0"
