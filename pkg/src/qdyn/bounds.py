"""Both sides of the eight tradeoff relations, plus fidelity and Bures angle.

Every relation returns a :class:`BoundReport` carrying lhs, rhs and slack per
grid point.  Points where a relation is undefined (division by a vanishing
rate, variance or activity) are marked inapplicable rather than failed.

Numerical conventions shared by the three speed limits:

* the integrands behave like sqrt(B(s))/(2 s) ~ s^{-1/2} near s = 0, so the
  segment [0, t_1] before the first grid point is integrated analytically
  from the small-time model B(s) = a s + b s^2 (a = initial jump rate,
  b = quadratic coefficient), which reduces to sqrt(a t_1) in purely
  dissipative dynamics and to sqrt(b) t_1 / 2 in purely coherent dynamics;
* points where |gamma| (1 - |gamma|^2) <= 1e-12 make the refinement terms
  R(t), S(t) undefined; there the integrand falls back to the plain
  sqrt(B)/(2 t) form and the point is flagged in ``extras``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .activity import (
    aux_source_series,
    exact_activity_inputs,
    exact_coherence_h_integral,
    jump_rate_series,
)
from .counting import moment_operator_series, weighted_gain_block
from .linalg import HERM_TOL, dagger, herm_defect, psd_sqrt
from .model import (
    LindbladModel,
    build_superoperator,
    effective_hamiltonian,
    ket,
    left_mul,
    require_valid,
    vec,
)
from .propagate import (
    TimeGrid,
    evolve_coherence,
    evolve_density,
    heisenberg_evolve,
    matrix_series,
    survival_amplitudes,
)

RELATIONS = (
    "robertson_tur",
    "robertson_qsl",
    "mp_sum_tur",
    "mp_product_tur",
    "mp_qsl",
    "rs_system_tur",
    "rs_field_tur",
    "rs_qsl",
)

DEFAULT_TOLERANCE = 1e-9
SINGULAR_FLOOR = 1e-12


@dataclass
class BoundReport:
    """Per-time record of one inequality: lhs >= rhs up to ``tolerance``."""

    relation: str
    grid: TimeGrid
    lhs: np.ndarray
    rhs: np.ndarray
    slack: np.ndarray
    applicable: np.ndarray
    satisfied: np.ndarray
    tolerance: float
    observable_tag: str = ""
    sign_choice: Optional[np.ndarray] = None
    extras: dict = field(default_factory=dict)

    @property
    def n_applicable(self) -> int:
        return int(self.applicable.sum())

    @property
    def min_slack(self) -> float:
        if not self.applicable.any():
            return float("nan")
        return float(self.slack[self.applicable].min())

    @property
    def all_satisfied(self) -> bool:
        return bool(self.satisfied[self.applicable].all()) if self.applicable.any() else True


def _finish(relation, grid, lhs, rhs, applicable, tolerance, tag="", sign=None, extras=None):
    lhs = np.where(applicable, lhs, np.nan)
    rhs = np.where(applicable, rhs, np.nan)
    slack = lhs - rhs
    satisfied = np.where(applicable, slack >= -tolerance, True)
    return BoundReport(relation, grid, lhs, rhs, slack, applicable, satisfied,
                       tolerance, tag, sign, extras or {})


# ---------------------------------------------------------------------------
# fidelity / Bures angle


def _check_state(rho: np.ndarray, name: str) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"{name} is not a square matrix")
    if herm_defect(rho) > 1e-8:
        raise ValueError(f"{name} is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > 1e-8:
        raise ValueError(f"{name} does not have unit trace")
    if np.linalg.eigvalsh(0.5 * (rho + dagger(rho))).min() < -1e-8:
        raise ValueError(f"{name} is not positive semidefinite")
    return rho


def _pure_part(rho: np.ndarray) -> Optional[np.ndarray]:
    """Top eigenvector if rho is rank one (within 1e-12), else None."""
    w, v = np.linalg.eigh(0.5 * (rho + dagger(rho)))
    if w[:-1].max(initial=0.0) <= 1e-12:
        return v[:, -1]
    return None


def fidelity(rho1, rho2) -> float:
    """Uhlmann fidelity (Tr sqrt(sqrt(rho1) rho2 sqrt(rho1)))^2, in [0, 1]."""
    rho1 = _check_state(rho1, "rho1")
    rho2 = _check_state(rho2, "rho2")
    for a, b in ((rho1, rho2), (rho2, rho1)):
        psi = _pure_part(a)
        if psi is not None:
            return float(np.clip((psi.conj() @ b @ psi).real, 0.0, 1.0))
    s = psd_sqrt(rho1)
    inner = s @ rho2 @ s
    w = np.linalg.eigvalsh(0.5 * (inner + dagger(inner)))
    return float(np.clip(np.sqrt(np.clip(w, 0.0, None)).sum() ** 2, 0.0, 1.0))


def bures_angle(rho1, rho2) -> float:
    """arccos of the root fidelity, in [0, pi/2]."""
    return float(np.arccos(np.sqrt(fidelity(rho1, rho2))))


# ---------------------------------------------------------------------------
# shared per-(model, grid) inputs


@dataclass
class BoundInputs:
    """Everything the eight relations consume, computed once per model/grid."""

    model: LindbladModel
    grid: TimeGrid
    rho: np.ndarray            # (n, d, d)
    rho_flat: np.ndarray       # (n, d^2) column-stacked
    generator: np.ndarray      # Lindblad superoperator matrix
    activity_total: np.ndarray         # B(t)
    activity_classical: np.ndarray     # A(t)
    count_mean: np.ndarray
    count_variance: np.ndarray
    count_rate: np.ndarray
    m1_flat: np.ndarray        # weighted first-moment operator, vectorized
    cum_mean_h: np.ndarray     # int_0^t <H>(s) ds
    gamma: np.ndarray
    beta: np.ndarray
    conv_flat: np.ndarray      # aux solution of dK/dt = L K + H_eff rho(t)
    head_linear: float         # a in B(s) ~ a s + b s^2
    head_quadratic: float      # b in the same expansion
    chi: Optional[np.ndarray] = None
    cum_h_chi: Optional[np.ndarray] = None      # int_0^t Tr[H chi(s)] ds (complex)
    chi_count_mean: Optional[np.ndarray] = None  # Tr[C chi_F(t)] (complex)
    chi_overlap: Optional[np.ndarray] = None     # Tr[e^{-i H_eff t} chi(0)]
    bures_from_start: Optional[np.ndarray] = None

    @property
    def times(self) -> np.ndarray:
        return self.grid.points


def _cumtrapz(y, dt):
    return cumulative_trapezoid(y, dx=dt, initial=0.0)


def compute_inputs(m: LindbladModel, grid: TimeGrid) -> BoundInputs:
    """Propagations, activity, counting moments and amplitudes for one setup.

    All time integrals entering the bounds are integrated exactly (appended
    to the augmented linear generators), not by composite quadrature: near
    equality the slacks are O(t^2) at small times and composite-rule bias
    would swamp them.
    """
    require_valid(m)
    d = m.dim
    n2 = d * d
    gen = build_superoperator(m, "lindblad").matrix
    rho = evolve_density(m, grid).values
    rho_flat = rho.transpose(0, 2, 1).reshape(len(grid), n2)

    a_series, _bq, b_series, cum_mean_h = exact_activity_inputs(m, grid)

    moments = moment_operator_series(m, grid, "rho")
    tvec = vec(np.eye(d))
    m1_flat = moments[:, n2:2 * n2]
    tr_m1 = m1_flat @ tvec
    tr_m2 = moments[:, 2 * n2:] @ tvec
    count_mean = tr_m1.real
    count_variance = (tr_m2 - tr_m1**2).real
    count_rate = jump_rate_series(m, rho, weighted=True)

    surv = survival_amplitudes(m, grid)

    heff = effective_hamiltonian(m)
    conv_flat = aux_source_series(m, grid, left_mul(heff))

    # small-time expansion B(s) ~ a s + b s^2 for the speed-limit head segment
    rho0 = m.initial_density()
    lrho0 = (gen @ vec(rho0)).reshape(d, d).T
    a0 = float(jump_rate_series(m, rho[:1])[0])
    a1 = float(jump_rate_series(m, lrho0[np.newaxis])[0])
    g00 = np.trace(dagger(heff) @ m.hamiltonian @ rho0).real
    h_mean0 = np.trace(m.hamiltonian @ rho0).real
    b2 = 0.5 * a1 + 4.0 * (g00 - h_mean0**2)

    inputs = BoundInputs(
        model=m, grid=grid, rho=rho, rho_flat=rho_flat, generator=gen,
        activity_total=b_series, activity_classical=a_series,
        count_mean=count_mean, count_variance=count_variance, count_rate=count_rate,
        m1_flat=m1_flat, cum_mean_h=cum_mean_h, gamma=surv.gamma, beta=surv.beta,
        conv_flat=conv_flat, head_linear=a0, head_quadratic=b2,
        chi_overlap=surv.chi_overlap,
    )

    if m.orthogonal_state is not None:
        chi = evolve_coherence(m, grid).values
        inputs.chi = chi
        inputs.cum_h_chi = exact_coherence_h_integral(m, grid)
        chi_moments = moment_operator_series(m, grid, "chi")
        inputs.chi_count_mean = chi_moments[:, n2:2 * n2] @ tvec

    if m.is_pure_initial:
        psi0 = m.initial_vector()
        fid = np.clip(np.einsum("a,kab,b->k", psi0.conj(), rho, psi0).real, 0.0, 1.0)
        fid[0] = 1.0  # the state at t=0 is itself; arccos would amplify norm roundoff
        inputs.bures_from_start = np.arccos(np.sqrt(fid))

    return inputs


def _require_inputs(m, grid, inputs):
    if inputs is None:
        return compute_inputs(m, grid)
    return inputs


# ---------------------------------------------------------------------------
# speed-limit quadrature helpers


def _head_correction(a: float, b: float, t1: float) -> float:
    """int_0^{t1} sqrt(max(a s + b s^2, 0)) / (2 s) ds via s = u^2."""
    nodes, weights = np.polynomial.legendre.leggauss(48)
    half = 0.5 * np.sqrt(t1)
    u = half * (nodes + 1.0)
    return float(half * np.sum(weights * np.sqrt(np.clip(a + b * u**2, 0.0, None))))


def _robertson_integrand(inputs: BoundInputs) -> np.ndarray:
    """sqrt(B(t))/(2 t) on grid points k >= 1 (index 0 unused)."""
    t = inputs.times
    out = np.zeros(len(t))
    out[1:] = np.sqrt(np.clip(inputs.activity_total[1:], 0.0, None)) / (2.0 * t[1:])
    return out


def _qsl_lhs(inputs: BoundInputs, integrand: np.ndarray) -> np.ndarray:
    """head + trapezoid of ``integrand`` over [t_1, t_k]; zero at t = 0."""
    head = _head_correction(inputs.head_linear, inputs.head_quadratic, inputs.times[1])
    lhs = np.zeros(len(inputs.times))
    lhs[1:] = head + _cumtrapz(integrand[1:], inputs.grid.dt)
    return lhs


def _gamma_regular(inputs: BoundInputs) -> np.ndarray:
    """Points where |gamma|(1-|gamma|^2) is large enough for R(t)/S(t)."""
    g = np.abs(inputs.gamma)
    return g * np.abs(1.0 - g**2) > SINGULAR_FLOOR


# ---------------------------------------------------------------------------
# the eight relations


def robertson_tur(m: LindbladModel, grid: TimeGrid, inputs: Optional[BoundInputs] = None,
                  tolerance: float = DEFAULT_TOLERANCE) -> BoundReport:
    """Counting-observable uncertainty vs inverse dynamical activity."""
    inputs = _require_inputs(m, grid, inputs)
    t = inputs.times
    rate, var, b = inputs.count_rate, inputs.count_variance, inputs.activity_total
    applicable = (t > 0) & (np.abs(rate) > SINGULAR_FLOOR) & (b > SINGULAR_FLOOR)
    with np.errstate(divide="ignore", invalid="ignore"):
        lhs = var / (t**2 * rate**2)
        rhs = 1.0 / b
    return _finish("robertson_tur", grid, lhs, rhs, applicable, tolerance,
                   tag="field:weighted-jumps")


def robertson_qsl(m: LindbladModel, grid: TimeGrid, inputs: Optional[BoundInputs] = None,
                  tolerance: float = DEFAULT_TOLERANCE) -> BoundReport:
    """Integrated sqrt(B)/2t against the Bures angle from the initial state."""
    inputs = _require_inputs(m, grid, inputs)
    if inputs.bures_from_start is None:
        raise ValueError("robertson_qsl requires a pure initial state")
    lhs = _qsl_lhs(inputs, _robertson_integrand(inputs))
    rhs = inputs.bures_from_start
    applicable = np.ones(len(grid), dtype=bool)
    extras = {"arccos_gamma": np.arccos(np.clip(np.abs(inputs.gamma), 0.0, 1.0))}
    return _finish("robertson_qsl", grid, lhs, rhs, applicable, tolerance, extras=extras)


def _observable_quantities(inputs: BoundInputs, observable):
    """mean, variance, d<C>/dt and Tr[C chi] for either observable family."""
    if isinstance(observable, str):
        if observable != "field":
            raise ValueError(f"unknown observable {observable!r}")
        if inputs.chi_count_mean is None:
            raise ValueError("field observable bounds require a model with an orthogonal_state")
        return (inputs.count_mean, inputs.count_variance, inputs.count_rate,
                inputs.chi_count_mean, "field:weighted-jumps")
    c = np.asarray(observable, dtype=complex)
    defect = herm_defect(c)
    if defect > HERM_TOL:
        raise ValueError(f"system observable is not Hermitian (defect {defect:.3e})")
    rho, chi = inputs.rho, inputs.chi
    if chi is None:
        raise ValueError("system observable bounds require a model with an orthogonal_state")
    mean = np.einsum("ab,kba->k", c, rho).real
    mean_sq = np.einsum("ab,kba->k", c @ c, rho).real
    var = np.clip(mean_sq - mean**2, 0.0, None)
    dmean = (inputs.rho_flat @ (inputs.generator.T @ vec(c.T))).real
    tr_c_chi = np.einsum("ab,kba->k", c, chi)
    return mean, var, dmean, tr_c_chi, "system"


def mp_sum_tur(m: LindbladModel, grid: TimeGrid, observable="field",
               inputs: Optional[BoundInputs] = None,
               tolerance: float = DEFAULT_TOLERANCE,
               tag: Optional[str] = None) -> BoundReport:
    """Sum-form bound B/4 + t^2 Var(C) >= +-t^2 d<C>/dt + |coherence terms|^2.

    The primary sign makes the first right-hand term nonnegative; both signs
    are evaluated and reported (the bound holds for either).
    """
    inputs = _require_inputs(m, grid, inputs)
    if inputs.cum_h_chi is None:
        raise ValueError("mp_sum_tur requires a model with an orthogonal_state")
    _, var, dmean, tr_c_chi, default_tag = _observable_quantities(inputs, observable)
    tag = tag or default_tag
    t = inputs.times
    lhs = inputs.activity_total / 4.0 + t**2 * var

    def rhs_for(sign):
        coherence = np.abs(inputs.cum_h_chi + 1j * sign * t * tr_c_chi) ** 2
        return sign * t**2 * dmean + coherence

    sign = np.where(dmean >= 0, 1.0, -1.0)
    rhs_plus, rhs_minus = rhs_for(1.0), rhs_for(-1.0)
    rhs = np.where(sign > 0, rhs_plus, rhs_minus)
    applicable = np.ones(len(grid), dtype=bool)
    extras = {"rhs_plus": rhs_plus, "rhs_minus": rhs_minus}
    return _finish("mp_sum_tur", grid, lhs, rhs, applicable, tolerance,
                   tag=tag, sign=sign.astype(int), extras=extras)


def mp_product_tur(m: LindbladModel, grid: TimeGrid, observable="field",
                   inputs: Optional[BoundInputs] = None,
                   tolerance: float = DEFAULT_TOLERANCE,
                   tag: Optional[str] = None) -> BoundReport:
    """Product-form bound sqrt(B) std(C) >= +-t d<C>/dt / denominator.

    The denominator correction uses the orthogonal-state coherences; dropping
    it recovers the plain counting bound, so the report carries that
    reference value and the refinement mask (denominator in (0, 1]).
    """
    inputs = _require_inputs(m, grid, inputs)
    if inputs.cum_h_chi is None:
        raise ValueError("mp_product_tur requires a model with an orthogonal_state")
    _, var, dmean, tr_c_chi, default_tag = _observable_quantities(inputs, observable)
    tag = tag or default_tag
    t = inputs.times
    b = inputs.activity_total
    applicable = (t > 0) & (var > SINGULAR_FLOOR) & (b > SINGULAR_FLOOR)
    std = np.sqrt(np.clip(var, 0.0, None))
    sqrt_b = np.sqrt(np.clip(b, 0.0, None))
    lhs = sqrt_b * std

    def denominator(sign):
        with np.errstate(divide="ignore", invalid="ignore"):
            z = 2.0 * inputs.cum_h_chi / sqrt_b + 1j * sign * tr_c_chi / std
        return 1.0 - 0.5 * np.abs(z) ** 2

    sign = np.where(dmean >= 0, 1.0, -1.0)
    den_plus, den_minus = denominator(1.0), denominator(-1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        rhs_plus = t * dmean / den_plus
        rhs_minus = -t * dmean / den_minus
    rhs = np.where(sign > 0, rhs_plus, rhs_minus)
    den = np.where(sign > 0, den_plus, den_minus)
    robertson_rhs = np.abs(t * dmean)
    extras = {
        "rhs_plus": rhs_plus,
        "rhs_minus": rhs_minus,
        "denominator": den,
        "robertson_rhs": robertson_rhs,
        "refines_robertson": applicable & (den > 0) & (den <= 1.0),
    }
    return _finish("mp_product_tur", grid, lhs, rhs, applicable, tolerance,
                   tag=tag, sign=sign.astype(int), extras=extras)


def mp_qsl(m: LindbladModel, grid: TimeGrid, inputs: Optional[BoundInputs] = None,
           tolerance: float = DEFAULT_TOLERANCE) -> BoundReport:
    """Speed limit with the coherence refinement factor (1 - R(t))."""
    inputs = _require_inputs(m, grid, inputs)
    if inputs.bures_from_start is None:
        raise ValueError("mp_qsl requires a pure initial state")
    if inputs.chi_overlap is None:
        raise ValueError("mp_qsl requires a model with an orthogonal_state")
    t = inputs.times
    g = inputs.gamma
    absg = np.abs(g)
    b = np.clip(inputs.activity_total, 0.0, None)
    regular = _gamma_regular(inputs) & (b > SINGULAR_FLOOR)
    regular[0] = False

    r = np.zeros(len(grid))
    with np.errstate(divide="ignore", invalid="ignore"):
        first = g * inputs.chi_overlap / (absg * np.sqrt(np.abs(1.0 - absg**2)))
        second = 2.0 * inputs.cum_h_chi / np.sqrt(b)
        r_all = 0.5 * np.abs(first + 1j * second) ** 2
    r[regular] = r_all[regular]

    base = _robertson_integrand(inputs)
    integrand = np.where(regular, (1.0 - r) * base, base)
    lhs = _qsl_lhs(inputs, integrand)
    rhs = inputs.bures_from_start
    applicable = np.ones(len(grid), dtype=bool)
    extras = {
        "R": r,
        "fallback": ~regular,
        "robertson_lhs": _qsl_lhs(inputs, base),
    }
    return _finish("mp_qsl", grid, lhs, rhs, applicable, tolerance, extras=extras)


def rs_system_tur(m: LindbladModel, grid: TimeGrid, observable: np.ndarray,
                  inputs: Optional[BoundInputs] = None,
                  conv_method: str = "aux_ode",
                  tolerance: float = DEFAULT_TOLERANCE,
                  tag: str = "system") -> BoundReport:
    """System-observable bound with the anticommutator (covariance) term."""
    inputs = _require_inputs(m, grid, inputs)
    c = np.asarray(observable, dtype=complex)
    defect = herm_defect(c)
    if defect > HERM_TOL:
        raise ValueError(f"observable is not Hermitian (defect {defect:.3e})")
    t = inputs.times
    rho = inputs.rho
    mean = np.einsum("ab,kba->k", c, rho).real
    mean_sq = np.einsum("ab,kba->k", c @ c, rho).real
    var = np.clip(mean_sq - mean**2, 0.0, None)
    dmean = (inputs.rho_flat @ (inputs.generator.T @ vec(c.T))).real

    conv = _system_convolution(m, grid, inputs, c, conv_method)

    lhs = inputs.activity_total * var
    rhs = 4.0 * (conv - mean * inputs.cum_mean_h) ** 2 + t**2 * dmean**2
    applicable = np.ones(len(grid), dtype=bool)
    extras = {"anticommutator_term": conv, "robertson_rhs": t**2 * dmean**2}
    return _finish("rs_system_tur", grid, lhs, rhs, applicable, tolerance,
                   tag=tag, extras=extras)


def _system_convolution(m, grid, inputs, c, method):
    """Re int_0^t Tr[C_heis(t-s) H_eff rho(s)] ds."""
    if method == "aux_ode":
        return (inputs.conv_flat @ vec(c.T)).real
    if method == "quadrature":
        heff = effective_hamiltonian(m)
        ccheck = matrix_series(build_superoperator(m, "adjoint").matrix, c, grid)
        src = np.einsum("ab,kbc->kac", heff, inputs.rho)
        return _convolution_quadrature(ccheck, src, grid.dt)
    raise ValueError(f"unknown convolution method {method!r}")


def _convolution_quadrature(kernel: np.ndarray, source: np.ndarray, dt: float) -> np.ndarray:
    """Re int_0^{t_i} Tr[kernel(t_i - s) source(s)] ds by the trapezoidal rule."""
    n = kernel.shape[0]
    kflat = kernel.reshape(n, -1)
    sflat = source.transpose(0, 2, 1).reshape(n, -1)
    out = np.zeros(n)
    for i in range(1, n):
        row = np.einsum("ja,ja->j", kflat[i::-1], sflat[: i + 1]).real
        out[i] = np.trapezoid(row, dx=dt)
    return out


def rs_field_tur(m: LindbladModel, grid: TimeGrid, inputs: Optional[BoundInputs] = None,
                 conv_method: str = "aux_ode",
                 tolerance: float = DEFAULT_TOLERANCE) -> BoundReport:
    """Counting-observable bound with the anticommutator refinement.

    The squared term adds the weighted-jump covariance pieces on top of the
    plain t^2 rate^2, so the right-hand side can only tighten the counting
    bound.
    """
    inputs = _require_inputs(m, grid, inputs)
    t = inputs.times
    dt = grid.dt
    h = m.hamiltonian

    if not m.jumps:
        nan = np.full(len(grid), np.nan)
        applicable = np.zeros(len(grid), dtype=bool)
        return _finish("rs_field_tur", grid, nan, nan, applicable, tolerance,
                       tag="field:weighted-jumps")

    cum_h_m1 = _cumtrapz((inputs.m1_flat @ vec(h.T)).real, dt)
    big_l = sum(a * (dagger(l) @ l) for l, a in zip(m.jumps, m.weights))
    dbl = _field_double_integral(m, grid, inputs, big_l, conv_method)

    lhs = inputs.activity_total * inputs.count_variance
    core = cum_h_m1 + dbl - inputs.count_mean * inputs.cum_mean_h
    rhs = 4.0 * core**2 + t**2 * inputs.count_rate**2
    applicable = np.ones(len(grid), dtype=bool)
    extras = {"robertson_rhs": t**2 * inputs.count_rate**2}
    return _finish("rs_field_tur", grid, lhs, rhs, applicable, tolerance,
                   tag="field:weighted-jumps", extras=extras)


def _field_double_integral(m, grid, inputs, big_l, method):
    """Re int_0^t ds1 int_0^{s1} ds2 Tr[bigL_heis(s1-s2) H_eff rho(s2)]."""
    if method == "aux_ode":
        inner = (inputs.conv_flat @ vec(big_l.T)).real
        return _cumtrapz(inner, grid.dt)
    if method == "quadrature":
        heff = effective_hamiltonian(m)
        lcheck = matrix_series(build_superoperator(m, "adjoint").matrix, big_l, grid)
        src = np.einsum("ab,kbc->kac", heff, inputs.rho)
        inner = _convolution_quadrature(lcheck, src, grid.dt)
        return _cumtrapz(inner, grid.dt)
    raise ValueError(f"unknown convolution method {method!r}")


def rs_qsl(m: LindbladModel, grid: TimeGrid, inputs: Optional[BoundInputs] = None,
           tolerance: float = DEFAULT_TOLERANCE) -> BoundReport:
    """Speed limit with the nonnegative correction S(t) under the square root."""
    inputs = _require_inputs(m, grid, inputs)
    if inputs.bures_from_start is None:
        raise ValueError("rs_qsl requires a pure initial state")
    t = inputs.times
    g = inputs.gamma
    absg2 = np.abs(g) ** 2
    regular = _gamma_regular(inputs)
    regular[0] = False

    s_corr = np.zeros(len(grid))
    with np.errstate(divide="ignore", invalid="ignore"):
        num = (g * inputs.beta).real - absg2 * inputs.cum_mean_h / np.where(t > 0, t, 1.0)
        s_all = num**2 / (absg2 * np.abs(1.0 - absg2))
    s_corr[regular] = s_all[regular]

    b = np.clip(inputs.activity_total, 0.0, None)
    radicand = np.zeros(len(grid))
    radicand[1:] = b[1:] / (4.0 * t[1:] ** 2) - s_corr[1:]
    clamped = int(np.sum(radicand[1:] < 0))
    integrand = np.zeros(len(grid))
    integrand[1:] = np.sqrt(np.clip(radicand[1:], 0.0, None))

    lhs = _qsl_lhs(inputs, integrand)
    rhs = inputs.bures_from_start
    applicable = np.ones(len(grid), dtype=bool)
    extras = {
        "S": s_corr,
        "fallback": ~regular,
        "clamped_points": clamped,
        "robertson_lhs": _qsl_lhs(inputs, _robertson_integrand(inputs)),
    }
    return _finish("rs_qsl", grid, lhs, rhs, applicable, tolerance, extras=extras)


def run_suite(m: LindbladModel, grid: TimeGrid, system_observable: Optional[np.ndarray] = None,
              tolerance: float = DEFAULT_TOLERANCE) -> dict:
    """Evaluate all eight relations on one model with shared inputs.

    The model needs a pure initial state and an orthogonal state (every
    bundled example has both).  The system-observable relations default to
    the projector onto the first basis state.
    """
    inputs = compute_inputs(m, grid)
    if system_observable is None:
        e0 = ket(m.dim, 0)
        system_observable = np.outer(e0, e0.conj())
    reports = {
        "robertson_tur": robertson_tur(m, grid, inputs, tolerance),
        "robertson_qsl": robertson_qsl(m, grid, inputs, tolerance),
        "mp_sum_tur": mp_sum_tur(m, grid, "field", inputs, tolerance),
        "mp_product_tur": mp_product_tur(m, grid, "field", inputs, tolerance),
        "mp_qsl": mp_qsl(m, grid, inputs, tolerance),
        "rs_system_tur": rs_system_tur(m, grid, system_observable, inputs,
                                       tolerance=tolerance),
        "rs_field_tur": rs_field_tur(m, grid, inputs, tolerance=tolerance),
        "rs_qsl": rs_qsl(m, grid, inputs, tolerance),
    }
    return reports
