"""Time evolution of the junction models and the classical pendulum.

Three dynamical models run from matched initial data:

* exact unitary evolution under the quadratic-charging Hamiltonian,
* the self-consistent (state-dependent) flow, integrated with a midpoint
  predictor-corrector: build H from the state, half-step, rebuild H from
  the half-step state, take the full step with the rebuilt H,
* the classical pendulum  phidd = -omega^2 sin(phi).

Conventions (frozen):

* The trajectory phase is the estimator phi := arg <a1+ a2>, unwrapped by
  continuity and undefined (NaN) where |<a1+ a2>| < 1e-12.  On a product
  configuration with construction label theta the estimator reads -theta.
* The self-consistent flow obeys  d(phi)/dt = E_C (n1 - nbar1)  up to an
  O(lam/N) correction, and its linearization about the phase-locked
  configuration (label pi for lam > 0) oscillates at
  sqrt((E_C + 2|lam|/N) * E_J), a factor ~sqrt(2) below the quadratic
  model's plasma constant sqrt(2 E_C E_J).  Pendulum comparisons therefore
  run the pendulum at the matched frequency and in displacement
  coordinates (phase relative to the locked configuration).
* The conserved quantity reported per model: <H> for the exact run,
  lam Re<a1+ a2> + (E_C/2)(<n1> - nbar1)^2 for the self-consistent flow,
  phidot^2/2 - omega^2 cos(phi) for the pendulum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import fock, jj
from .errors import (
    ContractViolationError,
    DomainError,
    FitError,
    IntegrationFailureError,
)

COHERENCE_FLOOR = 1e-12
NORM_DRIFT_TOL = 1e-9
FIDELITY_TOL = 1e-6
FIDELITY_COLLAPSE = 1e-3


@dataclass
class Trajectory:
    """Time series produced by one dynamical model.

    `phi` is the unwrapped coherence phase (NaN where undefined); `energy`
    is the model-specific conserved quantity; `fidelity` (self-consistent
    and exact runs) is the squared overlap with the moment-matched product
    configuration; `phidot` is carried by pendulum runs.
    """

    times: np.ndarray
    n1: np.ndarray
    phi: np.ndarray
    norm_drift: np.ndarray
    energy: np.ndarray
    fidelity: np.ndarray | None = None
    phidot: np.ndarray | None = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.n1 = np.asarray(self.n1, dtype=float)
        self.phi = np.asarray(self.phi, dtype=float)
        self.norm_drift = np.asarray(self.norm_drift, dtype=float)
        self.energy = np.asarray(self.energy, dtype=float)
        arrays = [self.n1, self.phi, self.norm_drift, self.energy]
        if self.fidelity is not None:
            self.fidelity = np.asarray(self.fidelity, dtype=float)
            arrays.append(self.fidelity)
        if self.phidot is not None:
            self.phidot = np.asarray(self.phidot, dtype=float)
            arrays.append(self.phidot)
        n = len(self.times)
        if any(len(a) != n for a in arrays):
            raise ContractViolationError("trajectory arrays must share one length")
        if np.any(np.diff(self.times) <= 0):
            raise ContractViolationError("trajectory times must be strictly increasing")

    def rows(self) -> list[dict]:
        out = []
        for i, t in enumerate(self.times):
            out.append({
                "time": float(t),
                "n1": _none_if_nan(self.n1[i]),
                "phi": _none_if_nan(self.phi[i]),
                "norm_drift": float(self.norm_drift[i]),
                "energy": float(self.energy[i]),
                "fidelity": (_none_if_nan(self.fidelity[i])
                             if self.fidelity is not None else None),
            })
        return out


def _none_if_nan(x):
    x = float(x)
    return None if math.isnan(x) else x


def _unwrap_keeping_nans(raw: np.ndarray) -> np.ndarray:
    out = np.asarray(raw, dtype=float).copy()
    finite = np.isfinite(out)
    out[finite] = np.unwrap(out[finite])
    return out


def meanfield_matched_omega(params: jj.JJParams) -> float:
    """Linearized frequency of the self-consistent flow about its
    phase-locked configuration; exact at nbar1 = N/2 (elsewhere the locked
    point shifts by O(lam/E_C) and this is the leading estimate)."""
    e_j = abs(jj.derived_constants(params).e_j)
    return float(np.sqrt((params.e_c + 2.0 * abs(params.lam) / params.n_total) * e_j))


def locked_phase_label(params: jj.JJParams) -> float:
    """Construction label of the phase-locked product configuration."""
    return float(np.pi) if params.lam > 0 else 0.0


def displacement_from_locked(phi_estimator: np.ndarray, params: jj.JJParams
                             ) -> np.ndarray:
    """Phase relative to the locked configuration, wrapped point-wise into
    (-pi, pi] and then unwrapped along the trajectory."""
    anchor = -locked_phase_label(params)
    raw = np.asarray(phi_estimator, dtype=float) - anchor
    wrapped = np.where(np.isfinite(raw),
                       np.mod(raw + np.pi, 2.0 * np.pi) - np.pi, np.nan)
    return _unwrap_keeping_nans(wrapped)


# -- self-consistent evolution -------------------------------------------------


def evolve_meanfield(initial: fock.StateVector, params: jj.JJParams, horizon: float,
                     dt: float, sample_every: int = 1, tol: float = 1e-11,
                     max_refinements: int = 8) -> Trajectory:
    """Integrate the state-dependent flow i d|psi>/dt = H[psi]|psi>.

    Midpoint self-consistency with one corrector pass; the step is halved
    (up to `max_refinements` times) until norm drift stays within 1e-9 and
    the product fidelity within 1e-6 of unity.  A fidelity collapse below
    1 - 1e-3 aborts the attempt as an integration failure.
    """
    if dt <= 0:
        raise ContractViolationError("dt must be positive")
    if horizon < 0:
        raise ContractViolationError("horizon must be >= 0")
    if initial.space.kind != "fixed_sector" or initial.space.n_total != params.n_total:
        raise ContractViolationError("initial state must live on the parameter sector")
    cur_dt, cur_stride = float(dt), int(sample_every)
    last_error = None
    for _ in range(max_refinements + 1):
        try:
            traj = _integrate_meanfield(initial, params, horizon, cur_dt,
                                        cur_stride, tol)
        except IntegrationFailureError as exc:
            last_error = exc
            cur_dt *= 0.5
            cur_stride *= 2
            continue
        drift_ok = np.max(traj.norm_drift) <= NORM_DRIFT_TOL
        fid_ok = np.min(traj.fidelity) >= 1.0 - FIDELITY_TOL
        if drift_ok and fid_ok:
            return traj
        last_error = IntegrationFailureError(
            f"invariants unmet at dt = {cur_dt} (norm drift "
            f"{np.max(traj.norm_drift):.2e}, min fidelity {np.min(traj.fidelity)})")
        cur_dt *= 0.5
        cur_stride *= 2
    raise last_error


def _integrate_meanfield(initial, params, horizon, dt, sample_every, tol):
    space = initial.space
    n_steps = max(int(round(horizon / dt)), 1) if horizon > 0 else 0
    step = horizon / n_steps if n_steps else 0.0
    psi = initial.amplitudes.copy()
    k = np.arange(space.dimension, dtype=float)
    off = jj.tunneling_offdiagonal(params.n_total, params.lam)
    times, n1s, raw_phi, drifts, energies, fids = [], [], [], [], [], []

    def record(t, vec):
        state = fock.StateVector(space, vec / np.linalg.norm(vec))
        n1 = jj.mean_n1(state)
        z = jj.coherence(state)
        _, _, fid = jj.best_fit_product(state)
        if fid < 1.0 - FIDELITY_COLLAPSE:
            raise IntegrationFailureError(
                f"product fidelity collapsed to {fid} at t = {t} (step too large)")
        times.append(t)
        n1s.append(n1)
        raw_phi.append(np.angle(z) if abs(z) > COHERENCE_FLOOR else np.nan)
        drifts.append(abs(np.linalg.norm(vec) - 1.0))
        energies.append(params.lam * z.real
                        + 0.5 * params.e_c * (n1 - params.n_bar1) ** 2)
        fids.append(fid)

    record(0.0, psi)
    for s in range(n_steps):
        n1 = float(k @ np.abs(psi) ** 2) / float(np.vdot(psi, psi).real)
        half = fock.tridiagonal_expm_apply(
            jj.charging_diagonal(params, "mean_field", n1), off, psi,
            0.5 * step, tol)
        n1_half = float(k @ np.abs(half) ** 2) / float(np.vdot(half, half).real)
        psi = fock.tridiagonal_expm_apply(
            jj.charging_diagonal(params, "mean_field", n1_half), off, psi,
            step, tol)
        if (s + 1) % sample_every == 0 or s + 1 == n_steps:
            record((s + 1) * step, psi)
    return Trajectory(times=np.array(times), n1=np.array(n1s),
                      phi=_unwrap_keeping_nans(np.array(raw_phi)),
                      norm_drift=np.array(drifts), energy=np.array(energies),
                      fidelity=np.array(fids))


# -- exact evolution -----------------------------------------------------------


def evolve_exact(initial: fock.StateVector, params: jj.JJParams, horizon: float,
                 dt_out: float, kind: str = "bose_hubbard",
                 tol: float = 1e-10) -> Trajectory:
    """Exact unitary evolution sampled on a uniform output grid."""
    if dt_out <= 0:
        raise ContractViolationError("dt_out must be positive")
    space = initial.space
    hamiltonian = jj.build_jj_hamiltonian(params, space, kind, state=initial)
    n_out = max(int(round(horizon / dt_out)), 1) if horizon > 0 else 0
    times = [i * horizon / n_out for i in range(n_out + 1)] if n_out else [0.0]
    states = fock.evolve_unitary_sampled(initial, hamiltonian, times, tol)
    n1s, raw_phi, drifts, energies, fids = [], [], [], [], []
    for st in states:
        n1s.append(jj.mean_n1(st))
        z = jj.coherence(st)
        raw_phi.append(np.angle(z) if abs(z) > COHERENCE_FLOOR else np.nan)
        drifts.append(abs(st.norm() - 1.0))
        energies.append(fock.expectation(st, hamiltonian).real)
        fids.append(jj.best_fit_product(st)[2])
    return Trajectory(times=np.array(times), n1=np.array(n1s),
                      phi=_unwrap_keeping_nans(np.array(raw_phi)),
                      norm_drift=np.array(drifts), energy=np.array(energies),
                      fidelity=np.array(fids))


# -- classical pendulum --------------------------------------------------------

# 6th-order Yoshida composition of the leapfrog (solution A); kept symplectic
# so the energy error stays bounded instead of drifting.
_W1 = -1.17767998417887
_W2 = 0.235573213359357
_W3 = 0.784513610477560
_W0 = 1.0 - 2.0 * (_W1 + _W2 + _W3)
_YOSHIDA6 = (_W3, _W2, _W1, _W0, _W1, _W2, _W3)


def _pendulum_fixed_step(phi0, v0, omega, n_steps, dt, sample_every):
    w2 = omega * omega
    phi, v = float(phi0), float(v0)
    phis = [phi]
    vs = [v]
    for s in range(n_steps):
        for w in _YOSHIDA6:
            h = w * dt
            v -= 0.5 * h * w2 * math.sin(phi)
            phi += h * v
            v -= 0.5 * h * w2 * math.sin(phi)
        if (s + 1) % sample_every == 0 or s + 1 == n_steps:
            phis.append(phi)
            vs.append(v)
    return np.array(phis), np.array(vs)


def pendulum_trajectory(phi0: float, phidot0: float, omega: float, horizon: float,
                        dt: float, e_c: float | None = None,
                        n_bar1: float | None = None, sample_every: int = 1,
                        energy_tol: float = 1e-9,
                        max_refinements: int = 12) -> Trajectory:
    """Integrate phidd = -omega^2 sin(phi) with a fixed-step symplectic
    composition scheme, halving the step until the relative energy drift is
    within `energy_tol`.

    When `e_c` and `n_bar1` are supplied, n(t) is reconstructed from the
    phase-velocity relation n = nbar1 + phidot / E_C (constant n for
    E_C = 0, where the relation is degenerate); otherwise n1 is NaN.
    """
    if dt <= 0:
        raise ContractViolationError("dt must be positive")
    if horizon < 0:
        raise ContractViolationError("horizon must be >= 0")
    stride = int(sample_every)
    n_steps = max(int(round(horizon / dt)), 1) if horizon > 0 else 0
    if n_steps:
        n_steps = ((n_steps + stride - 1) // stride) * stride
    scale = max(abs(0.5 * phidot0 ** 2 - omega ** 2 * math.cos(phi0)),
                omega ** 2, 1e-30)
    drift = 0.0
    for _ in range(max_refinements + 1):
        step = horizon / n_steps if n_steps else 0.0
        phis, vs = _pendulum_fixed_step(phi0, phidot0, omega, n_steps, step, stride)
        energy = 0.5 * vs ** 2 - omega ** 2 * np.cos(phis)
        drift = np.max(np.abs(energy - energy[0])) / scale if n_steps else 0.0
        if drift <= energy_tol:
            break
        n_steps *= 2
        stride *= 2
    else:
        raise IntegrationFailureError(
            f"pendulum energy drift {drift:.2e} above {energy_tol} after refinement")
    n_samp = len(phis)
    times = (np.arange(n_samp) * (horizon / (n_samp - 1))
             if n_samp > 1 else np.array([0.0]))
    if e_c is not None and n_bar1 is not None:
        n1 = n_bar1 + vs / e_c if e_c > 0 else np.full(n_samp, float(n_bar1))
    else:
        n1 = np.full(n_samp, np.nan)
    return Trajectory(times=times, n1=n1, phi=phis,
                      norm_drift=np.zeros(n_samp), energy=energy, phidot=vs)


# -- fluctuation scaling -------------------------------------------------------


@dataclass(frozen=True)
class FluctuationReport:
    """Number variance and overlap phase width across background sizes, with
    fitted log-log exponents (number, phase)."""

    n_bar1_values: tuple[float, ...]
    number_variance: tuple[float, ...]
    phase_width: tuple[float, ...]
    fitted_exponents: tuple[float, float]

    def __post_init__(self):
        n = len(self.n_bar1_values)
        if len(self.number_variance) != n or len(self.phase_width) != n:
            raise ContractViolationError("fluctuation lists must align")
        if any(v <= 0 for v in self.number_variance + self.phase_width):
            raise ContractViolationError("fluctuation entries must be positive")

    def rows(self) -> list[dict]:
        return [{"n_bar1": nb, "number_variance": var, "phase_width": width}
                for nb, var, width in zip(self.n_bar1_values, self.number_variance,
                                          self.phase_width)]


def _overlap_magnitude(probs: np.ndarray, delta: float) -> float:
    k = np.arange(len(probs))
    return abs(np.sum(probs * np.exp(1j * k * delta)))


def phase_half_width(state: fock.StateVector, level: float = 0.5) -> float:
    """Phase offset at which |<n,phi | n,phi+delta>| drops to `level`,
    solved by bisection on the exact amplitude sum."""
    probs = state.probabilities()
    if _overlap_magnitude(probs, math.pi) > level:
        raise DomainError("overlap never drops to the requested level")
    lo, hi = 0.0, math.pi
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if _overlap_magnitude(probs, mid) > level:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def number_moments(state: fock.StateVector) -> tuple[float, float]:
    """(mean, variance) of n1 on a sector state, with compensated sums so the
    binomial identities hold to ~1e-12 even at N of a few thousand."""
    probs = state.probabilities()
    k = np.arange(len(probs), dtype=float)
    mean = math.fsum(k * probs)
    var = math.fsum((k - mean) ** 2 * probs)
    return mean, var


def fluctuation_scan(params_list: list[jj.JJParams], phi: float = 0.0
                     ) -> FluctuationReport:
    """Var(n1) and phase half-width of the product configuration per params,
    plus log-log slopes versus nbar1.

    At fixed filling p = nbar1/N the expected exponents are +1 (variance)
    and -1/2 (phase width).
    """
    if len(params_list) < 3:
        raise FitError("fluctuation fit needs at least 3 scan points")
    nb, variances, widths = [], [], []
    for params in params_list:
        space = jj.sector_space(params)
        state = jj.product_state(params.n_total, params.n_bar1, phi, space)
        _, var = number_moments(state)
        nb.append(float(params.n_bar1))
        variances.append(var)
        widths.append(phase_half_width(state))
    slope_num = float(np.polyfit(np.log(nb), np.log(variances), 1)[0])
    slope_phase = float(np.polyfit(np.log(nb), np.log(widths), 1)[0])
    return FluctuationReport(
        n_bar1_values=tuple(nb), number_variance=tuple(variances),
        phase_width=tuple(widths), fitted_exponents=(slope_num, slope_phase))


# -- cross-model comparison ----------------------------------------------------


@dataclass
class ComparisonRecord:
    """Matched-initial-condition runs of the three models on one time grid.

    Phases are displacement coordinates (relative to the locked
    configuration).  `div_n1` / `div_phi` are |exact - self-consistent|
    per time; `fidelity_exact` tracks how far the exact state leaves the
    product family.
    """

    times: np.ndarray
    n1_exact: np.ndarray
    n1_meanfield: np.ndarray
    n1_pendulum: np.ndarray
    phi_exact: np.ndarray
    phi_meanfield: np.ndarray
    phi_pendulum: np.ndarray
    div_n1: np.ndarray
    div_phi: np.ndarray
    fidelity_exact: np.ndarray
    max_div_n1: float
    max_div_phi: float

    def rows(self) -> list[dict]:
        out = []
        for i, t in enumerate(self.times):
            out.append({
                "time": float(t),
                "n1_exact": _none_if_nan(self.n1_exact[i]),
                "n1_meanfield": _none_if_nan(self.n1_meanfield[i]),
                "n1_pendulum": _none_if_nan(self.n1_pendulum[i]),
                "phi_exact": _none_if_nan(self.phi_exact[i]),
                "phi_meanfield": _none_if_nan(self.phi_meanfield[i]),
                "phi_pendulum": _none_if_nan(self.phi_pendulum[i]),
                "div_n1": _none_if_nan(self.div_n1[i]),
                "div_phi": _none_if_nan(self.div_phi[i]),
                "fidelity_exact": _none_if_nan(self.fidelity_exact[i]),
            })
        return out


def model_compare(params: jj.JJParams, n0: float, phi0: float, horizon: float,
                  dt_out: float | None = None, dt_mf: float | None = None
                  ) -> ComparisonRecord:
    """Run exact, self-consistent, and pendulum dynamics from matched data.

    `phi0` is the initial phase displacement from the locked configuration;
    the quantum runs start from the product configuration with label
    (locked label - phi0) and mean n0.  The pendulum starts at
    (phi0, E_C (n0 - nbar1)) with the matched linearized frequency.
    Requires a dense-path sector (N <= 2000).
    """
    if params.n_total > fock.DENSE_EIG_LIMIT:
        raise ContractViolationError("model_compare needs the dense path (N <= 2000)")
    omega_match = meanfield_matched_omega(params)
    rate = max(omega_match, abs(params.lam), 1e-12)
    if dt_out is None:
        dt_out = 0.1 / rate
    if dt_mf is None:
        dt_mf = 0.01 / rate
    n_out = max(int(round(horizon / dt_out)), 1)
    dt_out = horizon / n_out
    stride = max(int(round(dt_out / dt_mf)), 1)
    dt_mf = dt_out / stride

    space = jj.sector_space(params)
    label0 = locked_phase_label(params) - phi0
    initial = jj.product_state(params.n_total, n0, label0, space)

    exact = evolve_exact(initial, params, horizon, dt_out, "bose_hubbard")
    mf = evolve_meanfield(initial, params, horizon, dt_mf, sample_every=stride)
    pend = pendulum_trajectory(phi0, params.e_c * (n0 - params.n_bar1), omega_match,
                               horizon, dt_mf, e_c=params.e_c,
                               n_bar1=params.n_bar1, sample_every=stride)
    if not (len(exact.times) == len(mf.times) == len(pend.times)):
        raise ContractViolationError("model output grids failed to align")

    disp_exact = displacement_from_locked(exact.phi, params)
    disp_mf = displacement_from_locked(mf.phi, params)
    div_n1 = np.abs(exact.n1 - mf.n1)
    div_phi = np.abs(disp_exact - disp_mf)
    finite = np.isfinite(div_phi)
    max_div_phi = float(np.max(div_phi[finite])) if np.any(finite) else float("nan")
    return ComparisonRecord(
        times=exact.times, n1_exact=exact.n1, n1_meanfield=mf.n1,
        n1_pendulum=pend.n1, phi_exact=disp_exact, phi_meanfield=disp_mf,
        phi_pendulum=pend.phi, div_n1=div_n1, div_phi=div_phi,
        fidelity_exact=exact.fidelity, max_div_n1=float(np.max(div_n1)),
        max_div_phi=max_div_phi)
