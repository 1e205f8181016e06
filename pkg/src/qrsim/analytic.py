"""Closed-form dispersive-regime results as pure functions of SystemParams.

Covers the steady resonator field, intracavity photon number, the
single-shot sigma_z rate equations (full and reduced), measurement
fidelity versus measurement time, and the ensemble relaxation law
sigma_st + (sigma_0 - sigma_st) exp(-gamma t).

Wherever a coefficient depends on sigma_z it is evaluated by linear
interpolation between its values at sigma_z = +/-1,

    coeff(s) = [(1+s) coeff(+1) + (1-s) coeff(-1)] / 2,

the same rule that turns the reduced single-shot equation into the
ensemble rate equation once the decaying oscillations are dropped.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import _backend
from .errors import (
    DegenerateDenominator,
    FidelityOutOfRange,
    NonPositiveTau,
    StepTooLarge,
    ValidityWarning,
)
from .model import SystemParams, TimeGrid, Trajectory, _as_sector

#: resolution guard for the rate-equation RK4: dt * f_max must not exceed this
RATE_STEP_GUARD = 0.1


@dataclass(frozen=True)
class DispersiveQuantities:
    """Dispersive shift and the qubit-state-pulled detunings."""

    chi: float
    omega_qr: float
    omega_d: float
    omega_r: float
    omega_q: float

    def omega_tilde_dr(self, sector) -> float:
        """Drive-resonator detuning omega_d - omega_r + chi*sigma_z."""
        return self.omega_d - self.omega_r + self.chi * _as_sector(sector)

    def omega_tilde_qr(self, sector) -> float:
        """Qubit-resonator detuning omega_q - omega_r + chi*sigma_z."""
        return self.omega_qr + self.chi * _as_sector(sector)


def dispersive(params: SystemParams) -> DispersiveQuantities:
    """Dispersive shift chi = g^2/omega_qr and the pulled detunings."""
    return DispersiveQuantities(
        chi=params.chi,
        omega_qr=params.omega_qr,
        omega_d=params.omega_d,
        omega_r=params.omega_r,
        omega_q=params.omega_q,
    )


def steady_field_amplitude(params: SystemParams, sector) -> complex:
    """Drive contribution to the steady <a> in the frame rotating at omega_d.

    Returns i*epsilon / (omega_tilde_dr + i*kappa/2).  The bath and qubit
    contributions to the field have zero mean and enter only the photon
    number.  In the lab frame the amplitude rotates as exp(-i omega_d t).
    """
    wt = dispersive(params).omega_tilde_dr(sector)
    return 1j * params.epsilon / (wt + 0.5j * params.kappa)


def photon_number(params: SystemParams, sector, include_qubit_term: bool = False) -> float:
    """Bath-averaged intracavity photon number n_r^b for a frozen qubit sector.

    n_r^b = epsilon^2/(omega_tilde_dr^2 + kappa^2/4) + n_th
            [+ g^2 (1 - sigma_z) / (2 omega_tilde_qr^2)]

    The qubit term is off by default; it is smaller than the others by
    (g/omega_qr)^2 and the rate equations drop it.
    """
    s = _as_sector(sector)
    disp = dispersive(params)
    wt = disp.omega_tilde_dr(s)
    n = params.epsilon**2 / (wt**2 + 0.25 * params.kappa**2) + params.n_th
    if include_qubit_term:
        n += params.g**2 * (1 - s) / (2.0 * disp.omega_tilde_qr(s) ** 2)
    return n


def _rate_coefficients(params: SystemParams, include_qubit_term: bool):
    """Endpoint coefficient values feeding the interpolated rate equations."""
    disp = dispersive(params)
    wt_p = disp.omega_tilde_dr(+1)
    wt_m = disp.omega_tilde_dr(-1)
    lor_p = params.epsilon**2 / (wt_p**2 + 0.25 * params.kappa**2)
    lor_m = params.epsilon**2 / (wt_m**2 + 0.25 * params.kappa**2)
    n_p = photon_number(params, +1, include_qubit_term)
    n_m = photon_number(params, -1, include_qubit_term)
    pref = 2.0 * params.g**2 / params.omega_qr**2
    return pref, n_p, n_m, wt_p, wt_m, lor_p, lor_m


def sigma_z_rate_full(
    sigma_z: float, t: float, params: SystemParams, include_qubit_term: bool = False
) -> float:
    """Full single-shot rate d sigma_z/dt including the decaying oscillations."""
    pref, n_p, n_m, wt_p, wt_m, lor_p, lor_m = _rate_coefficients(params, include_qubit_term)
    k = params.kappa
    w = params.omega_qr
    env = math.exp(-0.5 * k * t)
    sn = math.sin(w * t) * env
    cs = math.cos(w * t) * env
    bracket = 0.5 - sigma_z * 0.5 - 0.5 * ((1 + sigma_z) * n_p - (1 - sigma_z) * n_m)
    b1 = 2.0 * w * sn + k * (1.0 - cs)
    df_p = lor_p * (2.0 * wt_p * (1.0 - cs) + k * sn)
    df_m = lor_m * (2.0 * wt_m * (1.0 - cs) + k * sn)
    drive = 0.5 * ((1 + sigma_z) * df_p - (1 - sigma_z) * df_m)
    return pref * (b1 * bracket - drive)


def sigma_z_rate_reduced(
    sigma_z: float, t: float, params: SystemParams, include_qubit_term: bool = False
) -> float:
    """Reduced rate: oscillating terms proportional to kappa and the drive
    detuning dropped, the kappa relaxation term kept non-decaying."""
    pref, n_p, n_m, wt_p, wt_m, lor_p, lor_m = _rate_coefficients(params, include_qubit_term)
    k = params.kappa
    w = params.omega_qr
    sn = math.sin(w * t) * math.exp(-0.5 * k * t)
    bracket = 0.5 - sigma_z * 0.5 - 0.5 * ((1 + sigma_z) * n_p - (1 - sigma_z) * n_m)
    drive = 0.5 * ((1 + sigma_z) * 2.0 * wt_p * lor_p - (1 - sigma_z) * 2.0 * wt_m * lor_m)
    return pref * ((2.0 * w * sn + k) * bracket - drive)


def _rate_step_limit(params: SystemParams) -> float:
    """Fastest scale the rate-equation RK4 must resolve."""
    fmax = max(abs(params.omega_qr), params.kappa)
    if params.epsilon > 0:
        disp = dispersive(params)
        fmax = max(fmax, abs(disp.omega_tilde_dr(+1)), abs(disp.omega_tilde_dr(-1)))
    return fmax


def integrate_sigma_z(
    sigma_z0: float,
    grid: TimeGrid,
    params: SystemParams,
    variant: str = "reduced",
    include_qubit_term: bool = False,
) -> Trajectory:
    """Fixed-step RK4 solution of the chosen rate equation on the grid.

    The grid spacing is the RK4 step; it must resolve the fastest frequency
    (dt * max(|omega_qr|, kappa, |omega_tilde_dr|) <= 0.1).  Overshoot
    beyond [-1, 1] is clamped and reported as a warning when it exceeds
    integrator tolerance.
    """
    if abs(sigma_z0) > 1:
        raise ValueError(f"sigma_z0 must lie in [-1, 1], got {sigma_z0}")
    if variant not in ("full", "reduced"):
        raise ValueError(f"variant must be 'full' or 'reduced', got {variant!r}")
    if grid.dt * _rate_step_limit(params) > RATE_STEP_GUARD:
        raise StepTooLarge(
            f"grid dt {grid.dt:.3g} does not resolve the oscillation scale "
            f"{_rate_step_limit(params):.3g} (need dt*f <= {RATE_STEP_GUARD})"
        )
    pref, n_p, n_m, wt_p, wt_m, lor_p, lor_m = _rate_coefficients(params, include_qubit_term)
    sigma, overshoot = _backend.rate_rk4(
        float(sigma_z0),
        grid.t_start,
        grid.dt,
        grid.n_steps,
        pref,
        params.omega_qr,
        params.kappa,
        n_p,
        n_m,
        wt_p,
        wt_m,
        lor_p,
        lor_m,
        variant == "full",
    )
    traj_warnings = []
    if overshoot > 1e-6:
        traj_warnings.append(f"clamped sigma_z overshoot of {overshoot:.2e} beyond [-1, 1]")
    return _analytic_trajectory(grid, sigma, params, traj_warnings)


def _analytic_trajectory(
    grid: TimeGrid, sigma: np.ndarray, params: SystemParams, warnings_: list[str] | None = None
) -> Trajectory:
    """Fill the field columns from sigma_z via the interpolation rule."""
    n_p = photon_number(params, +1)
    n_m = photon_number(params, -1)
    amp_p = steady_field_amplitude(params, +1)
    amp_m = steady_field_amplitude(params, -1)
    photon = 0.5 * ((1 + sigma) * n_p + (1 - sigma) * n_m)
    amp = 0.5 * ((1 + sigma) * amp_p + (1 - sigma) * amp_m)
    return Trajectory(
        times=grid.times(),
        columns={
            "sigma_z": np.asarray(sigma, dtype=float),
            "photon_number": photon,
            "re_a": amp.real,
            "im_a": amp.imag,
        },
        warnings=warnings_ or [],
    )


def sigma_stationary_bath(n_th: float) -> float:
    """Stationary sigma_z under bath alone: 1/(1 + 2 n_th)."""
    if n_th < 0:
        raise ValueError(f"n_th must be >= 0, got {n_th}")
    return 1.0 / (1.0 + 2.0 * n_th)


def fidelity_curve(tau: float, params: SystemParams, include_qubit_term: bool = False) -> float:
    """Closed-form single-shot fidelity of the post-collapse excited state.

    F(tau) = 1 - g^2 (n_r^b + 1)/omega_qr^2 * (1 - sin(omega_qr tau)/(omega_qr tau))

    with n_r^b evaluated at sigma_z = -1.  Derived for tau < 2/kappa; beyond
    that a ValidityWarning is emitted rather than switching formulas (the
    long-tau path is :func:`fidelity_numeric`).
    """
    if not tau > 0:
        raise NonPositiveTau(f"tau must be > 0, got {tau}")
    if tau >= 2.0 / params.kappa:
        warnings.warn(
            f"fidelity_curve evaluated at tau={tau:.3g} >= 2/kappa={2.0 / params.kappa:.3g}, "
            "outside the stated validity window",
            ValidityWarning,
            stacklevel=2,
        )
    n_rb = photon_number(params, -1, include_qubit_term)
    x = params.omega_qr * tau
    return 1.0 - params.g**2 * (n_rb + 1.0) / params.omega_qr**2 * (1.0 - math.sin(x) / x)


def fidelity_asymptotic(params: SystemParams, include_qubit_term: bool = False) -> float:
    """Large-omega_qr*tau limit of the fidelity: 1 - g^2 (n_r^b + 1)/omega_qr^2."""
    n_rb = photon_number(params, -1, include_qubit_term)
    return 1.0 - params.g**2 * (n_rb + 1.0) / params.omega_qr**2


def fidelity_numeric(
    tau: float,
    params: SystemParams,
    variant: str = "reduced",
    n_steps: int | None = None,
) -> float:
    """Fidelity by quadrature: (1/tau) integral of sqrt((1 - sigma_z)/2).

    sigma_z comes from :func:`integrate_sigma_z` started at -1; the
    integral is the trapezoidal rule on the integration grid.
    """
    if not tau > 0:
        raise NonPositiveTau(f"tau must be > 0, got {tau}")
    if n_steps is None:
        n_steps = max(16, math.ceil(tau * _rate_step_limit(params) / 0.08))
    grid = TimeGrid(0.0, tau, n_steps)
    traj = integrate_sigma_z(-1.0, grid, params, variant=variant)
    beta = np.sqrt((1.0 - traj["sigma_z"]) / 2.0)
    return float(np.trapezoid(beta, traj.times) / tau)


def min_measurement_time(fidelity_target: float, n_rb: float, omega_qr: float) -> float:
    """Lower bound on the measurement time for a target fidelity.

    tau_min = (n_r^b + 1) / (2 (1 - F) |omega_qr|); diverges as F -> 1.
    """
    if not 0.0 < fidelity_target < 1.0:
        raise FidelityOutOfRange(
            f"fidelity target must lie in (0, 1), got {fidelity_target}"
        )
    if omega_qr == 0:
        raise ValueError("omega_qr must be nonzero")
    return (n_rb + 1.0) / (2.0 * (1.0 - fidelity_target) * abs(omega_qr))


def phi(sector, params: SystemParams) -> float:
    """Ensemble-relaxation coefficient phi(sigma_z) at an endpoint sector.

    phi = n_r^b + 1/2 + (2 omega_tilde_dr/kappa) * epsilon^2/(omega_tilde_dr^2
    + kappa^2/4), with n_r^b excluding the qubit term.
    """
    s = _as_sector(sector)
    wt = dispersive(params).omega_tilde_dr(s)
    lor = params.epsilon**2 / (wt**2 + 0.25 * params.kappa**2)
    return photon_number(params, s) + 0.5 + (2.0 * wt / params.kappa) * lor


@dataclass(frozen=True)
class RelaxationSummary:
    """Stationary value and rate of the ensemble relaxation law."""

    sigma_st: float
    gamma: float
    phi_plus: float
    phi_minus: float


def relaxation_summary(params: SystemParams) -> RelaxationSummary:
    """Stationary value and relaxation rate of the ensemble rate equation.

    sigma_st = (phi- - phi+ + 1)/(phi- + phi+),
    gamma    = kappa g^2 (phi- + phi+)/omega_qr^2.

    For red-detuned drive (omega_tilde_dr < 0) phi can drop below 1/2 and
    sigma_st can leave [-1, 1]; a ValidityWarning is emitted in that case.
    """
    phi_p = phi(+1, params)
    phi_m = phi(-1, params)
    denom = phi_m + phi_p
    if denom == 0:
        raise DegenerateDenominator("phi+ + phi- = 0; stationary value undefined")
    sigma_st = (phi_m - phi_p + 1.0) / denom
    gamma = params.kappa * params.g**2 * denom / params.omega_qr**2
    if not -1.0 <= sigma_st <= 1.0:
        warnings.warn(
            f"sigma_st={sigma_st:.4g} outside [-1, 1]; the ensemble formulas are "
            "being used outside their validity regime (red-detuned strong drive)",
            ValidityWarning,
            stacklevel=2,
        )
    return RelaxationSummary(sigma_st=sigma_st, gamma=gamma, phi_plus=phi_p, phi_minus=phi_m)


def ensemble_rate(sigma_z: float, params: SystemParams) -> float:
    """Right-hand side of the ensemble rate equation for <sigma_z>."""
    phi_p = phi(+1, params)
    phi_m = phi(-1, params)
    pref = params.kappa * params.g**2 / params.omega_qr**2
    return pref * (-sigma_z * (phi_p + phi_m) + phi_m - phi_p + 1.0)


def ensemble_relaxation(sigma_z0: float, grid: TimeGrid, params: SystemParams) -> Trajectory:
    """Exponential ensemble solution sampled on the grid."""
    if abs(sigma_z0) > 1:
        raise ValueError(f"sigma_z0 must lie in [-1, 1], got {sigma_z0}")
    summary = relaxation_summary(params)
    times = grid.times()
    sigma = summary.sigma_st + (sigma_z0 - summary.sigma_st) * np.exp(-summary.gamma * times)
    return _analytic_trajectory(grid, sigma, params)
