"""Pure-numpy fallback for the hot integration kernels.

The compiled extension ``qrsim._kernels_cy`` implements the same two entry
points; :mod:`qrsim._backend` picks whichever is available at import time.
Both kernels are classical fixed-step RK4 and must agree to rounding.
"""

from __future__ import annotations

import math

import numpy as np

BACKEND = "python"


def rate_rk4(
    sigma0: float,
    t0: float,
    dt: float,
    n_steps: int,
    pref: float,
    w_qr: float,
    kappa: float,
    n_plus: float,
    n_minus: float,
    wt_plus: float,
    wt_minus: float,
    lor_plus: float,
    lor_minus: float,
    full: bool,
) -> tuple[np.ndarray, float]:
    """Integrate the single-shot sigma_z rate equation.

    Coefficients that depend on sigma_z (photon number, drive detuning) are
    linearly interpolated between their endpoint values at sigma_z = +/-1,
    which makes the equation exactly linear in sigma_z.  ``full`` keeps the
    decaying-oscillation terms proportional to kappa and the drive detuning;
    otherwise the reduced equation (non-decaying kappa term, oscillating
    drive terms dropped) is integrated.

    Returns the sampled trajectory (one value per step, including t0) and
    the largest overshoot beyond [-1, 1] that was clamped.
    """
    d2_plus = 2.0 * wt_plus * lor_plus
    d2_minus = 2.0 * wt_minus * lor_minus

    def rate(s: float, t: float) -> float:
        env = math.exp(-0.5 * kappa * t)
        sn = math.sin(w_qr * t) * env
        bracket = 0.5 - 0.5 * s - 0.5 * ((1.0 + s) * n_plus - (1.0 - s) * n_minus)
        if full:
            cs = math.cos(w_qr * t) * env
            b1 = 2.0 * w_qr * sn + kappa * (1.0 - cs)
            dfp = lor_plus * (2.0 * wt_plus * (1.0 - cs) + kappa * sn)
            dfm = lor_minus * (2.0 * wt_minus * (1.0 - cs) + kappa * sn)
            drive = 0.5 * ((1.0 + s) * dfp - (1.0 - s) * dfm)
        else:
            b1 = 2.0 * w_qr * sn + kappa
            drive = 0.5 * ((1.0 + s) * d2_plus - (1.0 - s) * d2_minus)
        return pref * (b1 * bracket - drive)

    out = np.empty(n_steps + 1)
    out[0] = sigma0
    s = sigma0
    overshoot = 0.0
    for i in range(n_steps):
        t = t0 + i * dt
        k1 = rate(s, t)
        k2 = rate(s + 0.5 * dt * k1, t + 0.5 * dt)
        k3 = rate(s + 0.5 * dt * k2, t + 0.5 * dt)
        k4 = rate(s + dt * k3, t + dt)
        s = s + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if s > 1.0:
            overshoot = max(overshoot, s - 1.0)
            s = 1.0
        elif s < -1.0:
            overshoot = max(overshoot, -1.0 - s)
            s = -1.0
        out[i + 1] = s
    return out, overshoot


def lindblad_step_interval(
    rho: np.ndarray,
    drift: np.ndarray,
    a_down: np.ndarray,
    a_up: np.ndarray,
    drive_plus: np.ndarray | None,
    drive_minus: np.ndarray | None,
    omega_d: float,
    t0: float,
    dt: float,
    n_steps: int,
) -> None:
    """Advance a density matrix by ``n_steps`` RK4 steps, in place.

    The right-hand side is
        drho = drift @ rho + rho @ drift^H
               + a_down @ rho @ a_down^H + a_up @ rho @ a_up^H
               - i [H_d(t), rho]
    with drift = -i H0 - (a_down^H a_down + a_up^H a_up)/2 and the optional
    time-dependent drive H_d(t) = e^{-i omega_d t} drive_plus
    + e^{+i omega_d t} drive_minus (drive_minus = drive_plus^H).
    """
    driven = drive_plus is not None

    def rhs(r: np.ndarray, t: float) -> np.ndarray:
        out = drift @ r
        out += r @ drift.conj().T
        tmp = a_down @ r
        out += tmp @ a_down.conj().T
        tmp = a_up @ r
        out += tmp @ a_up.conj().T
        if driven:
            c = np.exp(-1j * omega_d * t)
            hd = c * drive_plus + np.conj(c) * drive_minus
            out += -1j * (hd @ r - r @ hd)
        return out

    for i in range(n_steps):
        t = t0 + i * dt
        k1 = rhs(rho, t)
        k2 = rhs(rho + (0.5 * dt) * k1, t + 0.5 * dt)
        k3 = rhs(rho + (0.5 * dt) * k2, t + 0.5 * dt)
        k4 = rhs(rho + dt * k3, t + dt)
        rho += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
