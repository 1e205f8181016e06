"""Physical conventions, parameter validation, and shared domain types.

Conventions used throughout the package:

* hbar = 1; every frequency and rate is angular and shares one arbitrary
  consistent unit (tests use kappa = 1 as the scale).
* sigma_z = +1 labels the qubit ground state, -1 the excited state (the
  qubit Hamiltonian is -(omega_q/2) sigma_z).
* The drive enters only through a single nonnegative real amplitude
  ``epsilon``; its phase is fixed to zero because only epsilon**2 appears
  in any implemented quantity.
* The bath is summarized by the resonator decay rate ``kappa`` and the
  thermal occupancy ``n_th`` at the resonator frequency.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    NegativeOccupancy,
    NonPositiveRate,
    NonPositiveRatio,
    ZeroDetuning,
)

#: advisory dispersive-regime bounds checked by :func:`validate`
COUPLING_RATIO_BOUND = 0.2     # |g / omega_qr|
LINEWIDTH_RATIO_BOUND = 0.1    # kappa / |omega_qr|
DETUNING_SCALE_BOUND = 0.2     # |omega_qr| / omega_r

#: tolerance for agreement between an explicit n_th and temperature_ratio
N_TH_CONSISTENCY_TOL = 1e-9


def n_th_from_temperature(temperature_ratio: float) -> float:
    """Bose-Einstein occupancy 1/(exp(hbar*omega/k_B T) - 1).

    ``temperature_ratio`` is the dimensionless hbar*omega/(k_B T); it must
    be positive (the occupancy diverges at 0 and is unphysical below).
    """
    if not temperature_ratio > 0:
        raise NonPositiveRatio(
            f"temperature_ratio must be > 0, got {temperature_ratio}"
        )
    return 1.0 / math.expm1(temperature_ratio)


class QubitSector(enum.IntEnum):
    """Qubit eigenstate label; +1 is the ground state, -1 the excited state."""

    GROUND = +1
    EXCITED = -1


def _as_sector(sector) -> int:
    value = int(sector)
    if value not in (+1, -1):
        raise ValueError(f"sigma_z sector must be +1 or -1, got {sector}")
    return value


@dataclass(frozen=True)
class SystemParams:
    """All rates and frequencies of the driven qubit-resonator-bath model.

    ``g`` is the qubit-resonator coupling expressed as a frequency.  If
    ``temperature_ratio`` is given, ``n_th`` may be omitted and is derived
    from the Bose-Einstein occupancy; if both are given they must agree to
    within ``N_TH_CONSISTENCY_TOL``.
    """

    omega_q: float
    omega_r: float
    omega_d: float
    g: float
    kappa: float
    epsilon: float = 0.0
    n_th: float | None = None
    temperature_ratio: float | None = None

    def __post_init__(self):
        if not self.kappa > 0:
            raise NonPositiveRate(f"kappa must be > 0, got {self.kappa}")
        if not self.omega_q > 0:
            raise NonPositiveRate(f"omega_q must be > 0, got {self.omega_q}")
        if not self.omega_r > 0:
            raise NonPositiveRate(f"omega_r must be > 0, got {self.omega_r}")
        if self.omega_d < 0:
            raise NonPositiveRate(f"omega_d must be >= 0, got {self.omega_d}")
        if self.epsilon < 0:
            raise NonPositiveRate(f"epsilon must be >= 0, got {self.epsilon}")
        if self.omega_q == self.omega_r:
            raise ZeroDetuning(
                "omega_q = omega_r: the dispersive shift chi = g^2/omega_qr "
                "divides by the qubit-resonator detuning"
            )
        if self.temperature_ratio is not None:
            derived = n_th_from_temperature(self.temperature_ratio)
            if self.n_th is None:
                object.__setattr__(self, "n_th", derived)
            elif abs(self.n_th - derived) > N_TH_CONSISTENCY_TOL:
                raise NegativeOccupancy(
                    f"n_th={self.n_th} inconsistent with temperature_ratio="
                    f"{self.temperature_ratio} (Bose-Einstein gives {derived})"
                )
        if self.n_th is None:
            raise NegativeOccupancy("one of n_th or temperature_ratio is required")
        if self.n_th < 0:
            raise NegativeOccupancy(f"n_th must be >= 0, got {self.n_th}")

    @property
    def omega_qr(self) -> float:
        """Qubit-resonator detuning omega_q - omega_r."""
        return self.omega_q - self.omega_r

    @property
    def chi(self) -> float:
        """Dispersive shift g^2/omega_qr (hbar = 1 units)."""
        return self.g**2 / self.omega_qr


def validate(params: SystemParams) -> list[str]:
    """Return the (possibly empty) list of dispersive-regime advisory warnings.

    Hard invariant violations (kappa <= 0, omega_q = omega_r, n_th < 0, ...)
    raise at :class:`SystemParams` construction, so a constructed instance
    can only produce warnings here.  The bounds are advisory: the
    perturbative formulas degrade gracefully, they do not become invalid at
    a sharp threshold.
    """
    warnings: list[str] = []
    aqr = abs(params.omega_qr)
    if abs(params.g) / aqr > COUPLING_RATIO_BOUND:
        warnings.append(
            f"dispersive bound |g/omega_qr| <= {COUPLING_RATIO_BOUND} violated "
            f"(got {abs(params.g) / aqr:.4g})"
        )
    if params.kappa / aqr > LINEWIDTH_RATIO_BOUND:
        warnings.append(
            f"linewidth bound kappa/|omega_qr| <= {LINEWIDTH_RATIO_BOUND} violated "
            f"(got {params.kappa / aqr:.4g})"
        )
    if aqr / params.omega_r > DETUNING_SCALE_BOUND:
        warnings.append(
            f"detuning-scale bound |omega_qr|/omega_r <= {DETUNING_SCALE_BOUND} "
            f"violated (got {aqr / params.omega_r:.4g})"
        )
    return warnings


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time grid with n_steps intervals (n_steps + 1 sample points)."""

    t_start: float
    t_end: float
    n_steps: int

    def __post_init__(self):
        if not self.t_end > self.t_start:
            raise ValueError(f"t_end must exceed t_start, got [{self.t_start}, {self.t_end}]")
        if self.n_steps < 1:
            raise ValueError(f"n_steps must be >= 1, got {self.n_steps}")

    @property
    def dt(self) -> float:
        return (self.t_end - self.t_start) / self.n_steps

    def times(self) -> np.ndarray:
        return self.t_start + self.dt * np.arange(self.n_steps + 1)


#: the named series every Trajectory carries, aligned with ``times``
TRAJECTORY_COLUMNS = ("sigma_z", "photon_number", "re_a", "im_a")


@dataclass
class Trajectory:
    """Time grid plus sampled observables.

    ``columns`` holds exactly the series in :data:`TRAJECTORY_COLUMNS`.
    ``warnings`` collects integrator advisories (truncation overflow,
    clamped overshoot); ``diagnostics`` holds optional per-sample health
    metrics recorded by the oracle (trace error, hermiticity error, ...).
    """

    times: np.ndarray
    columns: dict[str, np.ndarray]
    warnings: list[str] = field(default_factory=list)
    diagnostics: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.times)
        for name in TRAJECTORY_COLUMNS:
            if name not in self.columns:
                raise ValueError(f"missing trajectory column {name!r}")
            if len(self.columns[name]) != n:
                raise ValueError(f"column {name!r} not aligned with times")
        if n > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("times must be strictly increasing")

    def __getitem__(self, name: str) -> np.ndarray:
        return self.columns[name]
