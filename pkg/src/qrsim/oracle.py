"""Brute-force validator: full master-equation integration on a truncated
Fock space.

The qubit-resonator-drive model is integrated as a Lindblad equation; the
discrete bath is represented by thermal dissipators on the resonator with
rate kappa and occupancy n_th (the qubit has no direct dissipation channel,
so qubit relaxation emerges solely through the coupling g).

Two execution engines produce identical fixed-step RK4 results:

* ``stepper`` - literal RK4 time stepping of the density matrix; the only
  option when the generator is time dependent (lab frame with drive).
* ``propagator`` - for a time-independent generator L, one RK4 step is
  exactly the degree-4 Taylor polynomial of exp(h L) applied to vec(rho);
  the step transfer matrix is built once and powered between sample points.
  This is what makes desk-scale runs over thousands of resonator lifetimes
  affordable.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _backend, analytic
from .errors import (
    DimensionMismatch,
    FitDiverged,
    StepTooLarge,
    UnsupportedCombination,
    ValidityWarning,
)
from .model import SystemParams, TimeGrid, Trajectory, _as_sector

#: resolution guard: substep dt times the fastest frequency must not exceed this
EVOLVE_STEP_GUARD = 0.05

#: per-sample population allowed in the top two Fock levels before warning
TRUNCATION_LIMIT = 1e-5


@dataclass(frozen=True)
class HilbertSpec:
    """Fock truncation; the composite space has dimension 2 * n_fock."""

    n_fock: int = 20

    def __post_init__(self):
        if self.n_fock < 2:
            raise ValueError(f"n_fock must be >= 2, got {self.n_fock}")

    @property
    def dim(self) -> int:
        return 2 * self.n_fock


@dataclass(frozen=True)
class OracleConfig:
    """Frame, coupling form, integrator step, and Fock truncation.

    The rotating frame requires the RWA coupling: the counter-rotating term
    is time dependent in that frame and deliberately unsupported.  ``dt``
    defaults to the resolution guard; ``engine`` is resolved automatically
    unless forced.
    """

    frame: str = "rotating"
    coupling: str = "rwa"
    dt: float | None = None
    hilbert: HilbertSpec = field(default_factory=HilbertSpec)
    engine: str = "auto"

    def __post_init__(self):
        if self.frame not in ("lab", "rotating"):
            raise ValueError(f"frame must be 'lab' or 'rotating', got {self.frame!r}")
        if self.coupling not in ("full", "rwa"):
            raise ValueError(f"coupling must be 'full' or 'rwa', got {self.coupling!r}")
        if self.frame == "rotating" and self.coupling == "full":
            raise UnsupportedCombination(
                "full (counter-rotating) coupling is time dependent in the "
                "rotating frame; use the lab frame or the rwa coupling"
            )
        if self.dt is not None and not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if self.engine not in ("auto", "stepper", "propagator"):
            raise ValueError(f"unknown engine {self.engine!r}")


@dataclass(frozen=True)
class Operators:
    """Dense operators on the composite (qubit x Fock) space.

    Ordering is kron(qubit, fock) with qubit index 0 = ground
    (sigma_z = +1) and 1 = excited (sigma_z = -1); sigma_plus raises the
    sigma_z eigenvalue (excited -> ground), so sigma_minus sigma_plus is
    the excited-state projector (1 - sigma_z)/2.
    """

    a: np.ndarray
    adag: np.ndarray
    sigma_z: np.ndarray
    sigma_plus: np.ndarray
    sigma_minus: np.ndarray
    number: np.ndarray
    identity: np.ndarray
    n_fock: int


def build_operators(spec: HilbertSpec) -> Operators:
    """Construct the dense operator set for the truncated composite space."""
    n = spec.n_fock
    a1 = np.diag(np.sqrt(np.arange(1, n)), 1).astype(complex)
    iq = np.eye(2, dtype=complex)
    ifock = np.eye(n, dtype=complex)
    sz = np.diag([1.0, -1.0]).astype(complex)
    sp = np.zeros((2, 2), dtype=complex)
    sp[0, 1] = 1.0
    a = np.kron(iq, a1)
    return Operators(
        a=a,
        adag=a.conj().T,
        sigma_z=np.kron(sz, ifock),
        sigma_plus=np.kron(sp, ifock),
        sigma_minus=np.kron(sp.conj().T, ifock),
        number=np.kron(iq, a1.conj().T @ a1),
        identity=np.eye(2 * n, dtype=complex),
        n_fock=n,
    )


@dataclass(frozen=True)
class HamiltonianTerms:
    """Static Hamiltonian plus an optional oscillating drive pair.

    H(t) = static + exp(-i omega_d t) * drive_plus
                  + exp(+i omega_d t) * drive_minus
    with drive_minus = drive_plus^H (so H is Hermitian at every t).
    """

    static: np.ndarray
    drive_plus: np.ndarray | None
    drive_minus: np.ndarray | None
    omega_d: float

    @property
    def time_dependent(self) -> bool:
        return self.drive_plus is not None

    def at(self, t: float) -> np.ndarray:
        if not self.time_dependent:
            return self.static
        c = np.exp(-1j * self.omega_d * t)
        return self.static + c * self.drive_plus + np.conj(c) * self.drive_minus


def build_hamiltonian(
    params: SystemParams, config: OracleConfig, ops: Operators | None = None
) -> HamiltonianTerms:
    """Model Hamiltonian in the configured frame (constant offsets dropped).

    Lab frame:      H(t) = -(omega_q/2) sigma_z + omega_r a^+a + g*coupling
                           + i eps (e^{-i omega_d t} a^+ - e^{+i omega_d t} a)
    Rotating frame: detunings replace the bare frequencies and the drive
                    term i eps (a^+ - a) is static.

    The full coupling is g (sigma_+ - sigma_-)(a^+ - a); the rwa coupling
    keeps only the excitation-conserving half g (sigma_+ a^+ + sigma_- a).
    """
    if ops is None:
        ops = build_operators(config.hilbert)
    if config.coupling == "full":
        coupling = (ops.sigma_plus - ops.sigma_minus) @ (ops.adag - ops.a)
    else:
        coupling = ops.sigma_plus @ ops.adag + ops.sigma_minus @ ops.a
    if config.frame == "lab":
        h0 = -0.5 * params.omega_q * ops.sigma_z + params.omega_r * ops.number
        h0 += params.g * coupling
        if params.epsilon > 0:
            return HamiltonianTerms(
                static=h0,
                drive_plus=1j * params.epsilon * ops.adag,
                drive_minus=-1j * params.epsilon * ops.a,
                omega_d=params.omega_d,
            )
        return HamiltonianTerms(static=h0, drive_plus=None, drive_minus=None, omega_d=0.0)
    h0 = (
        -0.5 * (params.omega_q - params.omega_d) * ops.sigma_z
        + (params.omega_r - params.omega_d) * ops.number
        + params.g * coupling
        + 1j * params.epsilon * (ops.adag - ops.a)
    )
    return HamiltonianTerms(static=h0, drive_plus=None, drive_minus=None, omega_d=0.0)


def lindblad_rhs(rho: np.ndarray, hamiltonian: np.ndarray, params: SystemParams) -> np.ndarray:
    """Reference right-hand side d rho/dt for a given (Hermitian) Hamiltonian.

    drho/dt = -i[H, rho] + kappa (n_th+1) D[a] rho + kappa n_th D[a^+] rho
    with D[L] rho = L rho L^+ - {L^+L, rho}/2.  The engines use an
    algebraically identical but preassembled form; this explicit version is
    the contract (and the cross-check in the tests).
    """
    d = rho.shape[0]
    if rho.shape != (d, d) or hamiltonian.shape != (d, d) or d % 2:
        raise DimensionMismatch(
            f"rho {rho.shape} and hamiltonian {hamiltonian.shape} must be equal "
            "square matrices on the composite (2 x n_fock) space"
        )
    ops = build_operators(HilbertSpec(d // 2))
    a, adag = ops.a, ops.adag
    k, nb = params.kappa, params.n_th
    out = -1j * (hamiltonian @ rho - rho @ hamiltonian)
    num = adag @ a
    out += k * (nb + 1) * (a @ rho @ adag - 0.5 * (num @ rho + rho @ num))
    num = a @ adag
    out += k * nb * (adag @ rho @ a - 0.5 * (num @ rho + rho @ num))
    return out


# ---------------------------------------------------------------------------
# initial states
# ---------------------------------------------------------------------------

def thermal_state(n_fock: int, n_th: float) -> np.ndarray:
    """Thermal resonator state, renormalized on the truncated space."""
    p = np.exp(np.arange(n_fock) * np.log(n_th / (1.0 + n_th))) if n_th > 0 else None
    if p is None:
        p = np.zeros(n_fock)
        p[0] = 1.0
    rho = np.diag(p / p.sum()).astype(complex)
    return rho


def displaced_thermal_state(n_fock: int, alpha: complex, n_th: float) -> np.ndarray:
    """D(alpha) rho_thermal D(alpha)^+ on the truncated space."""
    rho = thermal_state(n_fock, n_th)
    if alpha == 0:
        return rho
    a1 = np.diag(np.sqrt(np.arange(1, n_fock)), 1).astype(complex)
    gen = -1j * (alpha * a1.conj().T - np.conj(alpha) * a1)  # Hermitian
    w, v = np.linalg.eigh(gen)
    u = (v * np.exp(1j * w)) @ v.conj().T
    return u @ rho @ u.conj().T


def sector_steady_state(params: SystemParams, sector, spec: HilbertSpec) -> np.ndarray:
    """Qubit eigenstate tensored with the driven cavity's steady field.

    The resonator starts in a displaced thermal state whose coherent
    amplitude is the analytic steady field for the frozen qubit sector,
    so the field transient the closed forms ignore is absent.
    """
    s = _as_sector(sector)
    alpha = analytic.steady_field_amplitude(params, s)
    rho_r = displaced_thermal_state(spec.n_fock, alpha, params.n_th)
    rho_q = np.zeros((2, 2), dtype=complex)
    rho_q[0 if s > 0 else 1, 0 if s > 0 else 1] = 1.0
    return np.kron(rho_q, rho_r)


def mixed_initial_state(params: SystemParams, sigma_z0: float, spec: HilbertSpec) -> np.ndarray:
    """Diagonal qubit mixture with <sigma_z> = sigma_z0, each sector paired
    with its own steady resonator state."""
    if abs(sigma_z0) > 1:
        raise ValueError(f"sigma_z0 must lie in [-1, 1], got {sigma_z0}")
    w_plus = 0.5 * (1.0 + sigma_z0)
    rho = np.zeros((spec.dim, spec.dim), dtype=complex)
    if w_plus > 0:
        rho += w_plus * sector_steady_state(params, +1, spec)
    if w_plus < 1:
        rho += (1.0 - w_plus) * sector_steady_state(params, -1, spec)
    return rho


# ---------------------------------------------------------------------------
# evolution
# ---------------------------------------------------------------------------

def _max_frequency(params: SystemParams, config: OracleConfig) -> float:
    if config.frame == "lab":
        return max(params.omega_q, params.omega_r, params.omega_d, abs(params.g), params.kappa)
    return max(
        abs(params.omega_q - params.omega_d),
        abs(params.omega_r - params.omega_d),
        abs(params.g),
        params.kappa,
    )


def _substeps_per_interval(grid: TimeGrid, params: SystemParams, config: OracleConfig) -> int:
    fmax = _max_frequency(params, config)
    if config.dt is not None:
        if config.dt * fmax > EVOLVE_STEP_GUARD:
            raise StepTooLarge(
                f"configured dt {config.dt:.3g} does not resolve the fastest "
                f"frequency {fmax:.3g} (need dt*f <= {EVOLVE_STEP_GUARD})"
            )
        return max(1, math.ceil(grid.dt / config.dt))
    return max(1, math.ceil(grid.dt * fmax / EVOLVE_STEP_GUARD))


def _superoperator(h0: np.ndarray, params: SystemParams, ops: Operators) -> np.ndarray:
    """Vectorized (row-major) generator: vec(drho/dt) = L vec(rho)."""
    d = h0.shape[0]
    eye = np.eye(d, dtype=complex)
    k, nb = params.kappa, params.n_th

    def pre_post(left: np.ndarray, right: np.ndarray) -> np.ndarray:
        return np.kron(left, right.T)

    a, adag = ops.a, ops.adag
    lsup = -1j * (pre_post(h0, eye) - pre_post(eye, h0))
    num = adag @ a
    lsup += k * (nb + 1) * (pre_post(a, adag) - 0.5 * (pre_post(num, eye) + pre_post(eye, num)))
    num = a @ adag
    lsup += k * nb * (pre_post(adag, a) - 0.5 * (pre_post(num, eye) + pre_post(eye, num)))
    return lsup


def _rk4_transfer(lsup: np.ndarray, h: float) -> np.ndarray:
    """Exact one-RK4-step transfer matrix: degree-4 Taylor polynomial of exp(hL)."""
    hl = h * lsup
    transfer = np.eye(lsup.shape[0], dtype=complex) + hl
    term = hl
    for k in (2, 3, 4):
        term = term @ hl / k
        transfer += term
    return transfer


def _matrix_power(mat: np.ndarray, exponent: int) -> np.ndarray:
    result = np.eye(mat.shape[0], dtype=complex)
    base = mat
    e = exponent
    while e:
        if e & 1:
            result = result @ base
        e >>= 1
        if e:
            base = base @ base
    return result


class Evolver:
    """Prepared evolution for one (params, config, grid) combination.

    Building the propagator is the expensive part; :meth:`run` can then be
    invoked for any number of initial states (the photon-pull sweep runs
    both qubit sectors through one Evolver per drive frequency).
    """

    def __init__(self, params: SystemParams, config: OracleConfig, grid: TimeGrid):
        self.params = params
        self.config = config
        self.grid = grid
        self.ops = build_operators(config.hilbert)
        self.hamiltonian = build_hamiltonian(params, config, self.ops)
        self.substeps = _substeps_per_interval(grid, params, config)
        self.h = grid.dt / self.substeps
        engine = config.engine
        if engine == "auto":
            engine = "stepper" if self.hamiltonian.time_dependent else "propagator"
        if engine == "propagator" and self.hamiltonian.time_dependent:
            raise UnsupportedCombination(
                "propagator engine requires a time-independent generator; "
                "the lab frame with drive must use the stepper"
            )
        self.engine = engine
        self._interval_transfer: np.ndarray | None = None
        if engine == "propagator":
            lsup = _superoperator(self.hamiltonian.static, params, self.ops)
            self._interval_transfer = _matrix_power(_rk4_transfer(lsup, self.h), self.substeps)
        else:
            a1, a2 = self._jump_operators()
            self._drift = (
                -1j * self.hamiltonian.static
                - 0.5 * (a1.conj().T @ a1 + a2.conj().T @ a2)
            )
            self._a1, self._a2 = a1, a2

    def _jump_operators(self) -> tuple[np.ndarray, np.ndarray]:
        k, nb = self.params.kappa, self.params.n_th
        return math.sqrt(k * (nb + 1)) * self.ops.a, math.sqrt(k * nb) * self.ops.adag

    def run(self, rho0: np.ndarray, record_checks: bool = False) -> tuple[Trajectory, np.ndarray]:
        d = self.config.hilbert.dim
        if rho0.shape != (d, d):
            raise DimensionMismatch(f"rho0 has shape {rho0.shape}, expected ({d}, {d})")
        n_fock = self.config.hilbert.n_fock
        peak = max(analytic.photon_number(self.params, +1), analytic.photon_number(self.params, -1))
        if peak + 5.0 * math.sqrt(peak) >= n_fock:
            warnings.warn(
                f"predicted peak photon number {peak:.3g} is close to the Fock "
                f"truncation {n_fock}; consider raising n_fock",
                ValidityWarning,
                stacklevel=2,
            )

        n_samples = self.grid.n_steps
        times = self.grid.times()
        sigma_z = np.empty(n_samples + 1)
        photon = np.empty(n_samples + 1)
        re_a = np.empty(n_samples + 1)
        im_a = np.empty(n_samples + 1)
        diagnostics: dict[str, np.ndarray] = {}
        if record_checks:
            diagnostics = {
                name: np.empty(n_samples + 1)
                for name in ("trace_error", "herm_error", "min_eigenvalue", "top_fock_population")
            }
        top_fock_max = 0.0
        # diagonal indices of the top two Fock levels in both qubit sectors
        top_idx = np.array(
            [n_fock - 2, n_fock - 1, 2 * n_fock - 2, 2 * n_fock - 1], dtype=int
        )

        rho = np.array(rho0, dtype=complex, order="C", copy=True)
        vec = rho.reshape(-1) if self.engine == "propagator" else None
        for i in range(n_samples + 1):
            if self.engine == "propagator":
                rho = vec.reshape(d, d)
            pops = np.real(np.diagonal(rho))
            top = float(pops[top_idx].sum())
            top_fock_max = max(top_fock_max, top)
            sigma_z[i] = np.real(np.einsum("ij,ji->", self.ops.sigma_z, rho))
            photon[i] = np.real(np.einsum("ij,ji->", self.ops.number, rho))
            amp = np.einsum("ij,ji->", self.ops.a, rho)
            re_a[i], im_a[i] = amp.real, amp.imag
            if record_checks:
                diagnostics["trace_error"][i] = abs(np.trace(rho).real - 1.0) + abs(
                    np.trace(rho).imag
                )
                diagnostics["herm_error"][i] = np.max(np.abs(rho - rho.conj().T))
                diagnostics["min_eigenvalue"][i] = np.linalg.eigvalsh(
                    0.5 * (rho + rho.conj().T)
                )[0]
                diagnostics["top_fock_population"][i] = top
            if i == n_samples:
                break
            if self.engine == "propagator":
                vec = self._interval_transfer @ vec
            else:
                _backend.lindblad_step_interval(
                    rho,
                    self._drift,
                    self._a1,
                    self._a2,
                    self.hamiltonian.drive_plus,
                    self.hamiltonian.drive_minus,
                    self.hamiltonian.omega_d,
                    times[i],
                    self.h,
                    self.substeps,
                )

        traj_warnings = []
        if top_fock_max >= TRUNCATION_LIMIT:
            traj_warnings.append(
                f"TruncationOverflow: top two Fock levels reached population "
                f"{top_fock_max:.2e} (limit {TRUNCATION_LIMIT})"
            )
        traj = Trajectory(
            times=times,
            columns={
                "sigma_z": sigma_z,
                "photon_number": photon,
                "re_a": re_a,
                "im_a": im_a,
            },
            warnings=traj_warnings,
            diagnostics=diagnostics,
        )
        final = vec.reshape(d, d).copy() if self.engine == "propagator" else rho
        return traj, final


def evolve(
    rho0: np.ndarray,
    grid: TimeGrid,
    params: SystemParams,
    config: OracleConfig,
    record_checks: bool = False,
) -> tuple[Trajectory, np.ndarray]:
    """RK4 time evolution of the master equation, sampled on the grid.

    Returns the sampled trajectory (<sigma_z>, <a^+a>, <a>) plus the final
    density matrix.  A TruncationOverflow warning is attached when the top
    two Fock levels accumulate population beyond 1e-5.
    """
    return Evolver(params, config, grid).run(rho0, record_checks=record_checks)


# ---------------------------------------------------------------------------
# extraction
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FitResult:
    """Least-squares fit of y(t) = asymptote + amplitude * exp(-rate * t)."""

    asymptote: float
    amplitude: float
    rate: float
    rms_residual: float
    iterations: int
    warnings: tuple[str, ...] = ()


def fit_exponential(traj: Trajectory, column: str = "sigma_z") -> FitResult:
    """Gauss-Newton fit of a single exponential to a trajectory column.

    Initialization: asymptote = last sample, amplitude = first - last,
    rate = 3/span.  Raises FitDiverged after 200 iterations or on
    non-finite values.  A constant series yields amplitude ~ 0 with an
    unidentifiable rate (accepted, near-zero residual) or FitDiverged.
    """
    t = np.asarray(traj.times, dtype=float)
    y = np.asarray(traj[column], dtype=float)
    if len(t) < 10:
        raise ValueError(f"need >= 10 samples to fit, got {len(t)}")
    span = t[-1] - t[0]

    def residual(a_, b_, c_):
        return y - (a_ + b_ * np.exp(-np.clip(c_ * t, -700.0, 700.0)))

    a, b, c = float(y[-1]), float(y[0] - y[-1]), 3.0 / span
    r = residual(a, b, c)
    ssr = float(r @ r)
    for iteration in range(1, 201):
        e = np.exp(-np.clip(c * t, -700.0, 700.0))
        jac = np.column_stack([np.ones_like(t), e, -b * t * e])
        try:
            step, *_ = np.linalg.lstsq(jac, r, rcond=None)
        except np.linalg.LinAlgError as exc:
            raise FitDiverged(f"linear subproblem failed: {exc}") from exc
        if not np.all(np.isfinite(step)):
            raise FitDiverged("Gauss-Newton produced non-finite step")
        # backtrack along the Gauss-Newton direction until the residual drops
        scale = 1.0
        for _ in range(40):
            trial = (a + scale * step[0], b + scale * step[1], c + scale * step[2])
            r_new = residual(*trial)
            ssr_new = float(r_new @ r_new)
            if np.isfinite(ssr_new) and ssr_new <= ssr * (1.0 + 1e-14):
                break
            scale *= 0.5
        else:
            raise FitDiverged("Gauss-Newton found no descent step")
        a, b, c = trial
        r, improvement, ssr = r_new, ssr - ssr_new, ssr_new
        if scale * np.max(np.abs(step)) <= 1e-12 * (1.0 + max(abs(a), abs(b), abs(c))):
            break
        if improvement <= 1e-15 * max(ssr, 1e-300) and iteration > 1:
            break
    else:
        raise FitDiverged("Gauss-Newton exceeded 200 iterations")
    e = np.exp(-np.clip(c * t, -700.0, 700.0))
    rms = float(np.sqrt(np.mean((y - a - b * e) ** 2)))
    fit_warnings = []
    if abs(b) > 1e-9 and c * span < 2.0:
        fit_warnings.append(
            f"fitted span covers only {c * span:.2f} decay times (< 2); "
            "rate estimate may be poorly constrained"
        )
    return FitResult(
        asymptote=float(a),
        amplitude=float(b),
        rate=float(c),
        rms_residual=rms,
        iterations=iteration,
        warnings=tuple(fit_warnings),
    )


def fidelity_oracle(
    tau: float,
    params: SystemParams,
    config: OracleConfig,
    n_samples: int | None = None,
) -> float:
    """Measurement fidelity from the oracle trajectory.

    (1/tau) * integral of sqrt((1 - <sigma_z>)/2) by the trapezoidal rule,
    starting from the excited qubit with the resonator in its steady
    displaced thermal state.
    """
    if not tau > 0:
        raise ValueError(f"tau must be > 0, got {tau}")
    if n_samples is None:
        n_samples = max(32, math.ceil(tau * max(abs(params.omega_qr), params.kappa) / 0.2))
    grid = TimeGrid(0.0, tau, n_samples)
    rho0 = sector_steady_state(params, -1, config.hilbert)
    traj, _ = evolve(rho0, grid, params, config)
    beta = np.sqrt(np.clip((1.0 - traj["sigma_z"]) / 2.0, 0.0, None))
    return float(np.trapezoid(beta, traj.times) / tau)


def density_matrix_checks(rho: np.ndarray) -> dict[str, float]:
    """Health metrics for a density matrix: trace error, hermiticity error,
    and the smallest eigenvalue of the Hermitian part."""
    tr = np.trace(rho)
    return {
        "trace_error": float(abs(tr - 1.0)),
        "herm_error": float(np.max(np.abs(rho - rho.conj().T))),
        "min_eigenvalue": float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0]),
    }
