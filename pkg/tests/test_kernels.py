"""Agreement between the compiled kernels and the pure-numpy fallback, and
the import-time backend selection."""

import os
import subprocess
import sys

import numpy as np
import pytest

from qrsim import _backend, _kernels_py

cython_kernels = pytest.importorskip(
    "qrsim._kernels_cy", reason="compiled extension not built"
)

RATE_ARGS = dict(
    sigma0=-1.0,
    t0=0.0,
    dt=2.5e-4,
    n_steps=8000,
    pref=0.005,
    w_qr=400.0,
    kappa=1.0,
    n_plus=0.3176,
    n_minus=2.2,
    wt_plus=2.0,
    wt_minus=0.0,
    lor_plus=0.1176,
    lor_minus=2.0,
)


@pytest.mark.parametrize("full", [False, True])
def test_rate_kernels_agree(full):
    py, over_py = _kernels_py.rate_rk4(**RATE_ARGS, full=full)
    cy, over_cy = cython_kernels.rate_rk4(**RATE_ARGS, full=full)
    assert np.array_equal(py, cy)
    assert over_py == over_cy


def _lindblad_problem(seed=11, d=14):
    rng = np.random.default_rng(seed)
    h = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    h = 0.3 * (h + h.conj().T)
    a1 = 0.4 * np.diag(np.sqrt(np.arange(1, d)), 1).astype(complex)
    a2 = 0.2 * a1.conj().T
    drift = -1j * h - 0.5 * (a1.conj().T @ a1 + a2.conj().T @ a2)
    dp = 1j * 0.5 * a1.conj().T
    psi = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    rho0 = np.outer(psi, psi.conj())
    rho0 /= np.trace(rho0)
    return np.ascontiguousarray(rho0), drift, a1, a2, dp, dp.conj().T


@pytest.mark.parametrize("driven", [False, True])
def test_lindblad_kernels_agree(driven):
    rho0, drift, a1, a2, dp, dm = _lindblad_problem()
    ra, rb = rho0.copy(), rho0.copy()
    args = (dp, dm, 2.9) if driven else (None, None, 0.0)
    _kernels_py.lindblad_step_interval(ra, drift, a1, a2, *args, 0.0, 1e-3, 400)
    cython_kernels.lindblad_step_interval(rb, drift, a1, a2, *args, 0.0, 1e-3, 400)
    assert np.max(np.abs(ra - rb)) < 1e-14


def test_lindblad_kernel_preserves_trace():
    rho0, drift, a1, a2, dp, dm = _lindblad_problem(seed=5)
    rho = rho0.copy()
    cython_kernels.lindblad_step_interval(rho, drift, a1, a2, dp, dm, 1.3, 0.0, 1e-3, 400)
    assert abs(np.trace(rho) - 1.0) < 1e-10


@pytest.mark.skipif(
    bool(os.environ.get("QRSIM_PURE_PYTHON")),
    reason="pure-python backend forced via environment",
)
def test_default_backend_is_compiled():
    assert _backend.backend_name() == "cython"


def test_env_var_forces_pure_python():
    code = (
        "import qrsim; import sys; sys.exit(0 if qrsim.backend_name() == 'python' else 1)"
    )
    env = dict(os.environ, QRSIM_PURE_PYTHON="1")
    proc = subprocess.run([sys.executable, "-c", code], env=env)
    assert proc.returncode == 0
