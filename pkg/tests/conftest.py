import numpy as np
import pytest

from qrsim.model import SystemParams

#: dispersive reference parameters used across the suite
#: kappa = 1, omega_qr = 400, g = 20 (chi = 1), n_th = 0.2,
#: drive resonant with the excited-state-pulled cavity, 2 photons on resonance
SUITE_KW = dict(
    omega_q=5400.0,
    omega_r=5000.0,
    omega_d=5001.0,
    g=20.0,
    kappa=1.0,
    epsilon=np.sqrt(2.0) / 2.0,
    n_th=0.2,
)


@pytest.fixture(scope="session")
def suite_params() -> SystemParams:
    return SystemParams(**SUITE_KW)


def make_params(**overrides) -> SystemParams:
    kw = dict(SUITE_KW)
    kw.update(overrides)
    return SystemParams(**kw)
