"""Driven, dissipative qubit-resonator simulator.

Closed-form dispersive-readout results (resonator field, photon number,
qubit rate equations, measurement fidelity, drive-controlled relaxation)
together with a brute-force Lindblad master-equation oracle on a truncated
Fock space, experiment runners, and a CLI front end.
"""

from ._backend import backend_name
from .model import (
    QubitSector,
    SystemParams,
    TimeGrid,
    Trajectory,
    n_th_from_temperature,
    validate,
)

__version__ = "0.1.0"

__all__ = [
    "QubitSector",
    "SystemParams",
    "TimeGrid",
    "Trajectory",
    "backend_name",
    "n_th_from_temperature",
    "validate",
    "__version__",
]
