"""Import-time selection of the integration kernels.

Prefers the compiled Cython extension; falls back to the pure-numpy
implementation when the extension is missing or when the environment
variable ``QRSIM_PURE_PYTHON`` is set to a non-empty value.
"""

from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("QRSIM_PURE_PYTHON"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels_cy as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _kernels_py

rate_rk4 = _impl.rate_rk4
lindblad_step_interval = _impl.lindblad_step_interval


def backend_name() -> str:
    """Name of the active kernel implementation ('cython' or 'python')."""
    return _impl.BACKEND
