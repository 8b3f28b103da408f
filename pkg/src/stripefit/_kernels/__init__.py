"""Hot-path kernels: compiled Cython core with a pure-Python fallback.

The backend is picked once at import time. ``STRIPEFIT_BACKEND`` in
``{auto, cython, python}`` overrides the default (``auto`` prefers the
compiled extension when it imports cleanly).
"""

import os

from .. import errors
from . import pykernels as _py

try:
    from . import _cykernels as _cy
except ImportError:
    _cy = None

SINE = 0
SQUARE = 1


def _select():
    choice = os.environ.get("STRIPEFIT_BACKEND", "auto").lower()
    if choice not in {"auto", "cython", "python"}:
        raise errors.ConfigError(
            f"STRIPEFIT_BACKEND must be auto, cython or python, got {choice!r}")
    if choice == "python":
        return _py, "python"
    if choice == "cython":
        if _cy is None:
            raise errors.ConfigError(
                "STRIPEFIT_BACKEND=cython but the compiled kernels are not "
                "importable; reinstall with a working C compiler")
        return _cy, "cython"
    return (_cy, "cython") if _cy is not None else (_py, "python")


_impl, BACKEND = _select()

prepare = _impl.prepare
wave_objective = _impl.wave_objective
wave_objective_grid = _impl.wave_objective_grid
Pcg32 = _impl.Pcg32


def backend():
    """Name of the active kernel backend."""
    return BACKEND


def available_backends():
    names = ["python"]
    if _cy is not None:
        names.insert(0, "cython")
    return names


def load(name):
    """Explicit access to one backend module (used by benchmarks/tests)."""
    if name == "python":
        return _py
    if name == "cython":
        if _cy is None:
            raise errors.ConfigError("compiled kernels are not available")
        return _cy
    raise errors.ConfigError(f"unknown backend {name!r}")
