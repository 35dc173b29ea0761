"""Pick the compiled kernels when importable, else the numpy fallback.

Set ``MAJORANET_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _kernels_py

BACKEND = "python"
kernels = _kernels_py

if os.environ.get("MAJORANET_PURE_PYTHON", "0") != "1":
    try:
        from . import _kernels as _compiled
    except ImportError:
        pass
    else:
        kernels = _compiled
        BACKEND = "cython"

pfaffian = kernels.pfaffian
propagate = kernels.propagate
fock_matrix = kernels.fock_matrix
IntegrationError = _kernels_py.IntegrationError
