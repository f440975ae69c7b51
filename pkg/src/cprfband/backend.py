"""Select the compiled kernel extension or the NumPy fallback at import.

Set ``CPRFBAND_FORCE_PY=1`` to force the fallback (used by the benchmark
and the backend-equality tests).
"""

import os

from . import _kernels_py

if os.environ.get("CPRFBAND_FORCE_PY") == "1":
    kernels = _kernels_py
else:
    try:
        from . import _kernels as kernels  # type: ignore[no-redef]
    except ImportError:
        kernels = _kernels_py


def backend_name() -> str:
    return kernels.BACKEND_NAME


def fallback_kernels():
    """The pure NumPy implementation, regardless of selection."""
    return _kernels_py
