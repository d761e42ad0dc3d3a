"""Backend selection for the solver's inner loop.

The compiled extension is used when it imports; otherwise, or when the
environment variable ``QOTBGA_PURE_PYTHON`` is set to a non-empty value, the
numpy implementation is used.
"""

import os

from . import _kernels_py

try:
    from . import _kernels as _kernels_c
except ImportError:  # extension not built
    _kernels_c = None

_BACKENDS = {"python": _kernels_py}
if _kernels_c is not None:
    _BACKENDS["cython"] = _kernels_c

if os.environ.get("QOTBGA_PURE_PYTHON") or _kernels_c is None:
    DEFAULT_BACKEND = "python"
else:
    DEFAULT_BACKEND = "cython"


def available_backends():
    return sorted(_BACKENDS)


def get_backend(name=None):
    """Return the kernel module for ``name`` (``"cython"`` or ``"python"``)."""
    name = DEFAULT_BACKEND if name is None else name
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(
            f"kernel backend {name!r} is not available; have {available_backends()}"
        ) from None
