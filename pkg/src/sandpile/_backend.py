"""Kernel backend selection.

The compiled extension is used when it imports; otherwise, or when
``SANDPILE_BACKEND=python`` is set, the pure-Python kernels are used.
"""

import os

from . import _pykernels

BACKEND = "python"
kernels = _pykernels

if os.environ.get("SANDPILE_BACKEND", "").lower() != "python":
    try:
        from . import _ckernels
    except ImportError:
        pass
    else:
        kernels = _ckernels
        BACKEND = "cython"


def get(name=None):
    """Kernel module by name (``"cython"``/``"python"``), default = active one."""
    if name is None:
        return kernels
    if name == "python":
        return _pykernels
    if name == "cython":
        from . import _ckernels

        return _ckernels
    raise ValueError(f"unknown backend {name!r}")
