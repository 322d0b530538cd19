"""Kernel selection: the Cython extension when importable, else pure Python.

Set ``PARTSFORGE_BACKEND=python`` to force the fallback.
"""

import os

from . import _pykernels

if os.environ.get("PARTSFORGE_BACKEND", "").lower() == "python":
    kernels = _pykernels
    NAME = "python"
else:
    try:
        from . import _kernels as kernels
        NAME = "cython"
    except ImportError:  # extension not built
        kernels = _pykernels
        NAME = "python"

toymac = kernels.toymac
