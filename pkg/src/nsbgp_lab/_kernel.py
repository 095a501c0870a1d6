"""Pick the activation kernel backend at import time.

``NSBGP_LAB_KERNEL=python`` forces the pure-Python kernel, ``=cython``
requires the compiled one; the default uses the compiled kernel when it was
built and falls back silently otherwise.
"""

import os

from . import _kernel_py

_choice = os.environ.get("NSBGP_LAB_KERNEL", "auto").lower()

if _choice == "python":
    kernel = _kernel_py
else:
    try:
        from . import _kernel_c as kernel
    except ImportError:
        if _choice == "cython":
            raise
        kernel = _kernel_py


def available_backends() -> dict:
    out = {"python": _kernel_py}
    try:
        from . import _kernel_c
    except ImportError:
        pass
    else:
        out["cython"] = _kernel_c
    return out
