"""Backend selection for the graded QR kernel.

The compiled extension is used when it was built; otherwise, or when the
environment variable ``TORSIONSTAB_PURE_PYTHON`` is set to a non-empty value
other than ``0``, the numpy implementation is used.
"""

import os

from . import _gradedqr_py

_force_py = os.environ.get("TORSIONSTAB_PURE_PYTHON", "") not in ("", "0")

try:
    if _force_py:
        raise ImportError("pure-Python backend forced")
    from ._gradedqr import graded_qr_logdiag as _compiled
except ImportError:
    _compiled = None

python_graded_qr_logdiag = _gradedqr_py.graded_qr_logdiag
compiled_graded_qr_logdiag = _compiled

if _compiled is not None:
    graded_qr_logdiag = _compiled
    BACKEND = "cython"
else:
    graded_qr_logdiag = python_graded_qr_logdiag
    BACKEND = "python"

__all__ = ["graded_qr_logdiag", "BACKEND", "python_graded_qr_logdiag", "compiled_graded_qr_logdiag"]
