"""Kernel backend selection.

The compiled extension is preferred when it imported successfully; the NumPy
fallback is always available.  ``NEUROFUZZ_BACKEND`` overrides the choice:
``auto`` (default), ``python``, or ``compiled`` (raises if not built).
"""

import os

from . import pybackend

_choice = os.environ.get("NEUROFUZZ_BACKEND", "auto")
if _choice not in ("auto", "python", "compiled"):
    raise ImportError(
        f"NEUROFUZZ_BACKEND must be 'auto', 'python', or 'compiled', got {_choice!r}"
    )

if _choice == "python":
    _impl = pybackend
else:
    try:
        from . import _speedups as _impl
    except ImportError:
        if _choice == "compiled":
            raise ImportError(
                "NEUROFUZZ_BACKEND=compiled but the extension is not built; "
                "reinstall with a C compiler available"
            )
        _impl = pybackend

BACKEND = "compiled" if _impl is not pybackend else "python"
MF_FLOOR = pybackend.MF_FLOOR

memberships = _impl.memberships
firing_strengths = _impl.firing_strengths
weighted_design = _impl.weighted_design
premise_gradient_accum = _impl.premise_gradient_accum


def backend_name() -> str:
    """Name of the kernel backend selected at import time."""
    return BACKEND
