"""Kernel backend selection.

The compiled extension is preferred when available; the NumPy twin is a
drop-in replacement. ``MHGMM_KERNELS=py`` forces the fallback, ``=c``
requires the extension.
"""

import os

_requested = os.environ.get("MHGMM_KERNELS", "").lower()

if _requested in ("py", "python"):
    from . import pyk as _impl

    BACKEND = "python"
elif _requested in ("", "c"):
    try:
        from . import _cyk as _impl

        BACKEND = "c"
    except ImportError:
        if _requested == "c":
            raise
        from . import pyk as _impl

        BACKEND = "python"
else:
    raise RuntimeError(f"MHGMM_KERNELS must be 'c' or 'py', got {_requested!r}")

log_weights = _impl.log_weights
em_lb = _impl.em_lb
lloyd = _impl.lloyd

__all__ = ["BACKEND", "log_weights", "em_lb", "lloyd"]
