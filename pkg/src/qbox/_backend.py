"""Kernel backend chosen at import: compiled ``_core`` if built, else ``_fallback``.

Set ``QBOX_BACKEND=python`` to force the pure-Python kernels.
"""

import os

from . import _fallback

BACKEND = "python"
kummer_series = _fallback.kummer_series
dopri_propagate = _fallback.dopri_propagate

if os.environ.get("QBOX_BACKEND", "").lower() != "python":
    try:
        from . import _core
    except ImportError:
        pass
    else:
        BACKEND = "compiled"
        kummer_series = _core.kummer_series
        dopri_propagate = _core.dopri_propagate
