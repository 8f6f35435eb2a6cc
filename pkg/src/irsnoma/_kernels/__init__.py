"""Hot numeric kernels with backend selection at import time.

The compiled Cython backend is preferred; the numpy fallback has identical
semantics. Set IRSNOMA_FORCE_PY=1 to force the fallback (used by tests and
the benchmark).
"""

from __future__ import annotations

import os

from . import _spectra_py

if os.environ.get("IRSNOMA_FORCE_PY") == "1":
    _impl = _spectra_py
    BACKEND = "python"
else:
    try:
        from . import _spectra as _impl  # type: ignore[no-redef]
        BACKEND = "compiled"
    except ImportError:
        _impl = _spectra_py
        BACKEND = "python"

project_unit_diag_psd = _impl.project_unit_diag_psd

__all__ = ["project_unit_diag_psd", "BACKEND"]
