"""Kernel backend selection.

The compiled Cython backend is preferred; the numpy/scipy fallback has the
same contract.  Set ``GNFLOW_PURE_PYTHON=1`` to force the fallback (used by
the benchmark and to exercise both paths in tests).
"""

import os

from . import _fallback

if os.environ.get("GNFLOW_PURE_PYTHON", "").strip() not in ("", "0"):
    _impl = _fallback
else:
    try:
        from . import _core as _impl
    except ImportError:
        _impl = _fallback

deriv4 = _impl.deriv4
cyclic_spd_factor = _impl.cyclic_spd_factor
cyclic_spd_solve = _impl.cyclic_spd_solve


def backend_name() -> str:
    return _impl.BACKEND


def available_backends():
    """Return the importable backend modules keyed by name."""
    mods = {"python": _fallback}
    try:
        from . import _core
        mods["compiled"] = _core
    except ImportError:
        pass
    return mods
