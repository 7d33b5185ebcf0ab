"""Hot-kernel backend selection.

The compiled Cython core is preferred when it built; the numpy reference
implementation is the fallback. Set RAWLUME_PURE_PYTHON=1 to force the
fallback (useful for debugging and for the backend benchmark).
"""

import os

from . import _ref

if os.environ.get("RAWLUME_PURE_PYTHON"):
    _impl = _ref
    BACKEND = "python"
else:
    try:
        from . import _core as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _ref
        BACKEND = "python"

GRID_SIZE = _ref.GRID_SIZE

slice_grid = _impl.slice_grid
slice_adjoint = _impl.slice_adjoint
jbf_denoise = _impl.jbf_denoise
