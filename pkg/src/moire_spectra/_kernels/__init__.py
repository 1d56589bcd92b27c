"""Hot assembly kernels with a compiled backend and a numpy fallback.

The compiled extension is used when it imports; setting the environment
variable ``MOIRE_SPECTRA_PURE_PYTHON=1`` forces the fallback.
"""

import os

from . import _pykernels as pure

compiled = None
if os.environ.get("MOIRE_SPECTRA_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as compiled
    except ImportError:
        compiled = None

_active = compiled if compiled is not None else pure
BACKEND = "compiled" if compiled is not None else "python"

reduced_coupling_matrix = _active.reduced_coupling_matrix
interlayer_block = _active.interlayer_block

__all__ = ["BACKEND", "compiled", "pure", "reduced_coupling_matrix", "interlayer_block"]
