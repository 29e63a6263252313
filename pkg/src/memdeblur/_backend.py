"""Pick the compiled core when it is importable, else the numpy fallback.

Set ``MEMDEBLUR_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _pykernels

BACKEND = "python"
kernels = _pykernels

if not os.environ.get("MEMDEBLUR_PURE_PYTHON"):
    try:
        from . import _ckernels
    except ImportError:
        pass
    else:
        kernels = _ckernels
        BACKEND = "cython"

uniform_logmgf_grad = kernels.uniform_logmgf_grad
chambolle_tv = kernels.chambolle_tv
