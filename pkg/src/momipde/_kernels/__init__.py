"""Kernel backend selection.

The compiled extension is preferred; the pure-Python mirror is the
fallback when the extension is unavailable. Set MOMIPDE_PURE_PYTHON=1
to force the fallback (used by the backend-equivalence tests and the
benchmark).
"""

import os

from . import pyfallback

if os.environ.get("MOMIPDE_PURE_PYTHON"):
    impl = pyfallback
else:
    try:
        from . import _core as impl
    except ImportError:
        impl = pyfallback

BACKEND = impl.BACKEND

STATUS_CONVERGED = impl.STATUS_CONVERGED
STATUS_ITERATION_CAP = impl.STATUS_ITERATION_CAP
STATUS_NUMERICAL_FAILURE = impl.STATUS_NUMERICAL_FAILURE

jacobi_eigenvalues = impl.jacobi_eigenvalues
cholesky_lower = impl.cholesky_lower
spd_solve = impl.spd_solve
evp_solve = impl.evp_solve
