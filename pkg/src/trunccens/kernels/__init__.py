"""Likelihood kernels, one module per backend with identical signatures.

Every kernel takes raw arrays:

    y          (n,) float64, censored responses recorded at the detection limit
    cens       (n,) bool, True where the response is censored
    X          (n, p-1) float64 design matrix
    gidx       (n,) int64 variance-group index in [0, J)
    beta       (p-1,) float64
    log_sigma  (J,) float64
    left       float, left truncation bound (-inf disables truncation)
    dl         float, detection limit (only read for censored rows)

and returns the log-likelihood (float), its gradient ((p-1+J,)) or its
Hessian ((p-1+J, p-1+J)) in (beta, log sigma) coordinates.
"""

from __future__ import annotations

from .. import backend


def get_kernels():
    """Module implementing the kernels for the active backend."""
    if backend.active_backend() == "numba":
        from . import numba_impl as mod
    else:
        from . import numpy_impl as mod
    return mod
