"""Backend selection for the geodesic integration kernels.

The compiled extension is used when importable; KTORUS_PURE=1 forces the
pure numpy fallback.  Both backends implement the same stepper, so results
agree to integration tolerance.
"""

import os

from . import pure

if os.environ.get("KTORUS_PURE", "0") not in ("", "0"):
    impl = pure
else:
    try:
        from . import _fast as impl
    except ImportError:
        impl = pure

BACKEND = impl.BACKEND_NAME
integrate = impl.integrate
mu_jet1 = impl.mu_jet1


def pack_coeffs(cf):
    """Flatten a ConformalFactor into the kernel coefficient arrays."""
    import numpy as np
    kap = cf._kappa
    c = cf._c
    return (np.ascontiguousarray(kap[:, 0]), np.ascontiguousarray(kap[:, 1]),
            np.ascontiguousarray(c.real), np.ascontiguousarray(c.imag))
