"""Select the geodesy kernel implementation at import time.

Prefers the compiled extension; falls back to the numpy kernel when the
extension is missing or FIELDMON_PURE_GEO=1 is set. Both expose the same
``forward``/``inverse`` array functions and ellipsoid constants.
"""

import os

from . import _pykernel

if os.environ.get("FIELDMON_PURE_GEO") == "1":
    impl = _pykernel
else:
    try:
        from . import _ckernel as impl  # type: ignore[no-redef]
    except ImportError:
        impl = _pykernel

ACTIVE_IMPL = impl.IMPL

available = {"python": _pykernel}
try:
    from . import _ckernel

    available["compiled"] = _ckernel
except ImportError:
    pass

forward = impl.forward
inverse = impl.inverse
