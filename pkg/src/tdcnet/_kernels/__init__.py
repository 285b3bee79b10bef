"""Path kernels: compiled core when available, pure Python otherwise.

Set ``TDCNET_KERNEL=python`` to force the fallback.
"""

import os

from . import _fallback

BACKEND = "python"
_impl = _fallback

if os.environ.get("TDCNET_KERNEL", "").lower() not in ("python", "py", "fallback"):
    try:
        from . import _core as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:  # extension not built
        _impl = _fallback

sssp = _impl.sssp
multi_sssp = _impl.multi_sssp
inner_sums = _impl.inner_sums
removal_sums = _impl.removal_sums
zero_forest = _impl.zero_forest
path_counts = _impl.path_counts
brandes = _impl.brandes

__all__ = ["BACKEND", "sssp", "multi_sssp", "inner_sums", "removal_sums",
           "zero_forest", "path_counts", "brandes"]
