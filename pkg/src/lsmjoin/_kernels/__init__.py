"""Kernel selection: compiled extension when available, pure Python otherwise.

Set LSMJOIN_KERNELS=pure to force the fallback (used by the parity tests
and the benchmark), or LSMJOIN_KERNELS=compiled to fail loudly when the
extension is missing.
"""

import os

_choice = os.environ.get("LSMJOIN_KERNELS", "auto")

if _choice == "pure":
    from . import _pure as _impl

    HAVE_EXT = False
elif _choice == "compiled":
    from . import _ext as _impl  # type: ignore[no-redef]

    HAVE_EXT = True
else:
    try:
        from . import _ext as _impl  # type: ignore[no-redef]

        HAVE_EXT = True
    except ImportError:
        from . import _pure as _impl

        HAVE_EXT = False

IMPL_NAME = "compiled" if HAVE_EXT else "pure"
JoinChecker = _impl.JoinChecker
collect_rows = _impl.collect_rows


def count_rows(components) -> int:
    """Cross-product cardinality without materializing any row."""
    total = 1
    for comp in components:
        total *= len(comp)
        if not total:
            return 0
    return total


__all__ = ["HAVE_EXT", "IMPL_NAME", "JoinChecker", "collect_rows", "count_rows"]
