"""Hot element kernels with a compiled core and a NumPy fallback.

The Cython extension ``_core`` is preferred when it was built; otherwise
the pure NumPy module ``_pure`` provides identical semantics.  Setting
the environment variable ``MMTOP_PURE_PYTHON=1`` forces the fallback,
which is used by the backend benchmark and the parity tests.
"""

import os

if os.environ.get("MMTOP_PURE_PYTHON", "").strip() not in ("", "0"):
    from . import _pure as _impl

    BACKEND = "pure"
else:
    try:
        from . import _core as _impl

        BACKEND = "compiled"
    except ImportError:
        from . import _pure as _impl

        BACKEND = "pure"

classify_points = _impl.classify_points
element_fractions = _impl.element_fractions
p1_stiffness_entries = _impl.p1_stiffness_entries


def backend_name():
    """Name of the kernel backend selected at import ('compiled' or 'pure')."""
    return BACKEND
