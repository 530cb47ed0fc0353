"""Stencil kernel backends.

The hot inner loop of the simulator is a bundle of one-axis finite
difference sweeps.  Two interchangeable implementations exist:

* ``_stencils`` - a compiled Cython extension (preferred), and
* ``_numpy_ref`` - a pure-numpy fallback with identical semantics.

Selection happens at import.  Set ``MICROMORPH_KERNELS=numpy`` or
``=cython`` to force a backend; ``auto`` (default) takes the compiled one
when it importable.  ``benchmarks/bench_kernels.py`` compares the two.
"""

from __future__ import annotations

import logging
import os

from . import _numpy_ref

logger = logging.getLogger(__name__)

try:
    from . import _stencils as _compiled
except ImportError:  # extension not built; fall back silently
    _compiled = None

_requested = os.environ.get("MICROMORPH_KERNELS", "auto").lower()

if _requested == "cython":
    if _compiled is None:
        raise ImportError(
            "MICROMORPH_KERNELS=cython but the compiled extension is not available"
        )
    _backend = _compiled
elif _requested == "numpy":
    _backend = _numpy_ref
elif _requested == "auto":
    _backend = _compiled if _compiled is not None else _numpy_ref
else:
    raise ValueError(f"unknown MICROMORPH_KERNELS value: {_requested!r}")

BACKEND = "cython" if _backend is _compiled and _compiled is not None else "numpy"
logger.debug("stencil kernel backend: %s", BACKEND)

diff3 = _backend.diff3
grad_vec = _backend.grad_vec
curl_rows = _backend.curl_rows
div_rows = _backend.div_rows


def available_backends() -> list[str]:
    backends = ["numpy"]
    if _compiled is not None:
        backends.insert(0, "cython")
    return backends
