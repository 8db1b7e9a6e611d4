"""Backend selection for the hot numeric kernels.

The ray-tracing inner loops are written as scalar numpy code that numba can
compile.  By default they are JIT-compiled with ``numba.njit``; setting the
environment variable ``FORGE_DISABLE_NUMBA=1`` selects the interpreted
pure-numpy path instead (bit-identical results, much slower).  ``FORGE_THREADS``
caps the numba thread pool.
"""

import os

NUMBA_ENABLED = os.environ.get("FORGE_DISABLE_NUMBA", "0") not in ("1", "true", "yes")

if NUMBA_ENABLED:
    try:
        import numba

        if "FORGE_THREADS" in os.environ:
            numba.set_num_threads(max(1, int(os.environ["FORGE_THREADS"])))

        def maybe_njit(func):
            return numba.njit(cache=True)(func)

    except ImportError:  # pragma: no cover - numba is a declared dependency
        NUMBA_ENABLED = False

if not NUMBA_ENABLED:

    def maybe_njit(func):
        return func


from .core import (  # noqa: E402
    ao_kernel,
    gbuffer_kernel,
    render_kernel,
)

__all__ = ["NUMBA_ENABLED", "maybe_njit", "ao_kernel", "gbuffer_kernel", "render_kernel"]
