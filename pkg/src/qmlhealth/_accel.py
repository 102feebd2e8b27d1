"""Backend switch for the hot kernels.

Every kernel in :mod:`qmlhealth._kernels` exists twice: a loop form compiled
with numba and a vectorized numpy form.  The numba form is used unless the
environment variable ``QMLHEALTH_DISABLE_NUMBA`` is set to a truthy value or
numba cannot be imported.  The flag is read once, at import time.
"""

import os

_FALSY = {"", "0", "false", "no", "off"}

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

NUMBA_DISABLED_BY_ENV = (
    os.environ.get("QMLHEALTH_DISABLE_NUMBA", "").strip().lower() not in _FALSY
)
USE_NUMBA = HAVE_NUMBA and not NUMBA_DISABLED_BY_ENV


def njit(*args, **kwargs):
    """``numba.njit`` with nogil + on-disk caching, or identity without numba."""
    kwargs.setdefault("cache", True)
    kwargs.setdefault("nogil", True)

    if not HAVE_NUMBA:
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda fn: fn
    return numba.njit(*args, **kwargs)


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
