"""Numba switch.

Compiled kernels are used when numba imports and ``SIGMA_FORGE_NUMBA`` is not
set to ``0``. The pure-numpy path is always available and is the reference
the compiled path is tested against.
"""
import contextlib
import os

# The bundled TBB is too old for numba's TBB layer; pick one that always loads.
os.environ.setdefault("NUMBA_THREADING_LAYER", "workqueue")

try:
    import numba
except ImportError:  # pragma: no cover - numba is a soft dependency
    numba = None

HAVE_NUMBA = numba is not None
_enabled = HAVE_NUMBA and os.environ.get("SIGMA_FORGE_NUMBA", "1") != "0"


def enabled():
    return _enabled


def set_enabled(flag):
    global _enabled
    _enabled = bool(flag) and HAVE_NUMBA


@contextlib.contextmanager
def use_numba(flag):
    """Temporarily force the compiled (True) or numpy (False) path."""
    old = _enabled
    set_enabled(flag)
    try:
        yield
    finally:
        set_enabled(old)


def njit(*args, **kwargs):
    """``numba.njit`` with cache on, or a no-op decorator without numba."""
    kwargs.setdefault("cache", True)
    if numba is None:
        if args and callable(args[0]):
            return args[0]
        return lambda f: f
    return numba.njit(*args, **kwargs)


prange = range if numba is None else numba.prange


def set_threads(n):
    """Bound the worker count of parallel kernels; returns the count applied."""
    if numba is None or n is None:
        return 1
    n = max(1, min(int(n), numba.config.NUMBA_NUM_THREADS))
    numba.set_num_threads(n)
    return n


def default_threads():
    value = os.environ.get("SIGMA_FORGE_THREADS")
    return int(value) if value else None
