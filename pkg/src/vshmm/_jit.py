"""Optional numba acceleration.

The integration drivers run hot loops over millions of tiny right-hand-side
evaluations; numba removes the interpreter overhead when the system supplies
a compiled fused evaluator.  Everything degrades to plain Python when numba
is unavailable, with identical arithmetic (same accumulation order).
"""

from __future__ import annotations

try:
    import numba

    HAVE_NUMBA = True

    def njit(func=None, **kwargs):
        kwargs.setdefault("cache", False)
        if func is None:
            return numba.njit(**kwargs)
        return numba.njit(**kwargs)(func)

    def is_jitted(fn) -> bool:
        return isinstance(fn, numba.core.dispatcher.Dispatcher)

except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(func=None, **kwargs):
        if func is None:
            return lambda f: f
        return func

    def is_jitted(fn) -> bool:
        return False
